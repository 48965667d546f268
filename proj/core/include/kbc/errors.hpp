#pragma once

#include <stdexcept>
#include <string>

namespace kbc {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input file (triples, rules, fixtures, weights, datasets).
// Messages name the offending line number where one exists.
class ParseError : public Error {
public:
    using Error::Error;
};

// Bad wiring: missing artifacts, unknown methods, domain violations.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Transport or protocol failure while probing an answer provider.
// Carries the (subject, relation) probe in the message.
class ProviderError : public Error {
public:
    using Error::Error;
};

// Per-query provider budget ran out. Callers treat the probe as empty
// and flag the result as degraded.
class BudgetExhausted : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

}  // namespace kbc
