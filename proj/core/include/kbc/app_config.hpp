#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>

#include "kbc/answer_source.hpp"
#include "kbc/eval.hpp"

namespace kbc {

// Application configuration, read from a `key = value` document with '#'
// comments. KBC_KB, KBC_RULES, KBC_WEIGHTS_FREQUENCY, KBC_WEIGHTS_IMPORTANCE,
// KBC_PROVIDER_SOURCE and KBC_PORT override the corresponding entries.
struct AppConfig {
    std::string kb_path;
    std::string rules_path;
    ProviderConfig provider;
    QueryConfig query;
    Method default_method = Method::MpfImportance;
    std::string weights_frequency_path;
    std::string weights_importance_path;
    int port = 8080;
    std::uint64_t seed = 42;
    double min_rule_confidence = kDefaultMinRuleConfidence;
    long min_rule_support = kDefaultMinRuleSupport;
    double lambda = 0.5;

    static AppConfig from_stream(std::istream& in);
    static AppConfig from_file(const std::string& path);

    void apply_env_overrides();
    void validate() const;
};

// Everything the query surface needs, loaded once at startup and immutable
// afterwards. Loading throws ConfigError if any referenced file is missing.
struct Artifacts {
    FactStore store;
    std::vector<Rule> rules;  // already pruned by the configured thresholds
    std::unique_ptr<AnswerProvider> provider;
    std::map<RelationId, WeightTable> frequency_weights;
    std::map<RelationId, WeightTable> importance_weights;
};

Artifacts load_artifacts(const AppConfig& config);

RunContext make_run_context(const Artifacts& artifacts, const AppConfig& config);

}  // namespace kbc
