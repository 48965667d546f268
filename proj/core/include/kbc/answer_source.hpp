#pragma once

#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "kbc/fact_store.hpp"

namespace kbc {

// One answer from the QA side, confidence in [0,1].
struct QaAnswer {
    EntityId entity;
    double confidence = 0.0;

    auto operator<=>(const QaAnswer&) const = default;
};

// Dedup by entity keeping max confidence, then sort by descending
// confidence with ties broken by ascending entity id.
std::vector<QaAnswer> normalize_answers(std::vector<QaAnswer> answers);

// Pluggable source of QA-extracted facts. Implementations answer
// `<subject, relation, ?>` probes and must tolerate concurrent ask().
class AnswerProvider {
public:
    virtual ~AnswerProvider() = default;
    virtual std::vector<QaAnswer> ask(const EntityId& subject,
                                      const RelationId& relation) const = 0;
};

// Deterministic provider backed by a TSV file:
// `subject<TAB>relation<TAB>answer<TAB>confidence` per line, '#' comments.
class FixtureProvider : public AnswerProvider {
public:
    static FixtureProvider load_stream(std::istream& in);
    static FixtureProvider load_file(const std::string& path);

    std::vector<QaAnswer> ask(const EntityId& subject,
                              const RelationId& relation) const override;

    std::size_t size() const { return rows_; }

private:
    std::map<std::pair<EntityId, RelationId>, std::vector<QaAnswer>> answers_;
    std::size_t rows_ = 0;
};

// Test double emulating web extraction without a network: answers from a
// seeded held-out slice of the store at a fixed confidence.
class KbMockProvider : public AnswerProvider {
public:
    KbMockProvider(const FactStore& store, double held_out_fraction,
                   double fixed_confidence, std::uint64_t seed);

    std::vector<QaAnswer> ask(const EntityId& subject,
                              const RelationId& relation) const override;

private:
    std::map<std::pair<EntityId, RelationId>, std::vector<QaAnswer>> answers_;
};

// Speaks `GET <base>/qa?subject=<s>&relation=<r>` expecting
// `{"answers":[{"entity":"...","confidence":0.9}]}`.
class RemoteProvider : public AnswerProvider {
public:
    RemoteProvider(std::string base_url, std::chrono::milliseconds timeout);

    std::vector<QaAnswer> ask(const EntityId& subject,
                              const RelationId& relation) const override;

private:
    std::string base_url_;
    std::chrono::milliseconds timeout_;
};

enum class ProviderKind { Fixture, KbMock, Remote };

ProviderKind parse_provider_kind(const std::string& name);
std::string provider_kind_name(ProviderKind kind);

struct ProviderConfig {
    ProviderKind kind = ProviderKind::Fixture;
    std::string source;  // fixture path or remote base URL
    std::chrono::milliseconds timeout{2000};
    bool cache_enabled = true;
    int per_query_budget = 64;
    // kb-mock knobs
    double held_out_fraction = 1.0;
    double fixed_confidence = 0.8;
    std::uint64_t seed = 42;
};

// `store` is only consulted for the kb-mock kind.
std::unique_ptr<AnswerProvider> make_provider(const ProviderConfig& config,
                                              const FactStore* store);

}  // namespace kbc
