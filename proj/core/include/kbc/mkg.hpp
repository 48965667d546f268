#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kbc/answer_source.hpp"
#include "kbc/fact_store.hpp"
#include "kbc/rules.hpp"

namespace kbc {

// Edge provenance: loaded from the knowledge base or extracted by the
// QA provider at query time.
enum class Modality { KB, QA };

struct PathStep {
    RelationId relation;
    bool reversed = false;
    Modality modality = Modality::KB;

    auto operator<=>(const PathStep&) const = default;
};

// A (relation, direction, modality) step sequence from query subject to
// candidate answer. Signatures render each step `relation[~]:(KB|QA)`
// joined by `/`, e.g. `isMarriedTo:KB/wasBornIn:QA`.
struct PathType {
    std::vector<PathStep> steps;

    std::string signature() const;
    static PathType parse(const std::string& signature);

    auto operator<=>(const PathType&) const = default;
};

// A concrete traversal: nodes run from the query subject to the candidate
// answer, edge_confidences align with the steps. KB edges carry 1.0.
struct PathInstance {
    PathType path_type;
    std::vector<EntityId> nodes;
    std::vector<double> edge_confidences;
};

struct PathTypeStats {
    std::string signature;
    int intermediates_kept = 0;
    int intermediates_filtered = 0;
    bool degraded = false;   // probe denied by budget, or provider failure
    std::string error;
};

struct GraphStats {
    int provider_calls = 0;
    int probes_denied = 0;
    bool degraded = false;
    std::vector<PathTypeStats> per_type;
};

struct MultimodalKnowledgeGraph {
    EntityId subject;
    RelationId relation;
    // candidate answer -> its path instances, instances sorted by
    // (signature, nodes) so merging is order-independent.
    std::map<EntityId, std::vector<PathInstance>> instances;
    GraphStats stats;
};

struct QueryConfig {
    double t = 0.3;          // confidence threshold for first-step intermediates
    int k = 5;               // max intermediates per path type
    int parallelism = 8;     // concurrent provider probes
    int provider_budget = 64;
    bool cache_enabled = true;
};

void validate_query_config(const QueryConfig& config);

// Direct paths (relation:KB, relation:QA) plus every modality combination
// of each rule body, deduplicated, in deterministic order.
std::vector<PathType> expand_path_types(const RelationId& relation,
                                        const std::vector<Rule>& rules);

// Drops entries below t, then truncates to the top k. Input must already
// be sorted by descending confidence then entity id; the filter is stable.
std::vector<QaAnswer> filter_intermediates(std::vector<QaAnswer> candidates,
                                           double t, int k);

// Per-query provider gate: (subject, relation) cache plus a call budget.
// Planning is single-threaded and deterministic; execution of planned
// probes may run in parallel.
class ProviderSession {
public:
    ProviderSession(const AnswerProvider& provider, const QueryConfig& config);
    ~ProviderSession();

    ProviderSession(const ProviderSession&) = delete;
    ProviderSession& operator=(const ProviderSession&) = delete;

    // Deterministically allocates budget and schedules the probe; returns
    // a slot id to read after run(). Reuses the cached slot when enabled.
    int plan(const EntityId& subject, const RelationId& relation);
    // Executes all pending probes (bounded by parallelism) and waits.
    void run();

    bool denied(int slot) const;
    const std::string& error(int slot) const;          // empty when ok
    const std::vector<QaAnswer>& answers(int slot) const;

    // Synchronous convenience for single probes: plan + run + read.
    // Throws BudgetExhausted when the budget is gone, ProviderError on
    // transport failure.
    std::vector<QaAnswer> ask(const EntityId& subject, const RelationId& relation);

    int calls_issued() const;
    int calls_denied() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// KB edges read from the view at confidence 1.0 (reversed via the inverse
// index); QA edges probe the provider forward only — reversed QA edges
// are empty by contract. Results sorted by descending confidence then
// entity id.
std::vector<QaAnswer> traverse_edge(const EntityId& subject, const Literal& literal,
                                    Modality modality, const KbView& view,
                                    ProviderSession& session);

// Expands every path type for the query, applies (t, k) filtering to the
// first step of two-step types, and collects all complete traversals.
// Budget exhaustion and provider failures degrade the affected path types
// only; the instance set is independent of scheduling order.
MultimodalKnowledgeGraph build_graph(const EntityId& subject, const RelationId& relation,
                                     const std::vector<Rule>& rules, const KbView& view,
                                     const AnswerProvider& provider,
                                     const QueryConfig& config);

}  // namespace kbc
