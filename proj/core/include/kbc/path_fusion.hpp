#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "kbc/mkg.hpp"

namespace kbc {

enum class WeightProvenance { Frequency, Importance, Unspecified };

std::string provenance_name(WeightProvenance provenance);

// Per-relation map from path-type signature to weight. Signatures unseen
// in training fall back to default_weight.
struct WeightTable {
    RelationId relation;
    std::map<std::string, double> weights;
    double default_weight = 0.0;
    WeightProvenance provenance = WeightProvenance::Unspecified;
    std::uint64_t seed = 0;
    std::size_t n_examples = 0;
    std::size_t n_positive = 0;

    double weight_for(const std::string& signature) const;
};

struct PathContribution {
    std::string signature;
    double path_score = 0.0;
    double weight = 0.0;
    double contribution = 0.0;  // path_score * weight
};

struct ScoredAnswer {
    EntityId entity;
    double score = 0.0;
    std::vector<PathContribution> breakdown;
};

// Product of the edge confidences; a single edge scores its confidence.
double path_score(const PathInstance& instance);

// Ranks every candidate by summing path_score * weight over its instances.
// Sorted by descending score, ties broken by ascending entity id.
std::vector<ScoredAnswer> score_answers(const MultimodalKnowledgeGraph& graph,
                                        const WeightTable& weights);

struct CompletionResult {
    std::vector<ScoredAnswer> answers;
    GraphStats stats;
};

// build_graph then score_answers; deterministic end-to-end for
// deterministic providers.
CompletionResult complete(const EntityId& subject, const RelationId& relation,
                          const std::vector<Rule>& rules, const KbView& view,
                          const AnswerProvider& provider, const WeightTable& weights,
                          const QueryConfig& config);

// Weight file: `relation<TAB>signature<TAB>weight` per line, weights
// printed with 12 significant digits. '#' comment lines carry provenance
// metadata and are skipped on load; saving a loaded table reproduces the
// stored decimal representation exactly.
void write_weight_table(std::ostream& out, const WeightTable& table);
void write_weight_table_file(const std::string& path, const WeightTable& table);
std::map<RelationId, WeightTable> read_weight_tables(std::istream& in);
std::map<RelationId, WeightTable> read_weight_tables_file(const std::string& path);

}  // namespace kbc
