#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "kbc/fact_store.hpp"
#include "kbc/rules.hpp"
#include "kbc/weight_learning.hpp"

namespace kbc {

// KB-only rule inference: joins each rule body over the fact store and
// records the rule's confidence once per answer per rule, regardless of
// how many derivations reach it.
std::map<EntityId, std::vector<double>> infer_by_rules(const EntityId& subject,
                                                       const RelationId& relation,
                                                       const KbView& view,
                                                       const std::vector<Rule>& rules);

enum class CombineMethod { Max, Sum, Lr };

CombineMethod parse_combine_method(const std::string& name);

// Collapses the per-rule confidences of one answer into a single score.
// Sum may exceed 1.0. Lr feeds (mean confidence, rule count) through the
// supplied 2-feature model.
double combine_rule_scores(const std::vector<double>& per_rule, CombineMethod method,
                           const LrModel* model = nullptr);

struct EnsembleInputs {
    std::map<EntityId, double> qa_scores;
    std::map<EntityId, double> rule_scores;
    double lambda = 0.5;               // linear rule only, in [0,1]
    const LrModel* lr_model = nullptr; // lr rule only, 2 features (score_q, score_r)
};

enum class FuseMethod { Linear, Max, Sum, Lr };

// Fuses the two score maps over the union of entities; an entity absent
// from one source scores 0 there. Sorted by descending fused score, ties
// broken by ascending entity id.
std::vector<std::pair<EntityId, double>> ensemble_fuse(const EnsembleInputs& inputs,
                                                       FuseMethod method);

// lambda = MAP_qa / (MAP_qa + MAP_rule), from training performance.
double compute_lambda(double map_qa, double map_rule);

// Score-list exchange format for offline fusion experiments:
// `entity<TAB>score` per line, one file per source, '#' comments skipped.
// Duplicate entities keep the maximum score.
std::map<EntityId, double> read_score_list(std::istream& in);
std::map<EntityId, double> read_score_list_file(const std::string& path);
void write_score_list(std::ostream& out, const std::map<EntityId, double>& scores);
void write_score_list_file(const std::string& path, const std::map<EntityId, double>& scores);

}  // namespace kbc
