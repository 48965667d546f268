#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "kbc/answer_source.hpp"
#include "kbc/baselines.hpp"
#include "kbc/dataset.hpp"
#include "kbc/path_fusion.hpp"
#include "kbc/weight_learning.hpp"

namespace kbc {

// AP = sum over ranks k of p(k) * delta r(k), recall denominator |truth|;
// 0 when no truth entity is ranked. The ranked list must not contain
// duplicates and truth must be non-empty.
double average_precision(const std::vector<EntityId>& ranked, const std::set<EntityId>& truth);

double mean_average_precision(const std::vector<double>& aps);

// Seeded uniform sample of distinct subjects for the relation; each
// query's truth is every stored object for that subject. Train and test
// are disjoint by subject.
std::pair<std::vector<EvalQuery>, std::vector<EvalQuery>> sample_dataset(
    const FactStore& store, const RelationId& relation, int n_train, int n_test,
    std::uint64_t seed);

inline constexpr int kDefaultTrainQueries = 500;
inline constexpr int kDefaultTestQueries = 100;

// ---------------------------------------------------------------------------
// Method runner shared by the CLI, the service and the benchmark.

enum class Method {
    Webqa,
    Rules,
    EnsembleLinear,
    EnsembleMax,
    EnsembleSum,
    EnsembleLr,
    MpfFrequency,
    MpfImportance,
};

Method parse_method(const std::string& name);
std::string method_name(Method method);
std::vector<Method> all_methods();

struct RunContext {
    const FactStore* store = nullptr;
    const std::vector<Rule>* rules = nullptr;
    const AnswerProvider* provider = nullptr;
    QueryConfig query;
    const std::map<RelationId, WeightTable>* frequency_weights = nullptr;
    const std::map<RelationId, WeightTable>* importance_weights = nullptr;
    std::map<RelationId, double> lambdas;            // per-relation linear weights
    double default_lambda = 0.5;
    std::map<RelationId, LrModel> ensemble_models;   // per-relation lr fusion models
    CombineMethod rule_combine = CombineMethod::Sum;
};

struct MethodResult {
    std::vector<ScoredAnswer> answers;  // breakdown populated for MPF methods only
    GraphStats stats;                   // provider_calls always meaningful
};

// Ranks candidate answers for one query with the chosen method. The mask,
// when present, hides the query's direct KB facts from rule inference and
// graph traversal (the QA provider is never masked).
MethodResult rank_query(const RunContext& context, Method method, const EntityId& subject,
                        const RelationId& relation, const std::optional<QueryMask>& mask);

// ---------------------------------------------------------------------------
// Benchmark runs.

struct BenchmarkConfig {
    std::vector<RelationId> relations;
    std::vector<Method> methods;
    QueryConfig query;
    CombineMethod rule_combine = CombineMethod::Sum;
    LrHyperparams lr;                 // ensemble-lr fusion model training
    bool mask_truth = true;           // hide each test query's truth facts from the KB
    bool include_timing = false;      // elapsed_ms makes reports non-reproducible
    std::uint64_t seed = 42;
};

struct RelationDataset {
    RelationId relation;
    std::vector<EvalQuery> train;
    std::vector<EvalQuery> test;
};

// Computes MAP for every (relation, method) cell over the test queries.
// Linear lambda and the ensemble-lr model are fitted per relation on the
// training split. Returns the report as a JSON document; metric values are
// rounded to 12 significant digits so reports stay byte-reproducible.
std::string run_benchmark(const BenchmarkConfig& config,
                          const std::vector<RelationDataset>& datasets,
                          const FactStore& store, const std::vector<Rule>& rules,
                          const AnswerProvider& provider,
                          const std::map<RelationId, WeightTable>& frequency_weights,
                          const std::map<RelationId, WeightTable>& importance_weights);

}  // namespace kbc
