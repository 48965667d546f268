#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "kbc/dataset.hpp"
#include "kbc/path_fusion.hpp"

namespace kbc {

// One candidate answer from a training query's graph. Features are path
// instance counts per signature; present signatures have count >= 1.
struct TrainingExample {
    EntityId subject;
    RelationId relation;
    EntityId candidate;
    std::map<std::string, int> features;
    bool label = false;
};

struct LrHyperparams {
    double l2 = 0.01;          // regularization strength, intercept unpenalized
    double step_size = 0.1;
    int max_epochs = 500;
    double tolerance = 1e-8;   // stop when loss improvement falls below
    std::uint64_t seed = 42;
};

// Dense feature matrix with a fixed column order.
struct LrDataset {
    std::vector<std::string> feature_order;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;  // 0/1

    // Columns are the sorted union of signatures across examples.
    static LrDataset from_examples(const std::vector<TrainingExample>& examples);
};

struct LrModel {
    std::vector<std::string> feature_order;
    std::vector<double> coefficients;
    double intercept = 0.0;
    LrHyperparams hyper;
    std::vector<double> loss_curve;
    int epochs_run = 0;

    double predict(std::span<const double> features) const;  // sigmoid(w.x + b)
};

// Mean logistic loss + l2/2 * ||w||^2 (intercept unpenalized).
double lr_loss(const LrDataset& data, std::span<const double> coefficients,
               double intercept, double l2);

struct LrGradient {
    std::vector<double> coefficients;
    double intercept = 0.0;
};
LrGradient lr_gradient(const LrDataset& data, std::span<const double> coefficients,
                       double intercept, double l2);

struct CollectStats {
    std::size_t queries_run = 0;
    std::size_t queries_skipped = 0;   // provider failure, logged and dropped
    std::size_t examples = 0;
    std::size_t positives = 0;
    std::vector<std::string> skipped_messages;
};

// Builds the MKG for every training query and emits one example per
// candidate answer, labeled by truth membership. When mask_truth is set
// each query's own direct facts are hidden from the KB side while its
// graph is built, mirroring the evaluation protocol.
std::vector<TrainingExample> collect_training_examples(
    const std::vector<EvalQuery>& queries, const std::vector<Rule>& rules,
    const FactStore& store, const AnswerProvider& provider, const QueryConfig& config,
    bool mask_truth = true, CollectStats* stats = nullptr);

// weight(sig) = positives containing sig / examples containing sig.
WeightTable frequency_weights(const std::vector<TrainingExample>& examples);

// Duplicates minority-class examples uniformly at random (seeded) until
// the class counts are equal; duplicates are appended after the originals.
std::vector<TrainingExample> oversample(const std::vector<TrainingExample>& examples,
                                        std::uint64_t seed);

// Full-batch gradient descent with backtracking on the step size; stops at
// the epoch limit or once the loss improvement drops below tolerance.
LrModel train_lr(const LrDataset& data, const LrHyperparams& hyper);
LrModel train_lr(const std::vector<TrainingExample>& examples, const LrHyperparams& hyper);

// Raw signed coefficients as weights; the intercept is excluded.
WeightTable importance_weights(const LrModel& model, const RelationId& relation);

// Structured JSON document: class counts, feature count, loss curve.
std::string training_report_json(const RelationId& relation, const std::string& mode,
                                 const CollectStats& collect, std::size_t oversampled_total,
                                 const LrModel* model);

}  // namespace kbc
