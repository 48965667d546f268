#include "kbc/weight_learning.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

namespace kbc {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

// log(1 + exp(z)) without overflow
double log1p_exp(double z) {
    if (z > 0.0) return z + std::log1p(std::exp(-z));
    return std::log1p(std::exp(z));
}

}  // namespace

LrDataset LrDataset::from_examples(const std::vector<TrainingExample>& examples) {
    std::set<std::string> signatures;
    for (const TrainingExample& example : examples) {
        for (const auto& [signature, count] : example.features) signatures.insert(signature);
    }
    LrDataset data;
    data.feature_order.assign(signatures.begin(), signatures.end());
    std::map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < data.feature_order.size(); ++i) column[data.feature_order[i]] = i;

    data.rows.reserve(examples.size());
    data.labels.reserve(examples.size());
    for (const TrainingExample& example : examples) {
        std::vector<double> row(data.feature_order.size(), 0.0);
        for (const auto& [signature, count] : example.features) {
            row[column[signature]] = static_cast<double>(count);
        }
        data.rows.push_back(std::move(row));
        data.labels.push_back(example.label ? 1 : 0);
    }
    return data;
}

double LrModel::predict(std::span<const double> features) const {
    double z = intercept;
    for (std::size_t i = 0; i < coefficients.size() && i < features.size(); ++i) {
        z += coefficients[i] * features[i];
    }
    return sigmoid(z);
}

double lr_loss(const LrDataset& data, std::span<const double> coefficients,
               double intercept, double l2) {
    const std::size_t n = data.rows.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = intercept;
        const auto& row = data.rows[i];
        for (std::size_t j = 0; j < coefficients.size(); ++j) z += coefficients[j] * row[j];
        // y in {-1,+1}: loss_i = log(1 + exp(-y z))
        double yz = data.labels[i] == 1 ? z : -z;
        loss += log1p_exp(-yz);
    }
    if (n > 0) loss /= static_cast<double>(n);
    double norm_sq = 0.0;
    for (double c : coefficients) norm_sq += c * c;
    return loss + 0.5 * l2 * norm_sq;
}

LrGradient lr_gradient(const LrDataset& data, std::span<const double> coefficients,
                       double intercept, double l2) {
    const std::size_t n = data.rows.size();
    LrGradient grad;
    grad.coefficients.assign(coefficients.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double z = intercept;
        const auto& row = data.rows[i];
        for (std::size_t j = 0; j < coefficients.size(); ++j) z += coefficients[j] * row[j];
        // d/dz log(1+exp(-y z)) = sigmoid(z) - y01
        double residual = sigmoid(z) - static_cast<double>(data.labels[i]);
        for (std::size_t j = 0; j < coefficients.size(); ++j) {
            grad.coefficients[j] += residual * row[j];
        }
        grad.intercept += residual;
    }
    if (n > 0) {
        for (double& g : grad.coefficients) g /= static_cast<double>(n);
        grad.intercept /= static_cast<double>(n);
    }
    for (std::size_t j = 0; j < coefficients.size(); ++j) {
        grad.coefficients[j] += l2 * coefficients[j];
    }
    return grad;
}

std::vector<TrainingExample> collect_training_examples(
    const std::vector<EvalQuery>& queries, const std::vector<Rule>& rules,
    const FactStore& store, const AnswerProvider& provider, const QueryConfig& config,
    bool mask_truth, CollectStats* stats) {
    std::vector<TrainingExample> examples;
    for (const EvalQuery& query : queries) {
        KbView view = mask_truth ? KbView(store, QueryMask{query.subject, query.relation})
                                 : KbView(store);
        std::vector<Rule> applicable = rules_for(rules, query.relation);
        MultimodalKnowledgeGraph graph;
        try {
            graph = build_graph(query.subject, query.relation, applicable, view, provider, config);
        } catch (const ProviderError& e) {
            if (stats) {
                ++stats->queries_skipped;
                stats->skipped_messages.push_back(query.subject + "/" + query.relation + ": " + e.what());
            }
            continue;
        }
        if (stats) ++stats->queries_run;
        for (const auto& [candidate, instances] : graph.instances) {
            TrainingExample example;
            example.subject = query.subject;
            example.relation = query.relation;
            example.candidate = candidate;
            for (const PathInstance& instance : instances) {
                ++example.features[instance.path_type.signature()];
            }
            example.label = query.truth.count(candidate) > 0;
            if (stats) {
                ++stats->examples;
                if (example.label) ++stats->positives;
            }
            examples.push_back(std::move(example));
        }
    }
    return examples;
}

WeightTable frequency_weights(const std::vector<TrainingExample>& examples) {
    if (examples.empty()) throw TrainingError("frequency_weights requires at least one example");
    WeightTable table;
    table.relation = examples.front().relation;
    table.provenance = WeightProvenance::Frequency;
    table.n_examples = examples.size();

    std::map<std::string, std::pair<std::size_t, std::size_t>> counts;  // sig -> (positive, total)
    for (const TrainingExample& example : examples) {
        if (example.relation != table.relation) {
            throw TrainingError("frequency_weights saw mixed relations: " + table.relation +
                                " vs " + example.relation);
        }
        if (example.label) ++table.n_positive;
        for (const auto& [signature, count] : example.features) {
            auto& entry = counts[signature];
            if (example.label) ++entry.first;
            ++entry.second;
        }
    }
    for (const auto& [signature, entry] : counts) {
        table.weights[signature] =
            static_cast<double>(entry.first) / static_cast<double>(entry.second);
    }
    return table;
}

std::vector<TrainingExample> oversample(const std::vector<TrainingExample>& examples,
                                        std::uint64_t seed) {
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        (examples[i].label ? positives : negatives).push_back(i);
    }
    if (positives.empty() || negatives.empty()) {
        throw TrainingError("oversample needs both classes present (positives=" +
                            std::to_string(positives.size()) + ", negatives=" +
                            std::to_string(negatives.size()) + ")");
    }
    std::vector<TrainingExample> out = examples;
    if (positives.size() == negatives.size()) return out;

    const auto& minority = positives.size() < negatives.size() ? positives : negatives;
    std::size_t deficit = std::max(positives.size(), negatives.size()) - minority.size();
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < deficit; ++i) {
        out.push_back(examples[minority[rng() % minority.size()]]);
    }
    return out;
}

LrModel train_lr(const LrDataset& data, const LrHyperparams& hyper) {
    bool has_positive = false;
    bool has_negative = false;
    for (int label : data.labels) (label == 1 ? has_positive : has_negative) = true;
    if (!has_positive || !has_negative) {
        throw TrainingError("train_lr needs both classes present");
    }

    LrModel model;
    model.feature_order = data.feature_order;
    model.coefficients.assign(data.feature_order.size(), 0.0);
    model.hyper = hyper;

    double step = hyper.step_size;
    double loss = lr_loss(data, model.coefficients, model.intercept, hyper.l2);
    if (!std::isfinite(loss)) throw TrainingError("non-finite loss at epoch 0");
    model.loss_curve.push_back(loss);

    std::vector<double> trial(model.coefficients.size());
    for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
        LrGradient grad = lr_gradient(data, model.coefficients, model.intercept, hyper.l2);

        // Backtrack until the step does not increase the loss.
        double trial_loss = 0.0;
        double trial_intercept = 0.0;
        bool accepted = false;
        for (int attempt = 0; attempt < 40; ++attempt) {
            for (std::size_t j = 0; j < trial.size(); ++j) {
                trial[j] = model.coefficients[j] - step * grad.coefficients[j];
            }
            trial_intercept = model.intercept - step * grad.intercept;
            trial_loss = lr_loss(data, trial, trial_intercept, hyper.l2);
            if (!std::isfinite(trial_loss)) {
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch));
            }
            if (trial_loss <= loss) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // step underflowed, nothing left to gain

        model.coefficients = trial;
        model.intercept = trial_intercept;
        model.epochs_run = epoch;
        model.loss_curve.push_back(trial_loss);
        double improvement = loss - trial_loss;
        loss = trial_loss;
        if (improvement < hyper.tolerance) break;
    }
    return model;
}

LrModel train_lr(const std::vector<TrainingExample>& examples, const LrHyperparams& hyper) {
    return train_lr(LrDataset::from_examples(examples), hyper);
}

WeightTable importance_weights(const LrModel& model, const RelationId& relation) {
    WeightTable table;
    table.relation = relation;
    table.provenance = WeightProvenance::Importance;
    table.seed = model.hyper.seed;
    for (std::size_t i = 0; i < model.feature_order.size(); ++i) {
        table.weights[model.feature_order[i]] = model.coefficients[i];
    }
    return table;
}

std::string training_report_json(const RelationId& relation, const std::string& mode,
                                 const CollectStats& collect, std::size_t oversampled_total,
                                 const LrModel* model) {
    nlohmann::ordered_json report;
    report["relation"] = relation;
    report["mode"] = mode;
    report["queries_run"] = collect.queries_run;
    report["queries_skipped"] = collect.queries_skipped;
    report["examples"] = collect.examples;
    report["positives"] = collect.positives;
    report["negatives"] = collect.examples - collect.positives;
    report["oversampled_total"] = oversampled_total;
    if (model != nullptr) {
        report["feature_count"] = model->feature_order.size();
        report["epochs_run"] = model->epochs_run;
        report["initial_loss"] = model->loss_curve.empty() ? 0.0 : model->loss_curve.front();
        report["final_loss"] = model->loss_curve.empty() ? 0.0 : model->loss_curve.back();
        report["loss_curve"] = model->loss_curve;
    }
    return report.dump(2) + "\n";
}

}  // namespace kbc
