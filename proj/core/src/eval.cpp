#include "kbc/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace kbc {

namespace {

double round_sig12(double value) {
    if (value == 0.0 || !std::isfinite(value)) return value;
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return std::strtod(buffer, nullptr);
}

std::map<EntityId, double> qa_score_map(const AnswerProvider& provider, const EntityId& subject,
                                        const RelationId& relation, const QueryConfig& config,
                                        GraphStats* stats) {
    ProviderSession session(provider, config);
    std::map<EntityId, double> scores;
    try {
        for (const QaAnswer& answer : session.ask(subject, relation)) {
            scores[answer.entity] = answer.confidence;
        }
    } catch (const BudgetExhausted&) {
        if (stats) stats->degraded = true;
    }
    if (stats) {
        stats->provider_calls += session.calls_issued();
        stats->probes_denied += session.calls_denied();
    }
    scores.erase(subject);
    return scores;
}

std::map<EntityId, double> rule_score_map(const RunContext& context, const EntityId& subject,
                                          const RelationId& relation, const KbView& view) {
    std::map<EntityId, double> scores;
    std::vector<Rule> applicable = rules_for(*context.rules, relation);
    const LrModel* combine_model = nullptr;  // lr combination is a benchmark-only refinement
    for (const auto& [entity, per_rule] :
         infer_by_rules(subject, relation, view, applicable)) {
        scores[entity] = combine_rule_scores(per_rule, context.rule_combine, combine_model);
    }
    return scores;
}

std::vector<ScoredAnswer> to_scored(const std::vector<std::pair<EntityId, double>>& ranked) {
    std::vector<ScoredAnswer> out;
    out.reserve(ranked.size());
    for (const auto& [entity, score] : ranked) out.push_back({entity, score, {}});
    return out;
}

std::vector<ScoredAnswer> to_scored(const std::map<EntityId, double>& scores) {
    std::vector<std::pair<EntityId, double>> ranked(scores.begin(), scores.end());
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return to_scored(ranked);
}

const WeightTable& table_for(const std::map<RelationId, WeightTable>* tables,
                             const RelationId& relation, const char* mode) {
    if (tables == nullptr) {
        throw ConfigError(std::string("no ") + mode + " weight tables configured");
    }
    auto it = tables->find(relation);
    if (it == tables->end()) {
        throw ConfigError(std::string("missing ") + mode + " weight table for relation '" +
                          relation + "'");
    }
    return it->second;
}

}  // namespace

double average_precision(const std::vector<EntityId>& ranked, const std::set<EntityId>& truth) {
    if (truth.empty()) throw ConfigError("average_precision requires a non-empty truth set");
    std::unordered_set<std::string_view> seen;
    seen.reserve(ranked.size());
    for (const EntityId& entity : ranked) {
        if (!seen.insert(entity).second) {
            throw ConfigError("average_precision given a ranked list with duplicate entity '" +
                              entity + "'");
        }
    }
    // delta recall is 1/|truth| at every hit, so AP reduces to the mean
    // of the hit precisions over |truth|; dividing once keeps AP exactly
    // 1.0 when the truth fills the top ranks.
    double precision_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        if (truth.count(ranked[i]) == 0) continue;
        ++hits;
        precision_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    return precision_sum / static_cast<double>(truth.size());
}

double mean_average_precision(const std::vector<double>& aps) {
    if (aps.empty()) throw ConfigError("mean_average_precision over an empty query list");
    double sum = 0.0;
    for (double ap : aps) sum += ap;
    return sum / static_cast<double>(aps.size());
}

std::pair<std::vector<EvalQuery>, std::vector<EvalQuery>> sample_dataset(
    const FactStore& store, const RelationId& relation, int n_train, int n_test,
    std::uint64_t seed) {
    if (n_train < 0 || n_test < 0) throw ConfigError("sample sizes must be non-negative");
    const std::vector<EntityId>& all = store.subjects_for_relation(relation);
    const std::size_t need = static_cast<std::size_t>(n_train) + static_cast<std::size_t>(n_test);
    if (all.size() < need) {
        throw ConfigError("relation '" + relation + "' has only " + std::to_string(all.size()) +
                          " distinct subjects, need " + std::to_string(need));
    }

    // Hand-rolled Fisher-Yates so splits reproduce across platforms.
    std::vector<EntityId> pool = all;
    std::mt19937_64 rng(seed);
    for (std::size_t i = pool.size() - 1; i > 0; --i) {
        std::size_t j = rng() % (i + 1);
        std::swap(pool[i], pool[j]);
    }

    auto make_queries = [&](std::size_t begin, std::size_t count) {
        std::vector<EvalQuery> queries;
        queries.reserve(count);
        for (std::size_t i = begin; i < begin + count; ++i) {
            EvalQuery query;
            query.subject = pool[i];
            query.relation = relation;
            const auto& objects = store.objects_of(pool[i], relation);
            query.truth.insert(objects.begin(), objects.end());
            queries.push_back(std::move(query));
        }
        return queries;
    };
    return {make_queries(0, static_cast<std::size_t>(n_train)),
            make_queries(static_cast<std::size_t>(n_train), static_cast<std::size_t>(n_test))};
}

Method parse_method(const std::string& name) {
    if (name == "webqa") return Method::Webqa;
    if (name == "rules") return Method::Rules;
    if (name == "ensemble-linear") return Method::EnsembleLinear;
    if (name == "ensemble-max") return Method::EnsembleMax;
    if (name == "ensemble-sum") return Method::EnsembleSum;
    if (name == "ensemble-lr") return Method::EnsembleLr;
    if (name == "mpf-frequency") return Method::MpfFrequency;
    if (name == "mpf-importance") return Method::MpfImportance;
    throw ConfigError("unknown method: " + name);
}

std::string method_name(Method method) {
    switch (method) {
        case Method::Webqa: return "webqa";
        case Method::Rules: return "rules";
        case Method::EnsembleLinear: return "ensemble-linear";
        case Method::EnsembleMax: return "ensemble-max";
        case Method::EnsembleSum: return "ensemble-sum";
        case Method::EnsembleLr: return "ensemble-lr";
        case Method::MpfFrequency: return "mpf-frequency";
        case Method::MpfImportance: return "mpf-importance";
    }
    return "unknown";
}

std::vector<Method> all_methods() {
    return {Method::Webqa,       Method::Rules,       Method::EnsembleLinear,
            Method::EnsembleMax, Method::EnsembleSum, Method::EnsembleLr,
            Method::MpfFrequency, Method::MpfImportance};
}

MethodResult rank_query(const RunContext& context, Method method, const EntityId& subject,
                        const RelationId& relation, const std::optional<QueryMask>& mask) {
    if (context.store == nullptr || context.rules == nullptr || context.provider == nullptr) {
        throw ConfigError("rank_query context is missing store, rules or provider");
    }
    KbView view = mask ? KbView(*context.store, *mask) : KbView(*context.store);
    MethodResult result;

    switch (method) {
        case Method::Webqa: {
            result.answers =
                to_scored(qa_score_map(*context.provider, subject, relation, context.query,
                                       &result.stats));
            return result;
        }
        case Method::Rules: {
            result.answers = to_scored(rule_score_map(context, subject, relation, view));
            return result;
        }
        case Method::EnsembleLinear:
        case Method::EnsembleMax:
        case Method::EnsembleSum:
        case Method::EnsembleLr: {
            EnsembleInputs inputs;
            inputs.qa_scores =
                qa_score_map(*context.provider, subject, relation, context.query, &result.stats);
            inputs.rule_scores = rule_score_map(context, subject, relation, view);
            auto lambda_it = context.lambdas.find(relation);
            inputs.lambda =
                lambda_it == context.lambdas.end() ? context.default_lambda : lambda_it->second;
            FuseMethod fuse = FuseMethod::Sum;
            if (method == Method::EnsembleLinear) fuse = FuseMethod::Linear;
            if (method == Method::EnsembleMax) fuse = FuseMethod::Max;
            if (method == Method::EnsembleLr) {
                fuse = FuseMethod::Lr;
                auto model_it = context.ensemble_models.find(relation);
                if (model_it == context.ensemble_models.end()) {
                    throw ConfigError("no ensemble-lr model trained for relation '" + relation + "'");
                }
                inputs.lr_model = &model_it->second;
            }
            result.answers = to_scored(ensemble_fuse(inputs, fuse));
            return result;
        }
        case Method::MpfFrequency:
        case Method::MpfImportance: {
            const auto* tables = method == Method::MpfFrequency ? context.frequency_weights
                                                                : context.importance_weights;
            const WeightTable& table =
                table_for(tables, relation,
                          method == Method::MpfFrequency ? "frequency" : "importance");
            std::vector<Rule> applicable = rules_for(*context.rules, relation);
            CompletionResult completion = complete(subject, relation, applicable, view,
                                                   *context.provider, table, context.query);
            result.answers = std::move(completion.answers);
            result.stats = std::move(completion.stats);
            return result;
        }
    }
    throw ConfigError("unknown method");
}

std::string run_benchmark(const BenchmarkConfig& config,
                          const std::vector<RelationDataset>& datasets,
                          const FactStore& store, const std::vector<Rule>& rules,
                          const AnswerProvider& provider,
                          const std::map<RelationId, WeightTable>& frequency_weights,
                          const std::map<RelationId, WeightTable>& importance_weights) {
    validate_query_config(config.query);
    if (config.methods.empty()) throw ConfigError("benchmark needs at least one method");

    RunContext context;
    context.store = &store;
    context.rules = &rules;
    context.provider = &provider;
    context.query = config.query;
    context.rule_combine = config.rule_combine;
    context.frequency_weights = &frequency_weights;
    context.importance_weights = &importance_weights;

    const bool needs_ensemble_fit =
        std::any_of(config.methods.begin(), config.methods.end(), [](Method m) {
            return m == Method::EnsembleLinear || m == Method::EnsembleLr;
        });

    // Fail fast on missing MPF tables before any queries run.
    for (const RelationDataset& dataset : datasets) {
        for (Method method : config.methods) {
            if (method == Method::MpfFrequency) {
                table_for(&frequency_weights, dataset.relation, "frequency");
            } else if (method == Method::MpfImportance) {
                table_for(&importance_weights, dataset.relation, "importance");
            }
        }
    }

    auto mask_for = [&](const EvalQuery& query) -> std::optional<QueryMask> {
        if (!config.mask_truth) return std::nullopt;
        return QueryMask{query.subject, query.relation};
    };

    auto ranked_entities = [](const MethodResult& result) {
        std::vector<EntityId> ranked;
        ranked.reserve(result.answers.size());
        for (const ScoredAnswer& answer : result.answers) ranked.push_back(answer.entity);
        return ranked;
    };

    // Per-relation training-split fits: linear lambda and the lr fusion model.
    const bool needs_lr_model = std::any_of(config.methods.begin(), config.methods.end(),
                                            [](Method m) { return m == Method::EnsembleLr; });
    for (const RelationDataset& dataset : datasets) {
        if (!needs_ensemble_fit) break;
        if (dataset.train.empty()) {
            throw ConfigError("relation '" + dataset.relation +
                              "' has no training queries for ensemble fitting");
        }
        std::vector<double> qa_aps;
        std::vector<double> rule_aps;
        LrDataset fusion_data;
        fusion_data.feature_order = {"score_q", "score_r"};
        std::size_t fusion_positives = 0;
        for (const EvalQuery& query : dataset.train) {
            auto mask = mask_for(query);
            MethodResult qa = rank_query(context, Method::Webqa, query.subject, query.relation, mask);
            MethodResult rule =
                rank_query(context, Method::Rules, query.subject, query.relation, mask);
            qa_aps.push_back(average_precision(ranked_entities(qa), query.truth));
            rule_aps.push_back(average_precision(ranked_entities(rule), query.truth));
            if (!needs_lr_model) continue;

            // Candidate-level (score_q, score_r) features for the lr fusion rule.
            std::map<EntityId, std::pair<double, double>> features;
            for (const ScoredAnswer& answer : qa.answers) features[answer.entity].first = answer.score;
            for (const ScoredAnswer& answer : rule.answers) features[answer.entity].second = answer.score;
            for (const auto& [entity, scores] : features) {
                fusion_data.rows.push_back({scores.first, scores.second});
                int label = query.truth.count(entity) > 0 ? 1 : 0;
                fusion_data.labels.push_back(label);
                fusion_positives += static_cast<std::size_t>(label);
            }
        }
        double map_qa = mean_average_precision(qa_aps);
        double map_rule = mean_average_precision(rule_aps);
        if (map_qa > 0.0 || map_rule > 0.0) {
            context.lambdas[dataset.relation] = compute_lambda(map_qa, map_rule);
        }
        if (needs_lr_model) {
            if (fusion_positives == 0 || fusion_positives == fusion_data.labels.size()) {
                throw ConfigError("relation '" + dataset.relation +
                                  "' training split has a single class; cannot fit ensemble-lr");
            }
            context.ensemble_models[dataset.relation] = train_lr(fusion_data, config.lr);
        }
    }

    nlohmann::ordered_json report;
    report["config"] = {
        {"methods", [&] {
             std::vector<std::string> names;
             for (Method m : config.methods) names.push_back(method_name(m));
             return names;
         }()},
        {"relations", [&] {
             std::vector<std::string> names;
             for (const RelationDataset& d : datasets) names.push_back(d.relation);
             return names;
         }()},
        {"t", config.query.t},
        {"k", config.query.k},
        {"parallelism", config.query.parallelism},
        {"provider_budget", config.query.provider_budget},
        {"rule_combine", config.rule_combine == CombineMethod::Max   ? "max"
                         : config.rule_combine == CombineMethod::Sum ? "sum"
                                                                     : "lr"},
        {"mask_truth", config.mask_truth},
        {"seed", config.seed},
    };

    nlohmann::ordered_json relations = nlohmann::ordered_json::object();
    for (const RelationDataset& dataset : datasets) {
        nlohmann::ordered_json cell = nlohmann::ordered_json::object();
        cell["n_train"] = dataset.train.size();
        cell["n_test"] = dataset.test.size();
        if (auto it = context.lambdas.find(dataset.relation); it != context.lambdas.end()) {
            cell["lambda"] = round_sig12(it->second);
        }

        nlohmann::ordered_json methods = nlohmann::ordered_json::object();
        for (Method method : config.methods) {
            nlohmann::ordered_json entry = nlohmann::ordered_json::object();
            std::vector<double> aps;
            nlohmann::ordered_json per_query = nlohmann::ordered_json::array();
            long provider_calls = 0;
            bool degraded = false;
            auto started = std::chrono::steady_clock::now();
            for (const EvalQuery& query : dataset.test) {
                MethodResult result =
                    rank_query(context, method, query.subject, query.relation, mask_for(query));
                double ap = average_precision(ranked_entities(result), query.truth);
                aps.push_back(ap);
                provider_calls += result.stats.provider_calls;
                degraded = degraded || result.stats.degraded;
                per_query.push_back({{"subject", query.subject}, {"ap", round_sig12(ap)}});
            }
            auto elapsed = std::chrono::duration<double, std::milli>(
                               std::chrono::steady_clock::now() - started)
                               .count();
            entry["map"] = aps.empty() ? 0.0 : round_sig12(mean_average_precision(aps));
            entry["provider_calls"] = provider_calls;
            entry["degraded"] = degraded;
            entry["ap_per_query"] = std::move(per_query);
            if (config.include_timing) entry["elapsed_ms"] = elapsed;
            methods[method_name(method)] = std::move(entry);
        }
        cell["methods"] = std::move(methods);
        relations[dataset.relation] = std::move(cell);
    }
    report["relations"] = std::move(relations);
    return report.dump(2) + "\n";
}

}  // namespace kbc
