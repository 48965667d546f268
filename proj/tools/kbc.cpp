// kbc — query-driven knowledge base completion over a multimodal
// knowledge graph. Subcommands: query, train-weights, evaluate, sample,
// serve. See README.md for the file formats.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <tuple>

#include <CLI11.hpp>

#include "kbc/app_config.hpp"
#include "kbc/service.hpp"

namespace {

struct CommonOptions {
    std::string config_path;
    std::string kb_path;
    std::string rules_path;
    std::string provider_kind;
    std::string provider_source;
    std::optional<double> t;
    std::optional<int> k;
    std::optional<int> parallelism;
    std::optional<int> budget;
};

void add_common(CLI::App* cmd, CommonOptions& options) {
    cmd->add_option("--config", options.config_path, "Config file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--kb", options.kb_path, "Fact TSV file (overrides config)");
    cmd->add_option("--rules", options.rules_path, "Rule TSV file (overrides config)");
    cmd->add_option("--provider", options.provider_kind, "Provider kind: fixture|kb-mock|remote");
    cmd->add_option("--provider-source", options.provider_source,
                    "Fixture path or remote base URL");
    cmd->add_option("--t", options.t, "Intermediate confidence threshold in [0,1]")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--k", options.k, "Max intermediates per path type")->check(CLI::PositiveNumber);
    cmd->add_option("--parallelism", options.parallelism, "Concurrent provider probes")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--budget", options.budget, "Per-query provider call budget")
        ->check(CLI::PositiveNumber);
}

kbc::AppConfig resolve_config(const CommonOptions& options) {
    kbc::AppConfig config;
    if (!options.config_path.empty()) config = kbc::AppConfig::from_file(options.config_path);
    config.apply_env_overrides();
    if (!options.kb_path.empty()) config.kb_path = options.kb_path;
    if (!options.rules_path.empty()) config.rules_path = options.rules_path;
    if (!options.provider_kind.empty())
        config.provider.kind = kbc::parse_provider_kind(options.provider_kind);
    if (!options.provider_source.empty()) config.provider.source = options.provider_source;
    if (options.t) config.query.t = *options.t;
    if (options.k) config.query.k = *options.k;
    if (options.parallelism) config.query.parallelism = *options.parallelism;
    if (options.budget) {
        config.query.provider_budget = *options.budget;
        config.provider.per_query_budget = *options.budget;
    }
    return config;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw kbc::ConfigError("cannot write file: " + path);
    out << text;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Query-driven knowledge base completion with multimodal path fusion"};
    app.require_subcommand(1);

    // --- query ---------------------------------------------------------
    auto* query_cmd = app.add_subcommand("query", "Answer one <subject, relation, ?> query");
    CommonOptions query_common;
    add_common(query_cmd, query_common);
    std::string query_subject;
    std::string query_relation;
    std::string query_method;
    std::string query_weights;
    query_cmd->add_option("--subject", query_subject, "Query subject entity")->required();
    query_cmd->add_option("--relation", query_relation, "Query relation")->required();
    query_cmd->add_option("--method", query_method,
                          "webqa|rules|ensemble-linear|ensemble-max|ensemble-sum|"
                          "mpf-frequency|mpf-importance");
    query_cmd->add_option("--weights", query_weights,
                          "Weight file overriding the table for the chosen MPF method");

    // --- train-weights -------------------------------------------------
    auto* train_cmd = app.add_subcommand("train-weights", "Learn per-relation path weights");
    CommonOptions train_common;
    add_common(train_cmd, train_common);
    std::string train_mode = "importance";
    std::string train_dataset;
    std::string train_out;
    std::string train_report;
    bool train_no_mask = false;
    train_cmd->add_option("--mode", train_mode, "frequency|importance")
        ->check(CLI::IsMember({"frequency", "importance"}));
    train_cmd->add_option("--dataset", train_dataset, "Training dataset file")
        ->required()
        ->check(CLI::ExistingFile);
    train_cmd->add_option("--out", train_out, "Weight file to write")->required();
    train_cmd->add_option("--report", train_report, "Optional training report (JSON)");
    train_cmd->add_flag("--no-mask", train_no_mask,
                        "Keep each training query's truth facts visible in the KB");

    // --- evaluate ------------------------------------------------------
    auto* eval_cmd = app.add_subcommand("evaluate", "Benchmark methods over sampled queries");
    CommonOptions eval_common;
    add_common(eval_cmd, eval_common);
    std::vector<std::string> eval_relations;
    std::vector<std::string> eval_methods;
    std::string eval_train_dataset;
    std::string eval_test_dataset;
    std::string eval_out;
    int eval_n_train = kbc::kDefaultTrainQueries;
    int eval_n_test = kbc::kDefaultTestQueries;
    std::optional<std::uint64_t> eval_seed;
    bool eval_timing = false;
    bool eval_no_mask = false;
    eval_cmd->add_option("--relation", eval_relations, "Relation(s) to benchmark (repeatable)");
    eval_cmd->add_option("--method", eval_methods, "Method(s) to benchmark (repeatable)");
    eval_cmd->add_option("--train-dataset", eval_train_dataset,
                         "Training dataset file (instead of sampling)");
    eval_cmd->add_option("--test-dataset", eval_test_dataset,
                         "Test dataset file (instead of sampling)");
    eval_cmd->add_option("--n-train", eval_n_train, "Training queries per relation when sampling");
    eval_cmd->add_option("--n-test", eval_n_test, "Test queries per relation when sampling");
    eval_cmd->add_option("--seed", eval_seed, "Sampling / training seed");
    eval_cmd->add_option("--out", eval_out, "Report file (JSON); stdout when omitted");
    eval_cmd->add_flag("--include-timing", eval_timing,
                       "Add elapsed_ms to report cells (makes reports non-reproducible)");
    eval_cmd->add_flag("--no-mask", eval_no_mask, "Do not mask test truth facts from the KB");

    // --- sample --------------------------------------------------------
    auto* sample_cmd = app.add_subcommand("sample", "Sample train/test datasets from the KB");
    CommonOptions sample_common;
    add_common(sample_cmd, sample_common);
    std::string sample_relation;
    std::string sample_out_train;
    std::string sample_out_test;
    int sample_n_train = kbc::kDefaultTrainQueries;
    int sample_n_test = kbc::kDefaultTestQueries;
    std::optional<std::uint64_t> sample_seed;
    sample_cmd->add_option("--relation", sample_relation, "Relation to sample")->required();
    sample_cmd->add_option("--n-train", sample_n_train, "Training query count");
    sample_cmd->add_option("--n-test", sample_n_test, "Test query count");
    sample_cmd->add_option("--seed", sample_seed, "Sampling seed");
    sample_cmd->add_option("--out-train", sample_out_train, "Training dataset file")->required();
    sample_cmd->add_option("--out-test", sample_out_test, "Test dataset file")->required();

    // --- serve ---------------------------------------------------------
    auto* serve_cmd = app.add_subcommand("serve", "Start the completion service");
    CommonOptions serve_common;
    add_common(serve_cmd, serve_common);
    std::optional<int> serve_port;
    std::string serve_host = "0.0.0.0";
    serve_cmd->add_option("--port", serve_port, "Listen port (overrides config and KBC_PORT)");
    serve_cmd->add_option("--host", serve_host, "Bind address");

    CLI11_PARSE(app, argc, argv);

    try {
        if (query_cmd->parsed()) {
            kbc::AppConfig config = resolve_config(query_common);
            if (!query_method.empty()) config.default_method = kbc::parse_method(query_method);
            if (!query_weights.empty()) {
                if (config.default_method == kbc::Method::MpfFrequency) {
                    config.weights_frequency_path = query_weights;
                } else {
                    config.weights_importance_path = query_weights;
                }
            }
            if (config.default_method == kbc::Method::EnsembleLr) {
                throw kbc::ConfigError(
                    "ensemble-lr needs a model fitted on a training split; use `evaluate`");
            }
            kbc::Artifacts artifacts = kbc::load_artifacts(config);
            kbc::RunContext context = kbc::make_run_context(artifacts, config);
            auto started = std::chrono::steady_clock::now();
            kbc::MethodResult result = kbc::rank_query(context, config.default_method,
                                                       query_subject, query_relation, std::nullopt);
            double elapsed_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - started)
                                    .count();
            std::cout << kbc::completion_response_json(query_subject, query_relation,
                                                       config.default_method, result, elapsed_ms,
                                                       true);
            return 0;
        }

        if (train_cmd->parsed()) {
            kbc::AppConfig config = resolve_config(train_common);
            kbc::Artifacts artifacts = kbc::load_artifacts(config);
            std::vector<kbc::EvalQuery> queries = kbc::read_dataset_file(train_dataset);
            if (queries.empty()) throw kbc::ConfigError("training dataset is empty");
            const kbc::RelationId relation = queries.front().relation;
            for (const kbc::EvalQuery& query : queries) {
                if (query.relation != relation) {
                    throw kbc::ConfigError("training dataset mixes relations: " + relation +
                                           " vs " + query.relation);
                }
            }

            kbc::CollectStats stats;
            std::vector<kbc::TrainingExample> examples = kbc::collect_training_examples(
                queries, artifacts.rules, artifacts.store, *artifacts.provider, config.query,
                !train_no_mask, &stats);
            if (examples.empty()) {
                throw kbc::ConfigError("no training examples collected; check rules and provider");
            }

            kbc::WeightTable table;
            std::size_t oversampled_total = examples.size();
            const kbc::LrModel* model_ptr = nullptr;
            kbc::LrModel model;
            if (train_mode == "frequency") {
                table = kbc::frequency_weights(examples);
            } else {
                kbc::LrHyperparams hyper;
                hyper.seed = config.seed;
                std::vector<kbc::TrainingExample> balanced = kbc::oversample(examples, hyper.seed);
                oversampled_total = balanced.size();
                model = kbc::train_lr(balanced, hyper);
                model_ptr = &model;
                table = kbc::importance_weights(model, relation);
                table.n_examples = examples.size();
            }
            table.seed = config.seed;
            kbc::write_weight_table_file(train_out, table);
            if (!train_report.empty()) {
                write_text_file(train_report,
                                kbc::training_report_json(relation, train_mode, stats,
                                                          oversampled_total, model_ptr));
            }
            std::cerr << "wrote " << table.weights.size() << " weights for relation '" << relation
                      << "' to " << train_out << "\n";
            return 0;
        }

        if (eval_cmd->parsed()) {
            kbc::AppConfig config = resolve_config(eval_common);
            if (eval_seed) config.seed = *eval_seed;
            kbc::Artifacts artifacts = kbc::load_artifacts(config);

            std::vector<kbc::RelationDataset> datasets;
            if (!eval_train_dataset.empty() || !eval_test_dataset.empty()) {
                if (eval_train_dataset.empty() || eval_test_dataset.empty()) {
                    throw kbc::ConfigError("--train-dataset and --test-dataset go together");
                }
                std::vector<kbc::EvalQuery> train = kbc::read_dataset_file(eval_train_dataset);
                std::vector<kbc::EvalQuery> test = kbc::read_dataset_file(eval_test_dataset);
                if (train.empty() || test.empty()) {
                    throw kbc::ConfigError("dataset files must be non-empty");
                }
                kbc::RelationDataset dataset;
                dataset.relation = train.front().relation;
                dataset.train = std::move(train);
                dataset.test = std::move(test);
                datasets.push_back(std::move(dataset));
            } else {
                if (eval_relations.empty()) {
                    throw kbc::ConfigError("pass --relation or dataset files");
                }
                for (const std::string& relation : eval_relations) {
                    kbc::RelationDataset dataset;
                    dataset.relation = relation;
                    std::tie(dataset.train, dataset.test) = kbc::sample_dataset(
                        artifacts.store, relation, eval_n_train, eval_n_test, config.seed);
                    datasets.push_back(std::move(dataset));
                }
            }

            kbc::BenchmarkConfig bench;
            bench.query = config.query;
            bench.seed = config.seed;
            bench.lr.seed = config.seed;
            bench.include_timing = eval_timing;
            bench.mask_truth = !eval_no_mask;
            if (eval_methods.empty()) {
                bench.methods = kbc::all_methods();
            } else {
                for (const std::string& name : eval_methods) {
                    bench.methods.push_back(kbc::parse_method(name));
                }
            }
            for (const kbc::RelationDataset& dataset : datasets) {
                bench.relations.push_back(dataset.relation);
            }

            // Train any missing MPF tables from the training split.
            std::map<kbc::RelationId, kbc::WeightTable> frequency = artifacts.frequency_weights;
            std::map<kbc::RelationId, kbc::WeightTable> importance = artifacts.importance_weights;
            const bool wants_frequency = std::any_of(
                bench.methods.begin(), bench.methods.end(),
                [](kbc::Method m) { return m == kbc::Method::MpfFrequency; });
            const bool wants_importance = std::any_of(
                bench.methods.begin(), bench.methods.end(),
                [](kbc::Method m) { return m == kbc::Method::MpfImportance; });
            for (const kbc::RelationDataset& dataset : datasets) {
                const bool need_freq = wants_frequency && !frequency.count(dataset.relation);
                const bool need_imp = wants_importance && !importance.count(dataset.relation);
                if (!need_freq && !need_imp) continue;
                std::vector<kbc::TrainingExample> examples = kbc::collect_training_examples(
                    dataset.train, artifacts.rules, artifacts.store, *artifacts.provider,
                    config.query, bench.mask_truth, nullptr);
                if (examples.empty()) {
                    throw kbc::ConfigError("relation '" + dataset.relation +
                                           "' produced no training examples");
                }
                if (need_freq) frequency[dataset.relation] = kbc::frequency_weights(examples);
                if (need_imp) {
                    kbc::LrHyperparams hyper;
                    hyper.seed = config.seed;
                    kbc::LrModel model = kbc::train_lr(kbc::oversample(examples, hyper.seed), hyper);
                    importance[dataset.relation] =
                        kbc::importance_weights(model, dataset.relation);
                }
            }

            std::string report =
                kbc::run_benchmark(bench, datasets, artifacts.store, artifacts.rules,
                                   *artifacts.provider, frequency, importance);
            if (eval_out.empty()) {
                std::cout << report;
            } else {
                write_text_file(eval_out, report);
                std::cerr << "wrote report to " << eval_out << "\n";
            }
            return 0;
        }

        if (sample_cmd->parsed()) {
            kbc::AppConfig config = resolve_config(sample_common);
            if (sample_seed) config.seed = *sample_seed;
            kbc::FactStore store = kbc::FactStore::load_file(config.kb_path);
            auto [train, test] =
                kbc::sample_dataset(store, sample_relation, sample_n_train, sample_n_test,
                                    config.seed);
            kbc::write_dataset_file(sample_out_train, train);
            kbc::write_dataset_file(sample_out_test, test);
            std::cerr << "sampled " << train.size() << " train / " << test.size()
                      << " test queries for relation '" << sample_relation << "'\n";
            return 0;
        }

        if (serve_cmd->parsed()) {
            kbc::AppConfig config = resolve_config(serve_common);
            if (serve_port) config.port = *serve_port;
            kbc::Artifacts artifacts = kbc::load_artifacts(config);
            kbc::CompletionService service(artifacts, config);
            std::cerr << "loaded " << artifacts.store.size() << " facts, "
                      << artifacts.rules.size() << " rules\n";
            std::cerr << "serving /v1/complete on " << serve_host << ":" << config.port << "\n";
            if (!service.listen(serve_host, config.port)) {
                std::cerr << "error: cannot bind " << serve_host << ":" << config.port << "\n";
                return 1;
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
