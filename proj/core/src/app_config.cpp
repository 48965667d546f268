#include "kbc/app_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>

namespace kbc {

namespace {

double to_double(const std::string& value, const std::string& key) {
    double out = 0.0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size() || !std::isfinite(out)) {
        throw ConfigError("config key '" + key + "': malformed number '" + value + "'");
    }
    return out;
}

long to_long(const std::string& value, const std::string& key) {
    long out = 0;
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config key '" + key + "': malformed integer '" + value + "'");
    }
    return out;
}

bool to_bool(const std::string& value, const std::string& key) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

}  // namespace

AppConfig AppConfig::from_stream(std::istream& in) {
    AppConfig config;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = canonical_entity(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::size_t eq = trimmed.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected `key = value`");
        }
        std::string key = canonical_entity(trimmed.substr(0, eq));
        std::string value = canonical_entity(trimmed.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        }

        if (key == "kb") config.kb_path = value;
        else if (key == "rules") config.rules_path = value;
        else if (key == "rules.min_confidence") config.min_rule_confidence = to_double(value, key);
        else if (key == "rules.min_support") config.min_rule_support = to_long(value, key);
        else if (key == "provider.kind") config.provider.kind = parse_provider_kind(value);
        else if (key == "provider.source") config.provider.source = value;
        else if (key == "provider.timeout_ms")
            config.provider.timeout = std::chrono::milliseconds(to_long(value, key));
        else if (key == "provider.cache") config.provider.cache_enabled = to_bool(value, key);
        else if (key == "provider.budget")
            config.provider.per_query_budget = static_cast<int>(to_long(value, key));
        else if (key == "provider.held_out_fraction")
            config.provider.held_out_fraction = to_double(value, key);
        else if (key == "provider.confidence")
            config.provider.fixed_confidence = to_double(value, key);
        else if (key == "query.t") config.query.t = to_double(value, key);
        else if (key == "query.k") config.query.k = static_cast<int>(to_long(value, key));
        else if (key == "query.parallelism")
            config.query.parallelism = static_cast<int>(to_long(value, key));
        else if (key == "query.method") config.default_method = parse_method(value);
        else if (key == "weights.frequency") config.weights_frequency_path = value;
        else if (key == "weights.importance") config.weights_importance_path = value;
        else if (key == "service.port") config.port = static_cast<int>(to_long(value, key));
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(to_long(value, key));
        else if (key == "lambda") config.lambda = to_double(value, key);
        else throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    config.query.provider_budget = config.provider.per_query_budget;
    config.query.cache_enabled = config.provider.cache_enabled;
    config.provider.seed = config.seed;
    return config;
}

AppConfig AppConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    AppConfig config = from_stream(in);

    // Relative paths in the config resolve against the config file's directory.
    std::filesystem::path base = std::filesystem::path(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (p.empty()) return;
        std::filesystem::path candidate(p);
        if (candidate.is_relative()) p = (base / candidate).string();
    };
    resolve(config.kb_path);
    resolve(config.rules_path);
    resolve(config.weights_frequency_path);
    resolve(config.weights_importance_path);
    if (config.provider.kind != ProviderKind::Remote) resolve(config.provider.source);
    return config;
}

void AppConfig::apply_env_overrides() {
    auto from_env = [](const char* name) -> const char* { return std::getenv(name); };
    if (const char* v = from_env("KBC_KB")) kb_path = v;
    if (const char* v = from_env("KBC_RULES")) rules_path = v;
    if (const char* v = from_env("KBC_WEIGHTS_FREQUENCY")) weights_frequency_path = v;
    if (const char* v = from_env("KBC_WEIGHTS_IMPORTANCE")) weights_importance_path = v;
    if (const char* v = from_env("KBC_PROVIDER_SOURCE")) provider.source = v;
    if (const char* v = from_env("KBC_PORT")) port = static_cast<int>(to_long(v, "KBC_PORT"));
}

void AppConfig::validate() const {
    validate_query_config(query);
    if (port < 1 || port > 65535) throw ConfigError("service port outside [1,65535]");
    if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda outside [0,1]");
    if (kb_path.empty()) throw ConfigError("config is missing the kb path");
    auto must_exist = [](const std::string& path, const char* what) {
        if (!path.empty() && !std::filesystem::exists(path)) {
            throw ConfigError(std::string(what) + " does not exist: " + path);
        }
    };
    must_exist(kb_path, "kb file");
    must_exist(rules_path, "rule file");
    must_exist(weights_frequency_path, "frequency weight file");
    must_exist(weights_importance_path, "importance weight file");
    if (provider.kind == ProviderKind::Fixture) must_exist(provider.source, "QA fixture file");
}

Artifacts load_artifacts(const AppConfig& config) {
    config.validate();
    Artifacts artifacts;
    artifacts.store = FactStore::load_file(config.kb_path);
    if (!config.rules_path.empty()) {
        artifacts.rules = filter_rules(parse_rules_file(config.rules_path),
                                       config.min_rule_confidence, config.min_rule_support);
    }
    artifacts.provider = make_provider(config.provider, &artifacts.store);
    if (!config.weights_frequency_path.empty()) {
        artifacts.frequency_weights = read_weight_tables_file(config.weights_frequency_path);
        for (auto& [relation, table] : artifacts.frequency_weights) {
            table.provenance = WeightProvenance::Frequency;
        }
    }
    if (!config.weights_importance_path.empty()) {
        artifacts.importance_weights = read_weight_tables_file(config.weights_importance_path);
        for (auto& [relation, table] : artifacts.importance_weights) {
            table.provenance = WeightProvenance::Importance;
        }
    }
    return artifacts;
}

RunContext make_run_context(const Artifacts& artifacts, const AppConfig& config) {
    RunContext context;
    context.store = &artifacts.store;
    context.rules = &artifacts.rules;
    context.provider = artifacts.provider.get();
    context.query = config.query;
    context.frequency_weights = &artifacts.frequency_weights;
    context.importance_weights = &artifacts.importance_weights;
    context.default_lambda = config.lambda;
    return context;
}

}  // namespace kbc
