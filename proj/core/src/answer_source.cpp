#include "kbc/answer_source.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace kbc {

namespace {

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return fields;
}

// Stable across platforms so seeded slices stay reproducible.
std::uint64_t fnv1a64(std::string_view text, std::uint64_t hash) {
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ULL;
    }
    return hash;
}

// FNV leaves the top bits weakly mixed for short tails; finalize before
// mapping to [0,1).
std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

}  // namespace

std::vector<QaAnswer> normalize_answers(std::vector<QaAnswer> answers) {
    std::map<EntityId, double> best;
    for (const QaAnswer& answer : answers) {
        auto [it, inserted] = best.emplace(answer.entity, answer.confidence);
        if (!inserted && answer.confidence > it->second) it->second = answer.confidence;
    }
    std::vector<QaAnswer> out;
    out.reserve(best.size());
    for (const auto& [entity, confidence] : best) out.push_back({entity, confidence});
    std::stable_sort(out.begin(), out.end(), [](const QaAnswer& a, const QaAnswer& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        return a.entity < b.entity;
    });
    return out;
}

FixtureProvider FixtureProvider::load_stream(std::istream& in) {
    FixtureProvider provider;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() != 4) {
            throw ParseError("fixture line " + std::to_string(line_no) +
                             ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
        }
        std::string subject = canonical_entity(fields[0]);
        std::string relation = canonical_entity(fields[1]);
        std::string answer = canonical_entity(fields[2]);
        std::string conf_text = canonical_entity(fields[3]);
        if (subject.empty() || relation.empty() || answer.empty()) {
            throw ParseError("fixture line " + std::to_string(line_no) + ": empty field");
        }
        double confidence = 0.0;
        auto [ptr, ec] = std::from_chars(conf_text.data(), conf_text.data() + conf_text.size(), confidence);
        if (ec != std::errc() || ptr != conf_text.data() + conf_text.size() || !std::isfinite(confidence)) {
            throw ParseError("fixture line " + std::to_string(line_no) + ": malformed confidence '" +
                             fields[3] + "'");
        }
        if (confidence < 0.0 || confidence > 1.0) {
            throw ParseError("fixture line " + std::to_string(line_no) + ": confidence " + conf_text +
                             " outside [0,1]");
        }
        provider.answers_[{subject, relation}].push_back({answer, confidence});
        ++provider.rows_;
    }
    for (auto& [probe, answers] : provider.answers_) {
        answers = normalize_answers(std::move(answers));
    }
    return provider;
}

FixtureProvider FixtureProvider::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open QA fixture file: " + path);
    return load_stream(in);
}

std::vector<QaAnswer> FixtureProvider::ask(const EntityId& subject,
                                           const RelationId& relation) const {
    auto it = answers_.find({subject, relation});
    return it == answers_.end() ? std::vector<QaAnswer>{} : it->second;
}

KbMockProvider::KbMockProvider(const FactStore& store, double held_out_fraction,
                               double fixed_confidence, std::uint64_t seed) {
    if (held_out_fraction < 0.0 || held_out_fraction > 1.0) {
        throw ConfigError("kb-mock held_out_fraction outside [0,1]");
    }
    if (fixed_confidence <= 0.0 || fixed_confidence > 1.0) {
        throw ConfigError("kb-mock fixed_confidence outside (0,1]");
    }
    for (const Fact& fact : store.facts()) {
        std::uint64_t h = fnv1a64(fact.subject, seed ^ 1469598103934665603ULL);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(fact.relation, h);
        h = fnv1a64("\x1f", h);
        h = fnv1a64(fact.object, h);
        double u = static_cast<double>(mix64(h) >> 11) * 0x1.0p-53;  // [0,1)
        if (u < held_out_fraction) {
            answers_[{fact.subject, fact.relation}].push_back({fact.object, fixed_confidence});
        }
    }
    for (auto& [probe, answers] : answers_) {
        answers = normalize_answers(std::move(answers));
    }
}

std::vector<QaAnswer> KbMockProvider::ask(const EntityId& subject,
                                          const RelationId& relation) const {
    auto it = answers_.find({subject, relation});
    return it == answers_.end() ? std::vector<QaAnswer>{} : it->second;
}

RemoteProvider::RemoteProvider(std::string base_url, std::chrono::milliseconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout) {
    if (timeout_.count() <= 0) throw ConfigError("remote provider timeout must be positive");
}

std::vector<QaAnswer> RemoteProvider::ask(const EntityId& subject,
                                          const RelationId& relation) const {
    const std::string probe = "(" + subject + ", " + relation + ")";
    httplib::Client client(base_url_);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_).count(),
                                  (timeout_.count() % 1000) * 1000);
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(timeout_).count(),
                            (timeout_.count() % 1000) * 1000);
    httplib::Params params{{"subject", subject}, {"relation", relation}};
    auto result = client.Get("/qa", params, httplib::Headers{});
    if (!result) {
        throw ProviderError("remote provider transport failure for probe " + probe + ": " +
                            httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw ProviderError("remote provider returned HTTP " + std::to_string(result->status) +
                            " for probe " + probe);
    }
    nlohmann::json body = nlohmann::json::parse(result->body, nullptr, false);
    if (body.is_discarded() || !body.contains("answers") || !body["answers"].is_array()) {
        throw ProviderError("remote provider sent malformed JSON for probe " + probe);
    }
    std::vector<QaAnswer> answers;
    for (const auto& item : body["answers"]) {
        if (!item.contains("entity") || !item.contains("confidence")) {
            throw ProviderError("remote provider answer missing entity/confidence for probe " + probe);
        }
        double confidence = item["confidence"].get<double>();
        if (!(confidence >= 0.0 && confidence <= 1.0)) {
            throw ProviderError("remote provider confidence outside [0,1] for probe " + probe);
        }
        answers.push_back({item["entity"].get<std::string>(), confidence});
    }
    return normalize_answers(std::move(answers));
}

ProviderKind parse_provider_kind(const std::string& name) {
    if (name == "fixture") return ProviderKind::Fixture;
    if (name == "kb-mock") return ProviderKind::KbMock;
    if (name == "remote") return ProviderKind::Remote;
    throw ConfigError("unknown provider kind: " + name);
}

std::string provider_kind_name(ProviderKind kind) {
    switch (kind) {
        case ProviderKind::Fixture: return "fixture";
        case ProviderKind::KbMock: return "kb-mock";
        case ProviderKind::Remote: return "remote";
    }
    return "fixture";
}

std::unique_ptr<AnswerProvider> make_provider(const ProviderConfig& config,
                                              const FactStore* store) {
    if (config.timeout.count() <= 0) throw ConfigError("provider timeout must be positive");
    if (config.per_query_budget < 1) throw ConfigError("per_query_budget must be >= 1");
    switch (config.kind) {
        case ProviderKind::Fixture:
            return std::make_unique<FixtureProvider>(FixtureProvider::load_file(config.source));
        case ProviderKind::KbMock:
            if (store == nullptr) throw ConfigError("kb-mock provider needs a loaded fact store");
            return std::make_unique<KbMockProvider>(*store, config.held_out_fraction,
                                                    config.fixed_confidence, config.seed);
        case ProviderKind::Remote:
            return std::make_unique<RemoteProvider>(config.source, config.timeout);
    }
    throw ConfigError("unknown provider kind");
}

}  // namespace kbc
