#include "kbc/baselines.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

namespace kbc {

namespace {

std::vector<EntityId> step(const KbView& view, const EntityId& from, const Literal& literal) {
    return literal.reversed ? view.subjects_of(literal.relation, from)
                            : view.objects_of(from, literal.relation);
}

}  // namespace

std::map<EntityId, std::vector<double>> infer_by_rules(const EntityId& subject,
                                                       const RelationId& relation,
                                                       const KbView& view,
                                                       const std::vector<Rule>& rules) {
    std::map<EntityId, std::vector<double>> out;
    for (const Rule& rule : rules) {
        if (rule.head != relation) continue;
        std::set<EntityId> answers;
        if (rule.body.size() == 1) {
            for (EntityId& answer : step(view, subject, rule.body[0])) {
                answers.insert(std::move(answer));
            }
        } else {
            for (const EntityId& mid : step(view, subject, rule.body[0])) {
                for (EntityId& answer : step(view, mid, rule.body[1])) {
                    answers.insert(std::move(answer));
                }
            }
        }
        for (const EntityId& answer : answers) {
            if (answer == subject) continue;
            out[answer].push_back(rule.confidence);
        }
    }
    return out;
}

CombineMethod parse_combine_method(const std::string& name) {
    if (name == "max") return CombineMethod::Max;
    if (name == "sum") return CombineMethod::Sum;
    if (name == "lr") return CombineMethod::Lr;
    throw ConfigError("unknown rule combination method: " + name);
}

double combine_rule_scores(const std::vector<double>& per_rule, CombineMethod method,
                           const LrModel* model) {
    if (per_rule.empty()) throw ConfigError("combine_rule_scores on empty confidence list");
    switch (method) {
        case CombineMethod::Max:
            return *std::max_element(per_rule.begin(), per_rule.end());
        case CombineMethod::Sum: {
            double sum = 0.0;
            for (double confidence : per_rule) sum += confidence;
            return sum;
        }
        case CombineMethod::Lr: {
            if (model == nullptr) {
                throw ConfigError("lr rule combination requires a trained 2-feature model");
            }
            double sum = 0.0;
            for (double confidence : per_rule) sum += confidence;
            const std::array<double, 2> features{sum / static_cast<double>(per_rule.size()),
                                                 static_cast<double>(per_rule.size())};
            return model->predict(features);
        }
    }
    throw ConfigError("unknown rule combination method");
}

std::vector<std::pair<EntityId, double>> ensemble_fuse(const EnsembleInputs& inputs,
                                                       FuseMethod method) {
    if (inputs.lambda < 0.0 || inputs.lambda > 1.0) {
        throw ConfigError("ensemble lambda must lie in [0,1]");
    }
    if (method == FuseMethod::Lr && inputs.lr_model == nullptr) {
        throw ConfigError("lr ensemble fusion requires a trained 2-feature model");
    }

    std::set<EntityId> entities;
    for (const auto& [entity, score] : inputs.qa_scores) entities.insert(entity);
    for (const auto& [entity, score] : inputs.rule_scores) entities.insert(entity);

    std::vector<std::pair<EntityId, double>> fused;
    fused.reserve(entities.size());
    for (const EntityId& entity : entities) {
        auto qa_it = inputs.qa_scores.find(entity);
        auto rule_it = inputs.rule_scores.find(entity);
        double score_q = qa_it == inputs.qa_scores.end() ? 0.0 : qa_it->second;
        double score_r = rule_it == inputs.rule_scores.end() ? 0.0 : rule_it->second;
        double score_f = 0.0;
        switch (method) {
            case FuseMethod::Linear:
                score_f = inputs.lambda * score_q + (1.0 - inputs.lambda) * score_r;
                break;
            case FuseMethod::Max:
                score_f = std::max(score_q, score_r);
                break;
            case FuseMethod::Sum:
                score_f = score_q + score_r;
                break;
            case FuseMethod::Lr: {
                const std::array<double, 2> features{score_q, score_r};
                score_f = inputs.lr_model->predict(features);
                break;
            }
        }
        fused.emplace_back(entity, score_f);
    }
    std::stable_sort(fused.begin(), fused.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return fused;
}

double compute_lambda(double map_qa, double map_rule) {
    if (map_qa < 0.0 || map_rule < 0.0) throw ConfigError("MAP values must be non-negative");
    if (map_qa == 0.0 && map_rule == 0.0) {
        throw ConfigError("compute_lambda undefined when both MAPs are zero");
    }
    return map_qa / (map_qa + map_rule);
}

std::map<EntityId, double> read_score_list(std::istream& in) {
    std::map<EntityId, double> scores;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string trimmed = canonical_entity(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos || line.find('\t', tab + 1) != std::string::npos) {
            throw ParseError("score line " + std::to_string(line_no) +
                             ": expected `entity<TAB>score`");
        }
        std::string entity = canonical_entity(line.substr(0, tab));
        std::string score_text = canonical_entity(line.substr(tab + 1));
        double score = 0.0;
        auto [ptr, ec] =
            std::from_chars(score_text.data(), score_text.data() + score_text.size(), score);
        if (entity.empty() || ec != std::errc() ||
            ptr != score_text.data() + score_text.size() || !std::isfinite(score)) {
            throw ParseError("score line " + std::to_string(line_no) + ": malformed entry");
        }
        auto [it, inserted] = scores.emplace(entity, score);
        if (!inserted && score > it->second) it->second = score;
    }
    return scores;
}

std::map<EntityId, double> read_score_list_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open score file: " + path);
    return read_score_list(in);
}

void write_score_list(std::ostream& out, const std::map<EntityId, double>& scores) {
    char buffer[64];
    for (const auto& [entity, score] : scores) {
        std::snprintf(buffer, sizeof(buffer), "%.12g", score);
        out << entity << '\t' << buffer << '\n';
    }
}

void write_score_list_file(const std::string& path, const std::map<EntityId, double>& scores) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write score file: " + path);
    write_score_list(out, scores);
}

}  // namespace kbc
