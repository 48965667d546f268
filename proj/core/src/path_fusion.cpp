#include "kbc/path_fusion.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

namespace kbc {

namespace {

std::string format_weight(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

}  // namespace

std::string provenance_name(WeightProvenance provenance) {
    switch (provenance) {
        case WeightProvenance::Frequency: return "frequency";
        case WeightProvenance::Importance: return "importance";
        case WeightProvenance::Unspecified: return "unspecified";
    }
    return "unspecified";
}

double WeightTable::weight_for(const std::string& signature) const {
    auto it = weights.find(signature);
    return it == weights.end() ? default_weight : it->second;
}

double path_score(const PathInstance& instance) {
    double score = 1.0;
    for (double confidence : instance.edge_confidences) score *= confidence;
    return score;
}

std::vector<ScoredAnswer> score_answers(const MultimodalKnowledgeGraph& graph,
                                        const WeightTable& weights) {
    if (!weights.relation.empty() && weights.relation != graph.relation) {
        throw ConfigError("weight table for relation '" + weights.relation +
                          "' applied to query relation '" + graph.relation + "'");
    }
    std::vector<ScoredAnswer> out;
    out.reserve(graph.instances.size());
    for (const auto& [entity, instances] : graph.instances) {
        if (instances.empty()) continue;
        ScoredAnswer answer;
        answer.entity = entity;
        for (const PathInstance& instance : instances) {
            PathContribution part;
            part.signature = instance.path_type.signature();
            part.path_score = path_score(instance);
            part.weight = weights.weight_for(part.signature);
            part.contribution = part.path_score * part.weight;
            answer.score += part.contribution;
            answer.breakdown.push_back(std::move(part));
        }
        out.push_back(std::move(answer));
    }
    std::stable_sort(out.begin(), out.end(), [](const ScoredAnswer& a, const ScoredAnswer& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.entity < b.entity;
    });
    return out;
}

CompletionResult complete(const EntityId& subject, const RelationId& relation,
                          const std::vector<Rule>& rules, const KbView& view,
                          const AnswerProvider& provider, const WeightTable& weights,
                          const QueryConfig& config) {
    MultimodalKnowledgeGraph graph = build_graph(subject, relation, rules, view, provider, config);
    CompletionResult result;
    result.answers = score_answers(graph, weights);
    result.stats = std::move(graph.stats);
    return result;
}

void write_weight_table(std::ostream& out, const WeightTable& table) {
    out << "# provenance: " << provenance_name(table.provenance) << '\n';
    out << "# seed: " << table.seed << '\n';
    out << "# examples: " << table.n_examples << " positive: " << table.n_positive << '\n';
    out << "# default_weight: " << format_weight(table.default_weight) << '\n';
    for (const auto& [signature, weight] : table.weights) {
        out << table.relation << '\t' << signature << '\t' << format_weight(weight) << '\n';
    }
}

void write_weight_table_file(const std::string& path, const WeightTable& table) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write weight file: " + path);
    write_weight_table(out, table);
}

std::map<RelationId, WeightTable> read_weight_tables(std::istream& in) {
    std::map<RelationId, WeightTable> tables;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw ParseError("weight line " + std::to_string(line_no) +
                             ": expected `relation<TAB>signature<TAB>weight`");
        }
        std::string relation = canonical_entity(line.substr(0, tab1));
        std::string signature = canonical_entity(line.substr(tab1 + 1, tab2 - tab1 - 1));
        std::string weight_text = canonical_entity(line.substr(tab2 + 1));
        if (relation.empty() || signature.empty()) {
            throw ParseError("weight line " + std::to_string(line_no) + ": empty field");
        }
        double weight = 0.0;
        auto [ptr, ec] =
            std::from_chars(weight_text.data(), weight_text.data() + weight_text.size(), weight);
        if (ec != std::errc() || ptr != weight_text.data() + weight_text.size() ||
            !std::isfinite(weight)) {
            throw ParseError("weight line " + std::to_string(line_no) + ": malformed weight '" +
                             weight_text + "'");
        }
        PathType::parse(signature);  // validates step syntax
        WeightTable& table = tables[relation];
        table.relation = relation;
        table.weights[signature] = weight;
    }
    return tables;
}

std::map<RelationId, WeightTable> read_weight_tables_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open weight file: " + path);
    return read_weight_tables(in);
}

}  // namespace kbc
