#include "kbc/rules.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <fstream>
#include <istream>
#include <sstream>

namespace kbc {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = text.find(sep, start);
        if (pos == std::string::npos) {
            parts.push_back(text.substr(start));
            break;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
    return parts;
}

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

double parse_double(const std::string& text, std::size_t line_no, const char* what) {
    std::string trimmed = canonical_entity(text);
    const char* begin = trimmed.data();
    const char* end = begin + trimmed.size();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw ParseError("rule line " + std::to_string(line_no) + ": malformed " + what + " '" + text + "'");
    }
    return value;
}

long parse_long(const std::string& text, std::size_t line_no, const char* what) {
    std::string trimmed = canonical_entity(text);
    const char* begin = trimmed.data();
    const char* end = begin + trimmed.size();
    long value = 0;
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end) {
        throw ParseError("rule line " + std::to_string(line_no) + ": malformed " + what + " '" + text + "'");
    }
    return value;
}

Literal parse_literal(const std::string& token, std::size_t line_no) {
    std::string rel = canonical_entity(token);
    Literal literal;
    if (!rel.empty() && rel.back() == '~') {
        literal.reversed = true;
        rel.pop_back();
        rel = canonical_entity(rel);
    }
    if (rel.empty()) {
        throw ParseError("rule line " + std::to_string(line_no) + ": empty body literal");
    }
    literal.relation = std::move(rel);
    return literal;
}

}  // namespace

std::vector<Rule> parse_rules(std::istream& in) {
    std::vector<Rule> rules;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() != 4) {
            throw ParseError("rule line " + std::to_string(line_no) + ": expected 4 tab-separated fields, got " +
                             std::to_string(fields.size()));
        }

        Rule rule;
        rule.head = canonical_entity(fields[0]);
        if (rule.head.empty()) {
            throw ParseError("rule line " + std::to_string(line_no) + ": empty head relation");
        }

        std::vector<std::string> tokens = split(fields[1], ',');
        if (tokens.size() < 1 || tokens.size() > 2) {
            throw ParseError("rule line " + std::to_string(line_no) + ": body must have 1 or 2 literals, got " +
                             std::to_string(tokens.size()));
        }
        for (const std::string& token : tokens) {
            rule.body.push_back(parse_literal(token, line_no));
        }

        rule.confidence = parse_double(fields[2], line_no, "confidence");
        if (rule.confidence < 0.0 || rule.confidence > 1.0) {
            throw ParseError("rule line " + std::to_string(line_no) + ": confidence " + fields[2] +
                             " outside [0,1]");
        }
        rule.support = parse_long(fields[3], line_no, "support");
        if (rule.support < 0) {
            throw ParseError("rule line " + std::to_string(line_no) + ": negative support");
        }

        // Rule learners emit duplicates; keep the stronger one in place.
        auto dup = std::find_if(rules.begin(), rules.end(), [&](const Rule& existing) {
            return existing.head == rule.head && existing.body == rule.body;
        });
        if (dup != rules.end()) {
            if (rule.confidence > dup->confidence) {
                dup->confidence = rule.confidence;
                dup->support = rule.support;
            }
            continue;
        }
        rules.push_back(std::move(rule));
    }
    return rules;
}

std::vector<Rule> parse_rules_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open rule file: " + path);
    return parse_rules(in);
}

std::vector<Rule> filter_rules(const std::vector<Rule>& rules,
                               double min_confidence, long min_support) {
    std::vector<Rule> kept;
    for (const Rule& rule : rules) {
        if (rule.confidence >= min_confidence && rule.support >= min_support) {
            kept.push_back(rule);
        }
    }
    return kept;
}

std::vector<Rule> rules_for(const std::vector<Rule>& rules, const RelationId& relation) {
    std::vector<Rule> matched;
    for (const Rule& rule : rules) {
        if (rule.head == relation) matched.push_back(rule);
    }
    return matched;
}

}  // namespace kbc
