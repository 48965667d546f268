#pragma once

#include <compare>
#include <iosfwd>
#include <string>
#include <vector>

#include "kbc/fact_store.hpp"

namespace kbc {

// One body literal; reversed=true traverses the relation backwards
// (written `rel~` in rule files, rendered relation⁻ in the literature).
struct Literal {
    RelationId relation;
    bool reversed = false;

    auto operator<=>(const Literal&) const = default;
};

// Horn rule: body (1 or 2 literals) implies head(x, z).
struct Rule {
    RelationId head;
    std::vector<Literal> body;
    double confidence = 0.0;
    long support = 0;
};

inline constexpr double kDefaultMinRuleConfidence = 0.1;
inline constexpr long kDefaultMinRuleSupport = 10;

// Line format: `head<TAB>body<TAB>confidence<TAB>support` where body is
// 1-2 comma-separated tokens `rel` or `rel~`. '#' lines are comments.
// Rules come back in file order; duplicates (same head and body) keep
// the higher confidence.
std::vector<Rule> parse_rules(std::istream& in);
std::vector<Rule> parse_rules_file(const std::string& path);

// Keeps rules with confidence >= min_confidence and support >= min_support.
std::vector<Rule> filter_rules(const std::vector<Rule>& rules,
                               double min_confidence, long min_support);

// All rules whose head equals the query relation, in catalog order.
std::vector<Rule> rules_for(const std::vector<Rule>& rules, const RelationId& relation);

}  // namespace kbc
