#include "kbc/dataset.hpp"

#include <fstream>
#include <istream>
#include <ostream>

namespace kbc {

namespace {

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (c == ' ' || c == '\t' || c == '\r') continue;
        return c == '#';
    }
    return true;
}

}  // namespace

std::vector<EvalQuery> read_dataset(std::istream& in) {
    std::vector<EvalQuery> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::size_t tab1 = line.find('\t');
        std::size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw ParseError("dataset line " + std::to_string(line_no) +
                             ": expected `subject<TAB>relation<TAB>objects`");
        }
        EvalQuery query;
        query.subject = canonical_entity(line.substr(0, tab1));
        query.relation = canonical_entity(line.substr(tab1 + 1, tab2 - tab1 - 1));
        std::string objects = line.substr(tab2 + 1);
        std::size_t start = 0;
        while (start <= objects.size()) {
            std::size_t comma = objects.find(',', start);
            std::string object = canonical_entity(
                objects.substr(start, comma == std::string::npos ? comma : comma - start));
            if (!object.empty()) query.truth.insert(std::move(object));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (query.subject.empty() || query.relation.empty()) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": empty subject or relation");
        }
        if (query.truth.empty()) {
            throw ParseError("dataset line " + std::to_string(line_no) + ": empty truth set");
        }
        queries.push_back(std::move(query));
    }
    return queries;
}

std::vector<EvalQuery> read_dataset_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open dataset file: " + path);
    return read_dataset(in);
}

void write_dataset(std::ostream& out, const std::vector<EvalQuery>& queries) {
    for (const EvalQuery& query : queries) {
        out << query.subject << '\t' << query.relation << '\t';
        bool first = true;
        for (const EntityId& object : query.truth) {
            if (!first) out << ',';
            out << object;
            first = false;
        }
        out << '\n';
    }
}

void write_dataset_file(const std::string& path, const std::vector<EvalQuery>& queries) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write dataset file: " + path);
    write_dataset(out, queries);
}

}  // namespace kbc
