#include "kbc/fact_store.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace kbc {

namespace {

const std::vector<EntityId> kEmpty;

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
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

bool is_comment_or_blank(const std::string& line) {
    for (char c : line) {
        if (is_space(c)) continue;
        return c == '#';
    }
    return true;  // all blank
}

void insert_sorted_unique(std::vector<EntityId>& vec, const EntityId& value) {
    auto it = std::lower_bound(vec.begin(), vec.end(), value);
    if (it == vec.end() || *it != value) vec.insert(it, value);
}

}  // namespace

std::string canonical_entity(std::string_view raw) {
    std::size_t begin = 0;
    std::size_t end = raw.size();
    while (begin < end && is_space(raw[begin])) ++begin;
    while (end > begin && is_space(raw[end - 1])) --end;
    return std::string(raw.substr(begin, end - begin));
}

FactStore FactStore::load_stream(std::istream& in) {
    FactStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_comment_or_blank(line)) continue;
        std::vector<std::string> fields = split_tabs(line);
        if (fields.size() != 3) {
            throw ParseError("fact line " + std::to_string(line_no) + ": expected 3 tab-separated fields, got " +
                             std::to_string(fields.size()));
        }
        Fact fact{canonical_entity(fields[0]), canonical_entity(fields[1]), canonical_entity(fields[2])};
        if (fact.subject.empty() || fact.relation.empty() || fact.object.empty()) {
            throw ParseError("fact line " + std::to_string(line_no) + ": empty field after trimming");
        }
        store.add(std::move(fact));
    }
    return store;
}

FactStore FactStore::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open fact file: " + path);
    return load_stream(in);
}

void FactStore::add(Fact fact) {
    auto& objects = forward_[{fact.subject, fact.relation}];
    auto it = std::lower_bound(objects.begin(), objects.end(), fact.object);
    if (it != objects.end() && *it == fact.object) return;  // duplicate triple
    objects.insert(it, fact.object);

    insert_sorted_unique(reverse_[{fact.relation, fact.object}], fact.subject);
    insert_sorted_unique(relation_subjects_[fact.relation], fact.subject);
    ++relation_counts_[fact.relation];
    ++fact_count_;
}

const std::vector<EntityId>& FactStore::objects_of(const EntityId& subject,
                                                   const RelationId& relation) const {
    auto it = forward_.find({subject, relation});
    return it == forward_.end() ? kEmpty : it->second;
}

const std::vector<EntityId>& FactStore::subjects_of(const RelationId& relation,
                                                    const EntityId& object) const {
    auto it = reverse_.find({relation, object});
    return it == reverse_.end() ? kEmpty : it->second;
}

const std::vector<EntityId>& FactStore::subjects_for_relation(const RelationId& relation) const {
    auto it = relation_subjects_.find(relation);
    return it == relation_subjects_.end() ? kEmpty : it->second;
}

std::vector<RelationId> FactStore::relations() const {
    std::vector<RelationId> out;
    out.reserve(relation_counts_.size());
    for (const auto& [relation, count] : relation_counts_) out.push_back(relation);
    return out;
}

std::size_t FactStore::count_for_relation(const RelationId& relation) const {
    auto it = relation_counts_.find(relation);
    return it == relation_counts_.end() ? 0 : it->second;
}

bool FactStore::contains(const Fact& fact) const {
    const auto& objects = objects_of(fact.subject, fact.relation);
    return std::binary_search(objects.begin(), objects.end(), fact.object);
}

std::vector<Fact> FactStore::facts() const {
    std::vector<Fact> out;
    out.reserve(fact_count_);
    for (const auto& [key, objects] : forward_) {
        for (const auto& object : objects) {
            out.push_back(Fact{key.first, key.second, object});
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void FactStore::write_triples(std::ostream& out) const {
    for (const Fact& fact : facts()) {
        out << fact.subject << '\t' << fact.relation << '\t' << fact.object << '\n';
    }
}

std::vector<EntityId> KbView::objects_of(const EntityId& subject,
                                         const RelationId& relation) const {
    if (mask_ && mask_->subject == subject && mask_->relation == relation) return {};
    return store_->objects_of(subject, relation);
}

std::vector<EntityId> KbView::subjects_of(const RelationId& relation,
                                          const EntityId& object) const {
    std::vector<EntityId> subjects = store_->subjects_of(relation, object);
    if (mask_ && mask_->relation == relation) {
        std::erase(subjects, mask_->subject);
    }
    return subjects;
}

}  // namespace kbc
