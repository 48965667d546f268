#pragma once

#include <compare>
#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "kbc/errors.hpp"

namespace kbc {

using EntityId = std::string;
using RelationId = std::string;

struct Fact {
    EntityId subject;
    RelationId relation;
    EntityId object;

    auto operator<=>(const Fact&) const = default;
};

// Trim surrounding whitespace; case and underscores are preserved.
std::string canonical_entity(std::string_view raw);

// Immutable-after-load, indexed store of KB facts. Forward lookups go
// (subject, relation) -> objects, reverse lookups (relation, object) ->
// subjects; both sides are kept sorted so results come back in
// lexicographic order. Safe for any number of concurrent readers once
// loading has finished.
class FactStore {
public:
    FactStore() = default;

    // One `subject<TAB>relation<TAB>object` triple per line. Lines whose
    // first non-blank character is '#' are comments. Duplicate triples
    // collapse to one fact.
    static FactStore load_stream(std::istream& in);
    static FactStore load_file(const std::string& path);

    std::size_t size() const { return fact_count_; }

    const std::vector<EntityId>& objects_of(const EntityId& subject,
                                            const RelationId& relation) const;
    const std::vector<EntityId>& subjects_of(const RelationId& relation,
                                             const EntityId& object) const;

    // Distinct subjects that have any fact for the relation, sorted.
    const std::vector<EntityId>& subjects_for_relation(const RelationId& relation) const;

    std::vector<RelationId> relations() const;
    std::size_t count_for_relation(const RelationId& relation) const;
    bool contains(const Fact& fact) const;

    // All facts sorted by (subject, relation, object).
    std::vector<Fact> facts() const;

    // Emits the triple format this store loads; reloading the output
    // yields an identical fact set.
    void write_triples(std::ostream& out) const;

private:
    void add(Fact fact);

    std::map<std::pair<EntityId, RelationId>, std::vector<EntityId>> forward_;
    std::map<std::pair<RelationId, EntityId>, std::vector<EntityId>> reverse_;
    std::map<RelationId, std::vector<EntityId>> relation_subjects_;
    std::map<RelationId, std::size_t> relation_counts_;
    std::size_t fact_count_ = 0;
};

// Hides the direct facts of one (subject, relation) pair. Evaluation uses
// this to keep a query's ground truth out of its own evidence.
struct QueryMask {
    EntityId subject;
    RelationId relation;
};

// Read-only window onto a FactStore, optionally masked. Cheap to copy.
class KbView {
public:
    explicit KbView(const FactStore& store) : store_(&store) {}
    KbView(const FactStore& store, QueryMask mask)
        : store_(&store), mask_(std::move(mask)) {}

    std::vector<EntityId> objects_of(const EntityId& subject,
                                     const RelationId& relation) const;
    std::vector<EntityId> subjects_of(const RelationId& relation,
                                      const EntityId& object) const;

    const FactStore& store() const { return *store_; }
    const std::optional<QueryMask>& mask() const { return mask_; }

private:
    const FactStore* store_;
    std::optional<QueryMask> mask_;
};

}  // namespace kbc
