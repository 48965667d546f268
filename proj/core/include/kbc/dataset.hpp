#pragma once

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "kbc/fact_store.hpp"

namespace kbc {

// One evaluation/training query with its ground-truth object set, sampled
// under the local closed-world assumption (truth is never empty).
struct EvalQuery {
    EntityId subject;
    RelationId relation;
    std::set<EntityId> truth;
};

// Dataset file: `subject<TAB>relation<TAB>object1[,object2,...]` per line,
// '#' comments skipped. Objects are written in lexicographic order.
std::vector<EvalQuery> read_dataset(std::istream& in);
std::vector<EvalQuery> read_dataset_file(const std::string& path);
void write_dataset(std::ostream& out, const std::vector<EvalQuery>& queries);
void write_dataset_file(const std::string& path, const std::vector<EvalQuery>& queries);

}  // namespace kbc
