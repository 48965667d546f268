#include "kbc/mkg.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <future>
#include <mutex>
#include <set>
#include <tuple>

namespace kbc {

namespace {

class Semaphore {
public:
    explicit Semaphore(int count) : count_(count) {}

    void acquire() {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return count_ > 0; });
        --count_;
    }

    void release() {
        {
            std::lock_guard lock(mutex_);
            ++count_;
        }
        cv_.notify_one();
    }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    int count_;
};

std::vector<QaAnswer> kb_step(const KbView& view, const EntityId& subject,
                              const Literal& literal) {
    std::vector<EntityId> entities = literal.reversed
                                         ? view.subjects_of(literal.relation, subject)
                                         : view.objects_of(subject, literal.relation);
    std::vector<QaAnswer> out;
    out.reserve(entities.size());
    for (auto& entity : entities) out.push_back({std::move(entity), 1.0});
    return out;  // equal confidences, already in ascending entity order
}

}  // namespace

std::string PathType::signature() const {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i > 0) out += '/';
        out += steps[i].relation;
        if (steps[i].reversed) out += '~';
        out += ':';
        out += steps[i].modality == Modality::KB ? "KB" : "QA";
    }
    return out;
}

PathType PathType::parse(const std::string& signature) {
    PathType type;
    std::size_t start = 0;
    while (start <= signature.size()) {
        std::size_t sep = signature.find('/', start);
        std::string token = signature.substr(start, sep == std::string::npos ? sep : sep - start);
        std::size_t colon = token.rfind(':');
        if (colon == std::string::npos) {
            throw ParseError("path signature step missing modality: '" + token + "'");
        }
        std::string modality = token.substr(colon + 1);
        std::string relation = token.substr(0, colon);
        PathStep step;
        if (modality == "KB") {
            step.modality = Modality::KB;
        } else if (modality == "QA") {
            step.modality = Modality::QA;
        } else {
            throw ParseError("path signature step has unknown modality '" + modality + "'");
        }
        if (!relation.empty() && relation.back() == '~') {
            step.reversed = true;
            relation.pop_back();
        }
        if (relation.empty()) {
            throw ParseError("path signature step has empty relation: '" + token + "'");
        }
        step.relation = std::move(relation);
        type.steps.push_back(std::move(step));
        if (sep == std::string::npos) break;
        start = sep + 1;
    }
    if (type.steps.empty() || type.steps.size() > 2) {
        throw ParseError("path signature must have 1 or 2 steps: '" + signature + "'");
    }
    return type;
}

void validate_query_config(const QueryConfig& config) {
    if (config.t < 0.0 || config.t > 1.0) throw ConfigError("query t must lie in [0,1]");
    if (config.k < 1) throw ConfigError("query k must be >= 1");
    if (config.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    if (config.provider_budget < 1) throw ConfigError("provider budget must be >= 1");
}

std::vector<PathType> expand_path_types(const RelationId& relation,
                                        const std::vector<Rule>& rules) {
    std::vector<PathType> out;
    std::set<PathType> seen;
    auto push = [&](PathType type) {
        if (seen.insert(type).second) out.push_back(std::move(type));
    };

    push(PathType{{PathStep{relation, false, Modality::KB}}});
    push(PathType{{PathStep{relation, false, Modality::QA}}});

    for (const Rule& rule : rules) {
        const std::size_t n = rule.body.size();
        for (unsigned mask = 0; mask < (1u << n); ++mask) {
            PathType type;
            for (std::size_t i = 0; i < n; ++i) {
                Modality modality = ((mask >> (n - 1 - i)) & 1u) ? Modality::QA : Modality::KB;
                type.steps.push_back(PathStep{rule.body[i].relation, rule.body[i].reversed, modality});
            }
            push(std::move(type));
        }
    }
    return out;
}

std::vector<QaAnswer> filter_intermediates(std::vector<QaAnswer> candidates,
                                           double t, int k) {
    std::vector<QaAnswer> kept;
    for (auto& candidate : candidates) {
        if (candidate.confidence < t) continue;
        kept.push_back(std::move(candidate));
        if (static_cast<int>(kept.size()) == k) break;
    }
    return kept;
}

// ---------------------------------------------------------------------------
// ProviderSession
//
// Planning (budget allocation, cache lookups) is serialized by a mutex so
// concurrent ask() calls are safe; slots live in a deque so references
// stay valid while new probes are planned. Each slot carries a readiness
// future: readers of a shared cached slot wait for whichever caller runs
// it. Execution happens outside the lock, bounded by the semaphore.

struct ProviderSession::Impl {
    struct Slot {
        EntityId subject;
        RelationId relation;
        bool denied = false;
        std::string error;
        std::vector<QaAnswer> answers;
        std::promise<void> promise;
        std::shared_future<void> ready;
    };

    const AnswerProvider& provider;
    QueryConfig config;
    Semaphore gate;
    mutable std::mutex mutex;
    std::deque<Slot> slots;
    std::map<std::pair<EntityId, RelationId>, int> index;  // cache_enabled only
    std::vector<int> pending;
    int budget_remaining;
    int issued = 0;
    int denied_total = 0;

    Impl(const AnswerProvider& p, const QueryConfig& c)
        : provider(p), config(c), gate(c.parallelism), budget_remaining(c.provider_budget) {}

    int plan_locked(const EntityId& subject, const RelationId& relation) {
        if (config.cache_enabled) {
            auto it = index.find({subject, relation});
            if (it != index.end()) return it->second;
        }
        int slot_id = static_cast<int>(slots.size());
        Slot& slot = slots.emplace_back();
        slot.subject = subject;
        slot.relation = relation;
        slot.ready = slot.promise.get_future().share();
        if (budget_remaining == 0) {
            slot.denied = true;
            ++denied_total;
            slot.promise.set_value();
        } else {
            --budget_remaining;
            ++issued;
            pending.push_back(slot_id);
        }
        if (config.cache_enabled) index.emplace(std::make_pair(subject, relation), slot_id);
        return slot_id;
    }

    std::vector<int> take_pending_locked() {
        std::vector<int> batch;
        batch.swap(pending);
        return batch;
    }

    void execute(int slot_id) {
        Slot& slot = slots[slot_id];  // deque: stable reference
        gate.acquire();
        try {
            slot.answers = normalize_answers(provider.ask(slot.subject, slot.relation));
        } catch (const std::exception& e) {
            slot.error = e.what();
        }
        gate.release();
        slot.promise.set_value();
    }

    void run_batch(std::vector<int> batch) {
        if (batch.empty()) return;
        if (config.parallelism <= 1 || batch.size() == 1) {
            for (int slot_id : batch) execute(slot_id);
            return;
        }
        std::vector<std::future<void>> futures;
        futures.reserve(batch.size());
        for (int slot_id : batch) {
            futures.push_back(
                std::async(std::launch::async, [this, slot_id] { execute(slot_id); }));
        }
        for (auto& future : futures) future.get();
    }

    const Slot& wait(int slot_id) const {
        const Slot* slot;
        {
            std::lock_guard lock(mutex);
            slot = &slots.at(static_cast<std::size_t>(slot_id));
        }
        slot->ready.wait();
        return *slot;
    }
};

ProviderSession::ProviderSession(const AnswerProvider& provider, const QueryConfig& config)
    : impl_(std::make_unique<Impl>(provider, config)) {}

ProviderSession::~ProviderSession() = default;

int ProviderSession::plan(const EntityId& subject, const RelationId& relation) {
    std::lock_guard lock(impl_->mutex);
    return impl_->plan_locked(subject, relation);
}

void ProviderSession::run() {
    std::vector<int> batch;
    {
        std::lock_guard lock(impl_->mutex);
        batch = impl_->take_pending_locked();
    }
    impl_->run_batch(std::move(batch));
}

bool ProviderSession::denied(int slot) const { return impl_->wait(slot).denied; }

const std::string& ProviderSession::error(int slot) const { return impl_->wait(slot).error; }

const std::vector<QaAnswer>& ProviderSession::answers(int slot) const {
    return impl_->wait(slot).answers;
}

std::vector<QaAnswer> ProviderSession::ask(const EntityId& subject, const RelationId& relation) {
    int slot_id;
    std::vector<int> batch;
    {
        std::lock_guard lock(impl_->mutex);
        slot_id = impl_->plan_locked(subject, relation);
        batch = impl_->take_pending_locked();
    }
    impl_->run_batch(std::move(batch));
    const auto& slot = impl_->wait(slot_id);
    if (slot.denied) {
        throw BudgetExhausted("provider budget exhausted at probe (" + subject + ", " + relation + ")");
    }
    if (!slot.error.empty()) {
        throw ProviderError("probe (" + subject + ", " + relation + ") failed: " + slot.error);
    }
    return slot.answers;
}

int ProviderSession::calls_issued() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->issued;
}

int ProviderSession::calls_denied() const {
    std::lock_guard lock(impl_->mutex);
    return impl_->denied_total;
}

std::vector<QaAnswer> traverse_edge(const EntityId& subject, const Literal& literal,
                                    Modality modality, const KbView& view,
                                    ProviderSession& session) {
    if (modality == Modality::KB) return kb_step(view, subject, literal);
    if (literal.reversed) return {};  // QA probes cannot be inverted
    return session.ask(subject, literal.relation);
}

// ---------------------------------------------------------------------------
// build_graph

namespace {

struct TypeWork {
    PathType type;
    PathTypeStats stats;
    int first_slot = -1;                 // QA-forward first step
    std::vector<QaAnswer> intermediates; // 2-step types: post-filter
    std::vector<QaAnswer> direct;        // 1-step types: final answers
    std::vector<int> second_slots;       // aligned with intermediates, -1 = no probe
    bool dropped = false;

    void drop(const std::string& reason) {
        dropped = true;
        stats.degraded = true;
        stats.error = reason;
    }
};

}  // namespace

MultimodalKnowledgeGraph build_graph(const EntityId& subject, const RelationId& relation,
                                     const std::vector<Rule>& rules, const KbView& view,
                                     const AnswerProvider& provider,
                                     const QueryConfig& config) {
    validate_query_config(config);

    MultimodalKnowledgeGraph graph;
    graph.subject = subject;
    graph.relation = relation;

    std::vector<PathType> types = expand_path_types(relation, rules);
    ProviderSession session(provider, config);

    std::vector<TypeWork> work;
    work.reserve(types.size());
    for (PathType& type : types) {
        TypeWork item;
        item.stats.signature = type.signature();
        item.type = std::move(type);
        work.push_back(std::move(item));
    }

    // Round 1: first-step probes, planned in path-type order.
    for (TypeWork& item : work) {
        const PathStep& first = item.type.steps.front();
        if (first.modality == Modality::QA && !first.reversed) {
            item.first_slot = session.plan(subject, first.relation);
        }
    }
    session.run();

    // Read first-step results, filter intermediates, plan round 2.
    for (TypeWork& item : work) {
        const PathStep& first = item.type.steps.front();
        std::vector<QaAnswer> results;
        if (first.modality == Modality::KB) {
            results = kb_step(view, subject, Literal{first.relation, first.reversed});
        } else if (first.reversed) {
            // reversed QA edges are empty by contract
        } else if (session.denied(item.first_slot)) {
            item.drop("provider budget exhausted");
            continue;
        } else if (!session.error(item.first_slot).empty()) {
            item.drop(session.error(item.first_slot));
            continue;
        } else {
            results = session.answers(item.first_slot);
        }

        if (item.type.steps.size() == 1) {
            item.direct = std::move(results);
            continue;
        }

        const int before = static_cast<int>(results.size());
        item.intermediates = filter_intermediates(std::move(results), config.t, config.k);
        item.stats.intermediates_kept = static_cast<int>(item.intermediates.size());
        item.stats.intermediates_filtered = before - item.stats.intermediates_kept;

        const PathStep& second = item.type.steps[1];
        for (const QaAnswer& mid : item.intermediates) {
            int slot = -1;
            if (second.modality == Modality::QA && !second.reversed) {
                slot = session.plan(mid.entity, second.relation);
            }
            item.second_slots.push_back(slot);
        }
    }
    session.run();

    // Assemble instances; a denied or failed probe drops its whole type.
    std::map<std::tuple<EntityId, std::string, std::vector<EntityId>>, PathInstance> merged;
    auto emit = [&](const TypeWork& item, std::vector<EntityId> nodes,
                    std::vector<double> confidences) {
        const EntityId& answer = nodes.back();
        if (answer == subject) return;  // degenerate self-answer
        auto key = std::make_tuple(answer, item.stats.signature, nodes);
        auto it = merged.find(key);
        if (it == merged.end()) {
            merged.emplace(std::move(key),
                           PathInstance{item.type, std::move(nodes), std::move(confidences)});
        } else {
            for (std::size_t i = 0; i < it->second.edge_confidences.size(); ++i) {
                it->second.edge_confidences[i] =
                    std::max(it->second.edge_confidences[i], confidences[i]);
            }
        }
    };

    for (TypeWork& item : work) {
        if (item.dropped) continue;
        if (item.type.steps.size() == 1) {
            for (const QaAnswer& answer : item.direct) {
                emit(item, {subject, answer.entity}, {answer.confidence});
            }
            continue;
        }

        const PathStep& second = item.type.steps[1];
        for (std::size_t i = 0; i < item.second_slots.size() && !item.dropped; ++i) {
            int slot = item.second_slots[i];
            if (slot < 0) continue;
            if (session.denied(slot)) item.drop("provider budget exhausted");
            else if (!session.error(slot).empty()) item.drop(session.error(slot));
        }
        if (item.dropped) continue;

        for (std::size_t i = 0; i < item.intermediates.size(); ++i) {
            const QaAnswer& mid = item.intermediates[i];
            std::vector<QaAnswer> ends;
            if (second.modality == Modality::KB) {
                ends = kb_step(view, mid.entity, Literal{second.relation, second.reversed});
            } else if (!second.reversed) {
                ends = session.answers(item.second_slots[i]);
            }
            for (const QaAnswer& end : ends) {
                emit(item, {subject, mid.entity, end.entity}, {mid.confidence, end.confidence});
            }
        }
    }

    for (auto& [key, instance] : merged) {
        graph.instances[std::get<0>(key)].push_back(std::move(instance));
    }

    graph.stats.provider_calls = session.calls_issued();
    graph.stats.probes_denied = session.calls_denied();
    for (TypeWork& item : work) {
        if (item.stats.degraded) graph.stats.degraded = true;
        graph.stats.per_type.push_back(std::move(item.stats));
    }
    return graph;
}

}  // namespace kbc
