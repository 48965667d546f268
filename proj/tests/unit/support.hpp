#pragma once

// Shared helpers for the unit suites: in-memory loading and a couple of
// tiny provider doubles.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "kbc/answer_source.hpp"
#include "kbc/fact_store.hpp"
#include "kbc/rules.hpp"

namespace kbc::testing {

inline FactStore store_from(const std::string& tsv) {
    std::istringstream in(tsv);
    return FactStore::load_stream(in);
}

inline std::vector<Rule> rules_from(const std::string& tsv) {
    std::istringstream in(tsv);
    return parse_rules(in);
}

inline FixtureProvider fixture_from(const std::string& tsv) {
    std::istringstream in(tsv);
    return FixtureProvider::load_stream(in);
}

// Provider that throws for one poisoned relation and delegates otherwise.
class FailingProvider : public AnswerProvider {
public:
    FailingProvider(const AnswerProvider& inner, RelationId poisoned)
        : inner_(inner), poisoned_(std::move(poisoned)) {}

    std::vector<QaAnswer> ask(const EntityId& subject,
                              const RelationId& relation) const override {
        if (relation == poisoned_) {
            throw ProviderError("probe (" + subject + ", " + relation + ") refused by test double");
        }
        return inner_.ask(subject, relation);
    }

private:
    const AnswerProvider& inner_;
    RelationId poisoned_;
};

// Records every probe it answers, for call-count assertions.
class CountingProvider : public AnswerProvider {
public:
    explicit CountingProvider(const AnswerProvider& inner) : inner_(inner) {}

    std::vector<QaAnswer> ask(const EntityId& subject,
                              const RelationId& relation) const override {
        {
            std::lock_guard lock(mutex_);
            probes_.push_back(subject + "|" + relation);
        }
        return inner_.ask(subject, relation);
    }

    std::size_t calls() const {
        std::lock_guard lock(mutex_);
        return probes_.size();
    }

    std::vector<std::string> probes() const {
        std::lock_guard lock(mutex_);
        return probes_;
    }

private:
    const AnswerProvider& inner_;
    mutable std::mutex mutex_;
    mutable std::vector<std::string> probes_;
};

// Scratch directory removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("kbc_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    std::string write(const std::string& name, const std::string& content) const {
        std::filesystem::path file = path_ / name;
        std::ofstream out(file);
        out << content;
        return file.string();
    }

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace kbc::testing
