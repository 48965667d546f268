#pragma once

#include <memory>
#include <string>

#include "kbc/app_config.hpp"

namespace kbc {

// Response body shared by the CLI `query` subcommand and the service so
// both surfaces produce identical rankings for identical inputs.
std::string completion_response_json(const EntityId& subject, const RelationId& relation,
                                     Method method, const MethodResult& result,
                                     double elapsed_ms, bool pretty);

// JSON-over-HTTP completion service:
//   GET /v1/complete?subject=S&relation=R[&method=M][&t=..][&k=..]
// Missing parameters and unknown methods answer 400 with a machine-readable
// error code; provider budget degradation still answers 200 with a
// `degraded` flag in stats. All shared state is immutable after startup.
class CompletionService {
public:
    CompletionService(const Artifacts& artifacts, const AppConfig& config);
    ~CompletionService();

    CompletionService(const CompletionService&) = delete;
    CompletionService& operator=(const CompletionService&) = delete;

    // Blocks until stop(); returns false if the port cannot be bound.
    bool listen(const std::string& host, int port);
    // Binds an ephemeral port and starts serving on a background thread.
    int start_async(const std::string& host);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kbc
