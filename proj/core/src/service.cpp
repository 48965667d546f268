#include "kbc/service.hpp"

#include <charconv>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace kbc {

std::string completion_response_json(const EntityId& subject, const RelationId& relation,
                                     Method method, const MethodResult& result,
                                     double elapsed_ms, bool pretty) {
    nlohmann::ordered_json body;
    body["query"] = {{"subject", subject}, {"relation", relation}, {"method", method_name(method)}};
    nlohmann::ordered_json answers = nlohmann::ordered_json::array();
    for (const ScoredAnswer& answer : result.answers) {
        nlohmann::ordered_json entry;
        entry["entity"] = answer.entity;
        entry["score"] = answer.score;
        nlohmann::ordered_json paths = nlohmann::ordered_json::array();
        for (const PathContribution& part : answer.breakdown) {
            paths.push_back({{"signature", part.signature},
                             {"score", part.path_score},
                             {"weight", part.weight}});
        }
        entry["paths"] = std::move(paths);
        answers.push_back(std::move(entry));
    }
    body["answers"] = std::move(answers);
    body["stats"] = {{"provider_calls", result.stats.provider_calls},
                     {"degraded", result.stats.degraded},
                     {"elapsed_ms", elapsed_ms}};
    return pretty ? body.dump(2) + "\n" : body.dump();
}

struct CompletionService::Impl {
    const Artifacts& artifacts;
    AppConfig config;
    RunContext context;
    httplib::Server server;
    std::thread worker;

    Impl(const Artifacts& a, const AppConfig& c)
        : artifacts(a), config(c), context(make_run_context(a, c)) {
        server.Get("/v1/complete", [this](const httplib::Request& req, httplib::Response& res) {
            handle_complete(req, res);
        });
    }

    static void fail(httplib::Response& res, int status, const std::string& code,
                     const std::string& detail) {
        nlohmann::ordered_json body;
        body["error"] = {{"code", code}, {"detail", detail}};
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    void handle_complete(const httplib::Request& req, httplib::Response& res) {
        auto started = std::chrono::steady_clock::now();
        if (!req.has_param("subject")) {
            fail(res, 400, "missing_parameter", "query parameter 'subject' is required");
            return;
        }
        if (!req.has_param("relation")) {
            fail(res, 400, "missing_parameter", "query parameter 'relation' is required");
            return;
        }
        const std::string subject = req.get_param_value("subject");
        const std::string relation = req.get_param_value("relation");
        Method method = config.default_method;
        if (req.has_param("method")) {
            try {
                method = parse_method(req.get_param_value("method"));
            } catch (const ConfigError& e) {
                fail(res, 400, "unknown_method", e.what());
                return;
            }
        }
        RunContext local = context;
        if (req.has_param("t")) {
            double t = 0.0;
            const std::string raw = req.get_param_value("t");
            auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), t);
            if (ec != std::errc() || ptr != raw.data() + raw.size() || t < 0.0 || t > 1.0) {
                fail(res, 400, "invalid_parameter", "t must be a number in [0,1]");
                return;
            }
            local.query.t = t;
        }
        if (req.has_param("k")) {
            int k = 0;
            const std::string raw = req.get_param_value("k");
            auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), k);
            if (ec != std::errc() || ptr != raw.data() + raw.size() || k < 1) {
                fail(res, 400, "invalid_parameter", "k must be an integer >= 1");
                return;
            }
            local.query.k = k;
        }

        try {
            MethodResult result = rank_query(local, method, subject, relation, std::nullopt);
            double elapsed_ms = std::chrono::duration<double, std::milli>(
                                    std::chrono::steady_clock::now() - started)
                                    .count();
            res.status = 200;
            res.set_content(
                completion_response_json(subject, relation, method, result, elapsed_ms, false),
                "application/json");
        } catch (const ConfigError& e) {
            fail(res, 400, "configuration_error", e.what());
        } catch (const ProviderError& e) {
            fail(res, 502, "provider_error", e.what());
        }
    }
};

CompletionService::CompletionService(const Artifacts& artifacts, const AppConfig& config)
    : impl_(std::make_unique<Impl>(artifacts, config)) {}

CompletionService::~CompletionService() { stop(); }

bool CompletionService::listen(const std::string& host, int port) {
    return impl_->server.listen(host, port);
}

int CompletionService::start_async(const std::string& host) {
    int port = impl_->server.bind_to_any_port(host);
    if (port < 0) return -1;
    impl_->worker = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return port;
}

void CompletionService::stop() {
    if (impl_ == nullptr) return;
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

}  // namespace kbc
