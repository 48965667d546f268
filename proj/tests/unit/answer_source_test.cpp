#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "kbc/answer_source.hpp"
#include "kbc/mkg.hpp"
#include "support.hpp"

using namespace kbc;
using kbc::testing::fixture_from;
using kbc::testing::store_from;

TEST_CASE("fixture provider answers its probes") {
    FixtureProvider provider =
        fixture_from("Marvin_Minsky\twasBornIn\tNew_York_City\t0.9\n");
    auto answers = provider.ask("Marvin_Minsky", "wasBornIn");
    REQUIRE(answers.size() == 1);
    CHECK(answers[0].entity == "New_York_City");
    CHECK(answers[0].confidence == doctest::Approx(0.9));
    CHECK(provider.ask("unknown", "wasBornIn").empty());
}

TEST_CASE("duplicate fixture rows keep the max confidence") {
    FixtureProvider provider = fixture_from(
        "s\tr\tx\t0.4\n"
        "s\tr\tx\t0.7\n");
    auto answers = provider.ask("s", "r");
    REQUIRE(answers.size() == 1);
    CHECK(answers[0].confidence == doctest::Approx(0.7));
}

TEST_CASE("fixture answers are sorted by confidence then entity") {
    FixtureProvider provider = fixture_from(
        "s\tr\tb\t0.5\n"
        "s\tr\ta\t0.5\n"
        "s\tr\tc\t0.9\n");
    auto answers = provider.ask("s", "r");
    REQUIRE(answers.size() == 3);
    CHECK(answers[0].entity == "c");
    CHECK(answers[1].entity == "a");
    CHECK(answers[2].entity == "b");
}

TEST_CASE("fixture ingestion validates lines") {
    std::istringstream out_of_range("s\tr\tx\t1.2\n");
    CHECK_THROWS_WITH_AS(FixtureProvider::load_stream(out_of_range),
                         doctest::Contains("line 1"), ParseError);

    std::istringstream missing("s\tr\tx\n");
    CHECK_THROWS_AS(FixtureProvider::load_stream(missing), ParseError);

    std::istringstream empty;
    FixtureProvider provider = FixtureProvider::load_stream(empty);
    CHECK(provider.ask("anything", "at_all").empty());
}

TEST_CASE("repeated probes are byte-identical") {
    FixtureProvider provider = fixture_from("s\tr\tx\t0.8\ns\tr\ty\t0.6\n");
    auto first = provider.ask("s", "r");
    auto second = provider.ask("s", "r");
    CHECK(first == second);
}

TEST_CASE("kb_mock with full slice mirrors objects_of") {
    FactStore store = store_from(
        "s\tr\ta\n"
        "s\tr\tb\n"
        "t\tr\tc\n");
    KbMockProvider mock(store, 1.0, 0.8, 1);
    auto answers = mock.ask("s", "r");
    REQUIRE(answers.size() == 2);
    CHECK(answers[0].entity == "a");
    CHECK(answers[0].confidence == doctest::Approx(0.8));
    CHECK(answers[1].entity == "b");
}

TEST_CASE("kb_mock with empty slice answers nothing") {
    FactStore store = store_from("s\tr\ta\n");
    KbMockProvider mock(store, 0.0, 0.8, 1);
    CHECK(mock.ask("s", "r").empty());
}

TEST_CASE("kb_mock is deterministic per seed") {
    std::ostringstream tsv;
    for (int i = 0; i < 40; ++i) tsv << "s" << i % 5 << "\tr\te" << i << "\n";
    FactStore store = store_from(tsv.str());
    KbMockProvider a(store, 0.5, 0.8, 42);
    KbMockProvider b(store, 0.5, 0.8, 42);
    KbMockProvider c(store, 0.5, 0.8, 43);
    bool any_difference = false;
    for (int s = 0; s < 5; ++s) {
        std::string subject = "s" + std::to_string(s);
        CHECK(a.ask(subject, "r") == b.ask(subject, "r"));
        if (a.ask(subject, "r") != c.ask(subject, "r")) any_difference = true;
    }
    CHECK(any_difference);  // different seed picks a different slice
}

TEST_CASE("provider session caches probes and respects the budget") {
    FixtureProvider fixture = fixture_from("s\tr\tx\t0.9\n");
    kbc::testing::CountingProvider counting(fixture);

    QueryConfig config;
    config.provider_budget = 2;
    config.cache_enabled = true;
    ProviderSession session(counting, config);
    CHECK(session.ask("s", "r").size() == 1);
    CHECK(session.ask("s", "r").size() == 1);  // cache hit, no extra call
    CHECK(counting.calls() == 1);
    CHECK(session.calls_issued() == 1);

    CHECK(session.ask("s", "other").empty());
    CHECK(counting.calls() == 2);
    CHECK_THROWS_AS(session.ask("s", "third"), BudgetExhausted);
    CHECK(session.calls_denied() == 1);
}

TEST_CASE("provider session without cache re-bills repeated probes") {
    FixtureProvider fixture = fixture_from("s\tr\tx\t0.9\n");
    kbc::testing::CountingProvider counting(fixture);
    QueryConfig config;
    config.provider_budget = 2;
    config.cache_enabled = false;
    ProviderSession session(counting, config);
    CHECK(session.ask("s", "r").size() == 1);
    CHECK(session.ask("s", "r").size() == 1);
    CHECK(counting.calls() == 2);
    CHECK_THROWS_AS(session.ask("s", "r"), BudgetExhausted);
}

TEST_CASE("a shared session is safe under concurrent asks") {
    std::ostringstream tsv;
    for (int i = 0; i < 8; ++i) tsv << "s" << i << "\tr\tx" << i << "\t0.9\n";
    FixtureProvider fixture = fixture_from(tsv.str());
    kbc::testing::CountingProvider counting(fixture);

    QueryConfig config;
    config.parallelism = 4;
    config.provider_budget = 1000;
    ProviderSession session(counting, config);

    std::vector<std::thread> workers;
    std::atomic<int> answered{0};
    for (int t = 0; t < 16; ++t) {
        workers.emplace_back([&, t] {
            // heavy overlap: every thread also probes the shared key s0
            auto own = session.ask("s" + std::to_string(t % 8), "r");
            auto shared = session.ask("s0", "r");
            if (own.size() == 1 && shared.size() == 1) ++answered;
        });
    }
    for (auto& worker : workers) worker.join();
    CHECK(answered == 16);
    CHECK(counting.calls() == 8);  // cache collapses the duplicates
    CHECK(session.calls_issued() == 8);
}

TEST_CASE("remote provider speaks the /qa protocol") {
    httplib::Server server;
    server.Get("/qa", [](const httplib::Request& req, httplib::Response& res) {
        if (req.get_param_value("subject") == "Marvin_Minsky" &&
            req.get_param_value("relation") == "wasBornIn") {
            res.set_content(
                R"({"answers":[{"entity":"New_York_City","confidence":0.9},)"
                R"({"entity":"Boston","confidence":0.2}]})",
                "application/json");
        } else {
            res.set_content(R"({"answers":[]})", "application/json");
        }
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RemoteProvider provider("http://127.0.0.1:" + std::to_string(port),
                            std::chrono::milliseconds(2000));
    auto answers = provider.ask("Marvin_Minsky", "wasBornIn");
    REQUIRE(answers.size() == 2);
    CHECK(answers[0].entity == "New_York_City");
    CHECK(provider.ask("nobody", "wasBornIn").empty());

    server.stop();
    worker.join();
}

TEST_CASE("remote provider surfaces transport failures with the probe") {
    // Nothing listens on this port.
    RemoteProvider provider("http://127.0.0.1:1", std::chrono::milliseconds(200));
    CHECK_THROWS_WITH_AS(provider.ask("s", "r"), doctest::Contains("(s, r)"), ProviderError);
}

TEST_CASE("remote provider rejects malformed bodies") {
    httplib::Server server;
    server.Get("/qa", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("not json at all", "text/plain");
    });
    int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread worker([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    RemoteProvider provider("http://127.0.0.1:" + std::to_string(port),
                            std::chrono::milliseconds(2000));
    CHECK_THROWS_AS(provider.ask("s", "r"), ProviderError);

    server.stop();
    worker.join();
}

TEST_CASE("make_provider validates its config") {
    ProviderConfig config;
    config.kind = ProviderKind::KbMock;
    CHECK_THROWS_AS(make_provider(config, nullptr), ConfigError);

    config.per_query_budget = 0;
    FactStore store;
    CHECK_THROWS_AS(make_provider(config, &store), ConfigError);

    CHECK(parse_provider_kind("fixture") == ProviderKind::Fixture);
    CHECK_THROWS_AS(parse_provider_kind("nonsense"), ConfigError);
}
