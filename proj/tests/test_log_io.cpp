#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "banditreplay/log_io.hpp"
#include "banditreplay/world.hpp"

using namespace banditreplay;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) {
        path = (std::filesystem::temp_directory_path() / name).string();
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("write then read reproduces the event sequence bit for bit") {
    WorldModel w = WorldModel::tabular(
        {{0.25, Context{{0.125, -1.0}}}, {0.75, Context{{1.0 / 3.0, 0.7071067811865476}}}},
        {0, 1, 2},
        {{0, {0.1, 0.9}}, {1, {0.5, 0.5}}, {2, {0.25, 0.75}}});
    w.set_schedule({{0, {0, 1}}, {5000, {0, 1, 2}}});  // variable arm sets included
    Rng rng(99);
    auto events = generate_log(w, LoggingPolicy::uniform(), 10'000, rng);

    TempFile f("banditreplay_roundtrip.log");
    LogHeader header;
    header.dim = 2;
    header.seed = 99;
    header.event_count = static_cast<std::int64_t>(events.size());
    CHECK(write_events(f.path, header, events) == 10'000);

    LogHeader read_header;
    auto back = read_all_events(f.path, &read_header);
    CHECK(read_header.dim == 2);
    CHECK(read_header.seed == 99);
    CHECK(read_header.event_count == 10'000);
    REQUIRE(back.size() == events.size());
    CHECK(back == events);
}

TEST_CASE("empty streams produce a header-only file") {
    TempFile f("banditreplay_empty.log");
    LogHeader header;
    header.dim = 0;
    CHECK(write_events(f.path, header, std::vector<Event>{}) == 0);
    EventReader reader(f.path);
    CHECK(reader.header().dim == 0);
    CHECK(!reader.next().has_value());
}

TEST_CASE("invalid events are rejected on write") {
    TempFile f("banditreplay_invalid.log");
    LogHeader header;
    header.dim = 0;
    Event bad;
    bad.arms = {0};
    bad.chosen = 0;
    bad.propensity = 1.0;
    bad.payoff = 1.5;  // outside [0,1]
    CHECK_THROWS_AS(write_events(f.path, header, std::vector<Event>{bad}),
                    std::invalid_argument);

    Event wrong_dim;
    wrong_dim.context = Context{{1.0}};
    wrong_dim.arms = {0};
    wrong_dim.chosen = 0;
    wrong_dim.propensity = 1.0;
    wrong_dim.payoff = 0.5;
    CHECK_THROWS_AS(write_events(f.path, header, std::vector<Event>{wrong_dim}),
                    std::invalid_argument);
}

TEST_CASE("a truncated final line fails after yielding everything before it") {
    TempFile f("banditreplay_truncated.log");
    {
        std::ofstream out(f.path);
        out << "banditlog 1 d=0 logger=uniform seed=1 events=-\n";
        out << "0 - 0,1 0 0.5 1\n";
        out << "1 - 0,1 1 0.5 0\n";
        out << "2 - 0,1 0 0.5";  // missing payoff field
    }
    EventReader reader(f.path);
    CHECK(reader.next().has_value());
    CHECK(reader.next().has_value());
    try {
        reader.next();
        FAIL("expected LogParseError");
    } catch (const LogParseError& e) {
        CHECK(e.line_number == 4);
    }
}

TEST_CASE("uniform propensities are accepted silently, others flagged") {
    TempFile f("banditreplay_flags.log");
    {
        std::ofstream out(f.path);
        out << "banditlog 1 d=0 logger=explicit seed=1 events=2\n";
        out << "0 - 0,1,2,3 0 0.25 1\n";
        out << "1 - 0,1,2,3 1 0.3 0\n";
    }
    EventReader reader(f.path);
    auto first = reader.next();
    REQUIRE(first.has_value());
    CHECK(!reader.saw_nonuniform());
    auto second = reader.next();
    REQUIRE(second.has_value());
    CHECK(second->propensity == 0.3);  // accepted, but...
    CHECK(reader.saw_nonuniform());
}

TEST_CASE("unknown versions and malformed lines name their location") {
    TempFile f("banditreplay_version.log");
    {
        std::ofstream out(f.path);
        out << "banditlog 7 d=0 logger=uniform seed=1 events=-\n";
    }
    CHECK_THROWS_AS(EventReader(f.path), LogParseError);

    TempFile g("banditreplay_malformed.log");
    {
        std::ofstream out(g.path);
        out << "banditlog 1 d=0 logger=uniform seed=1 events=-\n";
        out << "0 - 0,1 0 abc 1\n";
    }
    EventReader reader(g.path);
    try {
        reader.next();
        FAIL("expected LogParseError");
    } catch (const LogParseError& e) {
        CHECK(e.line_number == 2);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
}

TEST_CASE("world specs load from JSON") {
    TempFile f("banditreplay_world.json");
    {
        std::ofstream out(f.path);
        out << R"({
            "d": 1,
            "arms": [ { "from": 0, "arms": [0, 1] } ],
            "contexts": { "kind": "finite",
                          "items": [ { "prob": 0.5, "x": [0.0] },
                                     { "prob": 0.5, "x": [1.0] } ] },
            "payoff": { "kind": "table",
                        "means": { "0": [0.8, 0.4], "1": [0.2, 0.6] } },
            "logger": { "kind": "uniform" },
            "seed": 42
        })";
    }
    WorldSpec spec = load_world_spec(f.path);
    CHECK(spec.seed == 42);
    CHECK(spec.world.dim() == 1);
    CHECK(spec.world.arms_at(0).size() == 2);
    CHECK(spec.world.expected_payoff(Context{{0.0}}, 0) == 0.8);
    CHECK(spec.world.expected_payoff(Context{{1.0}}, 1) == 0.6);
}

TEST_CASE("linear world specs and explicit loggers load") {
    TempFile f("banditreplay_linear.json");
    {
        std::ofstream out(f.path);
        out << R"({
            "d": 2,
            "arms": [ { "from": 0, "arms": [0, 1] } ],
            "payoff": { "kind": "linear",
                        "weights": { "0": [0.5, 0.4], "1": [0.2, 0.3] } },
            "logger": { "kind": "explicit", "probs": [0.8, 0.2] }
        })";
    }
    WorldSpec spec = load_world_spec(f.path);
    CHECK(spec.logger.kind == LoggingPolicy::Kind::explicit_dist);
    CHECK(spec.world.expected_payoff(Context{{1.0, 1.0}}, 0) == Catch::Approx(0.9).margin(1e-12));
}

TEST_CASE("broken world specs are config errors") {
    CHECK_THROWS_AS(load_world_spec("/nonexistent/world.json"), std::invalid_argument);
    TempFile f("banditreplay_bad.json");
    {
        std::ofstream out(f.path);
        out << R"({ "d": 1 })";
    }
    CHECK_THROWS_AS(load_world_spec(f.path), std::invalid_argument);
}
