#include "affect/session.hpp"

#include "../oracle.hpp"

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

using namespace affect;

namespace {

DaemonConfig ungated()
{
    auto cfg = DaemonConfig::defaults();
    for (auto& [name, m] : cfg.gating.modalities)
        m.gated = false;
    return cfg;
}

wire::Message event(double p, double t, double decay = 0.5)
{
    return {1, wire::EventBody{"voice", p, std::nullopt, std::nullopt, 1.0, decay, t}};
}

SessionLog three_record_log(const DaemonConfig& cfg)
{
    SessionLog log;
    log.header = {1, "2026-01-01T00:00:00.000Z", config_hash(cfg)};
    log.records = {{0.1, event(0.5, 0.1)}, {0.25, event(-0.25, 0.25)}, {0.4, event(0.75, 0.4)}};
    return log;
}

std::string serialize(const SessionLog& log)
{
    std::ostringstream out;
    write_session(out, log);
    return out.str();
}

std::size_t error_line(const std::string& text)
{
    std::istringstream in(text);
    try {
        parse_session(in);
    } catch (const SessionError& e) {
        return e.line();
    }
    FAIL("log accepted");
    return 0;
}

} // namespace

TEST_CASE("header-only log replays to nothing")
{
    const auto cfg = DaemonConfig::defaults();
    SessionLog log;
    log.header = {1, "2026-01-01T00:00:00.000Z", config_hash(cfg)};
    const auto r = replay(log, cfg);
    CHECK(r.results.empty());
    CHECK(r.log.records.empty());
    CHECK(serialize(r.log) == serialize(log));
}

TEST_CASE("three events tick on the grid up to the last offset")
{
    const auto cfg = ungated();
    const auto r = replay(three_record_log(cfg), cfg);
    // grid 0.02 .. 0.4 inclusive
    REQUIRE(r.results.size() == 20);
    CHECK(r.results.front().at == doctest::Approx(0.02));
    CHECK(r.results.back().at == doctest::Approx(0.4));
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(r.results[i].active_event_count == 0);
    // first event registered at 0.1 is visible from the tick after it
    CHECK(r.results[5].active_event_count == 1);
    CHECK(r.results[5].fusion_point[Dimension::pleasure] == doctest::Approx(0.5 - 0.02 * 0.5).epsilon(1e-12));
    // at 0.4 the last event has just arrived; all three are live
    CHECK(r.results.back().active_event_count == 3);

    // output log carries every input and every result in offset order
    CHECK(r.log.records.size() == 3 + 20);
    for (std::size_t i = 1; i < r.log.records.size(); ++i)
        CHECK(r.log.records[i - 1].offset <= r.log.records[i].offset);
}

TEST_CASE("replay against an oracle fusion point")
{
    const auto cfg = ungated();
    const auto r = replay(three_record_log(cfg), cfg);
    auto p_only = [](double p, double at) { return oracle::Event{{p, std::nullopt, std::nullopt}, 1.0, 0.5, at}; };
    const std::vector<oracle::Event> ev{p_only(0.5, 0.1), p_only(-0.25, 0.25), p_only(0.75, 0.4)};
    for (const auto& res : r.results) {
        std::vector<oracle::Event> live;
        for (const auto& e : ev)
            if (e.registered_at <= res.at)
                live.push_back(e);
        const auto expected = oracle::fusion_point(live, res.at, {0, 0, 0});
        CHECK(std::abs(res.fusion_point[Dimension::pleasure] - expected[0]) <= 1e-12);
    }
}

TEST_CASE("recorded fusion offsets drive ticks")
{
    const auto cfg = ungated();
    auto log = three_record_log(cfg);
    log.records.push_back({0.5, wire::Message{1, wire::FusionBody{}}});
    log.records.push_back({0.9, wire::Message{1, wire::FusionBody{}}});
    const auto r = replay(log, cfg);
    REQUIRE(r.results.size() == 2);
    CHECK(r.results[0].at == 0.5);
    CHECK(r.results[1].at == 0.9);
}

TEST_CASE("record then replay reproduces the log exactly")
{
    const auto cfg = DaemonConfig::defaults();
    SynthOptions o;
    o.duration = 10;
    const auto input = synthesize_session(cfg, o);
    const auto first = replay(input, cfg);
    const auto second = replay(input, cfg);
    CHECK(serialize(first.log) == serialize(second.log));

    const auto again = replay(first.log, cfg);
    CHECK(serialize(again.log) == serialize(first.log));
    std::ostringstream a, b;
    write_trajectory(a, first.results, TrajectoryFormat::csv);
    write_trajectory(b, again.results, TrajectoryFormat::csv);
    CHECK(a.str() == b.str());
}

TEST_CASE("parse errors name the line")
{
    const auto cfg = DaemonConfig::defaults();
    const auto text = serialize(three_record_log(cfg));
    CHECK(error_line("") == 1);
    CHECK(error_line("{\"type\":\"nope\"}\n") == 1);
    CHECK(error_line("{\"type\":\"session\",\"version\":9,\"started\":\"x\",\"config_hash\":\"y\"}\n") == 1);

    auto swapped = text;
    const auto l2 = swapped.find('\n') + 1;
    const auto l3 = swapped.find('\n', l2) + 1;
    const auto l4 = swapped.find('\n', l3) + 1;
    swapped = swapped.substr(0, l2) + text.substr(l3, l4 - l3) + text.substr(l2, l3 - l2) + text.substr(l4);
    CHECK(error_line(swapped) == 3);

    // corrupt line 17 of a longer log
    SessionLog longer = three_record_log(cfg);
    longer.records.clear();
    for (int i = 0; i < 30; ++i)
        longer.records.push_back({0.1 * i, event(0.1, 0.1 * i)});
    auto lines = serialize(longer);
    std::size_t pos = 0;
    for (int i = 1; i < 17; ++i)
        pos = lines.find('\n', pos) + 1;
    lines.insert(pos, "{\"offset\":1,\"message\":{\"type\":");
    CHECK(error_line(lines) == 17);

    CHECK(error_line(text + "{\"offset\":-1,\"message\":{}}\n") == 5);
    CHECK(error_line(text + "{\"offset\":9,\"message\":{\"type\":\"activity\",\"version\":1}}\n") == 5);
}

TEST_CASE("config mismatch is refused unless allowed")
{
    const auto cfg = ungated();
    auto log = three_record_log(cfg);
    log.header.config_hash = std::string(64, '0');
    CHECK_THROWS_AS(replay(log, cfg), ConfigMismatch);
    ReplayOptions o;
    o.allow_config_mismatch = true;
    CHECK(replay(log, cfg, o).results.size() == 20);
}

TEST_CASE("paced replay takes offset / speed of wall time")
{
    const auto cfg = ungated();
    SessionLog log = three_record_log(cfg);
    log.records.push_back({0.6, event(0.1, 0.6)});
    ReplayOptions o;
    o.speed = 2.0;
    const auto t0 = std::chrono::steady_clock::now();
    const auto paced = replay(log, cfg, o);
    const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    CHECK(took >= 0.3 - 0.005);
    CHECK(took < 0.3 + 0.15);
    CHECK(serialize(paced.log) == serialize(replay(log, cfg).log));

    o.speed = 0.0;
    CHECK_THROWS_AS(replay(log, cfg, o), InvalidArgument);
}

TEST_CASE("trajectory formats")
{
    FusionResult r;
    r.at = 0.5;
    r.pad = {0.1, -0.2, 0.3};
    r.label = "a,b";
    std::ostringstream csv;
    write_trajectory(csv, {r}, TrajectoryFormat::csv);
    CHECK(csv.str() == "t,p,a,d,label\n0.5,0.1,-0.2,0.3,\"a,b\"\n");
    std::ostringstream jl;
    write_trajectory(jl, {r}, TrajectoryFormat::jsonl);
    CHECK(jl.str() == wire::encode(wire::Message{1, wire::from_result(r)}, wire::Format::json) + "\n");
    CHECK_THROWS_AS(parse_trajectory_format("tsv"), InvalidArgument);
}

TEST_CASE("recorder appends in order and rejects going back")
{
    std::ostringstream out;
    SessionRecorder rec(out, {1, "s", "h"});
    rec.append(0.5, event(0.1, 0.5));
    rec.append(0.5, event(0.2, 0.5));
    CHECK_THROWS_AS(rec.append(0.4, event(0.1, 0.4)), InvalidArgument);
    CHECK_THROWS_AS(rec.append(-1, event(0.1, 0.4)), InvalidArgument);
    rec.flush();
    CHECK(rec.records() == 2);
    std::istringstream in(out.str());
    const auto log = parse_session(in);
    CHECK(log.header.started == "s");
    CHECK(log.records.size() == 2);
}

TEST_CASE("recorder component writes through the runtime")
{
    const auto path = std::filesystem::temp_directory_path() / "affect_recorder_test.jsonl";
    std::filesystem::remove(path);
    auto comp = std::make_unique<RecorderComponent>(path, SessionHeader{1, "s", "h"});
    auto* raw = comp.get();
    Runtime rt;
    rt.register_component(ComponentDescriptor{"src", ComponentKind::input, 100, {}, {std::string(wire::topics::session)}},
                          std::make_unique<FunctionComponent>([n = 0](ComponentContext& ctx) mutable {
                              if (n < 5) {
                                  ctx.push(wire::topics::session, wire::to_payload(event(0.1, n)), 0.1 * n);
                                  ++n;
                              }
                          }));
    rt.register_component(ComponentDescriptor{"recorder", ComponentKind::output, 50, {std::string(wire::topics::session)}, {}},
                          std::move(comp));
    rt.start();
    std::this_thread::sleep_for(std::chrono::milliseconds(150));
    rt.stop();
    const auto st = raw->status();
    CHECK_FALSE(st.error);
    CHECK(st.records == 5);
    const auto log = read_session(path);
    CHECK(log.records.size() == 5);
    std::filesystem::remove(path);

    RecorderComponent bad("/nonexistent/dir/x.jsonl", SessionHeader{});
    CHECK(bad.status().error);
    CHECK_FALSE(bad.status().recording);
}
