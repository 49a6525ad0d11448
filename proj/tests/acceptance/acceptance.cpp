// One PASS/FAIL line per acceptance criterion. Exit status is non-zero when
// any criterion fails.
//
//   acceptance [--data DIR] [--fuzz-seconds N] [--only NAME]

#include "affect/analyzers.hpp"
#include "affect/bench.hpp"
#include "affect/config.hpp"
#include "affect/fusion.hpp"
#include "affect/processor.hpp"
#include "affect/session.hpp"
#include "affect/wire.hpp"

#include "../fixtures.hpp"
#include "../messages.hpp"
#include "../oracle.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#ifndef AFFECT_TEST_DATA_DIR
#define AFFECT_TEST_DATA_DIR "tests/data"
#endif

using namespace affect;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

oracle::Event to_oracle(const AffectEvent& e)
{
    return {{e.scores[Dimension::pleasure], e.scores[Dimension::arousal], e.scores[Dimension::dominance]},
            e.weight,
            e.decay_speed,
            e.registered_at};
}

AffectEvent random_event(oracle::Rng& rng, double max_speed = 1.0)
{
    AffectEvent e;
    e.modality = "m";
    do {
        for (auto d : {Dimension::pleasure, Dimension::arousal, Dimension::dominance})
            e.scores[d] = rng.coin() ? std::optional<double>(rng.uniform(-1, 1)) : std::nullopt;
    } while (e.scores.empty());
    e.weight = rng.below(10) == 0 ? 0.0 : rng.uniform(0.01, 5.0);
    e.decay_speed = rng.uniform(0.01, max_speed);
    return e;
}

// --- fusion ---------------------------------------------------------------

Outcome decay_law()
{
    const auto t0 = Clock::now();
    oracle::Rng rng(101);
    std::size_t bad = 0, discards = 0;
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        AffectEvent e = random_event(rng, 2.0);
        const double n0 = e.scores.norm();
        const double s = e.decay_speed;
        const double dt = rng.uniform(0, 2.0);
        const double split = rng.uniform(0, dt);
        const double expected = std::max(0.0, n0 - s * dt);

        const auto one = decay_event(make_decayed(e), dt);
        const auto first = decay_event(make_decayed(e), split);
        const auto two = first ? decay_event(*first, dt - split) : std::nullopt;

        // discard exactly when n0 - s*t fails to stay above zero
        if (one.has_value() != (n0 - dt * s > 0.0))
            ++bad;
        const double got = one ? one->current_norm : 0.0;
        worst = std::max(worst, std::abs(got - expected));
        if (std::abs(got - expected) > 1e-9)
            ++bad;
        if (!one)
            ++discards;

        // split vs one-shot: agree on the norm; on survival unless within
        // rounding of the boundary
        const double got2 = two ? two->current_norm : 0.0;
        if (std::abs(got2 - got) > 1e-9)
            ++bad;
        if (two.has_value() != one.has_value() && std::abs(n0 - s * dt) > 1e-9)
            ++bad;
        if (one) {
            for (auto d : {Dimension::pleasure, Dimension::arousal, Dimension::dominance}) {
                if (!e.scores[d])
                    continue;
                const double want = *e.scores[d] * expected / n0;
                if (std::abs(*one->decayed_scores[d] - want) > 1e-9)
                    ++bad;
            }
        }
    }
    // exact boundary: norm 1, speed 0.5, two seconds
    AffectEvent edge;
    edge.scores = ScoreSet(1.0, std::nullopt, std::nullopt);
    edge.decay_speed = 0.5;
    if (decay_event(make_decayed(edge), 2.0) || !decay_event(make_decayed(edge), 1.999))
        ++bad;
    const double took = seconds_since(t0);
    return {bad == 0 && took < 5.0 && discards > 0,
            fmt("10000 events, %zu discarded, max |err| %.3g, %zu violations, %.2f s", discards, worst, bad, took)};
}

Outcome oracle_equivalence()
{
    // The oracle sees every event ever registered and decides liveness on its
    // own, so early or late discards in the engine show up as mismatches.
    const auto t0 = Clock::now();
    oracle::Rng rng(202);
    FusionConfig cfg;
    cfg.neutral_point = {0.05, -0.1, 0.0};
    double worst = 0.0;
    std::size_t bad = 0, live = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        FusionEngine engine(cfg, LabelPrototypeTable::octants());
        std::vector<oracle::Event> all;
        const std::size_t n = 1 + rng.below(100);
        double now = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            now += rng.uniform(0, 0.05);
            auto e = random_event(rng, 2.0);
            e.registered_at = now;
            all.push_back(to_oracle(e));
            engine.register_event(e, now);
            if (rng.below(8) == 0)
                engine.tick(now);
        }
        now += rng.uniform(0, 0.5);
        const auto r = engine.tick(now);

        std::size_t alive = 0;
        for (const auto& e : all)
            alive += oracle::active(e, now);
        if (alive != r.active_event_count)
            ++bad;
        live += alive;
        const auto expected = oracle::fusion_point(all, now, {0.05, -0.1, 0.0});
        for (std::size_t d = 0; d < 3; ++d) {
            const double err = std::abs(r.fusion_point[static_cast<Dimension>(d)] - expected[d]);
            worst = std::max(worst, err);
            if (err > 1e-9)
                ++bad;
        }
    }
    const double took = seconds_since(t0);
    return {bad == 0 && took < 10.0,
            fmt("1000 states, %zu live events, max |err| %.3g, %zu mismatches, %.2f s", live, worst, bad, took)};
}

Outcome attenuation()
{
    oracle::Rng rng(303);
    double worst = 0.0;
    for (int trial = 0; trial < 2000; ++trial) {
        FusionEngine engine(FusionConfig{}, LabelPrototypeTable::octants());
        const std::size_t pairs = 1 + rng.below(10);
        double now = 0.0;
        std::array<bool, 3> shared{};
        for (std::size_t i = 0; i < pairs; ++i) {
            now += rng.uniform(0, 0.1);
            auto e = random_event(rng);
            e.weight = rng.uniform(0.1, 3.0);
            auto anti = e;
            for (auto d : {Dimension::pleasure, Dimension::arousal, Dimension::dominance}) {
                if (anti.scores[d]) {
                    anti.scores[d] = -*anti.scores[d];
                    shared[static_cast<std::size_t>(d)] = true;
                }
            }
            engine.register_event(e, now);
            engine.register_event(anti, now);
        }
        const auto r = engine.tick(now + rng.uniform(0, 0.2));
        for (std::size_t d = 0; d < 3; ++d)
            if (shared[d])
                worst = std::max(worst, std::abs(r.fusion_point[static_cast<Dimension>(d)]));
    }
    return {worst <= 1e-12, fmt("2000 antipodal sets, max |point - neutral| %.3g", worst)};
}

Outcome neutral_convergence()
{
    oracle::Rng rng(404);
    std::size_t bad = 0;
    double worst_margin = -1e9;
    for (int trial = 0; trial < 500; ++trial) {
        FusionConfig cfg;
        cfg.tick_interval = rng.uniform(0.005, 0.1);
        cfg.approach_speed = rng.uniform(0.2, 5.0);
        cfg.neutral_point = {rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3)};
        FusionEngine engine(cfg, LabelPrototypeTable::octants());

        double expiry = 0.0;
        double t = 0.0;
        const std::size_t n = 1 + rng.below(20);
        for (std::size_t i = 0; i < n; ++i) {
            auto e = random_event(rng, 3.0);
            e.registered_at = t;
            engine.register_event(e, t);
            const auto o = to_oracle(e);
            if (oracle::initial_norm(o) > 0)
                expiry = std::max(expiry, t + oracle::initial_norm(o) / o.speed);
        }

        std::uint64_t k = 0;
        auto next = [&] { return static_cast<double>(++k) * cfg.tick_interval; };
        PadVector at_expiry = engine.state().fusion_vector;
        FusionResult r;
        while ((t = next()) < expiry) {
            r = engine.tick(t);
            at_expiry = r.pad;
        }
        const double distance = affect::distance(at_expiry, cfg.neutral_point);
        const double deadline = expiry + distance / cfg.approach_speed + 2 * cfg.tick_interval;
        std::optional<double> converged;
        for (; t <= deadline + 10 * cfg.tick_interval; t = next()) {
            r = engine.tick(t);
            if (r.active_event_count == 0 && affect::distance(r.pad, cfg.neutral_point) <= 1e-3) {
                converged = t;
                break;
            }
        }
        if (!converged || *converged > deadline)
            ++bad;
        else
            worst_margin = std::max(worst_margin, *converged - deadline);
    }
    return {bad == 0, fmt("500 runs, %zu late, worst (converged - deadline) %.4f s", bad, worst_margin)};
}

Outcome convex_hull()
{
    oracle::Rng rng(505);
    std::size_t violations = 0, checked = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        FusionEngine engine(FusionConfig{}, LabelPrototypeTable::octants());
        double now = 0.0;
        const std::size_t n = 1 + rng.below(30);
        for (std::size_t i = 0; i < n; ++i) {
            now += rng.uniform(0, 0.05);
            engine.register_event(random_event(rng), now);
        }
        const auto r = engine.tick(now + rng.uniform(0, 0.3));
        for (auto d : {Dimension::pleasure, Dimension::arousal, Dimension::dominance}) {
            double lo = INFINITY, hi = -INFINITY;
            for (const auto& a : engine.state().active) {
                if (a.decayed_scores[d] && a.event.weight > 0.0) {
                    lo = std::min(lo, *a.decayed_scores[d]);
                    hi = std::max(hi, *a.decayed_scores[d]);
                }
            }
            if (lo > hi)
                continue;
            ++checked;
            if (r.fusion_point[d] < lo || r.fusion_point[d] > hi)
                ++violations;
        }
    }
    return {violations == 0, fmt("10000 cases, %zu dimension checks, %zu violations", checked, violations)};
}

// --- replay ---------------------------------------------------------------

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw Error("cannot read " + p.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome deterministic_replay(const fs::path& data)
{
    const auto cfg = DaemonConfig::defaults();
    const auto session = read_session(data / "synthetic_session.jsonl");
    const double span = session.records.empty() ? 0.0 : session.records.back().offset;

    auto run = [&] {
        const auto r = replay(session, cfg);
        std::ostringstream log, csv;
        write_session(log, r.log);
        write_trajectory(csv, r.results, TrajectoryFormat::csv);
        return std::pair{log.str(), csv.str()};
    };
    const auto a = run();
    const auto b = run();
    const bool identical = a == b;
    const bool golden_log = a.first == slurp(data / "golden_replay.jsonl");
    const bool golden_csv = a.second == slurp(data / "golden_trajectory.csv");

    // the produced log replays to itself
    std::istringstream in(a.first);
    const auto again = replay(parse_session(in), cfg);
    std::ostringstream closure;
    write_session(closure, again.log);
    const bool closed = closure.str() == a.first;

    return {identical && golden_log && golden_csv && closed && span >= 59.0,
            fmt("%.1f s session; twice identical: %s; golden log: %s; golden csv: %s; re-replay: %s", span,
                identical ? "yes" : "no", golden_log ? "match" : "DIFF", golden_csv ? "match" : "DIFF",
                closed ? "identical" : "DIFF")};
}

// --- wire -----------------------------------------------------------------

Outcome wire_round_trip()
{
    oracle::Rng rng(606);
    std::size_t bad = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto m = messages::random_message(rng);
        for (auto f : {wire::Format::json, wire::Format::xml}) {
            try {
                if (!(wire::decode(wire::encode(m, f), f) == m))
                    ++bad;
            } catch (const std::exception&) {
                ++bad;
            }
        }
    }
    return {bad == 0, fmt("10000 messages x {json, xml}, %zu failures", bad)};
}

Outcome wire_golden(const fs::path& data)
{
    const auto corpus = messages::golden_corpus();
    std::size_t bad = 0;
    for (auto [format, name] : {std::pair{wire::Format::json, "wire_golden.json.txt"},
                                std::pair{wire::Format::xml, "wire_golden.xml.txt"}}) {
        std::istringstream in(slurp(data / name));
        std::string line;
        std::size_t i = 0;
        for (; std::getline(in, line); ++i) {
            if (i >= corpus.size() || wire::encode(corpus[i], format) != line)
                ++bad;
            else if (!(wire::decode(line, format) == corpus[i]))
                ++bad;
        }
        if (i != corpus.size())
            ++bad;
    }
    return {bad == 0 && corpus.size() >= 20, fmt("%zu messages x {json, xml}, %zu mismatches", corpus.size(), bad)};
}

Outcome wire_fuzz(double seconds)
{
    oracle::Rng rng(707);
    std::vector<std::string> seeds;
    for (const auto& m : messages::golden_corpus()) {
        seeds.push_back(wire::encode(m, wire::Format::json));
        seeds.push_back(wire::encode(m, wire::Format::xml));
    }
    const char* tokens[] = {"{", "}", "[", "]", "\"", ":", ",", "<", ">", "</", "/>", "&amp;", "&#", "<![CDATA[",
                            "<!--", "\\u", "\\ud800", "1e999", "-0", "null", "true", "version", "type", "\xff",
                            "\xc3", "\0"};
    std::size_t inputs = 0, accepted = 0, crashes = 0;
    const auto t0 = Clock::now();
    while (seconds_since(t0) < seconds) {
        std::string s;
        switch (rng.below(3)) {
        case 0: {
            s.resize(rng.below(512));
            for (auto& c : s)
                c = static_cast<char>(rng.next());
            break;
        }
        case 1: {
            s = seeds[rng.below(seeds.size())];
            const std::size_t edits = 1 + rng.below(8);
            for (std::size_t e = 0; e < edits && !s.empty(); ++e) {
                const std::size_t at = rng.below(s.size());
                switch (rng.below(4)) {
                case 0: s[at] = static_cast<char>(rng.next()); break;
                case 1: s.erase(at, 1 + rng.below(8)); break;
                case 2: s.insert(at, tokens[rng.below(std::size(tokens))]); break;
                default: s.insert(at, s.substr(rng.below(s.size()), rng.below(32))); break;
                }
            }
            break;
        }
        default: {
            const std::size_t n = rng.below(40);
            for (std::size_t i = 0; i < n; ++i)
                s += tokens[rng.below(std::size(tokens))];
            break;
        }
        }
        ++inputs;
        for (int which = 0; which < 3; ++which) {
            try {
                if (which == 0)
                    wire::decode_auto(s);
                else
                    wire::decode(s, which == 1 ? wire::Format::json : wire::Format::xml);
                ++accepted;
            } catch (const wire::DecodeError&) {
            } catch (const std::exception&) {
                ++crashes; // anything but a categorized decode error
            }
        }
    }
    return {crashes == 0, fmt("%.0f s, %zu inputs, %zu decoded, %zu uncategorized failures", seconds, inputs,
                              accepted, crashes)};
}

// --- gating ---------------------------------------------------------------

Outcome gating(const fs::path& data)
{
    const auto cfg = DaemonConfig::defaults();
    const auto session = read_session(data / "synthetic_session.jsonl");
    const auto& voice_cfg = cfg.gating.modalities.at("voice");

    AffectProcessor proc(cfg);
    std::vector<AffectEvent> registered;
    proc.set_registration_observer([&](const AffectEvent& e) { registered.push_back(e); });

    std::size_t offered = 0, dropped_low = 0, kept = 0, violations = 0;
    double worst = 0.0;
    for (const auto& r : session.records) {
        const auto* ev = std::get_if<wire::EventBody>(&r.message.body);
        if (!ev || ev->modality != "voice") {
            proc.on_message(r.message, r.offset);
            continue;
        }
        ++offered;
        const double score = proc.activity().get("voice").effective(r.offset);
        const std::size_t before = registered.size();
        proc.on_message(r.message, r.offset);
        const bool entered = registered.size() > before;
        if (score < voice_cfg.threshold) {
            ++dropped_low;
            if (entered)
                ++violations;
        } else if (!entered) {
            ++violations;
        } else {
            ++kept;
            const double want = ev->weight * voice_cfg.weight * score;
            const double err = std::abs(registered.back().weight - want);
            worst = std::max(worst, err);
            if (err > 1e-12)
                ++violations;
        }
    }
    // the session must actually exercise both sides of the threshold
    return {violations == 0 && dropped_low > 0 && kept > 0,
            fmt("%zu voice events: %zu below threshold dropped, %zu kept, max |w - w*score| %.3g, %zu violations",
                offered, dropped_low, kept, worst, violations)};
}

// --- analyzers ------------------------------------------------------------

Outcome analyzer_sanity()
{
    const VadConfig vad;
    RawSamples zeros;
    zeros.samples.assign(16000, 0.0);
    const double silent = vad_probability(zeros, vad);
    const double loud = vad_probability(fixtures::tone(1.0, 16000), vad);
    const double face = face_activity(fixtures::frontal_face());
    double tilt_err = 0.0;
    for (double angle : {0.05, 0.2, 0.4, -0.4, 0.8}) {
        for (auto axis : {fixtures::Axis::image_plane, fixtures::Axis::depth}) {
            const std::vector<LandmarkFrame> h{fixtures::skeleton(angle, axis, 0.0),
                                               fixtures::skeleton(angle, axis, 0.5)};
            tilt_err = std::max(tilt_err, std::abs(pose_features(h).body_tilt - std::abs(angle)));
        }
    }
    return {silent <= 0.05 && loud >= 0.95 && face == 1.0 && tilt_err <= 1e-6,
            fmt("VAD(zeros) %.3f, VAD(full-scale tone) %.3f, face(frontal) %.3f, max tilt err %.2g", silent, loud,
                face, tilt_err)};
}

// --- performance ----------------------------------------------------------

Outcome performance()
{
    BenchOptions o;
    o.events = 1000;
    o.ticks = 1000;
    o.tick_rate_hz = 100;
    o.broadcast_period = 0.1;
    const auto r = run_bench(o);
    const bool ok = r.min_active >= 1000 && r.tick_p50_ms < 1.0 && r.tick_p99_ms < 5.0 && r.jitter_p99_ms < 20.0 &&
                    r.broadcasts_received > 0;
    return {ok, fmt("%zu active, tick p50 %.3f ms, p99 %.3f ms, jitter p99 %.3f ms over %zu broadcasts",
                    r.min_active, r.tick_p50_ms, r.tick_p99_ms, r.jitter_p99_ms, r.broadcasts_received)};
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"acceptance checks"};
    std::string data = AFFECT_TEST_DATA_DIR;
    double fuzz_seconds = 60.0;
    std::string only;
    app.add_option("--data", data, "directory with the golden files");
    app.add_option("--fuzz-seconds", fuzz_seconds, "decoder fuzz duration")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "run a single criterion");
    CLI11_PARSE(app, argc, argv);

    const fs::path dir = data;
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"decay-law", decay_law},
        {"oracle-equivalence", oracle_equivalence},
        {"attenuation", attenuation},
        {"neutral-convergence", neutral_convergence},
        {"convex-hull", convex_hull},
        {"deterministic-replay", [&] { return deterministic_replay(dir); }},
        {"wire-round-trip", wire_round_trip},
        {"wire-golden", [&] { return wire_golden(dir); }},
        {"wire-fuzz", [&] { return wire_fuzz(fuzz_seconds); }},
        {"gating", [&] { return gating(dir); }},
        {"analyzer-sanity", analyzer_sanity},
        {"performance", performance},
    };

    int failed = 0;
    for (const auto& [name, check] : criteria) {
        if (!only.empty() && name != only)
            continue;
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
