#include "affect/analyzers.hpp"
#include "affect/errors.hpp"

#include "../fixtures.hpp"
#include "../oracle.hpp"

#include <doctest.h>

#include <cmath>

using namespace affect;
using fixtures::Axis;

TEST_CASE("vad: silence, saturation and the midpoint")
{
    const VadConfig cfg;
    RawSamples zeros;
    zeros.samples.assign(16000, 0.0);
    CHECK(vad_probability(zeros, cfg) == 0.0);
    CHECK(vad_probability(fixtures::square(1.0, 16000), cfg) == 1.0);

    RawSamples mid;
    mid.samples.assign(480, (cfg.rms_floor + cfg.rms_ceil) / 2.0);
    CHECK(vad_probability(mid, cfg) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("vad: window errors")
{
    const VadConfig cfg;
    CHECK_THROWS_AS(vad_probability(RawSamples{}, cfg), InvalidArgument);
    RawSamples shorty;
    shorty.samples.assign(100, 0.5); // 30 ms at 16 kHz is 480 samples
    CHECK_THROWS_AS(vad_probability(shorty, cfg), InvalidArgument);
    CHECK_THROWS_AS(validate(VadConfig{30, 0.2, 0.1, 300}), ConfigError);
}

TEST_CASE("vad: only the last window counts")
{
    RawSamples s;
    s.samples.assign(4800, 1.0);
    s.samples.resize(4800 + 480, 0.0);
    CHECK(vad_probability(s, VadConfig{}) == 0.0);
}

TEST_CASE("property: vad is monotone in rms")
{
    const VadConfig cfg;
    oracle::Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        const double a = rng.uniform(0, 1);
        const double b = rng.uniform(0, 1);
        RawSamples lo, hi;
        lo.samples.assign(480, std::min(a, b));
        hi.samples.assign(480, std::max(a, b));
        CHECK(vad_probability(lo, cfg) <= vad_probability(hi, cfg));
    }
}

TEST_CASE("vad hangover holds voiced frames at 0.5")
{
    VoiceActivityDetector vad(VadConfig{30, 0.01, 0.2, 300});
    const double rate = 16000;
    CHECK(vad.process(fixtures::square(1.0, 4800, rate, 0.0)) == 1.0);

    RawSamples quiet;
    quiet.sample_rate = rate;
    quiet.samples.assign(1600, 0.0); // 100 ms
    quiet.at = 0.3;
    CHECK(vad.process(quiet) == 0.5);
    quiet.at = 0.5;
    CHECK(vad.process(quiet) == 0.5);
    quiet.at = 0.7;
    CHECK(vad.process(quiet) == 0.0);
}

TEST_CASE("face activity")
{
    const FaceActivityConfig cfg;
    CHECK(face_activity(fixtures::frontal_face(), cfg) == 1.0);
    CHECK(face_activity(std::nullopt, cfg) == 0.0);

    // nose shifted so that (L - R) / (L + R) = yaw_max
    const double shift = 0.1 * cfg.yaw_max;
    const auto turned = fixtures::frontal_face(0.0, shift);
    CHECK(yaw_proxy(turned) == doctest::Approx(cfg.yaw_max).epsilon(1e-12));
    CHECK(face_activity(turned, cfg) == doctest::Approx(0.0).epsilon(1e-12));

    const auto half = fixtures::frontal_face(0.0, shift / 2.0);
    CHECK(face_activity(half, cfg) == doctest::Approx(0.5));

    auto bad = fixtures::frontal_face();
    bad.points.resize(4);
    CHECK_THROWS_AS(face_activity(bad, cfg), InvalidArgument);
}

TEST_CASE("property: face activity ignores scale and translation")
{
    oracle::Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        auto f = fixtures::frontal_face(0.0, rng.uniform(-0.1, 0.1));
        const double base = face_activity(f);
        const double k = rng.uniform(0.2, 5.0);
        const double dx = rng.uniform(-1, 1);
        const double dy = rng.uniform(-1, 1);
        for (auto& p : f.points)
            p = {p.x * k + dx, p.y * k + dy, p.z * k};
        CHECK(face_activity(f) == doctest::Approx(base).epsilon(1e-9));
    }
}

TEST_CASE("pose features: upright static skeleton")
{
    const auto a = fixtures::skeleton(0.0, Axis::image_plane, 0.0);
    const auto b = fixtures::skeleton(0.0, Axis::image_plane, 0.5);
    const std::vector<LandmarkFrame> h{a, b};
    const auto f = pose_features(h);
    CHECK(f.body_tilt == doctest::Approx(0.0));
    CHECK(f.head_tilt == doctest::Approx(0.0));
    CHECK(f.activation == 0.0);
}

TEST_CASE("pose features: rotated skeleton gives the rotation angle")
{
    for (double angle : {0.1, 0.3, -0.3, 0.7}) {
        for (auto axis : {Axis::image_plane, Axis::depth}) {
            const std::vector<LandmarkFrame> h{fixtures::skeleton(angle, axis, 0.0),
                                               fixtures::skeleton(angle, axis, 1.0)};
            const auto f = pose_features(h);
            CHECK(std::abs(f.body_tilt - std::abs(angle)) <= 1e-6);
            CHECK(std::abs(f.head_tilt - std::abs(angle)) <= 1e-6);
        }
    }
}

TEST_CASE("pose features: translation gives |delta| / dt")
{
    auto a = fixtures::skeleton(0.0, Axis::image_plane, 1.0);
    auto b = a;
    b.at = 1.25;
    for (auto& p : b.points)
        p = {p.x + 0.03, p.y - 0.04, p.z};
    const std::vector<LandmarkFrame> h{a, b};
    CHECK(pose_features(h).activation == doctest::Approx(0.05 / 0.25).epsilon(1e-12));

    // scaling the displacement scales activation linearly
    auto c = a;
    c.at = 1.25;
    for (auto& p : c.points)
        p = {p.x + 0.06, p.y - 0.08, p.z};
    const std::vector<LandmarkFrame> h2{a, c};
    CHECK(pose_features(h2).activation == doctest::Approx(2 * 0.05 / 0.25).epsilon(1e-12));
}

TEST_CASE("pose features: errors")
{
    const std::vector<LandmarkFrame> one{fixtures::skeleton(0.0)};
    CHECK_THROWS_AS(pose_features(one), InvalidArgument);
    auto bad = fixtures::skeleton(0.0, Axis::image_plane, 1.0);
    bad.points.pop_back();
    const std::vector<LandmarkFrame> h{fixtures::skeleton(0.0), bad};
    CHECK_THROWS_AS(pose_features(h), InvalidArgument);
    const std::vector<LandmarkFrame> same_time{fixtures::skeleton(0.0), fixtures::skeleton(0.0)};
    CHECK_THROWS_AS(pose_features(same_time), InvalidArgument);
}

TEST_CASE("pose dominance formula")
{
    const PoseDominanceConfig cfg;
    CHECK(pose_dominance_score({0, 0, 0}, cfg) == 0.0);
    CHECK(pose_dominance_score({0, 0, cfg.act_ref}, cfg) == 1.0);
    CHECK(pose_dominance_score({0, 0, 10 * cfg.act_ref}, cfg) == 1.0);
    CHECK(pose_dominance_score({0, cfg.tilt_max, 0}, cfg) == -1.0);
    CHECK(pose_dominance_score({0, -cfg.tilt_max, 0}, cfg) == -1.0);
    CHECK(pose_dominance_score({0, cfg.tilt_max / 2, cfg.act_ref / 2}, cfg) == doctest::Approx(0.0));

    const auto e = pose_dominance({0, 0, cfg.act_ref}, cfg, 0.7, 0.4, 3.0);
    CHECK(e.modality == "pose");
    CHECK(*e.scores[Dimension::dominance] == 1.0);
    CHECK_FALSE(e.scores[Dimension::pleasure]);
    CHECK(e.weight == 0.7);
    CHECK(e.decay_speed == 0.4);
}

TEST_CASE("property: pose dominance stays in [-1, 1]")
{
    oracle::Rng rng(9);
    const PoseDominanceConfig cfg{0.6, 0.5, 3.0, 2.0};
    for (int i = 0; i < 2000; ++i) {
        const PoseFeatures f{rng.uniform(-4, 4), rng.uniform(-4, 4), rng.uniform(0, 100)};
        const double d = pose_dominance_score(f, cfg);
        CHECK(d >= -1.0);
        CHECK(d <= 1.0);
    }
}

TEST_CASE("face bridge")
{
    const DominanceRule rule;
    auto e = face_event_bridge(0, 0, rule, 1, 1, 0);
    CHECK(*e.scores[Dimension::dominance] == 0.0);
    e = face_event_bridge(1, 1, rule, 1, 1, 0);
    CHECK(*e.scores[Dimension::dominance] == doctest::Approx(0.75));
    e = face_event_bridge(-0.5, 0.5, rule, 1, 1, 0);
    CHECK(*e.scores[Dimension::dominance] == doctest::Approx(-0.125));
    CHECK(e.modality == "face");
    CHECK_THROWS_AS(face_event_bridge(2, 0, rule, 1, 1, 0), InvalidArgument);
}

TEST_CASE("analyzer bank rate-limits pose events")
{
    AnalyzerConfig cfg;
    cfg.pose_emit_interval = 0.5;
    AnalyzerBank bank(cfg);
    CHECK_FALSE(bank.on_pose(fixtures::skeleton(0.0, Axis::image_plane, 0.0)));
    CHECK(bank.on_pose(fixtures::skeleton(0.0, Axis::image_plane, 0.1)));
    CHECK_FALSE(bank.on_pose(fixtures::skeleton(0.0, Axis::image_plane, 0.2)));
    CHECK(bank.on_pose(fixtures::skeleton(0.0, Axis::image_plane, 0.6)));

    const auto u = bank.on_face(fixtures::frontal_face(2.0));
    REQUIRE(u);
    CHECK(u->modality == "face");
    CHECK(u->score == 1.0);
    CHECK(u->t == 2.0);
    const auto v = bank.on_samples(fixtures::square(1.0, 480));
    REQUIRE(v);
    CHECK(v->modality == "voice");
}
