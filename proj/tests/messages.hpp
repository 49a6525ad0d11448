#pragma once

#include "affect/wire.hpp"

#include "oracle.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace messages {

using namespace affect::wire;

// Fixed corpus used for golden-byte checks. Appending is fine; editing an
// entry invalidates the golden files.
inline std::vector<Message> golden_corpus()
{
    std::vector<Message> c;
    auto ev = [&](std::string modality, std::optional<double> p, std::optional<double> a, std::optional<double> d,
                  double w, double s, double t) { c.push_back({1, EventBody{std::move(modality), p, a, d, w, s, t}}); };
    ev("voice", 0.5, -0.25, std::nullopt, 1.0, 0.5, 12.125);
    ev("face", 0.1, 0.2, 0.3, 1.0, 1.0, 0.0);
    ev("sentiment", -0.875, std::nullopt, std::nullopt, 2.0, 0.25, 1700000000.5);
    ev("pose", std::nullopt, std::nullopt, 1.0, 0.0, 3.0, 42.0);
    ev("voice", 0.1, std::nullopt, -1.0, 0.3333333333333333, 0.7, -5.0);
    ev("caf\xc3\xa9 <&> \"q\"", 1e-300, -0.0, std::nullopt, 1e-7, 1e10, 0.1);
    c.push_back({1, ActivityBody{"voice", 0.0, 0.0}});
    c.push_back({1, ActivityBody{"voice", 1.0, 3.5}});
    c.push_back({1, ActivityBody{"face", 0.123456789012345, 99.99}});
    c.push_back({1, ActivityBody{"\xe6\x97\xa5\xe6\x9c\xac", 0.5, 1.0}});

    std::vector<double> face;
    for (int i = 0; i < 18; ++i)
        face.push_back(0.05 * i - 0.3);
    c.push_back({1, LandmarksBody{affect::LandmarkKind::face, face, 7.25}});
    std::vector<double> pose;
    for (int i = 0; i < 99; ++i)
        pose.push_back(std::sin(0.1 * i));
    c.push_back({1, LandmarksBody{affect::LandmarkKind::pose, pose, 8.0}});
    std::vector<double> face7(face);
    face7.insert(face7.end(), {0.5, 0.5, -0.01});
    c.push_back({1, LandmarksBody{affect::LandmarkKind::face, face7, 0.0}});

    c.push_back({1, SamplesBody{16000.0, {0.0, 0.5, -0.5, 1.0, -1.0}, 0.5}});
    std::vector<double> tone;
    for (int i = 0; i < 64; ++i)
        tone.push_back(0.25 * std::sin(2 * 3.141592653589793 * i / 16.0));
    c.push_back({1, SamplesBody{8000.0, tone, 100.0}});
    c.push_back({1, SamplesBody{44100.0, {1e-5}, 0.0}});

    c.push_back({1, FusionBody{0.0, 0.0, 0.0, 0.0, "neutral-ish default", {0, 0, 0}, 0}});
    c.push_back({1, FusionBody{1.02, 0.25, -0.5, 0.125, "anxious", {0.3, -0.6, 0.2}, 17}});
    c.push_back({1, FusionBody{3600.5, -1.0, 1.0, -1.0, "hostile", {-1, 1, -1}, 4096}});
    c.push_back({1, FusionBody{0.1, 0.1, 0.2, 0.30000000000000004, "", {0.1, 0.2, 0.3}, 1}});
    c.push_back({1, FusionBody{59.98, 2.5e-8, -7.5e-9, 0.999999999, "exuberant", {1, 1, 1}, 18446744073709551615ull}});
    c.push_back({1, ActivityBody{"pose", 0.75, 1e-3}});
    return c;
}

// Random valid message of any type.
inline Message random_message(oracle::Rng& rng)
{
    auto unit = [&] { return rng.uniform(-1, 1); };
    auto any_number = [&] {
        switch (rng.below(4)) {
        case 0: return rng.uniform(-1e6, 1e6);
        case 1: return unit();
        case 2: return std::ldexp(rng.uniform(-1, 1), static_cast<int>(rng.below(200)) - 100);
        default: return static_cast<double>(rng.below(100000));
        }
    };
    auto name = [&] {
        static const char* names[] = {"voice", "face", "pose", "sentiment", "x", "caf\xc3\xa9", "a b", "<&>"};
        return std::string(names[rng.below(8)]);
    };
    switch (rng.below(5)) {
    case 0: {
        EventBody b;
        b.modality = name();
        if (rng.coin())
            b.p = unit();
        if (rng.coin())
            b.a = unit();
        if (rng.coin() || (!b.p && !b.a))
            b.d = unit();
        b.weight = rng.uniform(0, 10);
        b.decay_speed = rng.uniform(1e-3, 10);
        b.t = any_number();
        return {1, b};
    }
    case 1:
        return {1, ActivityBody{name(), rng.uniform(0, 1), any_number()}};
    case 2: {
        LandmarksBody b;
        b.kind = rng.coin() ? affect::LandmarkKind::face : affect::LandmarkKind::pose;
        const std::size_t n = b.kind == affect::LandmarkKind::pose ? 33 : 6 + rng.below(60);
        for (std::size_t i = 0; i < 3 * n; ++i)
            b.points.push_back(any_number());
        b.t = any_number();
        return {1, b};
    }
    case 3: {
        SamplesBody b;
        b.rate = rng.uniform(1, 96000);
        const std::size_t n = 1 + rng.below(400);
        for (std::size_t i = 0; i < n; ++i)
            b.data.push_back(unit());
        b.t = any_number();
        return {1, b};
    }
    default: {
        FusionBody b;
        b.t = any_number();
        b.p = unit();
        b.a = unit();
        b.d = unit();
        b.label = name();
        b.point = {unit(), unit(), unit()};
        b.active = rng.next() >> rng.below(64);
        return {1, b};
    }
    }
}

} // namespace messages
