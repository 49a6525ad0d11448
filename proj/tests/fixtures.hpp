#pragma once

#include "affect/analyzers.hpp"
#include "affect/signals.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace fixtures {

using affect::LandmarkFrame;
using affect::LandmarkKind;
using affect::Point3;

// Frontal, left/right symmetric face in the canonical point order.
inline LandmarkFrame frontal_face(double t = 0.0, double nose_shift = 0.0)
{
    LandmarkFrame f;
    f.kind = LandmarkKind::face;
    f.at = t;
    f.points = {{0.40, 0.40, 0.0}, {0.60, 0.40, 0.0}, {0.50 + nose_shift, 0.50, -0.05},
                {0.50, 0.70, 0.0}, {0.44, 0.60, 0.0}, {0.56, 0.60, 0.0}};
    return f;
}

enum class Axis { image_plane, depth };

// Upright skeleton (image coordinates, y down) rotated rigidly about the hip
// midpoint by `angle` radians, either in the image plane or toward the camera.
inline LandmarkFrame skeleton(double angle, Axis axis = Axis::image_plane, double t = 0.0)
{
    namespace ix = affect::pose_index;
    std::vector<Point3> pts(affect::pose_landmark_count);
    for (std::size_t i = 0; i < pts.size(); ++i)
        pts[i] = {0.5 + 0.01 * static_cast<double>(i % 5), 0.8 - 0.015 * static_cast<double>(i), 0.0};
    pts[ix::left_hip] = {0.42, 0.8, 0.0};
    pts[ix::right_hip] = {0.58, 0.8, 0.0};
    pts[ix::left_shoulder] = {0.40, 0.5, 0.0};
    pts[ix::right_shoulder] = {0.60, 0.5, 0.0};
    pts[ix::left_ear] = {0.46, 0.4, 0.0};
    pts[ix::right_ear] = {0.54, 0.4, 0.0};
    pts[ix::nose] = {0.50, 0.35, 0.0};

    const Point3 pivot{0.5, 0.8, 0.0};
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    for (auto& p : pts) {
        const double x = p.x - pivot.x;
        const double y = p.y - pivot.y;
        const double z = p.z - pivot.z;
        if (axis == Axis::image_plane)
            p = {pivot.x + c * x - s * y, pivot.y + s * x + c * y, p.z};
        else
            p = {p.x, pivot.y + c * y - s * z, pivot.z + s * y + c * z};
    }
    LandmarkFrame f;
    f.kind = LandmarkKind::pose;
    f.points = std::move(pts);
    f.at = t;
    return f;
}

inline affect::RawSamples tone(double amplitude, std::size_t n, double rate = 16000.0, double hz = 440.0,
                               double at = 0.0)
{
    affect::RawSamples s;
    s.sample_rate = rate;
    s.at = at;
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
    return s;
}

inline affect::RawSamples square(double amplitude, std::size_t n, double rate = 16000.0, double at = 0.0)
{
    affect::RawSamples s;
    s.sample_rate = rate;
    s.at = at;
    s.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        s.samples[i] = (i / 8) % 2 ? amplitude : -amplitude;
    return s;
}

} // namespace fixtures
