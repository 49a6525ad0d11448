#pragma once

#include "affect/fusion.hpp"

#include <string>
#include <vector>

namespace affect {

// A chunk of mono audio, samples in [-1, 1].
struct RawSamples {
    std::vector<double> samples;
    double sample_rate = 16000.0;
    Timestamp at = 0.0;

    friend bool operator==(const RawSamples&, const RawSamples&) = default;
};

struct Point3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Point3&, const Point3&) = default;
};

enum class LandmarkKind { face, pose };

inline constexpr std::size_t pose_landmark_count = 33;
inline constexpr std::size_t face_landmark_min = 6;

// Face frames start with the canonical points in this order: left eye outer
// corner, right eye outer corner, nose tip, chin, left mouth corner, right
// mouth corner. Pose frames use the 33-point BlazePose indexing.
struct LandmarkFrame {
    LandmarkKind kind = LandmarkKind::face;
    std::vector<Point3> points;
    Timestamp at = 0.0;
    std::string source;

    friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

// Throws InvalidArgument when the point count or coordinates are unusable.
void validate(const LandmarkFrame& frame);

struct ActivityUpdate {
    std::string modality;
    double score = 0.0;
    Timestamp t = 0.0;

    friend bool operator==(const ActivityUpdate&, const ActivityUpdate&) = default;
};

} // namespace affect
