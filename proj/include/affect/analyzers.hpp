#pragma once

#include "affect/emotion.hpp"
#include "affect/fusion.hpp"
#include "affect/pipeline.hpp"
#include "affect/signals.hpp"
#include "affect/wire.hpp"

#include <deque>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affect {

// --- voice activity ---------------------------------------------------------

struct VadConfig {
    double window_ms = 30.0;
    double rms_floor = 0.01;
    double rms_ceil = 0.2;
    double hangover_ms = 300.0;

    friend bool operator==(const VadConfig&, const VadConfig&) = default;
};

void validate(const VadConfig& cfg);

double rms(std::span<const double> samples) noexcept;

// Linear map of RMS between floor and ceil onto [0, 1].
double rms_to_probability(double rms_value, const VadConfig& cfg) noexcept;

// Voice probability of the most recent window_ms of `window`, without hangover.
// Throws InvalidArgument if the window is empty or shorter than window_ms.
double vad_probability(const RawSamples& window, const VadConfig& cfg);

// Energy VAD with hangover: once a frame reaches 0.5 the probability is held at
// or above 0.5 for hangover_ms of audio time.
class VoiceActivityDetector {
public:
    explicit VoiceActivityDetector(VadConfig cfg = {});

    // Probability for the last frame of the chunk.
    double process(const RawSamples& chunk);
    void reset() { last_voiced_ = std::nullopt; }
    const VadConfig& config() const noexcept { return cfg_; }

private:
    VadConfig cfg_;
    std::optional<Timestamp> last_voiced_;
};

// --- face activity ----------------------------------------------------------

struct FaceActivityConfig {
    double yaw_max = 0.5;

    friend bool operator==(const FaceActivityConfig&, const FaceActivityConfig&) = default;
};

// Normalized left/right asymmetry of the eye-corner-to-nose-tip horizontal
// distances, in [-1, 1]. 0 for a frontal face.
double yaw_proxy(const LandmarkFrame& face);

// 0 without a frame, otherwise 1 - clamp(|yaw_proxy| / yaw_max).
double face_activity(const std::optional<LandmarkFrame>& face, const FaceActivityConfig& cfg = {});

// --- pose -------------------------------------------------------------------

namespace pose_index {
inline constexpr std::size_t nose = 0;
inline constexpr std::size_t left_ear = 7;
inline constexpr std::size_t right_ear = 8;
inline constexpr std::size_t left_shoulder = 11;
inline constexpr std::size_t right_shoulder = 12;
inline constexpr std::size_t left_hip = 23;
inline constexpr std::size_t right_hip = 24;
} // namespace pose_index

struct PoseFeatures {
    double head_tilt = 0.0; // radians from vertical
    double body_tilt = 0.0;
    double activation = 0.0; // mean landmark displacement per second

    friend bool operator==(const PoseFeatures&, const PoseFeatures&) = default;
};

// Angle in [0, pi] between `v` and image-up (0, -1, 0).
double angle_from_vertical(const Point3& v) noexcept;

// Throws InvalidArgument for fewer than two frames, non-pose frames or a window
// with no elapsed time.
PoseFeatures pose_features(std::span<const LandmarkFrame> history);

struct PoseDominanceConfig {
    double tilt_max = 0.6;
    double act_ref = 0.5;
    double k_tilt = 1.0;
    double k_act = 1.0;

    friend bool operator==(const PoseDominanceConfig&, const PoseDominanceConfig&) = default;
};

void validate(const PoseDominanceConfig& cfg);

double pose_dominance_score(const PoseFeatures& f, const PoseDominanceConfig& cfg);

// Dominance-only event for the "pose" modality.
AffectEvent pose_dominance(const PoseFeatures& f, const PoseDominanceConfig& cfg, double weight,
                           double decay_speed, Timestamp t = 0.0);

// Sliding window of pose frames bounded by duration.
class PoseWindow {
public:
    explicit PoseWindow(double span_seconds = 1.0, std::size_t max_frames = 120)
        : span_(span_seconds), max_frames_(max_frames)
    {
    }
    void add(LandmarkFrame frame);
    std::size_t size() const noexcept { return frames_.size(); }
    std::vector<LandmarkFrame> frames() const { return {frames_.begin(), frames_.end()}; }

private:
    double span_;
    std::size_t max_frames_;
    std::deque<LandmarkFrame> frames_;
};

// --- face valence/arousal bridge -------------------------------------------

// Completes a valence/arousal reading with a derived dominance score.
AffectEvent face_event_bridge(double valence, double arousal, const DominanceRule& rule,
                              double weight = 1.0, double decay_speed = 0.5, Timestamp t = 0.0);

// --- per-message analyzer bank ------------------------------------------------

struct AnalyzerConfig {
    VadConfig vad;
    FaceActivityConfig face;
    PoseDominanceConfig pose;
    double pose_window = 1.0;       // seconds of frames used for features
    double pose_emit_interval = 0.5; // min seconds between pose events
    double pose_weight = 1.0;
    double pose_decay_speed = 0.5;

    friend bool operator==(const AnalyzerConfig&, const AnalyzerConfig&) = default;
};

// Turns raw inputs into activity updates and events. State is limited to the
// VAD hangover timer and the pose window, so a given input sequence always
// yields the same outputs.
class AnalyzerBank {
public:
    explicit AnalyzerBank(AnalyzerConfig cfg = {});

    std::optional<ActivityUpdate> on_samples(const RawSamples& chunk);
    std::optional<ActivityUpdate> on_face(const LandmarkFrame& frame);
    std::optional<AffectEvent> on_pose(const LandmarkFrame& frame);

    // Pose event parameters can be patched live.
    void set_pose_event_params(double weight, double decay_speed);

private:
    AnalyzerConfig cfg_;
    VoiceActivityDetector vad_;
    PoseWindow pose_window_;
    std::optional<Timestamp> last_pose_emit_;
};

// --- scripted source ----------------------------------------------------------

struct ScriptEntry {
    double offset = 0.0; // seconds from script start
    wire::Message message;
};

// Throws InvalidArgument when offsets decrease.
void validate_script(const std::vector<ScriptEntry>& script);

// Input component that replays a script onto the wire topics. Messages keep
// their own timestamps; acceleration divides the offsets (0 = emit everything
// on the first step).
class ScriptedSource : public Component {
public:
    explicit ScriptedSource(std::vector<ScriptEntry> script, double acceleration = 1.0);

    void step(ComponentContext& ctx) override;
    bool finished() const noexcept { return next_ >= script_.size(); }
    std::size_t emitted() const noexcept { return next_; }

    // Topics written by this source.
    static std::vector<std::string> output_topics();

private:
    std::vector<ScriptEntry> script_;
    double acceleration_;
    std::size_t next_ = 0;
    std::optional<Timestamp> started_;
};

} // namespace affect
