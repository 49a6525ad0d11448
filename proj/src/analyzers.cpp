#include "affect/analyzers.hpp"

#include "affect/errors.hpp"

#include <algorithm>
#include <cmath>

namespace affect {

void validate(const LandmarkFrame& frame)
{
    if (frame.kind == LandmarkKind::pose && frame.points.size() != pose_landmark_count)
        throw InvalidArgument("pose frame must carry exactly 33 points");
    if (frame.kind == LandmarkKind::face && frame.points.size() < face_landmark_min)
        throw InvalidArgument("face frame must carry at least 6 points");
    for (const auto& p : frame.points)
        if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
            throw InvalidArgument("landmark coordinate is not finite");
}

// --- voice activity ---------------------------------------------------------

void validate(const VadConfig& cfg)
{
    if (!(cfg.window_ms > 0.0))
        throw ConfigError("vad.window_ms must be > 0");
    if (!(cfg.rms_floor >= 0.0) || !(cfg.rms_ceil > cfg.rms_floor))
        throw ConfigError("vad.rms_ceil must exceed vad.rms_floor >= 0");
    if (!(cfg.hangover_ms >= 0.0))
        throw ConfigError("vad.hangover_ms must be >= 0");
}

double rms(std::span<const double> samples) noexcept
{
    if (samples.empty())
        return 0.0;
    double sum = 0.0;
    for (double s : samples)
        sum += s * s;
    return std::sqrt(sum / static_cast<double>(samples.size()));
}

double rms_to_probability(double rms_value, const VadConfig& cfg) noexcept
{
    return std::clamp((rms_value - cfg.rms_floor) / (cfg.rms_ceil - cfg.rms_floor), 0.0, 1.0);
}

namespace {

std::size_t frame_length(const RawSamples& s, const VadConfig& cfg)
{
    if (s.samples.empty())
        throw InvalidArgument("empty audio window");
    if (!(s.sample_rate > 0.0))
        throw InvalidArgument("sample rate must be > 0");
    const auto n = static_cast<std::size_t>(std::llround(cfg.window_ms * s.sample_rate / 1000.0));
    const std::size_t len = std::max<std::size_t>(n, 1);
    if (s.samples.size() < len)
        throw InvalidArgument("audio window shorter than window_ms");
    return len;
}

} // namespace

double vad_probability(const RawSamples& window, const VadConfig& cfg)
{
    const std::size_t len = frame_length(window, cfg);
    std::span<const double> all(window.samples);
    return rms_to_probability(rms(all.last(len)), cfg);
}

VoiceActivityDetector::VoiceActivityDetector(VadConfig cfg) : cfg_(cfg)
{
    validate(cfg_);
}

double VoiceActivityDetector::process(const RawSamples& chunk)
{
    const std::size_t len = frame_length(chunk, cfg_);
    std::span<const double> all(chunk.samples);
    const double hangover = cfg_.hangover_ms / 1000.0;

    double p = 0.0;
    std::size_t begin = 0;
    while (begin < all.size()) {
        // trailing partial frame is measured over the last full window instead
        const std::size_t start = std::min(begin, all.size() - len);
        const std::size_t end = start + len;
        const Timestamp frame_end = chunk.at + static_cast<double>(end) / chunk.sample_rate;

        p = rms_to_probability(rms(all.subspan(start, len)), cfg_);
        if (p >= 0.5)
            last_voiced_ = frame_end;
        else if (last_voiced_ && frame_end - *last_voiced_ <= hangover)
            p = 0.5;
        begin = end;
    }
    return p;
}

// --- face activity ----------------------------------------------------------

double yaw_proxy(const LandmarkFrame& face)
{
    if (face.kind != LandmarkKind::face)
        throw InvalidArgument("expected a face frame");
    validate(face);
    const auto& left_eye = face.points[0];
    const auto& right_eye = face.points[1];
    const auto& nose = face.points[2];
    const double left = std::abs(nose.x - left_eye.x);
    const double right = std::abs(right_eye.x - nose.x);
    const double total = left + right;
    if (!(total > 0.0))
        throw InvalidArgument("degenerate face frame (eyes and nose coincide)");
    return (left - right) / total;
}

double face_activity(const std::optional<LandmarkFrame>& face, const FaceActivityConfig& cfg)
{
    if (!face)
        return 0.0;
    if (!(cfg.yaw_max > 0.0))
        throw InvalidArgument("yaw_max must be > 0");
    return 1.0 - std::clamp(std::abs(yaw_proxy(*face)) / cfg.yaw_max, 0.0, 1.0);
}

// --- pose -------------------------------------------------------------------

namespace {

Point3 midpoint(const Point3& a, const Point3& b)
{
    return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0, (a.z + b.z) / 2.0};
}

Point3 minus(const Point3& a, const Point3& b)
{
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}

double length(const Point3& v)
{
    return std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
}

} // namespace

double angle_from_vertical(const Point3& v) noexcept
{
    // up is -y in image coordinates
    const double along = -v.y;
    const double across = std::sqrt(v.x * v.x + v.z * v.z);
    return std::atan2(across, along);
}

PoseFeatures pose_features(std::span<const LandmarkFrame> history)
{
    if (history.size() < 2)
        throw InvalidArgument("pose features need at least two frames");
    for (const auto& f : history) {
        if (f.kind != LandmarkKind::pose)
            throw InvalidArgument("expected pose frames");
        validate(f);
    }
    const double elapsed = history.back().at - history.front().at;
    if (!(elapsed > 0.0))
        throw InvalidArgument("pose window spans no time");

    namespace ix = pose_index;
    const auto& latest = history.back().points;
    PoseFeatures f;
    f.head_tilt =
        angle_from_vertical(minus(latest[ix::nose], midpoint(latest[ix::left_ear], latest[ix::right_ear])));
    f.body_tilt = angle_from_vertical(minus(midpoint(latest[ix::left_shoulder], latest[ix::right_shoulder]),
                                            midpoint(latest[ix::left_hip], latest[ix::right_hip])));

    double travelled = 0.0;
    for (std::size_t k = 1; k < history.size(); ++k) {
        const auto& a = history[k - 1].points;
        const auto& b = history[k].points;
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i)
            sum += length(minus(b[i], a[i]));
        travelled += sum / static_cast<double>(a.size());
    }
    f.activation = travelled / elapsed;
    return f;
}

void validate(const PoseDominanceConfig& cfg)
{
    if (!(cfg.tilt_max > 0.0) || !(cfg.act_ref > 0.0) || !(cfg.k_tilt > 0.0) || !(cfg.k_act > 0.0))
        throw ConfigError("pose dominance parameters must be > 0");
}

double pose_dominance_score(const PoseFeatures& f, const PoseDominanceConfig& cfg)
{
    const double upright = 1.0 - std::abs(f.body_tilt) / cfg.tilt_max;
    const double active = std::min(f.activation / cfg.act_ref, 1.0);
    const double raw = cfg.k_tilt * upright + cfg.k_act * active - (cfg.k_tilt + cfg.k_act) / 2.0;
    if (std::isnan(raw))
        return 0.0;
    return std::clamp(raw, -1.0, 1.0);
}

AffectEvent pose_dominance(const PoseFeatures& f, const PoseDominanceConfig& cfg, double weight,
                           double decay_speed, Timestamp t)
{
    AffectEvent e;
    e.modality = "pose";
    e.scores[Dimension::dominance] = pose_dominance_score(f, cfg);
    e.weight = weight;
    e.decay_speed = decay_speed;
    e.source_time = t;
    return e;
}

void PoseWindow::add(LandmarkFrame frame)
{
    frames_.push_back(std::move(frame));
    const Timestamp newest = frames_.back().at;
    while (frames_.size() > max_frames_ || (frames_.size() > 2 && newest - frames_.front().at > span_))
        frames_.pop_front();
}

// --- face bridge ------------------------------------------------------------

AffectEvent face_event_bridge(double valence, double arousal, const DominanceRule& rule, double weight,
                              double decay_speed, Timestamp t)
{
    AffectEvent e;
    e.modality = "face";
    e.scores = ScoreSet(valence, arousal, va_to_dominance(valence, arousal, rule));
    e.weight = weight;
    e.decay_speed = decay_speed;
    e.source_time = t;
    return e;
}

// --- analyzer bank ----------------------------------------------------------

AnalyzerBank::AnalyzerBank(AnalyzerConfig cfg)
    : cfg_(cfg), vad_(cfg.vad), pose_window_(cfg.pose_window)
{
    validate(cfg_.pose);
}

std::optional<ActivityUpdate> AnalyzerBank::on_samples(const RawSamples& chunk)
{
    return ActivityUpdate{"voice", vad_.process(chunk), chunk.at};
}

std::optional<ActivityUpdate> AnalyzerBank::on_face(const LandmarkFrame& frame)
{
    return ActivityUpdate{"face", face_activity(frame, cfg_.face), frame.at};
}

std::optional<AffectEvent> AnalyzerBank::on_pose(const LandmarkFrame& frame)
{
    validate(frame);
    pose_window_.add(frame);
    if (pose_window_.size() < 2)
        return std::nullopt;
    if (last_pose_emit_ && frame.at - *last_pose_emit_ < cfg_.pose_emit_interval)
        return std::nullopt;
    const auto frames = pose_window_.frames();
    if (!(frames.back().at > frames.front().at))
        return std::nullopt;
    last_pose_emit_ = frame.at;
    return pose_dominance(pose_features(frames), cfg_.pose, cfg_.pose_weight, cfg_.pose_decay_speed,
                          frame.at);
}

void AnalyzerBank::set_pose_event_params(double weight, double decay_speed)
{
    cfg_.pose_weight = weight;
    cfg_.pose_decay_speed = decay_speed;
}

// --- scripted source --------------------------------------------------------

void validate_script(const std::vector<ScriptEntry>& script)
{
    for (std::size_t i = 0; i < script.size(); ++i) {
        if (!std::isfinite(script[i].offset) || script[i].offset < 0.0)
            throw InvalidArgument("script offset " + std::to_string(i + 1) + " is invalid");
        if (i > 0 && script[i].offset < script[i - 1].offset)
            throw InvalidArgument("script offsets decrease at entry " + std::to_string(i + 1));
    }
}

ScriptedSource::ScriptedSource(std::vector<ScriptEntry> script, double acceleration)
    : script_(std::move(script)), acceleration_(acceleration)
{
    validate_script(script_);
    if (!(acceleration_ >= 0.0) || !std::isfinite(acceleration_))
        throw InvalidArgument("acceleration must be >= 0");
}

std::vector<std::string> ScriptedSource::output_topics()
{
    return {wire::topics::events, wire::topics::activity, wire::topics::audio,
            wire::topics::face_landmarks, wire::topics::pose_landmarks};
}

void ScriptedSource::step(ComponentContext& ctx)
{
    const Timestamp now = ctx.now();
    if (!started_)
        started_ = now;
    const double elapsed = now - *started_;
    while (next_ < script_.size()) {
        const auto& entry = script_[next_];
        if (acceleration_ > 0.0 && entry.offset / acceleration_ > elapsed)
            break;
        if (!std::holds_alternative<wire::FusionBody>(entry.message.body))
            ctx.push(wire::topic_for(entry.message), wire::to_payload(entry.message));
        ++next_;
    }
}

} // namespace affect
