#include "affect/session.hpp"

#include "affect/errors.hpp"
#include "affect/processor.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ctime>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace affect {

using ordered_json = nlohmann::ordered_json;

SessionError::SessionError(std::size_t line, const std::string& what)
    : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line)
{
}

std::string iso8601_now()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t secs = std::chrono::system_clock::to_time_t(now);
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&secs, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[48];
    std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
    return out;
}

std::string encode_header(const SessionHeader& h)
{
    ordered_json j;
    j["type"] = "session";
    j["version"] = h.version;
    j["started"] = h.started;
    j["config_hash"] = h.config_hash;
    return j.dump();
}

std::string encode_record(const LogRecord& r)
{
    return "{\"offset\":" + wire::format_number(r.offset) +
           ",\"message\":" + wire::encode(r.message, wire::Format::json) + "}";
}

namespace {

SessionHeader parse_header(const std::string& line)
{
    const auto j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw SessionError(1, "session header is not a JSON object");
    if (j.value("type", "") != "session")
        throw SessionError(1, "missing session header");
    const auto v = j.find("version");
    if (v == j.end() || !v->is_number_integer())
        throw SessionError(1, "session header has no version");
    if (v->get<int>() != session_format_version)
        throw SessionError(1, "unsupported session version " + std::to_string(v->get<int>()));
    SessionHeader h;
    const auto started = j.find("started");
    const auto hash = j.find("config_hash");
    if (started == j.end() || !started->is_string() || hash == j.end() || !hash->is_string())
        throw SessionError(1, "session header needs string fields started and config_hash");
    h.started = started->get<std::string>();
    h.config_hash = hash->get<std::string>();
    return h;
}

LogRecord parse_record(const std::string& line, std::size_t lineno)
{
    const auto j = ordered_json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw SessionError(lineno, "not a JSON object");
    const auto off = j.find("offset");
    const auto msg = j.find("message");
    if (off == j.end() || !off->is_number())
        throw SessionError(lineno, "missing numeric offset");
    if (msg == j.end() || !msg->is_object())
        throw SessionError(lineno, "missing message object");
    LogRecord r;
    r.offset = off->get<double>();
    if (!std::isfinite(r.offset) || r.offset < 0.0)
        throw SessionError(lineno, "offset must be >= 0");
    try {
        r.message = wire::decode(msg->dump(), wire::Format::json);
    } catch (const wire::DecodeError& e) {
        throw SessionError(lineno, std::string("bad message: ") + e.what());
    }
    return r;
}

} // namespace

SessionLog parse_session(std::istream& in)
{
    SessionLog log;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!have_header) {
            log.header = parse_header(line);
            have_header = true;
            continue;
        }
        if (line.empty())
            continue;
        LogRecord r = parse_record(line, lineno);
        if (!log.records.empty() && r.offset < log.records.back().offset)
            throw SessionError(lineno, "offset decreases");
        log.records.push_back(std::move(r));
    }
    if (!have_header)
        throw SessionError(1, "empty session log");
    return log;
}

SessionLog read_session(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw SessionError(0, "cannot open " + path.string());
    return parse_session(in);
}

void write_session(std::ostream& out, const SessionLog& log)
{
    out << encode_header(log.header) << '\n';
    for (const auto& r : log.records)
        out << encode_record(r) << '\n';
}

std::vector<ScriptEntry> to_script(const SessionLog& log)
{
    std::vector<ScriptEntry> script;
    script.reserve(log.records.size());
    for (const auto& r : log.records)
        script.push_back(ScriptEntry{r.offset, r.message});
    return script;
}

// --- recorder ---------------------------------------------------------------

SessionRecorder::SessionRecorder(std::ostream& out, const SessionHeader& header,
                                 std::chrono::milliseconds flush_interval)
    : out_(out), flush_interval_(flush_interval)
{
    out_ << encode_header(header) << '\n';
    flush();
}

void SessionRecorder::check_stream()
{
    if (!out_)
        throw Error("session log write failed");
}

void SessionRecorder::append(double offset, const wire::Message& m)
{
    if (!std::isfinite(offset) || offset < 0.0)
        throw InvalidArgument("record offset must be >= 0");
    if (records_ > 0 && offset < last_offset_)
        throw InvalidArgument("record offset " + wire::format_number(offset) + " precedes " +
                              wire::format_number(last_offset_));
    out_ << encode_record(LogRecord{offset, m}) << '\n';
    check_stream();
    last_offset_ = offset;
    ++records_;
    flush_if_due();
}

void SessionRecorder::flush()
{
    out_.flush();
    check_stream();
    last_flush_ = std::chrono::steady_clock::now();
}

void SessionRecorder::flush_if_due()
{
    if (std::chrono::steady_clock::now() - last_flush_ >= flush_interval_)
        flush();
}

// --- replay -----------------------------------------------------------------

ReplayResult replay(const SessionLog& log, const DaemonConfig& cfg, const ReplayOptions& options)
{
    if (!options.allow_config_mismatch) {
        const std::string expected = config_hash(cfg);
        if (log.header.config_hash != expected)
            throw ConfigMismatch("session config hash " + log.header.config_hash +
                                 " does not match the loaded config (" + expected + ")");
    }
    if (options.speed && !(*options.speed > 0.0 && std::isfinite(*options.speed)))
        throw InvalidArgument("replay speed must be > 0");
    const double tick_interval = options.tick_interval.value_or(cfg.fusion.tick_interval);
    if (!(tick_interval > 0.0))
        throw InvalidArgument("tick interval must be > 0");

    ReplayResult out;
    out.log.header = log.header;
    AffectProcessor proc(cfg, 0.0);
    proc.set_record_sink([&](Timestamp t, const wire::Message& m) { out.log.records.push_back({t, m}); });

    const bool recorded_ticks = std::any_of(log.records.begin(), log.records.end(), [](const LogRecord& r) {
        return std::holds_alternative<wire::FusionBody>(r.message.body);
    });

    const auto wall_start = std::chrono::steady_clock::now();
    auto pace = [&](double offset) {
        if (!options.speed)
            return;
        const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          std::chrono::duration<double>(offset / *options.speed));
        std::this_thread::sleep_until(due);
    };
    auto do_tick = [&](double t) {
        pace(t);
        out.results.push_back(proc.tick(t));
    };

    std::uint64_t k = 1;
    auto grid = [&](std::uint64_t i) { return static_cast<double>(i) * tick_interval; };

    for (const auto& r : log.records) {
        if (std::holds_alternative<wire::FusionBody>(r.message.body)) {
            do_tick(r.offset);
            continue;
        }
        if (!recorded_ticks) {
            while (grid(k) < r.offset)
                do_tick(grid(k++));
        }
        pace(r.offset);
        proc.on_message(r.message, r.offset);
    }
    if (!recorded_ticks && !log.records.empty()) {
        const double last = log.records.back().offset;
        while (grid(k) <= last)
            do_tick(grid(k++));
    }
    return out;
}

TrajectoryFormat parse_trajectory_format(const std::string& s)
{
    if (s == "csv")
        return TrajectoryFormat::csv;
    if (s == "jsonl")
        return TrajectoryFormat::jsonl;
    throw InvalidArgument("unknown trajectory format '" + s + "' (expected csv or jsonl)");
}

namespace {

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"')
            q += '"';
        q += c;
    }
    return q + "\"";
}

} // namespace

void write_trajectory(std::ostream& out, const std::vector<FusionResult>& results, TrajectoryFormat format)
{
    using wire::format_number;
    if (format == TrajectoryFormat::csv)
        out << "t,p,a,d,label\n";
    for (const auto& r : results) {
        if (format == TrajectoryFormat::csv) {
            out << format_number(r.at) << ',' << format_number(r.pad.pleasure) << ','
                << format_number(r.pad.arousal) << ',' << format_number(r.pad.dominance) << ','
                << csv_field(r.label) << '\n';
        } else {
            out << wire::encode(wire::Message{wire::protocol_version, wire::from_result(r)}, wire::Format::json)
                << '\n';
        }
    }
}

// --- synthetic session ------------------------------------------------------

namespace {

// std::uniform_real_distribution is implementation-defined; this is not.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 gen_;
};

double round3(double v)
{
    return std::round(v * 1000.0) / 1000.0;
}

std::vector<double> flatten(const std::vector<Point3>& pts)
{
    std::vector<double> flat;
    flat.reserve(pts.size() * 3);
    for (const auto& p : pts) {
        flat.push_back(round3(p.x));
        flat.push_back(round3(p.y));
        flat.push_back(round3(p.z));
    }
    return flat;
}

std::vector<Point3> face_points(double yaw, Rng& rng)
{
    // nose shifts sideways as the head turns
    const double j = 0.002;
    const double nose_x = 0.5 + 0.08 * yaw;
    return {
        {0.40 + rng.uniform(-j, j), 0.40, 0.0},
        {0.60 + rng.uniform(-j, j), 0.40, 0.0},
        {nose_x, 0.50, -0.05},
        {0.50, 0.70, 0.0},
        {0.44, 0.60, 0.0},
        {0.56, 0.60, 0.0},
    };
}

std::vector<Point3> pose_points(double lean, double sway, Rng& rng)
{
    std::vector<Point3> pts(pose_landmark_count);
    const double hip_y = 0.8;
    const double torso = 0.3;
    const double sx = std::sin(lean) * torso;
    const double sy = hip_y - std::cos(lean) * torso;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double fi = static_cast<double>(i);
        // generic points spread along the torso
        const double f = fi / static_cast<double>(pts.size() - 1);
        pts[i] = {0.5 + sway + sx * (1.0 - f) + rng.uniform(-0.003, 0.003),
                  sy + (hip_y - sy) * f + rng.uniform(-0.003, 0.003), 0.0};
    }
    namespace ix = pose_index;
    const double cx = 0.5 + sway;
    pts[ix::left_hip] = {cx - 0.08, hip_y, 0.0};
    pts[ix::right_hip] = {cx + 0.08, hip_y, 0.0};
    pts[ix::left_shoulder] = {cx + sx - 0.1, sy, 0.0};
    pts[ix::right_shoulder] = {cx + sx + 0.1, sy, 0.0};
    const double head_y = sy - 0.1;
    pts[ix::left_ear] = {cx + sx * 1.3 - 0.04, head_y, 0.0};
    pts[ix::right_ear] = {cx + sx * 1.3 + 0.04, head_y, 0.0};
    pts[ix::nose] = {cx + sx * 1.3, head_y - 0.03, -0.05};
    return pts;
}

} // namespace

SessionLog synthesize_session(const DaemonConfig& cfg, const SynthOptions& options)
{
    if (!(options.duration > 0.0) || !std::isfinite(options.duration))
        throw InvalidArgument("synthetic session duration must be > 0");

    Rng rng(options.seed);
    const double dur = options.duration;
    auto voiced = [&](double t) { return t < dur / 3.0 || t >= 2.0 * dur / 3.0; };
    auto facing = [&](double t) { return !(t >= 0.7 * dur && t < 0.8 * dur); };

    std::vector<LogRecord> recs;
    auto add = [&](double t, wire::Body body) {
        recs.push_back(LogRecord{round3(t), wire::Message{wire::protocol_version, std::move(body)}});
    };

    const double rate = 1000.0;
    const std::size_t chunk = 60;
    for (double t = 0.25; t < dur; t += 0.25) {
        wire::SamplesBody s;
        s.rate = rate;
        s.t = round3(t);
        const double amp = voiced(t) ? rng.uniform(0.3, 0.6) : 0.002;
        for (std::size_t i = 0; i < chunk; ++i) {
            const double phase = 2.0 * std::numbers::pi * 125.0 * static_cast<double>(i) / rate;
            s.data.push_back(round3(amp * std::sin(phase) + rng.uniform(-0.002, 0.002)));
        }
        add(t, std::move(s));
    }

    for (double t = 0.5; t < dur; t += 0.5) {
        const double yaw = facing(t) ? rng.uniform(-0.1, 0.1) : rng.uniform(0.7, 0.9);
        add(t + 0.01, wire::LandmarksBody{LandmarkKind::face, flatten(face_points(yaw, rng)), round3(t + 0.01)});
    }

    for (double t = 0.25; t < dur; t += 0.25) {
        const double lean = 0.05 + 0.25 * (t / dur);
        const double sway = 0.02 * std::sin(t);
        add(t + 0.02,
            wire::LandmarksBody{LandmarkKind::pose, flatten(pose_points(lean, sway, rng)), round3(t + 0.02)});
    }

    // prosody-driven voice events follow a slow random walk
    double vp = 0.2;
    double va = 0.3;
    for (double t = 0.4; t < dur; t += rng.uniform(0.3, 0.5)) {
        vp = std::clamp(vp + rng.uniform(-0.15, 0.15), -0.9, 0.9);
        va = std::clamp(va + rng.uniform(-0.15, 0.15), -0.9, 0.9);
        wire::EventBody e;
        e.modality = "voice";
        e.p = round3(vp);
        e.a = round3(va);
        e.weight = 1.0;
        e.decay_speed = 0.5;
        e.t = round3(t + 0.03);
        add(t + 0.03, std::move(e));
    }

    for (double t = 1.5; t < dur; t += rng.uniform(1.5, 2.5)) {
        wire::EventBody e;
        e.modality = "sentiment";
        e.p = round3(rng.uniform(-0.8, 0.8));
        e.weight = 2.0;
        e.decay_speed = 0.25;
        e.t = round3(t + 0.04);
        add(t + 0.04, std::move(e));
    }

    for (double t = 0.5; t < dur; t += 0.5) {
        wire::EventBody e;
        e.modality = "face";
        e.p = round3(0.5 * std::sin(t / 7.0) + rng.uniform(-0.1, 0.1));
        e.a = round3(0.4 * std::cos(t / 5.0) + rng.uniform(-0.1, 0.1));
        e.weight = 1.0;
        e.decay_speed = 0.7;
        e.t = round3(t + 0.05);
        add(t + 0.05, std::move(e));
    }

    std::stable_sort(recs.begin(), recs.end(),
                     [](const LogRecord& a, const LogRecord& b) { return a.offset < b.offset; });

    SessionLog log;
    log.header = SessionHeader{session_format_version, options.started, config_hash(cfg)};
    log.records = std::move(recs);
    return log;
}

// --- recorder component -----------------------------------------------------

RecorderComponent::RecorderComponent(std::filesystem::path path, const SessionHeader& header)
    : path_(std::move(path))
{
    file_.open(path_, std::ios::out | std::ios::trunc);
    if (!file_) {
        error_ = "cannot open " + path_.string() + " for writing";
        return;
    }
    try {
        recorder_ = std::make_unique<SessionRecorder>(file_, header);
    } catch (const std::exception& e) {
        fail(e.what());
    }
}

RecorderComponent::~RecorderComponent() = default;

void RecorderComponent::fail(const std::string& what)
{
    std::lock_guard lock(mutex_);
    error_ = what;
    recorder_.reset();
}

void RecorderComponent::drain(ComponentContext& ctx)
{
    while (auto msg = ctx.pop(wire::topics::session)) {
        if (!recorder_)
            continue;
        try {
            recorder_->append(msg->at, wire::from_payload(msg->payload));
            std::lock_guard lock(mutex_);
            records_ = recorder_->records();
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    if (recorder_) {
        try {
            recorder_->flush_if_due();
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
}

void RecorderComponent::step(ComponentContext& ctx)
{
    drain(ctx);
}

void RecorderComponent::on_stop(ComponentContext& ctx)
{
    drain(ctx);
    if (recorder_) {
        try {
            recorder_->flush();
        } catch (const std::exception& e) {
            fail(e.what());
        }
    }
    file_.close();
    std::lock_guard lock(mutex_);
    recorder_.reset();
}

RecorderComponent::Status RecorderComponent::status() const
{
    std::lock_guard lock(mutex_);
    return Status{path_.string(), recorder_ != nullptr, records_, error_};
}

} // namespace affect
