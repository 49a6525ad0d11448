#pragma once

#include "affect/analyzers.hpp"
#include "affect/config.hpp"
#include "affect/pipeline.hpp"
#include "affect/wire.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace affect {

inline constexpr int session_format_version = 1;

struct SessionHeader {
    int version = session_format_version;
    std::string started;     // ISO 8601, UTC
    std::string config_hash; // hex SHA-256

    friend bool operator==(const SessionHeader&, const SessionHeader&) = default;
};

struct LogRecord {
    double offset = 0.0;
    wire::Message message;

    friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct SessionLog {
    SessionHeader header;
    std::vector<LogRecord> records;
};

// Thrown for unreadable or malformed logs. line() is 1-based, 0 when the
// problem is not tied to a line.
class SessionError : public Error {
public:
    SessionError(std::size_t line, const std::string& what);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ConfigMismatch : public Error {
public:
    using Error::Error;
};

std::string iso8601_now();

std::string encode_header(const SessionHeader& h);
std::string encode_record(const LogRecord& r);

SessionLog parse_session(std::istream& in);
SessionLog read_session(const std::filesystem::path& path);
void write_session(std::ostream& out, const SessionLog& log);

std::vector<ScriptEntry> to_script(const SessionLog& log);

// Appends records to a stream. Offsets must not decrease; the stream is
// flushed whenever more than flush_interval has passed since the last flush.
class SessionRecorder {
public:
    SessionRecorder(std::ostream& out, const SessionHeader& header,
                    std::chrono::milliseconds flush_interval = std::chrono::seconds(1));

    // Throws InvalidArgument for a decreasing offset and Error on a stream failure.
    void append(double offset, const wire::Message& m);
    void flush();
    // Flushes when the interval has elapsed.
    void flush_if_due();

    std::size_t records() const noexcept { return records_; }
    double last_offset() const noexcept { return last_offset_; }

private:
    void check_stream();

    std::ostream& out_;
    std::chrono::milliseconds flush_interval_;
    std::chrono::steady_clock::time_point last_flush_;
    std::size_t records_ = 0;
    double last_offset_ = 0.0;
};

struct ReplayOptions {
    bool allow_config_mismatch = false;
    // Only used for logs without fusion records: ticks fall on k * tick_interval.
    std::optional<double> tick_interval;
    // Wall-clock pacing; unset replays as fast as possible.
    std::optional<double> speed;
};

struct ReplayResult {
    SessionLog log;                   // inputs consumed plus fusion results
    std::vector<FusionResult> results;
};

// Feeds the log through an AffectProcessor driven by the recorded offsets.
// Ticks happen at the recorded fusion offsets when the log carries any,
// otherwise on the tick grid up to the last offset. Inputs at an offset are
// handled before a tick at the same offset. Throws ConfigMismatch when the
// header's hash differs from the config's, unless allowed.
ReplayResult replay(const SessionLog& log, const DaemonConfig& cfg, const ReplayOptions& options = {});

enum class TrajectoryFormat { csv, jsonl };

TrajectoryFormat parse_trajectory_format(const std::string& s);

// csv: header "t,p,a,d,label" then one row per result. jsonl: the wire JSON
// encoding of each result.
void write_trajectory(std::ostream& out, const std::vector<FusionResult>& results, TrajectoryFormat format);

struct SynthOptions {
    double duration = 60.0;
    std::uint64_t seed = 7;
    std::string started = "2026-01-01T00:00:00.000Z";
};

// Deterministic input-only session: audio, face and pose landmarks, voice,
// sentiment and face events. Voice goes silent in the middle third.
SessionLog synthesize_session(const DaemonConfig& cfg, const SynthOptions& options = {});

// Output component draining the session topic into a log file. Write errors
// stop the recording; the pipeline keeps running.
class RecorderComponent : public Component {
public:
    RecorderComponent(std::filesystem::path path, const SessionHeader& header);
    ~RecorderComponent() override;

    void step(ComponentContext& ctx) override;
    void on_stop(ComponentContext& ctx) override;

    struct Status {
        std::string path;
        bool recording = false;
        std::size_t records = 0;
        std::optional<std::string> error;
    };
    Status status() const;

private:
    void drain(ComponentContext& ctx);
    void fail(const std::string& what);

    std::filesystem::path path_;
    std::ofstream file_;
    std::unique_ptr<SessionRecorder> recorder_;
    mutable std::mutex mutex_;
    std::optional<std::string> error_;
    std::size_t records_ = 0;
};

} // namespace affect
