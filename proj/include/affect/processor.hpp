#pragma once

#include "affect/analyzers.hpp"
#include "affect/config.hpp"
#include "affect/fusion.hpp"
#include "affect/pipeline.hpp"
#include "affect/wire.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace affect {

// Settings that can change while the daemon runs.
struct LiveParams {
    double approach_speed = 1.0;
    double stale_after = default_stale_after;
    std::map<std::string, ModalityConfig> modalities;

    static LiveParams from(const DaemonConfig& cfg);
    friend bool operator==(const LiveParams&, const LiveParams&) = default;
};

enum class IngestOutcome {
    registered,
    expired,           // accepted, zero norm: never active
    dropped_disabled,
    dropped_inactive,  // activity below threshold
    rejected,          // failed validation
};

const char* to_string(IngestOutcome o) noexcept;

struct ProcessorCounters {
    std::uint64_t registered = 0;
    std::uint64_t expired = 0;
    std::uint64_t dropped_disabled = 0;
    std::uint64_t dropped_inactive = 0;
    std::uint64_t rejected = 0;
    std::uint64_t activity_updates = 0;
};

// Fusion-side ingestion: activity bookkeeping, per-modality gating, event
// registration and ticking. Single-threaded and free of wall-clock reads, so
// the same inputs at the same timestamps give bit-identical results. The live
// fusion component and virtual-time replay both drive one of these.
class AffectProcessor {
public:
    using RecordSink = std::function<void(Timestamp, const wire::Message&)>;

    explicit AffectProcessor(const DaemonConfig& cfg, Timestamp start = 0.0);

    IngestOutcome on_event(AffectEvent e, Timestamp now);
    void on_activity(const ActivityUpdate& a, Timestamp now);
    FusionResult tick(Timestamp now);

    // Routes any wire message; raw samples and landmarks go through the
    // analyzer bank first. Fusion messages are ignored.
    void on_message(const wire::Message& m, Timestamp now);

    void apply(const LiveParams& params);
    const LiveParams& params() const noexcept { return params_; }

    // Called with every consumed event/activity (before gating) and every
    // tick result, stamped with processor time.
    void set_record_sink(RecordSink sink) { record_ = std::move(sink); }

    // Called with each event that entered the engine, after gating.
    void set_registration_observer(std::function<void(const AffectEvent&)> f) { on_registered_ = std::move(f); }

    FusionEngine& engine() noexcept { return engine_; }
    const FusionEngine& engine() const noexcept { return engine_; }
    const ActivityRegistry& activity() const noexcept { return activity_; }
    ActivityRegistry& activity() noexcept { return activity_; }
    ProcessorCounters counters() const;

private:
    void configure_activity();

    DaemonConfig config_;
    LiveParams params_;
    FusionEngine engine_;
    ActivityRegistry activity_;
    AnalyzerBank analyzers_;
    RecordSink record_;
    std::function<void(const AffectEvent&)> on_registered_;

    mutable std::mutex counters_mutex_;
    ProcessorCounters counters_;
};

} // namespace affect
