#pragma once

#include "affect/config.hpp"
#include "affect/net.hpp"
#include "affect/pipeline.hpp"
#include "affect/processor.hpp"
#include "affect/session.hpp"

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace affect {

// Control-plane failure with an HTTP-style status code.
class ControlError : public Error {
public:
    ControlError(int status, const std::string& what) : Error(what), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

struct DaemonOptions {
    // Called on the fusion thread after each tick with the tick's duration
    // in seconds and the number of active events.
    std::function<void(double, std::size_t)> tick_observer;
};

class FusionComponent;
class AnalyzerComponent;

// Owns the pipeline runtime and every built-in component.
class Daemon {
public:
    explicit Daemon(DaemonConfig cfg, DaemonOptions options = {});
    ~Daemon();
    Daemon(const Daemon&) = delete;
    Daemon& operator=(const Daemon&) = delete;

    // Binds sockets and starts all components. Throws Error on bind failure.
    void start();
    StopReport stop();
    bool running() const { return runtime_.running(); }

    // Registers an event directly with the fusion engine, bypassing the
    // queues; used to preload state.
    IngestOutcome inject_event(const AffectEvent& e);

    // Snapshot as the JSON document served by GET /status.
    std::string status_json() const;

    // Both return the new effective settings as JSON. set_modality_enabled
    // throws ControlError(404) for an unknown modality; patch_params throws
    // ControlError(400) naming the key path and applies nothing on failure.
    std::string set_modality_enabled(const std::string& modality, bool enabled);
    std::string patch_params(const std::string& body);
    std::string params_json() const;

    // Newest published result; the neutral state before the first tick.
    FusionResult latest_result() const;

    // Stream frames (wire JSON): the latest fusion result followed by any
    // activity update newer than `seen`, which is updated in place.
    std::vector<std::string> stream_frames(std::map<std::string, Timestamp>& seen) const;

    double broadcast_period() const noexcept { return config_.wire.broadcast_period; }
    std::optional<std::uint16_t> ingest_port() const;
    const DaemonConfig& config() const noexcept { return config_; }
    Runtime& runtime() noexcept { return runtime_; }
    const BroadcastComponent* broadcast() const noexcept { return broadcast_; }
    ProcessorCounters processor_counters() const { return processor_.counters(); }

private:
    friend class FusionComponent;

    ComponentConfig component_config(const std::string& name, double default_rate) const;

    DaemonConfig config_;
    DaemonOptions options_;
    Runtime runtime_;

    mutable std::mutex processing_mutex_; // held for a whole fusion step
    AffectProcessor processor_;
    LiveParams params_;

    IngestComponent* ingest_ = nullptr;
    BroadcastComponent* broadcast_ = nullptr;
    RecorderComponent* recorder_ = nullptr;
    std::vector<AnalyzerComponent*> analyzers_;
    std::atomic<std::uint64_t> ticks_{0};
};

} // namespace affect
