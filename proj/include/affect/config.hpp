#pragma once

#include "affect/analyzers.hpp"
#include "affect/emotion.hpp"
#include "affect/errors.hpp"
#include "affect/fusion.hpp"
#include "affect/wire.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace affect {

// Per-modality ingestion policy applied when an event reaches the fusion engine.
struct ModalityConfig {
    bool enabled = true;
    bool gated = false;           // drop/down-weight by activity score
    std::string activity;         // activity source; empty = same as the modality
    double threshold = default_activity_threshold;
    double weight = 1.0;          // multiplier on the event's own weight
    std::optional<double> decay_speed; // overrides the event's decay speed when set

    const std::string& activity_source(const std::string& modality) const
    {
        return activity.empty() ? modality : activity;
    }

    friend bool operator==(const ModalityConfig&, const ModalityConfig&) = default;
};

struct GatingConfig {
    double stale_after = default_stale_after;
    std::map<std::string, ModalityConfig> modalities;

    friend bool operator==(const GatingConfig&, const GatingConfig&) = default;
};

struct ComponentConfig {
    bool enabled = true;
    double rate_hz = 10.0;

    friend bool operator==(const ComponentConfig&, const ComponentConfig&) = default;
};

struct PipelineConfig {
    std::size_t queue_capacity = default_queue_capacity;
    std::size_t session_queue_capacity = 8192;
    double stop_grace = 2.0;
    // built-in analyzer and network components, keyed by component name
    std::map<std::string, ComponentConfig> components;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

struct Endpoint {
    std::string host;
    std::uint16_t port = 0;

    friend bool operator==(const Endpoint&, const Endpoint&) = default;
};

// "host:port"; throws ConfigError.
Endpoint parse_endpoint(const std::string& text);
std::string to_string(const Endpoint& e);

struct BroadcastTarget {
    Endpoint endpoint;
    wire::Format format = wire::Format::json;

    friend bool operator==(const BroadcastTarget&, const BroadcastTarget&) = default;
};

struct WireConfig {
    std::optional<Endpoint> ingest = Endpoint{"0.0.0.0", 9870};
    double broadcast_period = 0.1;
    std::vector<BroadcastTarget> targets;

    friend bool operator==(const WireConfig&, const WireConfig&) = default;
};

struct EmotionConfig {
    LabelPrototypeTable labels = LabelPrototypeTable::octants();
    DominanceRule dominance;
    // complete face events carrying only valence/arousal with a dominance score
    bool face_bridge = true;

    friend bool operator==(const EmotionConfig&, const EmotionConfig&) = default;
};

struct ControlConfig {
    std::optional<Endpoint> listen = Endpoint{"127.0.0.1", 9880};

    friend bool operator==(const ControlConfig&, const ControlConfig&) = default;
};

struct SessionConfig {
    std::optional<std::string> record;

    friend bool operator==(const SessionConfig&, const SessionConfig&) = default;
};

struct DaemonConfig {
    PipelineConfig pipeline;
    FusionConfig fusion;
    GatingConfig gating;
    EmotionConfig emotion;
    AnalyzerConfig analyzers;
    WireConfig wire;
    ControlConfig control;
    SessionConfig session;

    static DaemonConfig defaults();

    friend bool operator==(const DaemonConfig&, const DaemonConfig&) = default;
};

// Carries every problem found, each prefixed with its key path.
class ConfigValidationError : public ConfigError {
public:
    explicit ConfigValidationError(std::vector<std::string> errors);
    const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
    std::vector<std::string> errors_;
};

struct LoadedConfig {
    DaemonConfig config;
    std::vector<std::string> warnings; // unknown keys
};

// The file is a JSON document; every section and key is optional.
LoadedConfig parse_config(const std::string& text);
LoadedConfig load_config(const std::filesystem::path& path);

// Fully expanded configuration with sorted keys, single line.
std::string canonical_config(const DaemonConfig& cfg);
// Hex SHA-256 over the fusion, gating, emotion and analyzer sections of
// canonical_config().
std::string config_hash(const DaemonConfig& cfg);

} // namespace affect
