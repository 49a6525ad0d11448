#pragma once

#include "affect/emotion.hpp"

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace affect {

// Seconds on a monotonic clock. Inside the daemon this is the session clock
// (seconds since the session started).
using Timestamp = double;

// Per-dimension scores of an event; any non-empty subset of P/A/D.
class ScoreSet {
public:
    ScoreSet() = default;
    ScoreSet(std::optional<double> pleasure, std::optional<double> arousal,
             std::optional<double> dominance)
        : values_{pleasure, arousal, dominance}
    {
    }

    const std::optional<double>& operator[](Dimension d) const noexcept
    {
        return values_[static_cast<std::size_t>(d)];
    }
    std::optional<double>& operator[](Dimension d) noexcept
    {
        return values_[static_cast<std::size_t>(d)];
    }

    std::size_t count() const noexcept;
    bool empty() const noexcept { return count() == 0; }
    // Euclidean norm over the present dimensions.
    double norm() const noexcept;
    ScoreSet scaled(double factor) const noexcept;

    friend bool operator==(const ScoreSet&, const ScoreSet&) = default;

private:
    std::array<std::optional<double>, 3> values_{};
};

struct AffectEvent {
    std::uint64_t id = 0;
    std::string modality;
    ScoreSet scores;
    double weight = 1.0;
    double decay_speed = 1.0; // norm units per second
    Timestamp registered_at = 0.0;
    Timestamp source_time = 0.0; // sender clock, informational only

    friend bool operator==(const AffectEvent&, const AffectEvent&) = default;
};

// Throws InvalidArgument naming the violated invariant.
void validate(const AffectEvent& e);

struct DecayedEvent {
    AffectEvent event;
    double lifetime = 0.0;
    double initial_norm = 0.0;
    double current_norm = 0.0;
    ScoreSet decayed_scores;
};

// Fresh event at lifetime zero.
DecayedEvent make_decayed(const AffectEvent& e);

// Linear norm decay: current = initial - lifetime * speed, scores rescaled
// uniformly to that norm. std::nullopt means the event is discarded (the norm
// did not stay above zero).
std::optional<DecayedEvent> decay_event(const DecayedEvent& d, double dt);

struct FusionConfig {
    double tick_interval = 0.02;
    double approach_speed = 1.0; // PAD units per second
    PadVector neutral_point{};
    std::size_t max_active_events = 4096;

    friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

void validate(const FusionConfig& c);

// Weighted per-dimension mean of the decayed scores. Only events that carry a
// dimension and have positive weight contribute to it; uncovered dimensions
// fall back to `neutral`.
PadVector compute_fusion_point(std::span<const DecayedEvent> active, const PadVector& neutral);

struct FusionState {
    std::vector<DecayedEvent> active;
    PadVector fusion_point{};
    PadVector fusion_vector{};
    Timestamp last_tick = 0.0;
};

FusionState initial_state(const FusionConfig& config, Timestamp start = 0.0);

struct FusionResult {
    Timestamp at = 0.0;
    PadVector pad{};
    PadVector fusion_point{};
    std::string label;
    std::size_t active_event_count = 0;

    friend bool operator==(const FusionResult&, const FusionResult&) = default;
};

// Moves `from` toward `to` by at most `max_step`, never past it.
PadVector approach(const PadVector& from, const PadVector& to, double max_step) noexcept;

// Advances `state` to `now`: decays and discards, recomputes the fusion point
// and moves the fusion vector toward it. Throws ClockRegression (leaving the
// state untouched) when now < state.last_tick.
FusionResult tick(FusionState& state, Timestamp now, const FusionConfig& config,
                  const LabelPrototypeTable& labels);

// What tick() would return at `now`, without touching `state`.
FusionResult current_result(const FusionState& state, Timestamp now, const FusionConfig& config,
                            const LabelPrototypeTable& labels);

// Adds an event (registered_at := now). Zero-norm events are accepted but never
// become active. Returns whether the event entered the active set.
bool register_event(FusionState& state, AffectEvent e, Timestamp now, const FusionConfig& config);

struct FusionSnapshot {
    FusionState state;
    FusionResult result;
    FusionConfig config;
};

// Single-writer fusion engine. register_event()/tick()/set_* must be called
// from one thread; snapshot() and current_result() are safe from any thread
// and see the state published by the latest tick.
class FusionEngine {
public:
    FusionEngine(FusionConfig config, LabelPrototypeTable labels, Timestamp start = 0.0);

    bool register_event(AffectEvent e, Timestamp now);
    FusionResult tick(Timestamp now);

    std::shared_ptr<const FusionSnapshot> snapshot() const;
    FusionResult current_result(Timestamp now) const;

    void set_approach_speed(double speed);

    const FusionConfig& config() const noexcept { return config_; }
    const LabelPrototypeTable& labels() const noexcept { return labels_; }
    const FusionState& state() const noexcept { return state_; }
    std::uint64_t registered_count() const noexcept { return next_id_ - 1; }

private:
    void publish(const FusionResult& result);

    FusionConfig config_;
    LabelPrototypeTable labels_;
    FusionState state_;
    std::uint64_t next_id_ = 1;

    mutable std::mutex snapshot_mutex_;
    std::shared_ptr<const FusionSnapshot> snapshot_;
};

} // namespace affect
