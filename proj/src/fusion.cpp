#include "affect/fusion.hpp"

#include "affect/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace affect {

std::size_t ScoreSet::count() const noexcept
{
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(), [](const auto& v) { return v.has_value(); }));
}

double ScoreSet::norm() const noexcept
{
    double sum = 0.0;
    for (const auto& v : values_)
        if (v)
            sum += *v * *v;
    return std::sqrt(sum);
}

ScoreSet ScoreSet::scaled(double factor) const noexcept
{
    ScoreSet out;
    for (std::size_t i = 0; i < values_.size(); ++i)
        if (values_[i])
            out.values_[i] = *values_[i] * factor;
    return out;
}

void validate(const AffectEvent& e)
{
    if (e.scores.empty())
        throw InvalidArgument("event carries no PAD dimension");
    for (auto d : all_dimensions) {
        const auto& s = e.scores[d];
        if (s && !(std::isfinite(*s) && *s >= -1.0 && *s <= 1.0))
            throw InvalidArgument("event score outside [-1, 1]");
    }
    if (!std::isfinite(e.weight) || e.weight < 0.0)
        throw InvalidArgument("event weight must be finite and >= 0");
    if (!std::isfinite(e.decay_speed) || e.decay_speed <= 0.0)
        throw InvalidArgument("event decay_speed must be finite and > 0");
}

namespace {

// Recomputes the decayed view of `d` for an absolute lifetime. Returns false
// when the event has to be discarded.
bool rescale_to_lifetime(DecayedEvent& d, double lifetime)
{
    d.lifetime = lifetime;
    const double remaining = d.initial_norm - lifetime * d.event.decay_speed;
    if (!(remaining > 0.0)) {
        d.current_norm = 0.0;
        return false;
    }
    d.current_norm = remaining;
    d.decayed_scores = d.event.scores.scaled(remaining / d.initial_norm);
    return true;
}

} // namespace

DecayedEvent make_decayed(const AffectEvent& e)
{
    DecayedEvent d;
    d.event = e;
    d.initial_norm = e.scores.norm();
    d.current_norm = d.initial_norm;
    d.decayed_scores = e.scores;
    return d;
}

std::optional<DecayedEvent> decay_event(const DecayedEvent& d, double dt)
{
    if (!(dt >= 0.0))
        throw InvalidArgument("decay interval must be >= 0");
    DecayedEvent out = d;
    if (!rescale_to_lifetime(out, d.lifetime + dt))
        return std::nullopt;
    return out;
}

void validate(const FusionConfig& c)
{
    if (!std::isfinite(c.tick_interval) || c.tick_interval <= 0.0)
        throw ConfigError("fusion.tick_interval must be > 0");
    if (!std::isfinite(c.approach_speed) || c.approach_speed <= 0.0)
        throw ConfigError("fusion.approach_speed must be > 0");
    for (auto d : all_dimensions) {
        const double v = c.neutral_point[d];
        if (!std::isfinite(v) || v < -1.0 || v > 1.0)
            throw ConfigError("fusion.neutral_point must lie in [-1, 1]");
    }
    if (c.max_active_events == 0)
        throw ConfigError("fusion.max_active_events must be positive");
}

PadVector compute_fusion_point(std::span<const DecayedEvent> active, const PadVector& neutral)
{
    PadVector point = neutral;
    for (auto dim : all_dimensions) {
        double mass = 0.0;
        double weights = 0.0;
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (const auto& d : active) {
            const auto& score = d.decayed_scores[dim];
            if (!score || !(d.event.weight > 0.0))
                continue;
            mass += *score * d.event.weight;
            weights += d.event.weight;
            lo = std::min(lo, *score);
            hi = std::max(hi, *score);
        }
        if (weights > 0.0)
            // the exact mean lies in [lo, hi]; clamp away rounding drift
            point[dim] = std::clamp(mass / weights, lo, hi);
    }
    return point;
}

FusionState initial_state(const FusionConfig& config, Timestamp start)
{
    FusionState s;
    s.fusion_point = config.neutral_point;
    s.fusion_vector = config.neutral_point;
    s.last_tick = start;
    return s;
}

PadVector approach(const PadVector& from, const PadVector& to, double max_step) noexcept
{
    const double gap = distance(from, to);
    if (gap <= max_step)
        return to;
    const double f = max_step / gap;
    PadVector out;
    for (auto d : all_dimensions)
        out[d] = std::clamp(from[d] + (to[d] - from[d]) * f, -1.0, 1.0);
    return out;
}

FusionResult tick(FusionState& state, Timestamp now, const FusionConfig& config,
                  const LabelPrototypeTable& labels)
{
    if (!(now >= state.last_tick))
        throw ClockRegression("tick time precedes the previous tick");
    const double dt = now - state.last_tick;

    std::erase_if(state.active,
                  [now](DecayedEvent& d) { return !rescale_to_lifetime(d, now - d.event.registered_at); });

    state.fusion_point = compute_fusion_point(state.active, config.neutral_point);
    state.fusion_vector = approach(state.fusion_vector, state.fusion_point, config.approach_speed * dt);
    state.last_tick = now;

    FusionResult r;
    r.at = now;
    r.pad = state.fusion_vector;
    r.fusion_point = state.fusion_point;
    r.label = pad_to_label(state.fusion_vector, labels).label;
    r.active_event_count = state.active.size();
    return r;
}

FusionResult current_result(const FusionState& state, Timestamp now, const FusionConfig& config,
                            const LabelPrototypeTable& labels)
{
    FusionState scratch = state;
    return tick(scratch, std::max(now, state.last_tick), config, labels);
}

bool register_event(FusionState& state, AffectEvent e, Timestamp now, const FusionConfig& config)
{
    validate(e);
    e.registered_at = now;
    DecayedEvent d = make_decayed(e);
    if (!(d.initial_norm > 0.0))
        return false;
    if (state.active.size() >= config.max_active_events) {
        auto weakest = std::min_element(state.active.begin(), state.active.end(),
                                        [](const DecayedEvent& a, const DecayedEvent& b) {
                                            return a.current_norm < b.current_norm;
                                        });
        state.active.erase(weakest);
    }
    state.active.push_back(std::move(d));
    return true;
}

FusionEngine::FusionEngine(FusionConfig config, LabelPrototypeTable labels, Timestamp start)
    : config_(config), labels_(std::move(labels)), state_(initial_state(config, start))
{
    validate(config_);
    if (labels_.empty())
        throw ConfigError("label prototype table is empty");
    FusionResult r;
    r.at = start;
    r.pad = state_.fusion_vector;
    r.fusion_point = state_.fusion_point;
    r.label = pad_to_label(r.pad, labels_).label;
    publish(r);
}

bool FusionEngine::register_event(AffectEvent e, Timestamp now)
{
    if (now < state_.last_tick)
        throw ClockRegression("event registered before the previous tick");
    e.id = next_id_++;
    return affect::register_event(state_, std::move(e), now, config_);
}

FusionResult FusionEngine::tick(Timestamp now)
{
    FusionResult r = affect::tick(state_, now, config_, labels_);
    publish(r);
    return r;
}

void FusionEngine::publish(const FusionResult& result)
{
    auto snap = std::make_shared<const FusionSnapshot>(FusionSnapshot{state_, result, config_});
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(snap);
}

std::shared_ptr<const FusionSnapshot> FusionEngine::snapshot() const
{
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

FusionResult FusionEngine::current_result(Timestamp now) const
{
    auto snap = snapshot();
    return affect::current_result(snap->state, now, snap->config, labels_);
}

void FusionEngine::set_approach_speed(double speed)
{
    FusionConfig next = config_;
    next.approach_speed = speed;
    validate(next);
    config_ = next;
}

} // namespace affect
