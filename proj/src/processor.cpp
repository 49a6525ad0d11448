#include "affect/processor.hpp"

#include "affect/errors.hpp"

namespace affect {

LiveParams LiveParams::from(const DaemonConfig& cfg)
{
    LiveParams p;
    p.approach_speed = cfg.fusion.approach_speed;
    p.stale_after = cfg.gating.stale_after;
    p.modalities = cfg.gating.modalities;
    return p;
}

const char* to_string(IngestOutcome o) noexcept
{
    switch (o) {
    case IngestOutcome::registered: return "registered";
    case IngestOutcome::expired: return "expired";
    case IngestOutcome::dropped_disabled: return "dropped_disabled";
    case IngestOutcome::dropped_inactive: return "dropped_inactive";
    case IngestOutcome::rejected: return "rejected";
    }
    return "?";
}

AffectProcessor::AffectProcessor(const DaemonConfig& cfg, Timestamp start)
    : config_(cfg),
      params_(LiveParams::from(cfg)),
      engine_(cfg.fusion, cfg.emotion.labels, start),
      analyzers_(cfg.analyzers)
{
    validate(cfg.emotion.dominance);
    configure_activity();
}

void AffectProcessor::configure_activity()
{
    for (const auto& [name, m] : params_.modalities)
        activity_.configure(m.activity_source(name), m.threshold, params_.stale_after);
}

void AffectProcessor::apply(const LiveParams& params)
{
    engine_.set_approach_speed(params.approach_speed);
    params_ = params;
    configure_activity();
}

ProcessorCounters AffectProcessor::counters() const
{
    std::lock_guard lock(counters_mutex_);
    return counters_;
}

IngestOutcome AffectProcessor::on_event(AffectEvent e, Timestamp now)
{
    if (record_)
        record_(now, wire::Message{wire::protocol_version, wire::from_event(e)});

    auto outcome = [&](IngestOutcome o) {
        std::lock_guard lock(counters_mutex_);
        switch (o) {
        case IngestOutcome::registered: ++counters_.registered; break;
        case IngestOutcome::expired: ++counters_.expired; break;
        case IngestOutcome::dropped_disabled: ++counters_.dropped_disabled; break;
        case IngestOutcome::dropped_inactive: ++counters_.dropped_inactive; break;
        case IngestOutcome::rejected: ++counters_.rejected; break;
        }
        return o;
    };

    ModalityConfig policy;
    if (auto it = params_.modalities.find(e.modality); it != params_.modalities.end())
        policy = it->second;
    if (!policy.enabled)
        return outcome(IngestOutcome::dropped_disabled);

    const auto& p = e.scores[Dimension::pleasure];
    const auto& a = e.scores[Dimension::arousal];
    auto& d = e.scores[Dimension::dominance];
    if (config_.emotion.face_bridge && e.modality == "face" && p && a && !d) {
        try {
            d = va_to_dominance(*p, *a, config_.emotion.dominance);
        } catch (const InvalidArgument&) {
            return outcome(IngestOutcome::rejected);
        }
    }
    if (policy.decay_speed)
        e.decay_speed = *policy.decay_speed;
    e.weight = e.weight * policy.weight;

    try {
        validate(e);
    } catch (const InvalidArgument&) {
        return outcome(IngestOutcome::rejected);
    }

    if (policy.gated) {
        ActivityState state = activity_.get(policy.activity_source(e.modality));
        state.modality = e.modality;
        state.threshold = policy.threshold;
        state.stale_after = params_.stale_after;
        auto gated = gate_event(e, state, now);
        if (!gated)
            return outcome(IngestOutcome::dropped_inactive);
        e = std::move(*gated);
    }

    if (!engine_.register_event(std::move(e), now))
        return outcome(IngestOutcome::expired);
    if (on_registered_)
        on_registered_(engine_.state().active.back().event);
    return outcome(IngestOutcome::registered);
}

void AffectProcessor::on_activity(const ActivityUpdate& a, Timestamp now)
{
    if (record_)
        record_(now, wire::Message{wire::protocol_version, wire::ActivityBody{a.modality, a.score, a.t}});
    activity_.set_activity(a.modality, a.score, now);
    std::lock_guard lock(counters_mutex_);
    ++counters_.activity_updates;
}

FusionResult AffectProcessor::tick(Timestamp now)
{
    FusionResult r = engine_.tick(now);
    if (record_)
        record_(now, wire::Message{wire::protocol_version, wire::from_result(r)});
    return r;
}

void AffectProcessor::on_message(const wire::Message& m, Timestamp now)
{
    std::visit(
        [&](const auto& body) {
            using T = std::decay_t<decltype(body)>;
            if constexpr (std::is_same_v<T, wire::EventBody>) {
                on_event(wire::to_event(body), now);
            } else if constexpr (std::is_same_v<T, wire::ActivityBody>) {
                on_activity(ActivityUpdate{body.modality, body.score, body.t}, now);
            } else if constexpr (std::is_same_v<T, wire::SamplesBody> || std::is_same_v<T, wire::LandmarksBody>) {
                std::optional<ActivityUpdate> update;
                std::optional<AffectEvent> event;
                try {
                    if constexpr (std::is_same_v<T, wire::SamplesBody>) {
                        update = analyzers_.on_samples(RawSamples{body.data, body.rate, body.t});
                    } else {
                        const auto frame = std::get<LandmarkFrame>(wire::to_payload(m));
                        if (body.kind == LandmarkKind::face)
                            update = analyzers_.on_face(frame);
                        else
                            event = analyzers_.on_pose(frame);
                    }
                } catch (const InvalidArgument&) {
                    std::lock_guard lock(counters_mutex_);
                    ++counters_.rejected;
                    return;
                }
                if (update)
                    on_activity(*update, now);
                if (event)
                    on_event(*event, now);
            }
        },
        m.body);
}

} // namespace affect
