#include "affect/daemon.hpp"

#include "affect/errors.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>

namespace affect {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Drains activity then events, ticks, and forwards the result.
class FusionComponent : public Component {
public:
    explicit FusionComponent(Daemon& d, bool record) : daemon_(d), record_(record) {}

    void step(ComponentContext& ctx) override
    {
        std::lock_guard lock(daemon_.processing_mutex_);
        auto& proc = daemon_.processor_;
        const Timestamp now = ctx.now();
        if (record_) {
            proc.set_record_sink([&](Timestamp t, const wire::Message& m) {
                ctx.push(wire::topics::session, wire::to_payload(m), t);
            });
        }
        while (auto msg = ctx.pop(wire::topics::activity))
            if (const auto* a = std::get_if<ActivityUpdate>(&msg->payload))
                proc.on_activity(*a, now);
        while (auto msg = ctx.pop(wire::topics::events))
            if (const auto* e = std::get_if<AffectEvent>(&msg->payload))
                proc.on_event(*e, now);

        const auto t0 = std::chrono::steady_clock::now();
        FusionResult r = proc.tick(now);
        const double took = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        proc.set_record_sink({});
        daemon_.ticks_.fetch_add(1);
        if (daemon_.options_.tick_observer)
            daemon_.options_.tick_observer(took, r.active_event_count);
        ctx.push(wire::topics::fusion, std::move(r), now);
    }

private:
    Daemon& daemon_;
    bool record_;
};

// Runs one analyzer over one input topic.
class AnalyzerComponent : public Component {
public:
    using Handler = std::function<void(AnalyzerBank&, const Payload&, ComponentContext&)>;

    AnalyzerComponent(const AnalyzerConfig& cfg, std::string input, Handler h)
        : bank_(cfg), input_(std::move(input)), handler_(std::move(h))
    {
    }

    void step(ComponentContext& ctx) override
    {
        while (auto msg = ctx.pop(input_)) {
            try {
                handler_(bank_, msg->payload, ctx);
            } catch (const InvalidArgument&) {
                rejected_.fetch_add(1);
            }
        }
    }

    std::uint64_t rejected() const noexcept { return rejected_.load(); }

private:
    AnalyzerBank bank_;
    std::string input_;
    Handler handler_;
    std::atomic<std::uint64_t> rejected_{0};
};

namespace {

RuntimeOptions runtime_options(const DaemonConfig& cfg)
{
    RuntimeOptions o;
    o.queue_capacity = cfg.pipeline.queue_capacity;
    o.stop_grace = std::chrono::milliseconds(static_cast<long long>(std::llround(cfg.pipeline.stop_grace * 1000.0)));
    return o;
}

json optional_time(Timestamp t)
{
    return std::isfinite(t) ? json(t) : json(nullptr);
}

json modality_json(const ModalityConfig& m)
{
    return {{"enabled", m.enabled},
            {"gated", m.gated},
            {"activity", m.activity},
            {"threshold", m.threshold},
            {"weight", m.weight},
            {"decay_speed", m.decay_speed ? json(*m.decay_speed) : json(nullptr)}};
}

} // namespace

Daemon::Daemon(DaemonConfig cfg, DaemonOptions options)
    : config_(std::move(cfg)),
      options_(std::move(options)),
      runtime_(runtime_options(config_)),
      processor_(config_, runtime_.now()),
      params_(LiveParams::from(config_))
{
}

Daemon::~Daemon()
{
    stop();
}

ComponentConfig Daemon::component_config(const std::string& name, double default_rate) const
{
    if (auto it = config_.pipeline.components.find(name); it != config_.pipeline.components.end())
        return it->second;
    return ComponentConfig{true, default_rate};
}

void Daemon::start()
{
    if (runtime_.running() || runtime_.components().size() > 0)
        throw Error("daemon already started");

    const bool record = config_.session.record.has_value();
    runtime_.create_topic(wire::topics::session, config_.pipeline.session_queue_capacity);

    if (config_.wire.ingest) {
        const auto cc = component_config("ingest", 500.0);
        auto c = std::make_unique<IngestComponent>(*config_.wire.ingest);
        ingest_ = c.get();
        runtime_.register_component(
            ComponentDescriptor{"ingest", ComponentKind::input, cc.rate_hz, {}, IngestComponent::output_topics(),
                                cc.enabled},
            std::move(c));
    }

    auto add_analyzer = [&](const std::string& name, double rate, const std::string& in, const std::string& out,
                            AnalyzerComponent::Handler h) {
        const auto cc = component_config(name, rate);
        auto c = std::make_unique<AnalyzerComponent>(config_.analyzers, in, std::move(h));
        analyzers_.push_back(c.get());
        runtime_.register_component(
            ComponentDescriptor{name, ComponentKind::processing, cc.rate_hz, {in}, {out}, cc.enabled}, std::move(c));
    };
    add_analyzer("voice", 50.0, wire::topics::audio, wire::topics::activity,
                 [](AnalyzerBank& b, const Payload& p, ComponentContext& ctx) {
                     if (const auto* s = std::get_if<RawSamples>(&p))
                         if (auto u = b.on_samples(*s))
                             ctx.push(wire::topics::activity, *u);
                 });
    add_analyzer("face", 15.0, wire::topics::face_landmarks, wire::topics::activity,
                 [](AnalyzerBank& b, const Payload& p, ComponentContext& ctx) {
                     if (const auto* f = std::get_if<LandmarkFrame>(&p))
                         if (auto u = b.on_face(*f))
                             ctx.push(wire::topics::activity, *u);
                 });
    add_analyzer("pose", 15.0, wire::topics::pose_landmarks, wire::topics::events,
                 [](AnalyzerBank& b, const Payload& p, ComponentContext& ctx) {
                     if (const auto* f = std::get_if<LandmarkFrame>(&p))
                         if (auto e = b.on_pose(*f))
                             ctx.push(wire::topics::events, *e);
                 });

    std::vector<std::string> fusion_out{wire::topics::fusion};
    if (record)
        fusion_out.push_back(wire::topics::session);
    runtime_.register_component(
        ComponentDescriptor{"fusion", ComponentKind::processing, 1.0 / config_.fusion.tick_interval,
                            {wire::topics::activity, wire::topics::events}, fusion_out, true},
        std::make_unique<FusionComponent>(*this, record));

    auto bc = std::make_unique<BroadcastComponent>(config_.wire.targets,
                                                   [this](Timestamp) { return latest_result(); });
    broadcast_ = bc.get();
    runtime_.register_component(ComponentDescriptor{"broadcast", ComponentKind::output,
                                                    1.0 / config_.wire.broadcast_period,
                                                    {wire::topics::fusion}, {}, true},
                                std::move(bc));

    if (record) {
        auto rc = std::make_unique<RecorderComponent>(
            *config_.session.record, SessionHeader{session_format_version, iso8601_now(), config_hash(config_)});
        recorder_ = rc.get();
        runtime_.register_component(
            ComponentDescriptor{"recorder", ComponentKind::output, 10.0, {wire::topics::session}, {}, true},
            std::move(rc));
    }

    // modalities switched off in the config start with their analyzer off
    for (const auto& [name, m] : params_.modalities)
        if (!m.enabled && runtime_.has_component(name))
            runtime_.set_enabled(name, false);

    runtime_.start();
}

StopReport Daemon::stop()
{
    return runtime_.stop();
}

std::optional<std::uint16_t> Daemon::ingest_port() const
{
    if (!ingest_)
        return std::nullopt;
    return ingest_->port();
}

IngestOutcome Daemon::inject_event(const AffectEvent& e)
{
    std::lock_guard lock(processing_mutex_);
    const Timestamp now = std::max(runtime_.now(), processor_.engine().state().last_tick);
    return processor_.on_event(e, now);
}

FusionResult Daemon::latest_result() const
{
    auto snap = processor_.engine().snapshot();
    return snap->result;
}

std::string Daemon::params_json() const
{
    std::lock_guard lock(processing_mutex_);
    json j;
    j["approach_speed"] = params_.approach_speed;
    j["stale_after"] = params_.stale_after;
    j["modalities"] = json::object();
    for (const auto& [name, m] : params_.modalities)
        j["modalities"][name] = modality_json(m);
    return j.dump();
}

std::string Daemon::set_modality_enabled(const std::string& modality, bool enabled)
{
    {
        std::lock_guard lock(processing_mutex_);
        auto it = params_.modalities.find(modality);
        if (it == params_.modalities.end())
            throw ControlError(404, "unknown modality '" + modality + "'");
        it->second.enabled = enabled;
        processor_.apply(params_);
    }
    if (runtime_.has_component(modality))
        runtime_.set_enabled(modality, enabled);
    json j;
    j["modality"] = modality;
    j["enabled"] = enabled;
    return j.dump();
}

std::string Daemon::patch_params(const std::string& body)
{
    const json patch = json::parse(body, nullptr, false);
    if (patch.is_discarded() || !patch.is_object())
        throw ControlError(400, "body: must be a JSON object");

    std::vector<std::string> errors;
    int status = 400;
    bool only_unknown = true;
    auto error = [&](const std::string& path, const std::string& what, bool unknown_modality = false) {
        errors.push_back(path + ": " + what);
        only_unknown = only_unknown && unknown_modality;
    };
    auto number = [&](const json& obj, const std::string& path, const char* key, double& out, auto ok,
                      const char* rule) {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        const std::string p = path.empty() ? key : path + "." + key;
        if (!it->is_number() || !std::isfinite(it->get<double>()) || !ok(it->get<double>())) {
            error(p, rule);
            return;
        }
        out = it->get<double>();
    };
    auto boolean = [&](const json& obj, const std::string& path, const char* key, bool& out) {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        if (!it->is_boolean()) {
            error(path + "." + key, "must be true or false");
            return;
        }
        out = it->get<bool>();
    };

    std::lock_guard lock(processing_mutex_);
    LiveParams next = params_;
    for (const auto& [key, value] : patch.items()) {
        if (key == "approach_speed") {
            number(patch, "", "approach_speed", next.approach_speed, [](double v) { return v > 0.0; },
                   "must be > 0");
        } else if (key == "stale_after") {
            number(patch, "", "stale_after", next.stale_after, [](double v) { return v > 0.0; }, "must be > 0");
        } else if (key == "modalities") {
            if (!value.is_object()) {
                error("modalities", "must be an object");
                continue;
            }
            for (const auto& [name, m] : value.items()) {
                const std::string mp = "modalities." + name;
                auto it = next.modalities.find(name);
                if (it == next.modalities.end()) {
                    error(mp, "unknown modality", true);
                    continue;
                }
                if (!m.is_object()) {
                    error(mp, "must be an object");
                    continue;
                }
                auto& mc = it->second;
                for (const auto& [field, _] : m.items()) {
                    if (field == "enabled")
                        boolean(m, mp, "enabled", mc.enabled);
                    else if (field == "gated")
                        boolean(m, mp, "gated", mc.gated);
                    else if (field == "threshold")
                        number(m, mp, "threshold", mc.threshold, [](double v) { return v >= 0.0 && v <= 1.0; },
                               "must be in [0, 1]");
                    else if (field == "weight")
                        number(m, mp, "weight", mc.weight, [](double v) { return v >= 0.0; }, "must be >= 0");
                    else if (field == "decay_speed") {
                        if (m.at("decay_speed").is_null()) {
                            mc.decay_speed.reset();
                        } else {
                            double v = 0.0;
                            const std::size_t before = errors.size();
                            number(m, mp, "decay_speed", v, [](double x) { return x > 0.0; },
                                   "must be > 0 or null");
                            if (errors.size() == before)
                                mc.decay_speed = v;
                        }
                    } else {
                        error(mp + "." + field, "not a live parameter");
                    }
                }
            }
        } else {
            error(key, "not a live parameter");
        }
    }
    if (!errors.empty()) {
        if (only_unknown)
            status = 404;
        std::string what;
        for (const auto& e : errors)
            what += (what.empty() ? "" : "; ") + e;
        throw ControlError(status, what);
    }

    std::vector<std::pair<std::string, bool>> toggles;
    for (const auto& [name, m] : next.modalities)
        if (m.enabled != params_.modalities.at(name).enabled)
            toggles.emplace_back(name, m.enabled);
    params_ = next;
    processor_.apply(params_);
    for (const auto& [name, enabled] : toggles)
        if (runtime_.has_component(name))
            runtime_.set_enabled(name, enabled);

    json j;
    j["approach_speed"] = params_.approach_speed;
    j["stale_after"] = params_.stale_after;
    j["modalities"] = json::object();
    for (const auto& [name, m] : params_.modalities)
        j["modalities"][name] = modality_json(m);
    return j.dump();
}

std::string Daemon::status_json() const
{
    const Timestamp now = runtime_.now();
    json j;
    j["uptime"] = now;
    j["running"] = runtime_.running();
    j["ticks"] = ticks_.load();

    j["components"] = json::array();
    for (const auto& c : runtime_.components()) {
        j["components"].push_back({{"name", c.name},
                                   {"kind", to_string(c.kind)},
                                   {"rate_hz", c.rate_hz},
                                   {"enabled", c.enabled},
                                   {"steps", c.steps},
                                   {"skipped_deadlines", c.skipped_deadlines},
                                   {"emitted", c.emitted},
                                   {"last_emit", c.last_emit ? json(*c.last_emit) : json(nullptr)},
                                   {"step_errors", c.step_errors}});
    }
    j["topics"] = json::array();
    for (const auto& t : runtime_.topics()) {
        j["topics"].push_back({{"name", t.name},
                               {"size", t.size},
                               {"capacity", t.capacity},
                               {"pushed", t.pushed},
                               {"dropped", t.dropped}});
    }

    {
        std::lock_guard lock(processing_mutex_);
        j["params"] = {{"approach_speed", params_.approach_speed}, {"stale_after", params_.stale_after}};
        j["modalities"] = json::object();
        for (const auto& [name, m] : params_.modalities) {
            auto mj = modality_json(m);
            const auto a = processor_.activity().get(m.activity_source(name));
            mj["activity_score"] = a.score;
            mj["activity_effective"] = a.effective(now);
            mj["activity_updated_at"] = optional_time(a.updated_at);
            j["modalities"][name] = mj;
        }
    }

    const auto pc = processor_.counters();
    json counters;
    counters["fusion"] = {{"registered", pc.registered},
                          {"expired", pc.expired},
                          {"dropped_disabled", pc.dropped_disabled},
                          {"dropped_inactive", pc.dropped_inactive},
                          {"rejected", pc.rejected},
                          {"activity_updates", pc.activity_updates}};
    if (ingest_) {
        const auto ic = ingest_->counters();
        counters["ingest"] = {{"accepted", ic.accepted}, {"syntax", ic.syntax}, {"schema", ic.schema},
                              {"range", ic.range},       {"version", ic.version}, {"ignored", ic.ignored}};
    }
    if (broadcast_) {
        const auto bc = broadcast_->counters();
        counters["broadcast"] = {
            {"sent", bc.sent}, {"send_errors", bc.send_errors}, {"encode_errors", bc.encode_errors}};
    }
    std::uint64_t analyzer_rejects = 0;
    for (const auto* a : analyzers_)
        analyzer_rejects += a->rejected();
    counters["analyzers"] = {{"rejected", analyzer_rejects}};
    j["counters"] = counters;

    j["fusion"] = json::parse(
        wire::encode(wire::Message{wire::protocol_version, wire::from_result(latest_result())}, wire::Format::json));

    if (recorder_) {
        const auto rs = recorder_->status();
        j["session"] = {{"path", rs.path},
                        {"recording", rs.recording},
                        {"records", rs.records},
                        {"error", rs.error ? json(*rs.error) : json(nullptr)}};
    } else {
        j["session"] = nullptr;
    }
    return j.dump();
}

std::vector<std::string> Daemon::stream_frames(std::map<std::string, Timestamp>& seen) const
{
    std::vector<std::string> frames;
    frames.push_back(
        wire::encode(wire::Message{wire::protocol_version, wire::from_result(latest_result())}, wire::Format::json));
    for (const auto& a : processor_.activity().all()) {
        if (!std::isfinite(a.updated_at))
            continue;
        auto it = seen.find(a.modality);
        if (it != seen.end() && it->second >= a.updated_at)
            continue;
        seen[a.modality] = a.updated_at;
        frames.push_back(wire::encode(
            wire::Message{wire::protocol_version, wire::ActivityBody{a.modality, a.score, a.updated_at}},
            wire::Format::json));
    }
    return frames;
}

} // namespace affect
