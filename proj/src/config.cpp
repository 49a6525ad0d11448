#include "affect/config.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace affect {

using json = nlohmann::json;

Endpoint parse_endpoint(const std::string& text)
{
    const auto colon = text.rfind(':');
    if (colon == std::string::npos || colon == 0 || colon + 1 == text.size())
        throw ConfigError("endpoint '" + text + "' is not host:port");
    Endpoint e;
    e.host = text.substr(0, colon);
    unsigned port = 0;
    const char* first = text.data() + colon + 1;
    const char* last = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(first, last, port);
    if (ec != std::errc() || ptr != last || port > 65535)
        throw ConfigError("endpoint '" + text + "' has an invalid port");
    e.port = static_cast<std::uint16_t>(port);
    return e;
}

std::string to_string(const Endpoint& e)
{
    return e.host + ":" + std::to_string(e.port);
}

DaemonConfig DaemonConfig::defaults()
{
    DaemonConfig c;
    c.gating.modalities["voice"] = ModalityConfig{true, true, "", default_activity_threshold, 1.0, {}};
    c.gating.modalities["face"] = ModalityConfig{true, true, "", default_activity_threshold, 1.0, {}};
    c.gating.modalities["pose"] = ModalityConfig{true, false, "", default_activity_threshold, 1.0, {}};
    c.gating.modalities["sentiment"] = ModalityConfig{true, true, "voice", default_activity_threshold, 1.0, {}};
    c.pipeline.components["ingest"] = ComponentConfig{true, 500.0};
    c.pipeline.components["voice"] = ComponentConfig{true, 50.0};
    c.pipeline.components["face"] = ComponentConfig{true, 15.0};
    c.pipeline.components["pose"] = ComponentConfig{true, 15.0};
    return c;
}

ConfigValidationError::ConfigValidationError(std::vector<std::string> errors)
    : ConfigError([&] {
          std::string msg = "invalid configuration";
          for (const auto& e : errors)
              msg += "\n  " + e;
          return msg;
      }()),
      errors_(std::move(errors))
{
}

namespace {

std::string join(const std::string& path, const std::string& key)
{
    return path.empty() ? key : path + "." + key;
}

// Walks a JSON document onto typed fields, collecting errors and warnings
// with their key paths instead of stopping at the first problem.
class Reader {
public:
    std::vector<std::string> errors;
    std::vector<std::string> warnings;

    void error(const std::string& path, const std::string& what) { errors.push_back(path + ": " + what); }

    void known(const json& obj, const std::string& path, std::initializer_list<const char*> keys)
    {
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, _] : obj.items())
            if (!allowed.count(k))
                warnings.push_back("unknown key '" + join(path, k) + "' ignored");
    }

    // Calls f(value, path) for an object-valued key when present.
    bool object(const json& parent, const std::string& path, const char* key,
                const std::function<void(const json&, const std::string&)>& f)
    {
        auto it = parent.find(key);
        if (it == parent.end() || it->is_null())
            return false;
        const auto p = join(path, key);
        if (!it->is_object()) {
            error(p, "must be an object");
            return false;
        }
        f(*it, p);
        return true;
    }

    void number(const json& obj, const std::string& path, const char* key, double& out,
                const std::function<bool(double)>& ok = {}, const char* rule = nullptr)
    {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        const auto p = join(path, key);
        if (!it->is_number()) {
            error(p, "must be a number");
            return;
        }
        const double v = it->get<double>();
        if (!std::isfinite(v) || (ok && !ok(v))) {
            error(p, rule ? rule : "out of range");
            return;
        }
        out = v;
    }

    void optional_number(const json& obj, const std::string& path, const char* key,
                         std::optional<double>& out, const std::function<bool(double)>& ok,
                         const char* rule)
    {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        if (it->is_null()) {
            out.reset();
            return;
        }
        double v = 0.0;
        number(obj, path, key, v, ok, rule);
        if (it->is_number() && std::isfinite(it->get<double>()) && ok(it->get<double>()))
            out = v;
    }

    void count(const json& obj, const std::string& path, const char* key, std::size_t& out)
    {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        const auto p = join(path, key);
        if (!it->is_number_unsigned() || it->get<std::uint64_t>() == 0) {
            error(p, "must be a positive integer");
            return;
        }
        out = static_cast<std::size_t>(it->get<std::uint64_t>());
    }

    void boolean(const json& obj, const std::string& path, const char* key, bool& out)
    {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        if (!it->is_boolean()) {
            error(join(path, key), "must be true or false");
            return;
        }
        out = it->get<bool>();
    }

    void text(const json& obj, const std::string& path, const char* key, std::string& out)
    {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        if (!it->is_string()) {
            error(join(path, key), "must be a string");
            return;
        }
        out = it->get<std::string>();
    }

    void endpoint(const json& obj, const std::string& path, const char* key, std::optional<Endpoint>& out)
    {
        auto it = obj.find(key);
        if (it == obj.end())
            return;
        if (it->is_null()) {
            out.reset();
            return;
        }
        if (!it->is_string()) {
            error(join(path, key), "must be \"host:port\" or null");
            return;
        }
        try {
            out = parse_endpoint(it->get<std::string>());
        } catch (const ConfigError& e) {
            error(join(path, key), e.what());
        }
    }

    PadVector pad(const json& v, const std::string& path)
    {
        if (!v.is_array() || v.size() != 3) {
            error(path, "must be an array of three numbers");
            return {};
        }
        PadVector p;
        for (std::size_t i = 0; i < 3; ++i) {
            if (!v[i].is_number() || !std::isfinite(v[i].get<double>()) || v[i].get<double>() < -1.0 ||
                v[i].get<double>() > 1.0) {
                error(path, "components must be numbers in [-1, 1]");
                return {};
            }
            p[all_dimensions[i]] = v[i].get<double>();
        }
        return p;
    }
};

auto positive = [](double v) { return v > 0.0; };
auto non_negative = [](double v) { return v >= 0.0; };
auto unit_interval = [](double v) { return v >= 0.0 && v <= 1.0; };

void read_pipeline(Reader& r, const json& j, const std::string& path, PipelineConfig& c)
{
    r.known(j, path, {"queue_capacity", "session_queue_capacity", "stop_grace", "components"});
    r.count(j, path, "queue_capacity", c.queue_capacity);
    r.count(j, path, "session_queue_capacity", c.session_queue_capacity);
    r.number(j, path, "stop_grace", c.stop_grace, positive, "must be > 0");
    r.object(j, path, "components", [&](const json& comps, const std::string& p) {
        for (const auto& [name, body] : comps.items()) {
            const auto cp = join(p, name);
            auto it = c.components.find(name);
            if (it == c.components.end()) {
                r.warnings.push_back("unknown component '" + cp + "' ignored");
                continue;
            }
            if (!body.is_object()) {
                r.error(cp, "must be an object");
                continue;
            }
            r.known(body, cp, {"enabled", "rate_hz"});
            r.boolean(body, cp, "enabled", it->second.enabled);
            r.number(body, cp, "rate_hz", it->second.rate_hz, positive, "must be > 0");
        }
    });
}

void read_fusion(Reader& r, const json& j, const std::string& path, FusionConfig& c)
{
    r.known(j, path, {"tick_interval", "approach_speed", "neutral_point", "max_active_events"});
    r.number(j, path, "tick_interval", c.tick_interval, positive, "must be > 0");
    r.number(j, path, "approach_speed", c.approach_speed, positive, "must be > 0");
    if (auto it = j.find("neutral_point"); it != j.end())
        c.neutral_point = r.pad(*it, join(path, "neutral_point"));
    r.count(j, path, "max_active_events", c.max_active_events);
}

void read_modality(Reader& r, const json& j, const std::string& path, ModalityConfig& m)
{
    r.known(j, path, {"enabled", "gated", "activity", "threshold", "weight", "decay_speed"});
    r.boolean(j, path, "enabled", m.enabled);
    r.boolean(j, path, "gated", m.gated);
    r.text(j, path, "activity", m.activity);
    r.number(j, path, "threshold", m.threshold, unit_interval, "must be in [0, 1]");
    r.number(j, path, "weight", m.weight, non_negative, "must be >= 0");
    r.optional_number(j, path, "decay_speed", m.decay_speed, positive, "must be > 0");
}

void read_gating(Reader& r, const json& j, const std::string& path, GatingConfig& c)
{
    r.known(j, path, {"stale_after", "modalities"});
    r.number(j, path, "stale_after", c.stale_after, positive, "must be > 0");
    r.object(j, path, "modalities", [&](const json& mods, const std::string& p) {
        for (const auto& [name, body] : mods.items()) {
            const auto mp = join(p, name);
            if (name.empty()) {
                r.error(mp, "modality name must not be empty");
                continue;
            }
            if (!body.is_object()) {
                r.error(mp, "must be an object");
                continue;
            }
            read_modality(r, body, mp, c.modalities[name]);
        }
    });
}

void read_emotion(Reader& r, const json& j, const std::string& path, EmotionConfig& c)
{
    r.known(j, path, {"labels", "dominance_rule", "face_bridge"});
    r.boolean(j, path, "face_bridge", c.face_bridge);
    r.object(j, path, "dominance_rule", [&](const json& d, const std::string& p) {
        r.known(d, p, {"c0", "c1", "c2"});
        r.number(d, p, "c0", c.dominance.c0);
        r.number(d, p, "c1", c.dominance.c1);
        r.number(d, p, "c2", c.dominance.c2);
    });
    auto it = j.find("labels");
    if (it == j.end())
        return;
    const auto lp = join(path, "labels");
    if (!it->is_array() || it->empty()) {
        r.error(lp, "must be a non-empty array");
        return;
    }
    std::vector<LabelPrototype> entries;
    bool ok = true;
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& e = (*it)[i];
        const auto ep = lp + "[" + std::to_string(i) + "]";
        if (!e.is_object() || !e.contains("label") || !e["label"].is_string() || !e.contains("pad")) {
            r.error(ep, "must be {\"label\": text, \"pad\": [p, a, d]}");
            ok = false;
            continue;
        }
        const auto before = r.errors.size();
        PadVector p = r.pad(e["pad"], ep + ".pad");
        ok = ok && r.errors.size() == before;
        entries.push_back({e["label"].get<std::string>(), p});
    }
    if (!ok)
        return;
    try {
        c.labels = LabelPrototypeTable(std::move(entries));
    } catch (const ConfigError& e) {
        r.error(lp, e.what());
    }
}

void read_analyzers(Reader& r, const json& j, const std::string& path, AnalyzerConfig& c)
{
    r.known(j, path, {"vad", "face", "pose"});
    r.object(j, path, "vad", [&](const json& v, const std::string& p) {
        r.known(v, p, {"window_ms", "rms_floor", "rms_ceil", "hangover_ms"});
        r.number(v, p, "window_ms", c.vad.window_ms, positive, "must be > 0");
        r.number(v, p, "rms_floor", c.vad.rms_floor, non_negative, "must be >= 0");
        r.number(v, p, "rms_ceil", c.vad.rms_ceil, positive, "must be > 0");
        r.number(v, p, "hangover_ms", c.vad.hangover_ms, non_negative, "must be >= 0");
        if (!(c.vad.rms_ceil > c.vad.rms_floor))
            r.error(join(p, "rms_ceil"), "must exceed rms_floor");
    });
    r.object(j, path, "face", [&](const json& v, const std::string& p) {
        r.known(v, p, {"yaw_max"});
        r.number(v, p, "yaw_max", c.face.yaw_max, positive, "must be > 0");
    });
    r.object(j, path, "pose", [&](const json& v, const std::string& p) {
        r.known(v, p, {"tilt_max", "act_ref", "k_tilt", "k_act", "window", "emit_interval", "weight",
                       "decay_speed"});
        r.number(v, p, "tilt_max", c.pose.tilt_max, positive, "must be > 0");
        r.number(v, p, "act_ref", c.pose.act_ref, positive, "must be > 0");
        r.number(v, p, "k_tilt", c.pose.k_tilt, positive, "must be > 0");
        r.number(v, p, "k_act", c.pose.k_act, positive, "must be > 0");
        r.number(v, p, "window", c.pose_window, positive, "must be > 0");
        r.number(v, p, "emit_interval", c.pose_emit_interval, non_negative, "must be >= 0");
        r.number(v, p, "weight", c.pose_weight, non_negative, "must be >= 0");
        r.number(v, p, "decay_speed", c.pose_decay_speed, positive, "must be > 0");
    });
}

void read_wire(Reader& r, const json& j, const std::string& path, WireConfig& c)
{
    r.known(j, path, {"ingest", "broadcast_period", "targets"});
    r.endpoint(j, path, "ingest", c.ingest);
    r.number(j, path, "broadcast_period", c.broadcast_period, positive, "must be > 0");
    auto it = j.find("targets");
    if (it == j.end())
        return;
    const auto tp = join(path, "targets");
    if (!it->is_array()) {
        r.error(tp, "must be an array");
        return;
    }
    c.targets.clear();
    for (std::size_t i = 0; i < it->size(); ++i) {
        const auto& t = (*it)[i];
        const auto p = tp + "[" + std::to_string(i) + "]";
        if (!t.is_object()) {
            r.error(p, "must be {\"address\": \"host:port\", \"format\": \"json\"|\"xml\"}");
            continue;
        }
        r.known(t, p, {"address", "format"});
        BroadcastTarget target;
        std::optional<Endpoint> ep;
        r.endpoint(t, p, "address", ep);
        if (!ep && !t.contains("address"))
            r.error(join(p, "address"), "is required");
        std::string format = "json";
        r.text(t, p, "format", format);
        bool format_ok = true;
        try {
            target.format = wire::parse_format(format);
        } catch (const Error& e) {
            r.error(join(p, "format"), e.what());
            format_ok = false;
        }
        if (!ep || !format_ok)
            continue;
        target.endpoint = *ep;
        c.targets.push_back(target);
    }
}

LoadedConfig read_document(const json& doc)
{
    Reader r;
    DaemonConfig c = DaemonConfig::defaults();
    if (!doc.is_object())
        throw ConfigValidationError({"<root>: must be a JSON object"});
    r.known(doc, "", {"pipeline", "fusion", "gating", "emotion", "analyzers", "wire", "control", "session"});
    r.object(doc, "", "pipeline", [&](const json& j, const std::string& p) { read_pipeline(r, j, p, c.pipeline); });
    r.object(doc, "", "fusion", [&](const json& j, const std::string& p) { read_fusion(r, j, p, c.fusion); });
    r.object(doc, "", "gating", [&](const json& j, const std::string& p) { read_gating(r, j, p, c.gating); });
    r.object(doc, "", "emotion", [&](const json& j, const std::string& p) { read_emotion(r, j, p, c.emotion); });
    r.object(doc, "", "analyzers",
             [&](const json& j, const std::string& p) { read_analyzers(r, j, p, c.analyzers); });
    r.object(doc, "", "wire", [&](const json& j, const std::string& p) { read_wire(r, j, p, c.wire); });
    r.object(doc, "", "control", [&](const json& j, const std::string& p) {
        r.known(j, p, {"listen"});
        r.endpoint(j, p, "listen", c.control.listen);
    });
    r.object(doc, "", "session", [&](const json& j, const std::string& p) {
        r.known(j, p, {"record"});
        if (auto it = j.find("record"); it != j.end()) {
            if (it->is_null())
                c.session.record.reset();
            else if (it->is_string() && !it->get<std::string>().empty())
                c.session.record = it->get<std::string>();
            else
                r.error(join(p, "record"), "must be a path or null");
        }
    });
    if (!r.errors.empty())
        throw ConfigValidationError(std::move(r.errors));
    return LoadedConfig{std::move(c), std::move(r.warnings)};
}

json pad_json(const PadVector& p)
{
    return json::array({p.pleasure, p.arousal, p.dominance});
}

json endpoint_json(const std::optional<Endpoint>& e)
{
    return e ? json(to_string(*e)) : json(nullptr);
}

} // namespace

LoadedConfig parse_config(const std::string& text)
{
    json doc = json::parse(text, nullptr, false, true);
    if (doc.is_discarded())
        throw ConfigValidationError({"<root>: not a valid JSON document"});
    return read_document(doc);
}

LoadedConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot read config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

namespace {

json canonical_json(const DaemonConfig& c)
{
    json doc;
    auto& pl = doc["pipeline"];
    pl["queue_capacity"] = c.pipeline.queue_capacity;
    pl["session_queue_capacity"] = c.pipeline.session_queue_capacity;
    pl["stop_grace"] = c.pipeline.stop_grace;
    pl["components"] = json::object();
    for (const auto& [name, comp] : c.pipeline.components)
        pl["components"][name] = {{"enabled", comp.enabled}, {"rate_hz", comp.rate_hz}};

    doc["fusion"] = {{"tick_interval", c.fusion.tick_interval},
                     {"approach_speed", c.fusion.approach_speed},
                     {"neutral_point", pad_json(c.fusion.neutral_point)},
                     {"max_active_events", c.fusion.max_active_events}};

    auto& g = doc["gating"];
    g["stale_after"] = c.gating.stale_after;
    g["modalities"] = json::object();
    for (const auto& [name, m] : c.gating.modalities) {
        g["modalities"][name] = {{"enabled", m.enabled},
                                 {"gated", m.gated},
                                 {"activity", m.activity},
                                 {"threshold", m.threshold},
                                 {"weight", m.weight},
                                 {"decay_speed", m.decay_speed ? json(*m.decay_speed) : json(nullptr)}};
    }

    json labels = json::array();
    for (const auto& e : c.emotion.labels.entries())
        labels.push_back({{"label", e.label}, {"pad", pad_json(e.prototype)}});
    doc["emotion"] = {{"labels", labels},
                      {"dominance_rule",
                       {{"c0", c.emotion.dominance.c0}, {"c1", c.emotion.dominance.c1}, {"c2", c.emotion.dominance.c2}}},
                      {"face_bridge", c.emotion.face_bridge}};

    const auto& a = c.analyzers;
    doc["analyzers"] = {
        {"vad",
         {{"window_ms", a.vad.window_ms},
          {"rms_floor", a.vad.rms_floor},
          {"rms_ceil", a.vad.rms_ceil},
          {"hangover_ms", a.vad.hangover_ms}}},
        {"face", {{"yaw_max", a.face.yaw_max}}},
        {"pose",
         {{"tilt_max", a.pose.tilt_max},
          {"act_ref", a.pose.act_ref},
          {"k_tilt", a.pose.k_tilt},
          {"k_act", a.pose.k_act},
          {"window", a.pose_window},
          {"emit_interval", a.pose_emit_interval},
          {"weight", a.pose_weight},
          {"decay_speed", a.pose_decay_speed}}},
    };

    json targets = json::array();
    for (const auto& t : c.wire.targets)
        targets.push_back({{"address", to_string(t.endpoint)}, {"format", wire::to_string(t.format)}});
    doc["wire"] = {{"ingest", endpoint_json(c.wire.ingest)},
                   {"broadcast_period", c.wire.broadcast_period},
                   {"targets", targets}};
    doc["control"] = {{"listen", endpoint_json(c.control.listen)}};
    doc["session"] = {{"record", c.session.record ? json(*c.session.record) : json(nullptr)}};
    return doc;
}

} // namespace

std::string canonical_config(const DaemonConfig& cfg)
{
    return canonical_json(cfg).dump();
}

std::string config_hash(const DaemonConfig& cfg)
{
    json doc = canonical_json(cfg);
    for (const char* key : {"pipeline", "wire", "control", "session"})
        doc.erase(key);
    const std::string text = doc.dump();
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 digest failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

} // namespace affect
