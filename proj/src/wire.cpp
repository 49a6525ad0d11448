#include "affect/wire.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace affect::wire {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

[[noreturn]] void schema(const std::string& what)
{
    throw DecodeError(DecodeErrorKind::schema, what);
}

[[noreturn]] void range(const std::string& what)
{
    throw DecodeError(DecodeErrorKind::range, what);
}

bool valid_text(std::string_view s)
{
    // well-formed UTF-8 without C0 controls or DEL
    std::size_t i = 0;
    while (i < s.size()) {
        const auto c = static_cast<unsigned char>(s[i]);
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        if (c < 0x80) {
            if (c < 0x20 || c == 0x7f)
                return false;
            ++i;
            continue;
        }
        if ((c & 0xe0) == 0xc0) {
            extra = 1;
            cp = c & 0x1f;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2;
            cp = c & 0x0f;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3;
            cp = c & 0x07;
        } else {
            return false;
        }
        if (i + extra >= s.size())
            return false;
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(s[i + k]);
            if ((cc & 0xc0) != 0x80)
                return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        const bool overlong = (extra == 1 && cp < 0x80) || (extra == 2 && cp < 0x800) ||
                              (extra == 3 && cp < 0x10000);
        if (overlong || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff))
            return false;
        i += extra + 1;
    }
    return true;
}

void check_text(const std::string& field, const std::string& value, bool allow_empty = false)
{
    if (!allow_empty && value.empty())
        schema("'" + field + "' must not be empty");
    if (!valid_text(value))
        schema("'" + field + "' is not printable UTF-8");
}

void check_finite(const std::string& field, double v)
{
    if (!std::isfinite(v))
        range("'" + field + "' is not finite");
}

void check_unit(const std::string& field, double v)
{
    if (!std::isfinite(v) || v < -1.0 || v > 1.0)
        range("'" + field + "' outside [-1, 1]");
}

const char* kind_name(LandmarkKind k)
{
    return k == LandmarkKind::face ? "face" : "pose";
}

LandmarkKind parse_kind(const std::string& s)
{
    if (s == "face")
        return LandmarkKind::face;
    if (s == "pose")
        return LandmarkKind::pose;
    schema("landmark kind must be 'face' or 'pose'");
}

// --- JSON -------------------------------------------------------------------

ordered_json to_json(const Message& m)
{
    ordered_json j;
    j["type"] = type_name(m);
    j["version"] = m.version;
    std::visit(overloaded{
                   [&](const EventBody& b) {
                       j["modality"] = b.modality;
                       ordered_json scores = ordered_json::object();
                       if (b.p)
                           scores["p"] = *b.p;
                       if (b.a)
                           scores["a"] = *b.a;
                       if (b.d)
                           scores["d"] = *b.d;
                       j["scores"] = std::move(scores);
                       j["weight"] = b.weight;
                       j["decay_speed"] = b.decay_speed;
                       j["t"] = b.t;
                   },
                   [&](const ActivityBody& b) {
                       j["modality"] = b.modality;
                       j["score"] = b.score;
                       j["t"] = b.t;
                   },
                   [&](const LandmarksBody& b) {
                       j["kind"] = kind_name(b.kind);
                       j["points"] = b.points;
                       j["t"] = b.t;
                   },
                   [&](const SamplesBody& b) {
                       j["rate"] = b.rate;
                       j["data"] = b.data;
                       j["t"] = b.t;
                   },
                   [&](const FusionBody& b) {
                       j["t"] = b.t;
                       j["p"] = b.p;
                       j["a"] = b.a;
                       j["d"] = b.d;
                       j["label"] = b.label;
                       j["point"] = ordered_json{{"p", b.point.pleasure},
                                                 {"a", b.point.arousal},
                                                 {"d", b.point.dominance}};
                       j["active"] = b.active;
                   },
               },
               m.body);
    return j;
}

const json& field(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end())
        schema(std::string("missing field '") + key + "'");
    return *it;
}

double number(const json& obj, const char* key)
{
    const auto& v = field(obj, key);
    if (!v.is_number())
        schema(std::string("'") + key + "' must be a number");
    return v.get<double>();
}

std::optional<double> optional_number(const json& obj, const char* key)
{
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null())
        return std::nullopt;
    if (!it->is_number())
        schema(std::string("'") + key + "' must be a number");
    return it->get<double>();
}

std::string text(const json& obj, const char* key)
{
    const auto& v = field(obj, key);
    if (!v.is_string())
        schema(std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

std::vector<double> numbers(const json& obj, const char* key)
{
    const auto& v = field(obj, key);
    if (!v.is_array())
        schema(std::string("'") + key + "' must be an array");
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& x : v) {
        if (!x.is_number())
            schema(std::string("'") + key + "' must hold numbers only");
        out.push_back(x.get<double>());
    }
    return out;
}

std::uint64_t count(const json& obj, const char* key)
{
    const auto& v = field(obj, key);
    if (v.is_number_unsigned())
        return v.get<std::uint64_t>();
    if (v.is_number_integer())
        range(std::string("'") + key + "' must be >= 0");
    schema(std::string("'") + key + "' must be an integer");
}

int check_envelope(const std::string& type, const json& version)
{
    if (!version.is_number_integer())
        schema("'version' must be an integer");
    const auto v = version.get<std::int64_t>();
    if (v > protocol_version)
        throw DecodeError(DecodeErrorKind::version, "unsupported protocol version " + std::to_string(v));
    if (v < 1)
        schema("'version' must be >= 1");
    static const char* known[] = {"event", "activity", "landmarks", "samples", "fusion"};
    if (std::find(std::begin(known), std::end(known), type) == std::end(known))
        throw DecodeError(DecodeErrorKind::version, "unknown message type '" + type + "'");
    return static_cast<int>(v);
}

Message from_json(const json& j)
{
    if (!j.is_object())
        schema("message must be a JSON object");
    const std::string type = text(j, "type");
    Message m;
    m.version = check_envelope(type, field(j, "version"));

    if (type == "event") {
        EventBody b;
        b.modality = text(j, "modality");
        const auto& scores = field(j, "scores");
        if (!scores.is_object())
            schema("'scores' must be an object");
        b.p = optional_number(scores, "p");
        b.a = optional_number(scores, "a");
        b.d = optional_number(scores, "d");
        b.weight = number(j, "weight");
        b.decay_speed = number(j, "decay_speed");
        b.t = number(j, "t");
        m.body = std::move(b);
    } else if (type == "activity") {
        ActivityBody b;
        b.modality = text(j, "modality");
        b.score = number(j, "score");
        b.t = number(j, "t");
        m.body = std::move(b);
    } else if (type == "landmarks") {
        LandmarksBody b;
        b.kind = parse_kind(text(j, "kind"));
        b.points = numbers(j, "points");
        b.t = number(j, "t");
        m.body = std::move(b);
    } else if (type == "samples") {
        SamplesBody b;
        b.rate = number(j, "rate");
        b.data = numbers(j, "data");
        b.t = number(j, "t");
        m.body = std::move(b);
    } else {
        FusionBody b;
        b.t = number(j, "t");
        b.p = number(j, "p");
        b.a = number(j, "a");
        b.d = number(j, "d");
        b.label = text(j, "label");
        const auto& point = field(j, "point");
        if (!point.is_object())
            schema("'point' must be an object");
        b.point = PadVector{number(point, "p"), number(point, "a"), number(point, "d")};
        b.active = count(j, "active");
        m.body = std::move(b);
    }
    return m;
}

// --- XML --------------------------------------------------------------------

void append_escaped(std::string& out, std::string_view s)
{
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
}

class XmlWriter {
public:
    void text(std::string_view name, std::string_view value)
    {
        open(name);
        append_escaped(out_, value);
        close(name);
    }
    void number(std::string_view name, double v)
    {
        open(name);
        out_ += format_number(v);
        close(name);
    }
    void integer(std::string_view name, std::uint64_t v)
    {
        open(name);
        out_ += std::to_string(v);
        close(name);
    }
    void numbers(std::string_view name, const std::vector<double>& vs)
    {
        open(name);
        for (std::size_t i = 0; i < vs.size(); ++i) {
            if (i)
                out_ += ' ';
            out_ += format_number(vs[i]);
        }
        close(name);
    }
    void open(std::string_view name)
    {
        out_ += '<';
        out_ += name;
        out_ += '>';
    }
    void close(std::string_view name)
    {
        out_ += "</";
        out_ += name;
        out_ += '>';
    }
    std::string& str() { return out_; }

private:
    std::string out_;
};

std::string to_xml(const Message& m)
{
    XmlWriter w;
    auto& out = w.str();
    out += "<msg type=\"";
    out += type_name(m);
    out += "\" version=\"";
    out += std::to_string(m.version);
    out += "\">";
    std::visit(overloaded{
                   [&](const EventBody& b) {
                       w.text("modality", b.modality);
                       w.open("scores");
                       if (b.p)
                           w.number("p", *b.p);
                       if (b.a)
                           w.number("a", *b.a);
                       if (b.d)
                           w.number("d", *b.d);
                       w.close("scores");
                       w.number("weight", b.weight);
                       w.number("decay_speed", b.decay_speed);
                       w.number("t", b.t);
                   },
                   [&](const ActivityBody& b) {
                       w.text("modality", b.modality);
                       w.number("score", b.score);
                       w.number("t", b.t);
                   },
                   [&](const LandmarksBody& b) {
                       w.text("kind", kind_name(b.kind));
                       w.numbers("points", b.points);
                       w.number("t", b.t);
                   },
                   [&](const SamplesBody& b) {
                       w.number("rate", b.rate);
                       w.numbers("data", b.data);
                       w.number("t", b.t);
                   },
                   [&](const FusionBody& b) {
                       w.number("t", b.t);
                       w.number("p", b.p);
                       w.number("a", b.a);
                       w.number("d", b.d);
                       w.text("label", b.label);
                       w.open("point");
                       w.number("p", b.point.pleasure);
                       w.number("a", b.point.arousal);
                       w.number("d", b.point.dominance);
                       w.close("point");
                       w.integer("active", b.active);
                   },
               },
               m.body);
    out += "</msg>";
    return out;
}

namespace pt = boost::property_tree;

std::string_view trim(std::string_view s)
{
    constexpr std::string_view blanks = " \t\r\n";
    const auto b = s.find_first_not_of(blanks);
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(blanks);
    return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s, const std::string& field)
{
    s = trim(s);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        schema("'" + field + "' is not a number");
    return v;
}

const pt::ptree& xml_child(const pt::ptree& node, const std::string& key)
{
    auto c = node.get_child_optional(pt::ptree::path_type(key, '/'));
    if (!c)
        schema("missing field '" + key + "'");
    return *c;
}

double xml_number(const pt::ptree& node, const std::string& key)
{
    return parse_double(xml_child(node, key).data(), key);
}

std::optional<double> xml_optional_number(const pt::ptree& node, const std::string& key)
{
    auto c = node.get_child_optional(pt::ptree::path_type(key, '/'));
    if (!c)
        return std::nullopt;
    return parse_double(c->data(), key);
}

std::vector<double> xml_numbers(const pt::ptree& node, const std::string& key)
{
    std::vector<double> out;
    std::string_view s = xml_child(node, key).data();
    while (true) {
        s = trim(s);
        if (s.empty())
            break;
        const auto end = s.find_first_of(" \t\r\n");
        out.push_back(parse_double(s.substr(0, end), key));
        if (end == std::string_view::npos)
            break;
        s.remove_prefix(end);
    }
    return out;
}

Message from_xml(std::string_view bytes)
{
    pt::ptree tree;
    try {
        std::istringstream in{std::string(bytes)};
        pt::read_xml(in, tree);
    } catch (const pt::ptree_error& e) {
        throw DecodeError(DecodeErrorKind::syntax, std::string("malformed XML: ") + e.what());
    }
    auto root = tree.get_child_optional(pt::ptree::path_type("msg", '/'));
    if (!root)
        schema("XML document must have a single <msg> root");
    const auto& msg = *root;
    auto type = msg.get_optional<std::string>(pt::ptree::path_type("<xmlattr>/type", '/'));
    if (!type)
        schema("missing attribute 'type'");
    auto version = msg.get_optional<std::string>(pt::ptree::path_type("<xmlattr>/version", '/'));
    if (!version)
        schema("missing attribute 'version'");
    const std::string_view vs = trim(*version);
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(vs.data(), vs.data() + vs.size(), v);
    if (vs.empty() || ec != std::errc() || ptr != vs.data() + vs.size())
        schema("'version' must be an integer");

    Message m;
    m.version = check_envelope(*type, json(v));

    auto text_of = [&](const std::string& key) { return xml_child(msg, key).data(); };

    if (*type == "event") {
        EventBody b;
        b.modality = text_of("modality");
        const auto& scores = xml_child(msg, "scores");
        b.p = xml_optional_number(scores, "p");
        b.a = xml_optional_number(scores, "a");
        b.d = xml_optional_number(scores, "d");
        b.weight = xml_number(msg, "weight");
        b.decay_speed = xml_number(msg, "decay_speed");
        b.t = xml_number(msg, "t");
        m.body = std::move(b);
    } else if (*type == "activity") {
        ActivityBody b;
        b.modality = text_of("modality");
        b.score = xml_number(msg, "score");
        b.t = xml_number(msg, "t");
        m.body = std::move(b);
    } else if (*type == "landmarks") {
        LandmarksBody b;
        b.kind = parse_kind(std::string(trim(text_of("kind"))));
        b.points = xml_numbers(msg, "points");
        b.t = xml_number(msg, "t");
        m.body = std::move(b);
    } else if (*type == "samples") {
        SamplesBody b;
        b.rate = xml_number(msg, "rate");
        b.data = xml_numbers(msg, "data");
        b.t = xml_number(msg, "t");
        m.body = std::move(b);
    } else {
        FusionBody b;
        b.t = xml_number(msg, "t");
        b.p = xml_number(msg, "p");
        b.a = xml_number(msg, "a");
        b.d = xml_number(msg, "d");
        b.label = text_of("label");
        const auto& point = xml_child(msg, "point");
        b.point = PadVector{xml_number(point, "p"), xml_number(point, "a"), xml_number(point, "d")};
        const std::string active = text_of("active");
        const std::string_view as = trim(active);
        if (!as.empty() && as.front() == '-')
            range("'active' must be >= 0");
        const auto [p2, ec2] = std::from_chars(as.data(), as.data() + as.size(), b.active);
        if (as.empty() || ec2 != std::errc() || p2 != as.data() + as.size())
            schema("'active' must be an integer");
        m.body = std::move(b);
    }
    return m;
}

} // namespace

const char* type_name(const Message& m) noexcept
{
    static constexpr const char* names[] = {"event", "activity", "landmarks", "samples", "fusion"};
    return names[m.body.index()];
}

const char* to_string(Format f) noexcept
{
    return f == Format::json ? "json" : "xml";
}

Format parse_format(std::string_view s)
{
    if (s == "json")
        return Format::json;
    if (s == "xml")
        return Format::xml;
    throw ConfigError("unknown wire format '" + std::string(s) + "'");
}

const char* to_string(DecodeErrorKind k) noexcept
{
    switch (k) {
    case DecodeErrorKind::syntax: return "syntax";
    case DecodeErrorKind::schema: return "schema";
    case DecodeErrorKind::range: return "range";
    case DecodeErrorKind::version: return "version";
    }
    return "?";
}

std::string format_number(double v)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void validate(const Message& m)
{
    if (m.version != protocol_version)
        throw DecodeError(DecodeErrorKind::version, "unsupported protocol version");
    std::visit(overloaded{
                   [](const EventBody& b) {
                       check_text("modality", b.modality);
                       if (!b.p && !b.a && !b.d)
                           schema("event carries no score");
                       if (b.p)
                           check_unit("scores.p", *b.p);
                       if (b.a)
                           check_unit("scores.a", *b.a);
                       if (b.d)
                           check_unit("scores.d", *b.d);
                       if (!std::isfinite(b.weight) || b.weight < 0.0)
                           range("'weight' must be >= 0");
                       if (!std::isfinite(b.decay_speed) || b.decay_speed <= 0.0)
                           range("'decay_speed' must be > 0");
                       check_finite("t", b.t);
                   },
                   [](const ActivityBody& b) {
                       check_text("modality", b.modality);
                       if (!std::isfinite(b.score) || b.score < 0.0 || b.score > 1.0)
                           range("'score' outside [0, 1]");
                       check_finite("t", b.t);
                   },
                   [](const LandmarksBody& b) {
                       if (b.points.size() % 3 != 0)
                           schema("'points' must hold x, y, z triples");
                       const auto n = b.points.size() / 3;
                       if (b.kind == LandmarkKind::pose && n != pose_landmark_count)
                           schema("pose landmarks must carry exactly 33 points");
                       if (b.kind == LandmarkKind::face && n < face_landmark_min)
                           schema("face landmarks must carry at least 6 points");
                       for (double v : b.points)
                           check_finite("points", v);
                       check_finite("t", b.t);
                   },
                   [](const SamplesBody& b) {
                       if (!std::isfinite(b.rate) || b.rate <= 0.0)
                           range("'rate' must be > 0");
                       if (b.data.empty())
                           schema("'data' must not be empty");
                       for (double v : b.data)
                           check_unit("data", v);
                       check_finite("t", b.t);
                   },
                   [](const FusionBody& b) {
                       check_finite("t", b.t);
                       check_unit("p", b.p);
                       check_unit("a", b.a);
                       check_unit("d", b.d);
                       check_text("label", b.label, true);
                       check_unit("point.p", b.point.pleasure);
                       check_unit("point.a", b.point.arousal);
                       check_unit("point.d", b.point.dominance);
                   },
               },
               m.body);
}

std::string encode(const Message& m, Format format)
{
    try {
        validate(m);
    } catch (const DecodeError& e) {
        throw EncodeError(std::string("invalid message: ") + e.what());
    }
    std::string out = format == Format::json ? to_json(m).dump() : to_xml(m);
    if (out.size() > max_datagram_bytes)
        throw EncodeError("encoded message exceeds " + std::to_string(max_datagram_bytes) + " bytes");
    return out;
}

Message decode(std::string_view bytes, Format format)
{
    if (bytes.size() > max_datagram_bytes)
        schema("datagram exceeds size limit");
    Message m;
    if (format == Format::json) {
        json j = json::parse(bytes.begin(), bytes.end(), nullptr, false);
        if (j.is_discarded())
            throw DecodeError(DecodeErrorKind::syntax, "malformed JSON");
        m = from_json(j);
    } else {
        m = from_xml(bytes);
    }
    validate(m);
    return m;
}

Message decode_auto(std::string_view bytes)
{
    const auto first = bytes.find_first_not_of(" \t\r\n");
    const bool xml = first != std::string_view::npos && bytes[first] == '<';
    return decode(bytes, xml ? Format::xml : Format::json);
}

// --- conversions ------------------------------------------------------------

AffectEvent to_event(const EventBody& b)
{
    AffectEvent e;
    e.modality = b.modality;
    e.scores = ScoreSet(b.p, b.a, b.d);
    e.weight = b.weight;
    e.decay_speed = b.decay_speed;
    e.source_time = b.t;
    return e;
}

EventBody from_event(const AffectEvent& e)
{
    EventBody b;
    b.modality = e.modality;
    b.p = e.scores[Dimension::pleasure];
    b.a = e.scores[Dimension::arousal];
    b.d = e.scores[Dimension::dominance];
    b.weight = e.weight;
    b.decay_speed = e.decay_speed;
    b.t = e.source_time;
    return b;
}

FusionBody from_result(const FusionResult& r)
{
    FusionBody b;
    b.t = r.at;
    b.p = r.pad.pleasure;
    b.a = r.pad.arousal;
    b.d = r.pad.dominance;
    b.label = r.label;
    b.point = r.fusion_point;
    b.active = r.active_event_count;
    return b;
}

FusionResult to_result(const FusionBody& b)
{
    FusionResult r;
    r.at = b.t;
    r.pad = PadVector{b.p, b.a, b.d};
    r.fusion_point = b.point;
    r.label = b.label;
    r.active_event_count = static_cast<std::size_t>(b.active);
    return r;
}

Message from_payload(const Payload& payload)
{
    Message m;
    std::visit(overloaded{
                   [&](const RawSamples& s) { m.body = SamplesBody{s.sample_rate, s.samples, s.at}; },
                   [&](const LandmarkFrame& f) {
                       LandmarksBody b;
                       b.kind = f.kind;
                       b.t = f.at;
                       b.points.reserve(f.points.size() * 3);
                       for (const auto& p : f.points) {
                           b.points.push_back(p.x);
                           b.points.push_back(p.y);
                           b.points.push_back(p.z);
                       }
                       m.body = std::move(b);
                   },
                   [&](const AffectEvent& e) { m.body = from_event(e); },
                   [&](const ActivityUpdate& a) { m.body = ActivityBody{a.modality, a.score, a.t}; },
                   [&](const FusionResult& r) { m.body = from_result(r); },
               },
               payload);
    return m;
}

Payload to_payload(const Message& m)
{
    return std::visit(overloaded{
                          [](const EventBody& b) -> Payload { return to_event(b); },
                          [](const ActivityBody& b) -> Payload {
                              return ActivityUpdate{b.modality, b.score, b.t};
                          },
                          [](const LandmarksBody& b) -> Payload {
                              LandmarkFrame f;
                              f.kind = b.kind;
                              f.at = b.t;
                              f.source = "wire";
                              for (std::size_t i = 0; i + 2 < b.points.size(); i += 3)
                                  f.points.push_back({b.points[i], b.points[i + 1], b.points[i + 2]});
                              return f;
                          },
                          [](const SamplesBody& b) -> Payload { return RawSamples{b.data, b.rate, b.t}; },
                          [](const FusionBody& b) -> Payload { return to_result(b); },
                      },
                      m.body);
}

const char* topic_for(const Message& m) noexcept
{
    return std::visit(overloaded{
                          [](const EventBody&) { return topics::events; },
                          [](const ActivityBody&) { return topics::activity; },
                          [](const LandmarksBody& b) {
                              return b.kind == LandmarkKind::face ? topics::face_landmarks
                                                                  : topics::pose_landmarks;
                          },
                          [](const SamplesBody&) { return topics::audio; },
                          [](const FusionBody&) { return topics::fusion; },
                      },
                      m.body);
}

} // namespace affect::wire
