#pragma once

#include "affect/errors.hpp"
#include "affect/fusion.hpp"
#include "affect/pipeline.hpp"
#include "affect/signals.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

// Wire protocol shared by UDP ingestion, broadcast, the control stream and
// session logs.
//
// JSON: one line, keys in a fixed order ("type", "version", then body fields).
// XML:  <msg type="..." version="1"> with one child element per body field.
namespace affect::wire {

inline constexpr int protocol_version = 1;
inline constexpr std::size_t max_datagram_bytes = 60 * 1024;

struct EventBody {
    std::string modality;
    std::optional<double> p, a, d;
    double weight = 1.0;
    double decay_speed = 1.0;
    double t = 0.0;

    friend bool operator==(const EventBody&, const EventBody&) = default;
};

struct ActivityBody {
    std::string modality;
    double score = 0.0;
    double t = 0.0;

    friend bool operator==(const ActivityBody&, const ActivityBody&) = default;
};

struct LandmarksBody {
    LandmarkKind kind = LandmarkKind::face;
    std::vector<double> points; // flat x, y, z triples
    double t = 0.0;

    friend bool operator==(const LandmarksBody&, const LandmarksBody&) = default;
};

struct SamplesBody {
    double rate = 16000.0;
    std::vector<double> data;
    double t = 0.0;

    friend bool operator==(const SamplesBody&, const SamplesBody&) = default;
};

struct FusionBody {
    double t = 0.0;
    double p = 0.0, a = 0.0, d = 0.0;
    std::string label;
    PadVector point{};
    std::uint64_t active = 0;

    friend bool operator==(const FusionBody&, const FusionBody&) = default;
};

using Body = std::variant<EventBody, ActivityBody, LandmarksBody, SamplesBody, FusionBody>;

struct Message {
    int version = protocol_version;
    Body body;

    friend bool operator==(const Message&, const Message&) = default;
};

const char* type_name(const Message& m) noexcept;

enum class Format { json, xml };

const char* to_string(Format f) noexcept;
// Accepts "json" / "xml"; throws ConfigError otherwise.
Format parse_format(std::string_view s);

enum class DecodeErrorKind { syntax, schema, range, version };

const char* to_string(DecodeErrorKind k) noexcept;

class DecodeError : public Error {
public:
    DecodeError(DecodeErrorKind kind, const std::string& what) : Error(what), kind_(kind) {}
    DecodeErrorKind kind() const noexcept { return kind_; }

private:
    DecodeErrorKind kind_;
};

// Invalid or oversize message handed to encode().
class EncodeError : public Error {
public:
    using Error::Error;
};

// Throws DecodeError (schema or range) describing the first problem.
void validate(const Message& m);

std::string encode(const Message& m, Format format);
Message decode(std::string_view bytes, Format format);
// Picks XML when the first non-blank byte is '<', JSON otherwise.
Message decode_auto(std::string_view bytes);

// Shortest representation that parses back to the same double.
std::string format_number(double v);

// Conversions between wire bodies and pipeline payloads.
Message from_payload(const Payload& payload);
Payload to_payload(const Message& m);
AffectEvent to_event(const EventBody& b);
EventBody from_event(const AffectEvent& e);
FusionBody from_result(const FusionResult& r);
FusionResult to_result(const FusionBody& b);

// Pipeline topic that carries a message of this type.
const char* topic_for(const Message& m) noexcept;

namespace topics {
inline constexpr const char* events = "events";
inline constexpr const char* activity = "activity";
inline constexpr const char* audio = "audio.raw";
inline constexpr const char* face_landmarks = "landmarks.face";
inline constexpr const char* pose_landmarks = "landmarks.pose";
inline constexpr const char* fusion = "fusion";
inline constexpr const char* session = "session.log";
} // namespace topics

} // namespace affect::wire
