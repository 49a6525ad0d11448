#include "affect/net.hpp"

#include "affect/errors.hpp"

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

namespace affect {

sockaddr_in resolve_ipv4(const Endpoint& e)
{
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(e.port);
    if (inet_pton(AF_INET, e.host.c_str(), &addr.sin_addr) == 1)
        return addr;

    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_DGRAM;
    addrinfo* res = nullptr;
    const int rc = getaddrinfo(e.host.c_str(), nullptr, &hints, &res);
    if (rc != 0 || !res)
        throw Error("cannot resolve '" + e.host + "': " + gai_strerror(rc));
    addr.sin_addr = reinterpret_cast<const sockaddr_in*>(res->ai_addr)->sin_addr;
    freeaddrinfo(res);
    return addr;
}

UdpSocket::UdpSocket()
{
    fd_ = ::socket(AF_INET, SOCK_DGRAM | SOCK_NONBLOCK | SOCK_CLOEXEC, 0);
    if (fd_ < 0)
        throw Error(std::string("socket: ") + std::strerror(errno));
}

UdpSocket::~UdpSocket()
{
    if (fd_ >= 0)
        ::close(fd_);
}

UdpSocket::UdpSocket(UdpSocket&& other) noexcept : fd_(other.fd_)
{
    other.fd_ = -1;
}

UdpSocket& UdpSocket::operator=(UdpSocket&& other) noexcept
{
    if (this != &other) {
        if (fd_ >= 0)
            ::close(fd_);
        fd_ = other.fd_;
        other.fd_ = -1;
    }
    return *this;
}

void UdpSocket::bind(const Endpoint& e)
{
    const sockaddr_in addr = resolve_ipv4(e);
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd_, reinterpret_cast<const sockaddr*>(&addr), sizeof addr) != 0)
        throw Error("cannot bind " + to_string(e) + ": " + std::strerror(errno));
}

std::uint16_t UdpSocket::local_port() const
{
    sockaddr_in addr{};
    socklen_t len = sizeof addr;
    if (::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len) != 0)
        return 0;
    return ntohs(addr.sin_port);
}

std::optional<std::size_t> UdpSocket::receive(std::vector<char>& buffer)
{
    const ssize_t n = ::recv(fd_, buffer.data(), buffer.size(), MSG_TRUNC);
    if (n < 0)
        return std::nullopt;
    return static_cast<std::size_t>(n);
}

bool UdpSocket::send_to(const sockaddr_in& to, std::string_view bytes)
{
    const ssize_t n = ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<const sockaddr*>(&to),
                               sizeof to);
    return n == static_cast<ssize_t>(bytes.size());
}

// --- ingest -----------------------------------------------------------------

IngestComponent::IngestComponent(const Endpoint& bind_to) : buffer_(64 * 1024)
{
    socket_.bind(bind_to);
}

std::vector<std::string> IngestComponent::output_topics()
{
    return {wire::topics::events, wire::topics::activity, wire::topics::audio,
            wire::topics::face_landmarks, wire::topics::pose_landmarks};
}

std::optional<wire::Message> IngestComponent::classify(std::string_view datagram)
{
    std::lock_guard lock(mutex_);
    try {
        wire::Message m = wire::decode_auto(datagram);
        if (std::holds_alternative<wire::FusionBody>(m.body)) {
            ++counters_.ignored;
            return std::nullopt;
        }
        ++counters_.accepted;
        return m;
    } catch (const wire::DecodeError& e) {
        switch (e.kind()) {
        case wire::DecodeErrorKind::syntax: ++counters_.syntax; break;
        case wire::DecodeErrorKind::schema: ++counters_.schema; break;
        case wire::DecodeErrorKind::range: ++counters_.range; break;
        case wire::DecodeErrorKind::version: ++counters_.version; break;
        }
    } catch (const std::exception&) {
        ++counters_.syntax;
    }
    return std::nullopt;
}

void IngestComponent::step(ComponentContext& ctx)
{
    // bounded so a flood cannot starve shutdown
    for (int i = 0; i < 4096; ++i) {
        const auto n = socket_.receive(buffer_);
        if (!n)
            break;
        std::string_view datagram(buffer_.data(), std::min(*n, buffer_.size()));
        if (*n > buffer_.size()) {
            std::lock_guard lock(mutex_);
            ++counters_.syntax;
            continue;
        }
        if (auto m = classify(datagram))
            ctx.push(wire::topic_for(*m), wire::to_payload(*m));
    }
}

IngestCounters IngestComponent::counters() const
{
    std::lock_guard lock(mutex_);
    return counters_;
}

// --- broadcast --------------------------------------------------------------

BroadcastComponent::BroadcastComponent(std::vector<BroadcastTarget> targets, Fallback initial)
    : initial_(std::move(initial))
{
    for (const auto& t : targets)
        targets_.push_back(Target{resolve_ipv4(t.endpoint), t.format});
}

void BroadcastComponent::step(ComponentContext& ctx)
{
    while (auto msg = ctx.pop(wire::topics::fusion))
        if (const auto* r = std::get_if<FusionResult>(&msg->payload))
            latest_ = *r;
    const FusionResult r = latest_ ? *latest_ : initial_(ctx.now());
    const wire::Message m{wire::protocol_version, wire::from_result(r)};

    std::optional<std::string> encoded[2];
    BroadcastCounters delta;
    for (const auto& t : targets_) {
        auto& bytes = encoded[static_cast<int>(t.format)];
        try {
            if (!bytes)
                bytes = wire::encode(m, t.format);
        } catch (const wire::EncodeError&) {
            ++delta.encode_errors;
            continue;
        }
        if (socket_.send_to(t.address, *bytes))
            ++delta.sent;
        else
            ++delta.send_errors;
    }
    const double at = std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();

    std::lock_guard lock(mutex_);
    counters_.sent += delta.sent;
    counters_.send_errors += delta.send_errors;
    counters_.encode_errors += delta.encode_errors;
    if (delta.sent > 0 && send_times_.size() < 1'000'000)
        send_times_.push_back(at);
}

BroadcastCounters BroadcastComponent::counters() const
{
    std::lock_guard lock(mutex_);
    return counters_;
}

std::vector<double> BroadcastComponent::send_times() const
{
    std::lock_guard lock(mutex_);
    return send_times_;
}

} // namespace affect
