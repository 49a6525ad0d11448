#pragma once

#include "affect/config.hpp"
#include "affect/pipeline.hpp"
#include "affect/wire.hpp"

#include <netinet/in.h>

#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace affect {

// Resolves an IPv4 host name or dotted address. Throws Error.
sockaddr_in resolve_ipv4(const Endpoint& e);

// Non-blocking IPv4 UDP socket.
class UdpSocket {
public:
    UdpSocket();
    ~UdpSocket();
    UdpSocket(UdpSocket&& other) noexcept;
    UdpSocket& operator=(UdpSocket&& other) noexcept;
    UdpSocket(const UdpSocket&) = delete;
    UdpSocket& operator=(const UdpSocket&) = delete;

    // Throws Error when the address cannot be bound. Port 0 picks a free port.
    void bind(const Endpoint& e);
    std::uint16_t local_port() const;

    // Number of bytes received, or nullopt when nothing is pending.
    std::optional<std::size_t> receive(std::vector<char>& buffer);
    bool send_to(const sockaddr_in& to, std::string_view bytes);

    int fd() const noexcept { return fd_; }

private:
    int fd_ = -1;
};

struct IngestCounters {
    std::uint64_t accepted = 0;
    std::uint64_t syntax = 0;
    std::uint64_t schema = 0;
    std::uint64_t range = 0;
    std::uint64_t version = 0;
    std::uint64_t ignored = 0; // valid but not accepted inbound (fusion)
};

// Input component: reads datagrams, decodes them (format sniffed per
// datagram) and pushes the payload onto the topic for its type.
class IngestComponent : public Component {
public:
    explicit IngestComponent(const Endpoint& bind_to);

    void step(ComponentContext& ctx) override;

    // Sorts one datagram into a payload or a counter; exposed for tests.
    std::optional<wire::Message> classify(std::string_view datagram);

    IngestCounters counters() const;
    std::uint16_t port() const { return socket_.local_port(); }

    static std::vector<std::string> output_topics();

private:
    UdpSocket socket_;
    std::vector<char> buffer_;
    mutable std::mutex mutex_;
    IngestCounters counters_;
};

struct BroadcastCounters {
    std::uint64_t sent = 0;
    std::uint64_t send_errors = 0;
    std::uint64_t encode_errors = 0;
};

// Output component: keeps the newest result from the fusion topic and sends
// it to every target each step. Before the first result it falls back to
// `initial`, so receivers always get a message per period.
class BroadcastComponent : public Component {
public:
    using Fallback = std::function<FusionResult(Timestamp)>;

    BroadcastComponent(std::vector<BroadcastTarget> targets, Fallback initial);

    void step(ComponentContext& ctx) override;

    BroadcastCounters counters() const;
    // Wall-clock (steady) send instants in seconds, one per step that sent.
    std::vector<double> send_times() const;

private:
    struct Target {
        sockaddr_in address;
        wire::Format format;
    };
    std::vector<Target> targets_;
    Fallback initial_;
    std::optional<FusionResult> latest_;
    UdpSocket socket_;
    mutable std::mutex mutex_;
    BroadcastCounters counters_;
    std::vector<double> send_times_;
};

} // namespace affect
