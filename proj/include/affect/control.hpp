#pragma once

#include "affect/config.hpp"
#include "affect/daemon.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <thread>

namespace httplib {
class Server;
}

namespace affect {

// HTTP control surface:
//   GET   /status
//   POST  /modality/{name}/enable | /modality/{name}/disable
//   PATCH /params
//   GET   /stream   (text/event-stream, one wire JSON message per event)
class ControlServer {
public:
    ControlServer(Daemon& daemon, Endpoint listen);
    ~ControlServer();
    ControlServer(const ControlServer&) = delete;
    ControlServer& operator=(const ControlServer&) = delete;

    // Binds and serves on a background thread. Throws Error when the address
    // cannot be bound. Port 0 picks a free port.
    void start();
    void stop();
    std::uint16_t port() const noexcept { return port_; }

private:
    Daemon& daemon_;
    Endpoint listen_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    std::uint16_t port_ = 0;
    std::atomic<bool> stopping_{false};
};

} // namespace affect
