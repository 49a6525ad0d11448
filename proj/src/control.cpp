#include "affect/control.hpp"

#include "affect/errors.hpp"

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <map>

namespace affect {

namespace {

constexpr const char* json_type = "application/json";

void send_error(httplib::Response& res, int status, const std::string& what)
{
    res.status = status;
    res.set_content(nlohmann::json{{"error", what}}.dump(), json_type);
}

} // namespace

ControlServer::ControlServer(Daemon& daemon, Endpoint listen)
    : daemon_(daemon), listen_(std::move(listen)), server_(std::make_unique<httplib::Server>())
{
    auto& s = *server_;

    s.Get("/status", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(daemon_.status_json(), json_type);
    });

    // Toggles carry no body. Taking the reader form keeps httplib from waiting
    // for one when the client sends neither Content-Length nor chunking.
    s.Post(R"(/modality/([^/]+)/(enable|disable))", [this](const httplib::Request& req, httplib::Response& res,
                                                          const httplib::ContentReader& read_body) {
        if (req.has_header("Content-Length") || req.has_header("Transfer-Encoding"))
            read_body([](const char*, std::size_t) { return true; });
        try {
            res.set_content(daemon_.set_modality_enabled(req.matches[1], req.matches[2] == "enable"), json_type);
        } catch (const ControlError& e) {
            send_error(res, e.status(), e.what());
        }
    });

    s.Get("/params", [this](const httplib::Request&, httplib::Response& res) {
        res.set_content(daemon_.params_json(), json_type);
    });

    s.Patch("/params", [this](const httplib::Request& req, httplib::Response& res) {
        try {
            res.set_content(daemon_.patch_params(req.body), json_type);
        } catch (const ControlError& e) {
            send_error(res, e.status(), e.what());
        }
    });

    s.Get("/stream", [this](const httplib::Request&, httplib::Response& res) {
        res.set_header("Cache-Control", "no-cache");
        auto seen = std::make_shared<std::map<std::string, Timestamp>>();
        res.set_chunked_content_provider("text/event-stream", [this, seen](std::size_t, httplib::DataSink& sink) {
            if (stopping_)
                return false;
            std::string chunk;
            for (const auto& frame : daemon_.stream_frames(*seen))
                chunk += "data: " + frame + "\n\n";
            if (!sink.write(chunk.data(), chunk.size()))
                return false;
            std::this_thread::sleep_for(std::chrono::duration<double>(daemon_.broadcast_period()));
            return !stopping_.load();
        });
    });

    s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
        try {
            std::rethrow_exception(ep);
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        } catch (...) {
            send_error(res, 500, "internal error");
        }
    });
}

ControlServer::~ControlServer()
{
    stop();
}

void ControlServer::start()
{
    if (thread_.joinable())
        throw Error("control server already started");
    if (listen_.port == 0) {
        const int port = server_->bind_to_any_port(listen_.host);
        if (port < 0)
            throw Error("cannot bind control server on " + listen_.host);
        port_ = static_cast<std::uint16_t>(port);
    } else {
        if (!server_->bind_to_port(listen_.host, listen_.port))
            throw Error("cannot bind control server on " + to_string(listen_));
        port_ = listen_.port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
}

void ControlServer::stop()
{
    stopping_ = true;
    if (server_)
        server_->stop();
    if (thread_.joinable())
        thread_.join();
}

} // namespace affect
