#include "affect/bench.hpp"

#include "affect/daemon.hpp"
#include "affect/errors.hpp"
#include "affect/net.hpp"

#include <poll.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <mutex>
#include <thread>

namespace affect {

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        return 0.0;
    std::sort(values.begin(), values.end());
    const double rank = std::ceil(std::clamp(q, 0.0, 1.0) * static_cast<double>(values.size()));
    const std::size_t idx = rank < 1.0 ? 0 : static_cast<std::size_t>(rank) - 1;
    return values[std::min(idx, values.size() - 1)];
}

BenchReport run_bench(const BenchOptions& options)
{
    if (options.events == 0 || options.ticks == 0)
        throw InvalidArgument("bench needs at least one event and one tick");
    if (!(options.tick_rate_hz > 0.0) || !(options.broadcast_period > 0.0))
        throw InvalidArgument("bench rates must be > 0");

    UdpSocket receiver;
    receiver.bind(Endpoint{"127.0.0.1", 0});

    const double duration = static_cast<double>(options.ticks) / options.tick_rate_hz;

    DaemonConfig cfg = DaemonConfig::defaults();
    cfg.fusion.tick_interval = 1.0 / options.tick_rate_hz;
    cfg.fusion.max_active_events = std::max(cfg.fusion.max_active_events, options.events);
    cfg.wire.ingest.reset();
    cfg.wire.broadcast_period = options.broadcast_period;
    cfg.wire.targets = {BroadcastTarget{Endpoint{"127.0.0.1", receiver.local_port()}, wire::Format::json}};
    for (const char* name : {"voice", "face", "pose"})
        cfg.pipeline.components[name].enabled = false;

    std::mutex m;
    std::vector<double> latencies;
    latencies.reserve(options.ticks);
    std::size_t min_active = options.events;
    std::atomic<std::size_t> measured{0};

    DaemonOptions dopts;
    dopts.tick_observer = [&](double seconds, std::size_t active) {
        std::lock_guard lock(m);
        if (latencies.size() >= options.ticks)
            return;
        latencies.push_back(seconds * 1000.0);
        min_active = std::min(min_active, active);
        measured = latencies.size();
    };

    Daemon daemon(cfg, dopts);

    // every norm stays above zero for twice the run time
    const double lifetime = 2.0 * duration + 10.0;
    std::uint64_t state = 0x9e3779b97f4a7c15ull;
    auto next = [&] {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return static_cast<double>(state >> 11) * 0x1.0p-53 * 1.6 - 0.8;
    };
    for (std::size_t i = 0; i < options.events; ++i) {
        AffectEvent e;
        e.modality = "bench";
        e.scores = ScoreSet(next(), next(), next());
        e.decay_speed = e.scores.norm() / lifetime;
        if (daemon.inject_event(e) != IngestOutcome::registered)
            throw Error("bench event was not registered");
    }

    std::vector<double> arrivals;
    std::atomic<bool> done{false};
    std::thread rx([&] {
        std::vector<char> buf(64 * 1024);
        pollfd pfd{receiver.fd(), POLLIN, 0};
        while (!done) {
            if (::poll(&pfd, 1, 50) <= 0)
                continue;
            while (receiver.receive(buf))
                arrivals.push_back(
                    std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count());
        }
    });

    daemon.start();
    const auto deadline = std::chrono::steady_clock::now() +
                          std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                              std::chrono::duration<double>(duration * 3.0 + 5.0));
    while (measured.load() < options.ticks && std::chrono::steady_clock::now() < deadline)
        std::this_thread::sleep_for(std::chrono::milliseconds(10));
    daemon.stop();
    done = true;
    rx.join();

    BenchReport r;
    r.events = options.events;
    {
        std::lock_guard lock(m);
        r.ticks = latencies.size();
        r.min_active = latencies.empty() ? 0 : min_active;
        r.tick_p50_ms = percentile(latencies, 0.5);
        r.tick_p99_ms = percentile(latencies, 0.99);
        r.tick_max_ms = latencies.empty() ? 0.0 : *std::max_element(latencies.begin(), latencies.end());
    }
    r.broadcasts_received = arrivals.size();
    std::vector<double> jitter;
    for (std::size_t i = 1; i < arrivals.size(); ++i)
        jitter.push_back(std::abs(arrivals[i] - arrivals[i - 1] - options.broadcast_period) * 1000.0);
    r.jitter_p50_ms = percentile(jitter, 0.5);
    r.jitter_p99_ms = percentile(jitter, 0.99);
    return r;
}

void print_report(std::ostream& out, const BenchReport& r)
{
    out << std::fixed << std::setprecision(3);
    out << "events            " << r.events << '\n'
        << "ticks measured    " << r.ticks << '\n'
        << "min active        " << r.min_active << '\n'
        << "tick p50 ms       " << r.tick_p50_ms << '\n'
        << "tick p99 ms       " << r.tick_p99_ms << '\n'
        << "tick max ms       " << r.tick_max_ms << '\n'
        << "broadcasts        " << r.broadcasts_received << '\n'
        << "jitter p50 ms     " << r.jitter_p50_ms << '\n'
        << "jitter p99 ms     " << r.jitter_p99_ms << '\n';
    out.unsetf(std::ios::floatfield);
}

} // namespace affect
