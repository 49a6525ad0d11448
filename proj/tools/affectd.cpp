#include "affect/bench.hpp"
#include "affect/config.hpp"
#include "affect/control.hpp"
#include "affect/daemon.hpp"
#include "affect/session.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

using namespace affect;

namespace {

DaemonConfig config_or_defaults(const std::string& path)
{
    if (path.empty())
        return DaemonConfig::defaults();
    auto loaded = load_config(path);
    for (const auto& w : loaded.warnings)
        std::cerr << "warning: " << w << '\n';
    return loaded.config;
}

int cmd_run(const std::string& config_path, bool headless)
{
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);

    DaemonConfig cfg = config_or_defaults(config_path);
    Daemon daemon(cfg);
    daemon.start();
    std::optional<ControlServer> control;
    if (!headless && cfg.control.listen) {
        control.emplace(daemon, *cfg.control.listen);
        control->start();
    }

    std::cerr << "affectd running";
    if (auto p = daemon.ingest_port())
        std::cerr << ", ingest udp/" << *p;
    if (control)
        std::cerr << ", control http://" << cfg.control.listen->host << ':' << control->port();
    std::cerr << std::endl;

    int sig = 0;
    sigwait(&set, &sig);
    std::cerr << "stopping" << std::endl;
    if (control)
        control->stop();
    const auto report = daemon.stop();
    for (const auto& t : report.topics)
        if (t.dropped > 0)
            std::cerr << "queue " << t.name << " dropped " << t.dropped << '\n';
    if (!report.drained)
        std::cerr << "queues not drained within the grace period\n";
    return 0;
}

struct ReplayArgs {
    std::string log;
    std::string config;
    std::optional<double> speed;
    bool fast = false;
    std::string emit = "csv";
    std::string out;
    std::string session_out;
    bool allow_mismatch = false;
};

int cmd_replay(const ReplayArgs& a)
{
    const DaemonConfig cfg = config_or_defaults(a.config);
    const SessionLog log = read_session(a.log);
    ReplayOptions opts;
    opts.allow_config_mismatch = a.allow_mismatch;
    if (!a.fast)
        opts.speed = a.speed;
    const auto format = parse_trajectory_format(a.emit);
    const ReplayResult result = replay(log, cfg, opts);

    if (!a.session_out.empty()) {
        std::ofstream f(a.session_out);
        if (!f)
            throw Error("cannot write " + a.session_out);
        write_session(f, result.log);
    }
    if (a.out.empty()) {
        write_trajectory(std::cout, result.results, format);
    } else {
        std::ofstream f(a.out);
        if (!f)
            throw Error("cannot write " + a.out);
        write_trajectory(f, result.results, format);
    }
    return 0;
}

int cmd_validate(const std::string& path)
{
    try {
        auto loaded = load_config(path);
        for (const auto& w : loaded.warnings)
            std::cerr << "warning: " << w << '\n';
        std::cout << "ok " << config_hash(loaded.config) << '\n';
        return 0;
    } catch (const ConfigValidationError& e) {
        for (const auto& err : e.errors())
            std::cerr << "error: " << err << '\n';
        return 1;
    }
}

int cmd_synth(const std::string& config_path, const SynthOptions& opts, const std::string& out)
{
    const SessionLog log = synthesize_session(config_or_defaults(config_path), opts);
    if (out.empty()) {
        write_session(std::cout, log);
        return 0;
    }
    std::ofstream f(out);
    if (!f)
        throw Error("cannot write " + out);
    write_session(f, log);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Real-time affect fusion daemon"};
    app.require_subcommand(1);

    std::string run_config;
    bool headless = false;
    auto* run = app.add_subcommand("run", "Start the daemon");
    run->add_option("--config", run_config, "Config file (JSON)")->required()->check(CLI::ExistingFile);
    run->add_flag("--headless", headless, "Do not serve the control API");

    ReplayArgs ra;
    auto* rep = app.add_subcommand("replay", "Replay a session log in virtual time and write the trajectory");
    rep->add_option("log", ra.log, "Session log (JSONL)")->required()->check(CLI::ExistingFile);
    rep->add_option("--config", ra.config, "Config file; defaults when omitted")->check(CLI::ExistingFile);
    auto* speed = rep->add_option("--speed", ra.speed, "Pace the replay at this multiple of real time")
                      ->check(CLI::PositiveNumber);
    auto* fast = rep->add_flag("--fast", ra.fast, "Replay as fast as possible (default)");
    speed->excludes(fast);
    rep->add_option("--emit", ra.emit, "Trajectory format")->check(CLI::IsMember({"csv", "jsonl"}));
    rep->add_option("--out", ra.out, "Trajectory file; stdout when omitted");
    rep->add_option("--session-out", ra.session_out, "Also write the replayed session log");
    rep->add_flag("--allow-config-mismatch", ra.allow_mismatch, "Replay even if the config hash differs");

    std::string validate_path;
    auto* val = app.add_subcommand("validate-config", "Check a config file");
    val->add_option("path", validate_path, "Config file")->required();

    BenchOptions bo;
    auto* bench = app.add_subcommand("bench", "Measure tick latency and broadcast jitter");
    bench->add_option("--events", bo.events, "Active events")->check(CLI::PositiveNumber);
    bench->add_option("--ticks", bo.ticks, "Ticks to measure")->check(CLI::PositiveNumber);
    bench->add_option("--rate", bo.tick_rate_hz, "Tick rate in Hz")->check(CLI::PositiveNumber);
    bench->add_option("--period", bo.broadcast_period, "Broadcast period in seconds")->check(CLI::PositiveNumber);

    SynthOptions so;
    std::string synth_config;
    std::string synth_out;
    auto* synth = app.add_subcommand("synth-session", "Generate a deterministic synthetic session log");
    synth->add_option("--duration", so.duration, "Seconds")->check(CLI::PositiveNumber);
    synth->add_option("--seed", so.seed, "Random seed");
    synth->add_option("--config", synth_config, "Config whose hash goes in the header")->check(CLI::ExistingFile);
    synth->add_option("--out", synth_out, "Output file; stdout when omitted");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run)
            return cmd_run(run_config, headless);
        if (*rep)
            return cmd_replay(ra);
        if (*val)
            return cmd_validate(validate_path);
        if (*bench) {
            print_report(std::cout, run_bench(bo));
            return 0;
        }
        if (*synth)
            return cmd_synth(synth_config, so, synth_out);
    } catch (const ConfigValidationError& e) {
        for (const auto& err : e.errors())
            std::cerr << "error: " << err << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
