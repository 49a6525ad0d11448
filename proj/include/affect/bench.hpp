#pragma once

#include <cstddef>
#include <ostream>
#include <vector>

namespace affect {

struct BenchOptions {
    std::size_t events = 1000;
    std::size_t ticks = 1000;
    double tick_rate_hz = 100.0;
    double broadcast_period = 0.1;
};

struct BenchReport {
    std::size_t events = 0;
    std::size_t ticks = 0;
    std::size_t min_active = 0; // fewest active events seen at any measured tick
    double tick_p50_ms = 0.0;
    double tick_p99_ms = 0.0;
    double tick_max_ms = 0.0;
    std::size_t broadcasts_received = 0;
    double jitter_p50_ms = 0.0;
    double jitter_p99_ms = 0.0; // |arrival interval - period|
};

// Nearest-rank percentile, q in [0, 1]. Empty input gives 0.
double percentile(std::vector<double> values, double q);

// Runs the live pipeline with `events` long-lived events preloaded, ticking
// at tick_rate_hz and broadcasting to a UDP receiver on localhost.
BenchReport run_bench(const BenchOptions& options);

void print_report(std::ostream& out, const BenchReport& r);

} // namespace affect
