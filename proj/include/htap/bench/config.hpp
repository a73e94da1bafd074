#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htap/ch_schema.hpp"
#include "htap/rde.hpp"
#include "htap/scheduler.hpp"
#include "htap/simcost.hpp"

namespace htap::bench {

/// Everything a CLI run needs. Live-engine sizes come from `load`; the
/// simulator keeps full-scale sizes in `sim_scale`.
struct BenchConfig {
    ch::LoadConfig load;
    int sockets = 2;
    int cpus_per_socket = 14;
    Thresholds thresholds{1, {10, 0}};
    SchedulerConfig sched;
    sim::CostParams cost;
    sim::SimScale sim_scale;
    double step_seconds = 0.25;
    std::size_t iterations = 100;        ///< passes over the Q1/Q6/Q19 mix
    std::size_t warmup_passes = 1;       ///< live passes run before logging
    std::size_t live_txns_per_query = 10; ///< serial NewOrders between live queries
    std::size_t olap_workers = 2;
    double batch_etl_bytes = 500e6;
    double batch_scan_bytes = 160e6;
    std::string output_dir = ".";

    /// One message per failed rule; empty when valid.
    std::vector<std::string> problems() const;
    /// Throws Error with the first problem.
    void validate() const;

    Topology topology() const;
    sim::SimConfig sim() const;
};

std::string format_size_list(const std::vector<std::size_t> &v, char sep = ',');

/// Shortest round-trip decimal form; the CSV number format.
std::string num(double v);

} // namespace htap::bench
