#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htap/freshness.hpp"
#include "htap/olap.hpp"
#include "htap/rde.hpp"
#include "htap/scheduler.hpp"

namespace htap::sim {

struct CostParams {
    double mem_bw_bytes_per_sec = 64e9;   ///< per socket
    double ic_bw_bytes_per_sec = 32e9;    ///< half of the local bus
    double per_core_scan_bytes_per_sec = 1.1e9;
    double remote_core_rate_fraction = 0.5; ///< per-core rate across the interconnect, relative to local
    double oltp_base_tps = 1.2e6;
    double oltp_remote_penalty = 0.37;
    /// Extra multiplicative drop under a co-located scan; 0.63 * (1 - p) = 0.45.
    double oltp_olap_interference_penalty = 1.0 - 0.45 / 0.63;
    double join_probe_tuples_per_sec = 60e6; ///< per core
    double group_seconds_per_group = 2e-6;
    double oltp_mem_bw_share = 0.2; ///< of a data socket's bus, kept by OLTP
    double sync_seconds_per_tuple = 1e-8;

    void validate() const;
};

/// Bytes and tuples one query moves, split by where they are read from.
struct ScanVolume {
    double local_bytes = 0;  ///< OLAP instance, on the OLAP sockets
    double remote_bytes = 0; ///< frozen OLTP instance, on the data sockets
    double probe_tuples = 0;
    double build_tuples = 0;
    double groups = 0;
};

/// Widths come from the freshness stats; row ranges from the access paths.
ScanVolume scan_volume(const QueryPlan &plan, const AccessPathPlan &paths, const FreshnessStats &stats,
                       double groups = 15);

/// OLAP CPUs split by distance to the data sockets, plus socket counts.
struct Placement {
    std::size_t olap_far = 0;  ///< OLAP CPUs off the data sockets
    std::size_t olap_near = 0; ///< OLAP CPUs on the data sockets
    std::size_t oltp_far = 0;
    std::size_t oltp_near = 0;
    std::size_t data_sockets = 0;
    std::size_t other_sockets = 0;
    std::size_t baseline_oltp = 0; ///< CPUs of the data sockets
    std::size_t olap_sockets = 0;  ///< sockets holding any OLAP CPU
};

Placement placement(const ResourceLedger &ledger);

struct RegionRates {
    double local = 0;  ///< bytes/s from the OLAP instance
    double remote = 0; ///< bytes/s from the data sockets
    double remote_over_ic = 0; ///< part of `remote` crossing the interconnect
};

RegionRates region_rates(const Placement &p, const CostParams &params);

/// Scan regions overlapped (max) or serialized (sum), plus probe, broadcast build and group terms.
double estimate_query_time(const ScanVolume &v, const ResourceLedger &ledger, const CostParams &params,
                           bool overlapped = true);
double estimate_query_time(const QueryPlan &plan, const AccessPathPlan &paths, const FreshnessStats &stats,
                           const ResourceLedger &ledger, const CostParams &params);

double estimate_etl_time(double bytes, const CostParams &params);
double estimate_sync_time(double tuples, const CostParams &params);

/// base * cores * (1 - remote_penalty * remote_mix) * (1 - interference * pressure).
/// `olap_remote_fraction` is the share of OLAP bytes read from the data sockets.
double estimate_oltp_tps(StateTag state, const ResourceLedger &ledger, bool olap_active, const CostParams &params,
                         double olap_remote_fraction = 1.0);

/// Full-scale CH-lite sizes.
struct SimScale {
    double scale_factor = 30;
    std::uint64_t warehouses = 14;
    std::uint64_t items = 100'000;
    double lines_per_order = 10; ///< mean of the NewOrder line count

    std::uint64_t initial_orderlines() const;
    std::uint64_t initial_orders() const { return initial_orderlines() / 15; }
};

/// Row-count model of the CH-lite tables: OLTP rows, OLAP watermarks and
/// update tracking per column, reported through the regular freshness stats.
class SimDatabase {
public:
    explicit SimDatabase(const SimScale &scale);

    /// Commits `txns` NewOrders: order and line inserts, stock and warehouse updates.
    void new_orders(std::uint64_t txns);
    /// Tuples updated since the last call; the sync work of a switch.
    std::uint64_t take_switch_updates();
    FreshnessStats stats(Epoch epoch) const;
    /// Brings the OLAP side up to date and returns the bytes moved.
    std::uint64_t etl();

    std::uint64_t rows(const std::string &table) const;

private:
    struct Table {
        std::string name;
        Schema schema;
        std::uint64_t rows = 0;
        std::uint64_t watermark = 0;
        double updates = 0; ///< update operations below the watermark since the last ETL
        std::vector<bool> touched;
    };
    Table &table(const std::string &name);
    const Table &table(const std::string &name) const;
    std::uint64_t stale_rows(const Table &t) const;

    SimScale scale_;
    std::vector<Table> tables_;
    double line_carry_ = 0;
    std::uint64_t switch_updates_ = 0;
};

struct Policy {
    bool adaptive = false;
    StateTag fixed = StateTag::S2;
    SchedulerConfig sched;

    std::string name() const;
    static Policy fixed_state(StateTag s);
    static Policy adaptive_is(double alpha = 0.5);
    static Policy adaptive_ni(double alpha = 0.5);
    static Policy adaptive_s1(double alpha = 0.5);
};

struct SimConfig {
    Topology topology = Topology::uniform(2, 14);
    Thresholds thresholds{1, {10, 0}};
    CostParams params;
    SimScale scale;
    double step_seconds = 0.25; ///< OLTP time between two queries

    std::uint64_t txns_per_step() const;
};

struct SimStep {
    QueryPlan plan;
    std::uint64_t txns = 0; ///< NewOrders committed before the query arrives
};

/// `iterations` passes over the plans with a constant growth per query.
std::vector<SimStep> mix_workload(const std::vector<QueryPlan> &plans, std::size_t iterations, std::uint64_t txns);

struct SimEvent {
    std::size_t step = 0;
    std::string query;
    StateTag state = StateTag::S2;
    std::uint64_t n_fq = 0;
    std::uint64_t n_ft = 0;
    double etl_s = 0;
    double exec_s = 0;
    double cum_olap_s = 0;
    double oltp_tps = 0;
};

struct SimTrace {
    std::string policy;
    std::vector<SimEvent> events;
    std::size_t etl_count = 0;
    double max_etl_s = 0;

    double total() const { return events.empty() ? 0.0 : events.back().cum_olap_s; }
};

/// Each step: commit the growth, switch, take real freshness stats, pick the
/// state (scheduler or fixed), apply its assignment, ETL in S2, then charge
/// the estimated execution time over the real access paths.
SimTrace run_sequence(const std::vector<SimStep> &workload, const Policy &policy, const SimConfig &cfg);

struct BatchRow {
    std::size_t batch = 0;
    double etl_s = 0;
    double exec_s = 0;
    double total_s = 0;
    double etl_share = 0;
};

/// `queries` isolated queries in batches; each batch pays one ETL of `etl_bytes`
/// and each query scans `scan_bytes` locally.
std::vector<BatchRow> s2_batch_sweep(const SimConfig &cfg, const std::vector<std::size_t> &batches,
                                     std::size_t queries = 16, double etl_bytes = 500e6, double scan_bytes = 160e6);

struct FreshRow {
    double fraction = 0;
    double split_s = 0;     ///< S3-IS, split access at the watermark
    double s2_s = 0;        ///< S2 steady state: one step of ETL plus a local scan
    double remote_s = 0;    ///< everything over the interconnect
};

/// Fraction of the fact table that is an unsynced insert tail, 0 to 1.
std::vector<FreshRow> fresh_fraction_sweep(const SimConfig &cfg, const QueryPlan &plan, std::size_t points = 21);
/// First fraction where split access costs at least the S2 steady state, interpolated.
std::optional<double> crossover(const std::vector<FreshRow> &rows);

struct TradeRow {
    std::size_t traded = 0; ///< OLTP and OLAP CPUs exchanged in total
    std::vector<std::size_t> thresholds;
    double tps_no_olap = 0;
    double tps_with_olap = 0;
    double query_s = 0;
};

/// Co-location: `traded` CPUs swapped, half from each socket, thresholds [n - t/2, t/2].
std::vector<TradeRow> s1_trade_sweep(const SimConfig &cfg, const QueryPlan &plan, const std::vector<std::size_t> &traded);

struct ElasticRow {
    std::size_t granted = 0;
    double query_s = 0;
    double tps = 0;
};

/// S3-NI with `granted` OLTP-socket CPUs lent to OLAP, at a fixed fresh fraction.
std::vector<ElasticRow> s3_elastic_sweep(const SimConfig &cfg, const QueryPlan &plan,
                                         const std::vector<std::size_t> &granted, double fresh_fraction = 0.5);

} // namespace htap::sim
