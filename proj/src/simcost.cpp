#include "htap/simcost.hpp"

#include <algorithm>
#include <cmath>

#include "htap/ch_schema.hpp"

namespace htap::sim {

void CostParams::validate() const
{
    for (double r : {mem_bw_bytes_per_sec, ic_bw_bytes_per_sec, per_core_scan_bytes_per_sec, oltp_base_tps,
                     join_probe_tuples_per_sec})
        if (!(r > 0) || !std::isfinite(r))
            throw Error("cost rates must be positive");
    if (!(remote_core_rate_fraction > 0 && remote_core_rate_fraction <= 1))
        throw Error("remote core rate fraction must lie in (0, 1]");
    for (double p : {oltp_remote_penalty, oltp_olap_interference_penalty, oltp_mem_bw_share})
        if (!(p >= 0 && p < 1))
            throw Error("penalties and shares must lie in [0, 1)");
    if (!(group_seconds_per_group >= 0) || !(sync_seconds_per_tuple >= 0))
        throw Error("per-item costs must be non-negative");
    if (ic_bw_bytes_per_sec > mem_bw_bytes_per_sec)
        throw Error("interconnect bandwidth exceeds memory bandwidth");
}

ScanVolume scan_volume(const QueryPlan &plan, const AccessPathPlan &paths, const FreshnessStats &stats, double groups)
{
    ScanVolume v;
    for (const auto &p : paths.columns) {
        const double w = static_cast<double>(stats.table(p.table).column(p.column).width);
        v.local_bytes += static_cast<double>(p.local_rows) * w;
        v.remote_bytes += static_cast<double>(p.total_rows - p.local_rows) * w;
    }
    if (plan.join) {
        v.probe_tuples = static_cast<double>(stats.table(plan.join->fact_table).oltp_rows);
        v.build_tuples = static_cast<double>(stats.table(plan.join->dim_table).oltp_rows);
    }
    if (!plan.group_by.empty())
        v.groups = groups;
    return v;
}

Placement placement(const ResourceLedger &ledger)
{
    const auto &topo = ledger.topology();
    const std::size_t data = ledger.thresholds().oltp_sock_thres;
    Placement p;
    for (std::size_t s = 0; s < topo.socket_count(); ++s) {
        const bool near = s < data;
        const auto olap = ledger.cpus(Engine::Olap, s).size();
        const auto oltp = ledger.cpus(Engine::Oltp, s).size();
        (near ? p.olap_near : p.olap_far) += olap;
        (near ? p.oltp_near : p.oltp_far) += oltp;
        (near ? p.data_sockets : p.other_sockets) += 1;
        if (near)
            p.baseline_oltp += topo.sockets[s].size();
        if (olap > 0)
            ++p.olap_sockets;
    }
    return p;
}

RegionRates region_rates(const Placement &p, const CostParams &params)
{
    const double c = params.per_core_scan_bytes_per_sec;
    const double ic = params.ic_bw_bytes_per_sec;
    const double r = params.remote_core_rate_fraction;
    const double bw_a = params.mem_bw_bytes_per_sec * static_cast<double>(p.other_sockets);
    const double bw_b =
        params.mem_bw_bytes_per_sec * static_cast<double>(p.data_sockets) * (1.0 - params.oltp_mem_bw_share);
    const double far = static_cast<double>(p.olap_far);
    const double near = static_cast<double>(p.olap_near);

    RegionRates out;
    out.local = std::min(bw_a, std::min(bw_a, far * c) + std::min(ic, near * c * r));
    const double b_local = std::min(bw_b, near * c);
    const double b_ic = std::min(ic, far * c * r);
    out.remote = std::min(bw_b, b_local + b_ic);
    out.remote_over_ic = b_local + b_ic > 0 ? out.remote * b_ic / (b_local + b_ic) : 0.0;
    return out;
}

double estimate_query_time(const ScanVolume &v, const ResourceLedger &ledger, const CostParams &params,
                           bool overlapped)
{
    const auto p = placement(ledger);
    const double k = static_cast<double>(p.olap_far + p.olap_near);
    if (k == 0)
        throw Error("OLAP holds no CPUs");
    const auto rates = region_rates(p, params);
    const double t_local = v.local_bytes > 0 ? v.local_bytes / rates.local : 0.0;
    const double t_remote = v.remote_bytes > 0 ? v.remote_bytes / rates.remote : 0.0;
    double t = overlapped ? std::max(t_local, t_remote) : t_local + t_remote;
    const double sockets = static_cast<double>(p.olap_sockets);
    t += v.probe_tuples / (k * params.join_probe_tuples_per_sec);
    t += v.build_tuples * sockets / (k * params.join_probe_tuples_per_sec);
    t += v.groups * sockets * params.group_seconds_per_group;
    return t;
}

double estimate_query_time(const QueryPlan &plan, const AccessPathPlan &paths, const FreshnessStats &stats,
                           const ResourceLedger &ledger, const CostParams &params)
{
    return estimate_query_time(scan_volume(plan, paths, stats), ledger, params);
}

double estimate_etl_time(double bytes, const CostParams &params) { return bytes / params.ic_bw_bytes_per_sec; }

double estimate_sync_time(double tuples, const CostParams &params) { return tuples * params.sync_seconds_per_tuple; }

double estimate_oltp_tps(StateTag state, const ResourceLedger &ledger, bool olap_active, const CostParams &params,
                         double olap_remote_fraction)
{
    const auto p = placement(ledger);
    const double oltp = static_cast<double>(p.oltp_far + p.oltp_near);
    if (oltp == 0)
        return 0.0;
    const double baseline = static_cast<double>(p.baseline_oltp);
    const double cores = std::min(1.0, oltp / baseline);
    const double remote_mix = std::min(1.0, 2.0 * static_cast<double>(p.oltp_far) / oltp);
    double pressure = 0.0;
    if (olap_active) {
        const double olap = static_cast<double>(p.olap_far + p.olap_near);
        const double colocated = static_cast<double>(p.olap_near) / (baseline / 2.0);
        const double frac = state == StateTag::S2 ? 0.0 : std::clamp(olap_remote_fraction, 0.0, 1.0);
        const double ic_part = olap > 0 ? frac * static_cast<double>(p.olap_far) / olap *
                                              (params.ic_bw_bytes_per_sec / params.mem_bw_bytes_per_sec)
                                        : 0.0;
        pressure = std::min(1.0, colocated + ic_part);
    }
    return params.oltp_base_tps * cores * (1.0 - params.oltp_remote_penalty * remote_mix) *
           (1.0 - params.oltp_olap_interference_penalty * pressure);
}

// ---------------------------------------------------------------- database model

std::uint64_t SimScale::initial_orderlines() const
{
    return static_cast<std::uint64_t>(std::floor(scale_factor * 6'001'215.0 / 15.0)) * 15;
}

SimDatabase::SimDatabase(const SimScale &scale) : scale_(scale)
{
    if (!(scale.scale_factor > 0) || scale.warehouses == 0 || scale.items == 0 || !(scale.lines_per_order > 0))
        throw Error("invalid simulation scale");
    auto add = [&](std::string name, Schema schema, std::uint64_t rows) {
        Table t{std::move(name), std::move(schema), rows, rows, 0, {}};
        t.touched.assign(t.schema.size(), false);
        tables_.push_back(std::move(t));
    };
    add("warehouse", ch::warehouse_schema(), scale.warehouses);
    add("item", ch::item_schema(), scale.items);
    add("stock", ch::stock_schema(), scale.warehouses * scale.items);
    add("orders", ch::orders_schema(), scale.initial_orders());
    add("orderline", ch::orderline_schema(), scale.initial_orderlines());
}

SimDatabase::Table &SimDatabase::table(const std::string &name)
{
    for (auto &t : tables_)
        if (t.name == name)
            return t;
    throw Error("unknown table " + name);
}

const SimDatabase::Table &SimDatabase::table(const std::string &name) const
{
    return const_cast<SimDatabase *>(this)->table(name);
}

std::uint64_t SimDatabase::rows(const std::string &name) const { return table(name).rows; }

void SimDatabase::new_orders(std::uint64_t txns)
{
    if (txns == 0)
        return;
    const double exact = static_cast<double>(txns) * scale_.lines_per_order + line_carry_;
    const auto lines = static_cast<std::uint64_t>(std::floor(exact));
    line_carry_ = exact - static_cast<double>(lines);

    table("orders").rows += txns;
    table("orderline").rows += lines;
    auto touch = [](Table &t, std::initializer_list<const char *> cols) {
        for (const char *c : cols)
            for (std::size_t i = 0; i < t.schema.size(); ++i)
                if (t.schema[i].name == c)
                    t.touched[i] = true;
    };
    auto &stock = table("stock");
    stock.updates += static_cast<double>(lines);
    touch(stock, {"s_quantity", "s_ytd", "s_order_cnt"});
    auto &wh = table("warehouse");
    wh.updates += static_cast<double>(txns);
    touch(wh, {"w_next_o_id"});
    switch_updates_ += lines + txns;
}

std::uint64_t SimDatabase::take_switch_updates() { return std::exchange(switch_updates_, 0); }

std::uint64_t SimDatabase::stale_rows(const Table &t) const
{
    // expected distinct rows hit by uniform updates
    if (t.updates <= 0 || t.watermark == 0)
        return 0;
    const double n = static_cast<double>(t.watermark);
    if (t.watermark == 1)
        return 1;
    const double distinct = -n * std::expm1(t.updates * std::log1p(-1.0 / n));
    return std::min(t.watermark, static_cast<std::uint64_t>(std::llround(distinct)));
}

FreshnessStats SimDatabase::stats(Epoch epoch) const
{
    FreshnessStats st;
    st.epoch = epoch;
    for (const auto &t : tables_) {
        TableFreshness tf;
        tf.name = t.name;
        tf.oltp_rows = t.rows;
        tf.olap_watermark = t.watermark;
        tf.stale_rows = stale_rows(t);
        for (std::size_t c = 0; c < t.schema.size(); ++c) {
            ColumnFreshness cf{t.schema[c].name, t.schema[c].width(), t.rows - t.watermark,
                               t.touched[c] ? tf.stale_rows : 0};
            st.n_ft += cf.fresh_bytes();
            tf.columns.push_back(std::move(cf));
        }
        st.tables.push_back(std::move(tf));
    }
    return st;
}

std::uint64_t SimDatabase::etl()
{
    const auto bytes = stats(0).n_ft;
    for (auto &t : tables_) {
        t.watermark = t.rows;
        t.updates = 0;
        t.touched.assign(t.touched.size(), false);
    }
    return bytes;
}

// ---------------------------------------------------------------- sequences

std::string Policy::name() const
{
    if (!adaptive)
        return std::string(to_string(fixed));
    if (!sched.f_el)
        return "Adaptive-IS";
    return sched.m_el == ElasticityMode::Hybrid ? "Adaptive-NI" : "Adaptive-S1";
}

Policy Policy::fixed_state(StateTag s) { return Policy{false, s, {}}; }
Policy Policy::adaptive_is(double alpha) { return Policy{true, StateTag::S2, {alpha, false, ElasticityMode::Hybrid}}; }
Policy Policy::adaptive_ni(double alpha) { return Policy{true, StateTag::S2, {alpha, true, ElasticityMode::Hybrid}}; }
Policy Policy::adaptive_s1(double alpha)
{
    return Policy{true, StateTag::S2, {alpha, true, ElasticityMode::Colocation}};
}

std::vector<SimStep> mix_workload(const std::vector<QueryPlan> &plans, std::size_t iterations, std::uint64_t txns)
{
    std::vector<SimStep> out;
    for (std::size_t i = 0; i < iterations; ++i)
        for (const auto &p : plans)
            out.push_back({p, txns});
    return out;
}

SimTrace run_sequence(const std::vector<SimStep> &workload, const Policy &policy, const SimConfig &cfg)
{
    if (workload.empty())
        throw Error("empty workload");
    cfg.params.validate();
    if (policy.adaptive)
        policy.sched.validate();
    ResourceLedger ledger(cfg.topology, cfg.thresholds);
    SimDatabase db(cfg.scale);
    SimTrace trace;
    trace.policy = policy.name();
    Epoch epoch = 0;
    double cum = 0;
    for (std::size_t i = 0; i < workload.size(); ++i) {
        const auto &step = workload[i];
        db.new_orders(step.txns);
        ++epoch;
        const double sync_s = estimate_sync_time(static_cast<double>(db.take_switch_updates()), cfg.params);
        auto stats = db.stats(epoch);

        SimEvent ev;
        ev.step = i;
        ev.query = step.plan.name;
        ev.n_fq = fresh_bytes_for_query(step.plan, stats);
        ev.n_ft = stats.n_ft;
        ev.state = policy.adaptive ? resource_schedule({ev.n_fq, ev.n_ft, false}, policy.sched) : policy.fixed;

        ledger.apply(assign_for(ev.state, cfg.topology, cfg.thresholds));
        const SystemState state{ev.state, epoch, ledger.cpus(Engine::Olap), ledger.oltp_sockets()};
        if (ev.state == StateTag::S2) {
            ev.etl_s = estimate_etl_time(static_cast<double>(db.etl()), cfg.params);
            ++trace.etl_count;
            trace.max_etl_s = std::max(trace.max_etl_s, ev.etl_s);
            stats = db.stats(epoch);
        }
        const auto paths = choose_access_paths(step.plan, stats, state);
        const auto vol = scan_volume(step.plan, paths, stats);
        ev.exec_s = estimate_query_time(vol, ledger, cfg.params) + sync_s;
        const double scanned = vol.local_bytes + vol.remote_bytes;
        ev.oltp_tps =
            estimate_oltp_tps(ev.state, ledger, true, cfg.params, scanned > 0 ? vol.remote_bytes / scanned : 0.0);
        cum += ev.etl_s + ev.exec_s;
        ev.cum_olap_s = cum;
        trace.events.push_back(ev);
    }
    return trace;
}

} // namespace htap::sim

namespace htap::sim {

std::uint64_t SimConfig::txns_per_step() const
{
    return static_cast<std::uint64_t>(std::llround(params.oltp_base_tps * step_seconds));
}

namespace {

SystemState state_of(StateTag tag, const ResourceLedger &ledger, Epoch epoch)
{
    return {tag, epoch, ledger.cpus(Engine::Olap), ledger.oltp_sockets()};
}

/// Initial database with the last `fraction` of each fact table left unsynced.
FreshnessStats tail_stats(const SimScale &scale, const std::string &fact, double fraction)
{
    auto st = SimDatabase(scale).stats(1);
    st.n_ft = 0;
    for (auto &t : st.tables) {
        if (t.name == fact) {
            t.olap_watermark = static_cast<std::size_t>(std::llround((1.0 - fraction) * static_cast<double>(t.oltp_rows)));
            for (auto &c : t.columns)
                c.insert_tail_rows = t.oltp_rows - t.olap_watermark;
        }
        for (const auto &c : t.columns)
            st.n_ft += c.fresh_bytes();
    }
    return st;
}

std::string fact_table(const QueryPlan &plan) { return plan.join ? plan.join->fact_table : plan.scans.at(0).table; }

} // namespace

std::vector<BatchRow> s2_batch_sweep(const SimConfig &cfg, const std::vector<std::size_t> &batches,
                                     std::size_t queries, double etl_bytes, double scan_bytes)
{
    cfg.params.validate();
    ResourceLedger ledger(cfg.topology, cfg.thresholds);
    ScanVolume v;
    v.local_bytes = scan_bytes;
    const double exec = estimate_query_time(v, ledger, cfg.params);
    const double etl = estimate_etl_time(etl_bytes, cfg.params);
    std::vector<BatchRow> out;
    for (auto b : batches) {
        if (b == 0)
            throw Error("batch size must be positive");
        BatchRow r;
        r.batch = b;
        r.etl_s = static_cast<double>((queries + b - 1) / b) * etl;
        r.exec_s = static_cast<double>(queries) * exec;
        r.total_s = r.etl_s + r.exec_s;
        r.etl_share = r.etl_s / r.total_s;
        out.push_back(r);
    }
    return out;
}

std::vector<FreshRow> fresh_fraction_sweep(const SimConfig &cfg, const QueryPlan &plan, std::size_t points)
{
    cfg.params.validate();
    if (points < 2)
        throw Error("need at least two sweep points");
    const auto fact = fact_table(plan);
    ResourceLedger ledger(cfg.topology, cfg.thresholds);
    ledger.apply(assign_s2(cfg.topology, cfg.thresholds));

    SimDatabase grown(cfg.scale);
    grown.new_orders(cfg.txns_per_step());
    const double step_etl = estimate_etl_time(static_cast<double>(grown.stats(1).n_ft), cfg.params);
    const auto synced = tail_stats(cfg.scale, fact, 0.0);
    const double s2 =
        step_etl + estimate_query_time(plan, choose_access_paths(plan, synced, state_of(StateTag::S2, ledger, 1)),
                                       synced, ledger, cfg.params);

    std::vector<FreshRow> out;
    for (std::size_t i = 0; i < points; ++i) {
        FreshRow r;
        r.fraction = static_cast<double>(i) / static_cast<double>(points - 1);
        const auto st = tail_stats(cfg.scale, fact, r.fraction);
        r.split_s = estimate_query_time(plan, choose_access_paths(plan, st, state_of(StateTag::S3_IS, ledger, 1)), st,
                                        ledger, cfg.params);
        r.s2_s = s2;
        r.remote_s = estimate_query_time(plan, choose_access_paths(plan, st, state_of(StateTag::S1, ledger, 1)), st,
                                         ledger, cfg.params);
        out.push_back(r);
    }
    return out;
}

std::optional<double> crossover(const std::vector<FreshRow> &rows)
{
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double d0 = rows[i - 1].split_s - rows[i - 1].s2_s;
        const double d1 = rows[i].split_s - rows[i].s2_s;
        if (d0 < 0 && d1 >= 0)
            return rows[i - 1].fraction + (rows[i].fraction - rows[i - 1].fraction) * (-d0 / (d1 - d0));
    }
    return std::nullopt;
}

std::vector<TradeRow> s1_trade_sweep(const SimConfig &cfg, const QueryPlan &plan, const std::vector<std::size_t> &traded)
{
    cfg.params.validate();
    const auto st = SimDatabase(cfg.scale).stats(1);
    const std::size_t n = cfg.topology.sockets.at(0).size();
    std::vector<TradeRow> out;
    for (auto t : traded) {
        if (t % 2 != 0 || t / 2 > n || cfg.topology.socket_count() < 2 || t / 2 > cfg.topology.sockets[1].size())
            throw Error("traded CPUs must be even and fit the sockets");
        Thresholds th{1, std::vector<std::size_t>(cfg.topology.socket_count(), 0)};
        th.oltp_cpu_thres[0] = n - t / 2;
        th.oltp_cpu_thres[1] = t / 2;
        ResourceLedger ledger(cfg.topology, th);
        ledger.apply(assign_s1(cfg.topology, th));
        TradeRow r;
        r.traded = t;
        r.thresholds = th.oltp_cpu_thres;
        r.tps_no_olap = estimate_oltp_tps(StateTag::S1, ledger, false, cfg.params);
        r.tps_with_olap = estimate_oltp_tps(StateTag::S1, ledger, true, cfg.params);
        r.query_s = estimate_query_time(plan, choose_access_paths(plan, st, state_of(StateTag::S1, ledger, 1)), st,
                                        ledger, cfg.params);
        out.push_back(r);
    }
    return out;
}

std::vector<ElasticRow> s3_elastic_sweep(const SimConfig &cfg, const QueryPlan &plan,
                                         const std::vector<std::size_t> &granted, double fresh_fraction)
{
    cfg.params.validate();
    const auto st = tail_stats(cfg.scale, fact_table(plan), fresh_fraction);
    const std::size_t n = cfg.topology.sockets.at(0).size();
    std::vector<ElasticRow> out;
    for (auto g : granted) {
        if (g >= n)
            throw Error("OLTP must keep at least one CPU");
        Thresholds th = cfg.thresholds;
        th.oltp_cpu_thres[0] = n - g;
        ResourceLedger ledger(cfg.topology, th);
        ledger.apply(assign_s3(cfg.topology, th, S3Mode::NonIsolated));
        const auto paths = choose_access_paths(plan, st, state_of(StateTag::S3_NI, ledger, 1));
        const auto v = scan_volume(plan, paths, st);
        ElasticRow r;
        r.granted = g;
        r.query_s = estimate_query_time(v, ledger, cfg.params);
        const double scanned = v.local_bytes + v.remote_bytes;
        r.tps = estimate_oltp_tps(StateTag::S3_NI, ledger, true, cfg.params, scanned > 0 ? v.remote_bytes / scanned : 0);
        out.push_back(r);
    }
    return out;
}

} // namespace htap::sim
