#include <gtest/gtest.h>

#include <random>

#include "htap/simcost.hpp"

using namespace htap;
using namespace htap::sim;

namespace {

CostParams unit_params()
{
    CostParams p;
    p.mem_bw_bytes_per_sec = 1e9;
    p.ic_bw_bytes_per_sec = 0.5e9;
    p.per_core_scan_bytes_per_sec = 1e12;
    return p;
}

ResourceLedger ledger_for(StateTag tag, std::vector<std::size_t> thres = {10, 0}, int per_socket = 14)
{
    const auto topo = Topology::uniform(2, per_socket);
    Thresholds th{1, thres};
    ResourceLedger l(topo, th);
    l.apply(assign_for(tag, topo, th));
    return l;
}

const std::vector<QueryPlan> kMix{queries::q1(), queries::q6(), queries::q19()};

} // namespace

TEST(Estimate, BandwidthExamples)
{
    const auto p = unit_params();
    const auto l = ledger_for(StateTag::S3_IS);
    EXPECT_DOUBLE_EQ(estimate_query_time(ScanVolume{1e9, 0}, l, p), 1.0);
    EXPECT_DOUBLE_EQ(estimate_query_time(ScanVolume{0, 1e9}, l, p), 2.0);
    EXPECT_DOUBLE_EQ(estimate_query_time(ScanVolume{0.8e9, 0.2e9}, l, p), 0.8);
    EXPECT_DOUBLE_EQ(estimate_query_time(ScanVolume{0.8e9, 0.2e9}, l, p, false), 1.2);
}

TEST(Estimate, EtlExamples)
{
    const auto p = unit_params();
    EXPECT_EQ(estimate_etl_time(0, p), 0.0);
    EXPECT_DOUBLE_EQ(estimate_etl_time(5e8, p), 1.0);
    EXPECT_DOUBLE_EQ(estimate_etl_time(3e8, p) + estimate_etl_time(2e8, p), estimate_etl_time(5e8, p));

    const CostParams d;
    const double etl = estimate_etl_time(500e6, d);
    const double scan = estimate_query_time(ScanVolume{160e6, 0}, ledger_for(StateTag::S2), d);
    EXPECT_GT(etl / scan, 0.1);
    EXPECT_LT(etl / scan, 10.0);
}

TEST(Estimate, InvalidParams)
{
    CostParams p;
    p.ic_bw_bytes_per_sec = 2 * p.mem_bw_bytes_per_sec;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.oltp_remote_penalty = 1.0;
    EXPECT_THROW(p.validate(), Error);
    p = {};
    p.per_core_scan_bytes_per_sec = 0;
    EXPECT_THROW(p.validate(), Error);
}

TEST(Estimate, MonotoneInBandwidthAndCores)
{
    const ScanVolume v{3e9, 2e9, 1e7, 1e5, 15};
    for (auto tag : {StateTag::S1, StateTag::S2, StateTag::S3_IS, StateTag::S3_NI}) {
        const auto l = ledger_for(tag);
        double prev = INFINITY;
        for (double m = 16e9; m <= 128e9; m *= 2) {
            CostParams p;
            p.mem_bw_bytes_per_sec = m;
            p.ic_bw_bytes_per_sec = 16e9;
            const double t = estimate_query_time(v, l, p);
            EXPECT_LE(t, prev);
            prev = t;
        }
        prev = INFINITY;
        for (double ic = 4e9; ic <= 64e9; ic *= 2) {
            CostParams p;
            p.ic_bw_bytes_per_sec = ic;
            const double t = estimate_query_time(v, l, p);
            EXPECT_LE(t, prev);
            prev = t;
        }
    }
    // more elastic CPUs for OLAP, never slower
    const CostParams p;
    double prev = INFINITY;
    for (std::size_t g = 0; g < 14; ++g) {
        const double t = estimate_query_time(v, ledger_for(StateTag::S3_NI, {14 - g, 0}), p);
        EXPECT_LE(t, prev);
        prev = t;
    }
}

TEST(OltpModel, Endpoints)
{
    const CostParams p;
    EXPECT_DOUBLE_EQ(estimate_oltp_tps(StateTag::S2, ledger_for(StateTag::S2), false, p), p.oltp_base_tps);
    EXPECT_DOUBLE_EQ(estimate_oltp_tps(StateTag::S2, ledger_for(StateTag::S2), true, p), p.oltp_base_tps);
    const auto full = ledger_for(StateTag::S1, {7, 7});
    EXPECT_NEAR(estimate_oltp_tps(StateTag::S1, full, false, p) / p.oltp_base_tps, 0.63, 1e-12);
    EXPECT_NEAR(estimate_oltp_tps(StateTag::S1, full, true, p) / p.oltp_base_tps, 0.45, 1e-12);
}

TEST(OltpModel, TradeSweepMonotone)
{
    const SimConfig cfg;
    const auto rows = s1_trade_sweep(cfg, queries::q6(), {0, 2, 4, 6, 8, 10, 12, 14});
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_EQ(rows.back().thresholds, (std::vector<std::size_t>{7, 7}));
    EXPECT_DOUBLE_EQ(rows.front().tps_no_olap, cfg.params.oltp_base_tps);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(rows[i].tps_no_olap, rows[i - 1].tps_no_olap);
        EXPECT_LT(rows[i].tps_with_olap, rows[i - 1].tps_with_olap);
        EXPECT_LE(rows[i].query_s, rows[i - 1].query_s);
    }
}

TEST(SimDatabaseModel, FreshnessBookkeeping)
{
    SimScale s;
    SimDatabase db(s);
    EXPECT_EQ(db.rows("orderline"), s.initial_orderlines());
    EXPECT_EQ(db.rows("orderline"), 15 * db.rows("orders"));
    auto st = db.stats(1);
    EXPECT_EQ(st.n_ft, 0u);
    EXPECT_EQ(st.freshness_rate(), 1.0);

    db.new_orders(1000);
    st = db.stats(2);
    EXPECT_EQ(st.table("orderline").column("ol_amount").insert_tail_rows, 10'000u);
    EXPECT_EQ(st.table("orders").column("o_id").insert_tail_rows, 1'000u);
    const auto stale = st.table("stock").stale_rows;
    EXPECT_GT(stale, 9'900u);
    EXPECT_LE(stale, 10'000u);
    EXPECT_EQ(st.table("stock").column("s_ytd").updated_rows, stale);
    EXPECT_EQ(st.table("stock").column("s_i_id").updated_rows, 0u);
    EXPECT_EQ(st.table("warehouse").stale_rows, s.warehouses);
    EXPECT_EQ(db.take_switch_updates(), 11'000u);
    EXPECT_EQ(db.take_switch_updates(), 0u);

    EXPECT_EQ(db.etl(), st.n_ft);
    EXPECT_EQ(db.stats(3).n_ft, 0u);
    EXPECT_EQ(db.etl(), 0u);
}

TEST(Sequence, ZeroGrowthIsolatedStatesAgree)
{
    SimConfig cfg;
    const auto w = mix_workload(kMix, 5, 0);
    const auto s2 = run_sequence(w, Policy::fixed_state(StateTag::S2), cfg);
    const auto is = run_sequence(w, Policy::fixed_state(StateTag::S3_IS), cfg);
    ASSERT_EQ(s2.events.size(), 15u);
    for (std::size_t i = 0; i < s2.events.size(); ++i) {
        EXPECT_EQ(s2.events[i].etl_s, 0.0);
        EXPECT_DOUBLE_EQ(s2.events[i].exec_s, is.events[i].exec_s);
        EXPECT_EQ(s2.events[i].n_ft, 0u);
    }
}

TEST(Sequence, EtlExactlyWhereSchedulerSaysSo)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        SimConfig cfg;
        std::vector<SimStep> w;
        for (int i = 0; i < 60; ++i)
            w.push_back({kMix[rng() % 3], rng() % 200'000});
        const double alpha = 0.3 + 0.05 * static_cast<double>(rng() % 4);
        for (auto pol : {Policy::adaptive_is(alpha), Policy::adaptive_ni(alpha), Policy::adaptive_s1(alpha)}) {
            const auto t = run_sequence(w, pol, cfg);
            std::size_t etls = 0;
            for (const auto &e : t.events) {
                const bool etl = !below_alpha_share(e.n_fq, e.n_ft, alpha);
                ASSERT_EQ(e.state == StateTag::S2, etl);
                ASSERT_EQ(e.state, resource_schedule({e.n_fq, e.n_ft, false}, pol.sched));
                etls += etl;
            }
            EXPECT_EQ(etls, t.etl_count);
        }
    }
}

TEST(Sequence, StaticCurvesCross)
{
    SimConfig cfg;
    const auto w = mix_workload({queries::q6()}, 200, cfg.txns_per_step());
    const auto s2 = run_sequence(w, Policy::fixed_state(StateTag::S2), cfg);
    const auto is = run_sequence(w, Policy::fixed_state(StateTag::S3_IS), cfg);
    EXPECT_LT(is.events.front().etl_s + is.events.front().exec_s, s2.events.front().etl_s + s2.events.front().exec_s);
    EXPECT_GT(is.events.back().exec_s, s2.events.back().etl_s + s2.events.back().exec_s);
}

TEST(Sequence, Deterministic)
{
    SimConfig cfg;
    const auto w = mix_workload(kMix, 10, cfg.txns_per_step());
    const auto a = run_sequence(w, Policy::adaptive_ni(), cfg);
    const auto b = run_sequence(w, Policy::adaptive_ni(), cfg);
    ASSERT_EQ(a.events.size(), b.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        EXPECT_EQ(a.events[i].cum_olap_s, b.events[i].cum_olap_s);
        EXPECT_EQ(a.events[i].n_ft, b.events[i].n_ft);
    }
    EXPECT_THROW(run_sequence({}, Policy::adaptive_is(), cfg), Error);
}

TEST(Sweeps, BatchAmortization)
{
    const auto rows = s2_batch_sweep(SimConfig{}, {1, 2, 4, 8, 16});
    ASSERT_EQ(rows.size(), 5u);
    for (std::size_t i = 1; i < rows.size(); ++i)
        EXPECT_LT(rows[i].total_s, rows[i - 1].total_s);
    EXPECT_GE(rows.front().etl_share, 0.30);
    EXPECT_LE(rows.back().etl_share, 0.10);
    EXPECT_THROW(s2_batch_sweep(SimConfig{}, {0}), Error);
}

TEST(Sweeps, FreshFractionCrossover)
{
    for (const auto &q : kMix) {
        const auto rows = fresh_fraction_sweep(SimConfig{}, q);
        ASSERT_EQ(rows.size(), 21u);
        EXPECT_EQ(rows.front().fraction, 0.0);
        EXPECT_EQ(rows.back().fraction, 1.0);
        const auto f = crossover(rows);
        ASSERT_TRUE(f.has_value()) << q.name;
        EXPECT_GT(*f, 0.0);
        EXPECT_LT(*f, 1.0);
        EXPECT_LE(rows.back().split_s, rows.back().remote_s);
    }
}

TEST(Sweeps, ElasticGrants)
{
    const auto rows = s3_elastic_sweep(SimConfig{}, queries::q1(), {0, 2, 4, 6, 8, 10, 12});
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LE(rows[i].query_s, rows[i - 1].query_s);
        EXPECT_LT(rows[i].tps, rows[i - 1].tps);
    }
    EXPECT_THROW(s3_elastic_sweep(SimConfig{}, queries::q1(), {14}), Error);
}
