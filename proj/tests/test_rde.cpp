#include <gtest/gtest.h>

#include <random>

#include "htap/ch_schema.hpp"
#include "htap/rde.hpp"
#include "htap/txn.hpp"
#include "htap/verify/oracle.hpp"

using namespace htap;

namespace {

Thresholds thres(std::size_t socks, std::vector<std::size_t> cpus)
{
    Thresholds t;
    t.oltp_sock_thres = socks;
    t.oltp_cpu_thres = std::move(cpus);
    return t;
}

std::size_t count(const Assignment &a, const Topology &topo, std::size_t socket, Engine e)
{
    std::size_t n = 0;
    for (auto c : topo.sockets[socket])
        n += a.at(c) == e;
    return n;
}

struct Simple {
    Database db;
    std::unique_ptr<Rde> rde;

    Simple()
    {
        db.create_table("t", {int64_column("id"), int64_column("a"), int64_column("b")});
        rde = std::make_unique<Rde>(db, ResourceLedger(Topology::uniform(2, 4), thres(1, {2, 0})));
    }
    void insert(std::int64_t from, std::int64_t to)
    {
        for (auto k = from; k < to; ++k)
            db.table(0).insert_committed(Row{k, k, k});
    }
};

} // namespace

TEST(Ledger, S1HalfAndHalf)
{
    const auto topo = Topology::uniform(2, 4);
    const auto a = assign_s1(topo, thres(1, {2, 2}));
    for (std::size_t s = 0; s < 2; ++s) {
        EXPECT_EQ(count(a, topo, s, Engine::Oltp), 2u);
        EXPECT_EQ(count(a, topo, s, Engine::Olap), 2u);
    }
    EXPECT_EQ(a.at(0), Engine::Oltp);
    EXPECT_EQ(a.at(1), Engine::Oltp);
    EXPECT_EQ(a.at(2), Engine::Olap);
}

TEST(Ledger, S1FullSocketsRejected)
{
    EXPECT_THROW(assign_s1(Topology::uniform(2, 4), thres(1, {4, 4})), Error);
    EXPECT_THROW(assign_s1(Topology::uniform(2, 4), thres(1, {5, 0})), Error);
}

TEST(Ledger, S1DegeneratesToIsolation)
{
    const auto topo = Topology::uniform(2, 4);
    EXPECT_EQ(assign_s1(topo, thres(1, {4, 0})), assign_s2(topo, thres(1, {4, 0})));
}

TEST(Ledger, S2SocketSplit)
{
    auto topo = Topology::uniform(2, 4);
    auto a = assign_s2(topo, thres(1, {0, 0}));
    EXPECT_EQ(count(a, topo, 0, Engine::Oltp), 4u);
    EXPECT_EQ(count(a, topo, 1, Engine::Olap), 4u);
    topo = Topology::uniform(4, 2);
    a = assign_s2(topo, thres(2, {0, 0, 0, 0}));
    EXPECT_EQ(count(a, topo, 1, Engine::Oltp), 2u);
    EXPECT_EQ(count(a, topo, 2, Engine::Olap), 2u);
    EXPECT_THROW(assign_s2(Topology::uniform(1, 4), thres(1, {0})), Error);
    EXPECT_THROW(assign_s2(topo, thres(4, {0, 0, 0, 0})), Error);
}

TEST(Ledger, S3Modes)
{
    const auto topo = Topology::uniform(2, 14);
    const auto th = thres(1, {10, 0});
    EXPECT_EQ(assign_s3(topo, th, S3Mode::Isolated), assign_s2(topo, th));
    const auto ni = assign_s3(topo, th, S3Mode::NonIsolated);
    EXPECT_EQ(count(ni, topo, 0, Engine::Olap), 4u);
    EXPECT_EQ(count(ni, topo, 0, Engine::Oltp), 10u);
    EXPECT_EQ(ni.at(13), Engine::Olap);
    EXPECT_EQ(ni.at(9), Engine::Oltp);
    EXPECT_EQ(assign_s3(topo, thres(1, {14, 0}), S3Mode::NonIsolated), assign_s2(topo, th));
}

TEST(Ledger, ApplyNeedsFullCover)
{
    ResourceLedger l(Topology::uniform(2, 2), thres(1, {1, 0}));
    EXPECT_THROW(l.apply({{0, Engine::Oltp}}), Error);
    EXPECT_EQ(l.cpus(Engine::Olap), (std::vector<CpuId>{2, 3}));
    EXPECT_EQ(l.oltp_sockets(), (std::vector<std::size_t>{0}));
}

TEST(Ledger, RandomMigrationsKeepInvariants)
{
    std::mt19937_64 rng(11);
    for (int seq = 0; seq < 200; ++seq) {
        const int sockets = 2 + static_cast<int>(rng() % 3);
        const int per = 1 + static_cast<int>(rng() % 6);
        const auto topo = Topology::uniform(sockets, per);
        Thresholds th;
        th.oltp_sock_thres = 1 + rng() % (sockets - 1);
        for (int s = 0; s < sockets; ++s)
            th.oltp_cpu_thres.push_back(rng() % (per + 1));
        ResourceLedger ledger(topo, th);
        for (int step = 0; step < 5; ++step) {
            const auto tag = static_cast<StateTag>(rng() % 4);
            Assignment a;
            try {
                a = assign_for(tag, topo, th);
            } catch (const Error &) {
                continue; // rejected; ledger unchanged
            }
            EXPECT_EQ(a, assign_for(tag, topo, th));
            ledger.apply(a);
            EXPECT_EQ(ledger.cpus(Engine::Oltp).size() + ledger.cpus(Engine::Olap).size(), topo.cpu_count());
            EXPECT_FALSE(ledger.cpus(Engine::Olap).empty());
            if (tag == StateTag::S1)
                for (int s = 0; s < sockets; ++s)
                    EXPECT_GE(ledger.cpus(Engine::Oltp, s).size(), th.oltp_cpu_thres[s]);
            else if (tag == StateTag::S3_NI)
                for (std::size_t s = 0; s < th.oltp_sock_thres; ++s)
                    EXPECT_GE(ledger.cpus(Engine::Oltp, s).size(), th.oltp_cpu_thres[s]);
            else
                for (std::size_t s = 0; s < th.oltp_sock_thres; ++s)
                    EXPECT_EQ(ledger.cpus(Engine::Oltp, s).size(), topo.sockets[s].size());
        }
    }
}

TEST(SwitchAndSync, NoUpdatesShortCircuits)
{
    Simple s;
    s.insert(0, 5);
    s.rde->switch_and_sync();
    EXPECT_TRUE(s.rde->last_sync().short_circuited);
    s.db.table(0).update_committed(1, {{1, Value{std::int64_t{50}}}});
    s.rde->switch_and_sync();
    EXPECT_FALSE(s.rde->last_sync().short_circuited);
    EXPECT_TRUE(oracle::instance_diff(s.db.table(0), 5).empty());
}

TEST(Etl, TailBytesAndIdempotence)
{
    Database db;
    db.create_table("t", {int64_column("id"), int64_column("v")});
    Rde rde(db, ResourceLedger(Topology::uniform(2, 2), thres(1, {1, 0})));
    rde.switch_and_sync();
    EXPECT_EQ(rde.etl().bytes_copied, 0u);
    for (std::int64_t k = 0; k < 100; ++k)
        db.table(0).insert_committed(Row{k, k});
    rde.switch_and_sync();
    const auto rep = rde.etl();
    EXPECT_EQ(rep.bytes_copied, 1600u);
    EXPECT_EQ(rde.olap().table(0).watermark(), 100u);
    rde.migrate_s2();
    EXPECT_EQ(rde.etl_bytes(), 1600u);
    EXPECT_EQ(rde.olap().epoch_synced(), rde.snapshot().epoch);
}

TEST(Etl, MixedMatchesBruteForce)
{
    Simple s;
    s.insert(0, 200);
    s.rde->switch_and_sync();
    s.rde->etl();
    s.insert(200, 250);
    for (RowId r = 0; r < 10; ++r)
        s.db.table(0).update_committed(r * 7, {{1, Value{std::int64_t{1000 + static_cast<std::int64_t>(r)}}}});
    s.rde->switch_and_sync();
    const auto want = oracle::etl_bytes(s.rde->snapshot(), s.rde->olap());
    const auto stats = s.rde->freshness_stats();
    EXPECT_EQ(stats.n_ft, want);
    EXPECT_EQ(want, 50u * 24 + 10u * 8);
    EXPECT_EQ(s.rde->etl().bytes_copied, want);
    EXPECT_EQ(s.rde->freshness_stats().freshness_rate(), 1.0);
    EXPECT_EQ(oracle::freshness_rate(s.rde->snapshot(), s.rde->olap()), 1.0);
}

TEST(Etl, StaleSnapshotRejected)
{
    Simple s;
    s.insert(0, 5);
    s.rde->switch_and_sync();
    const Snapshot old = s.rde->snapshot();
    s.rde->switch_and_sync();
    EXPECT_THROW(etl_delta(s.db, old, s.rde->olap()), Error);
}

TEST(Freshness, Definitions)
{
    Simple s;
    s.insert(0, 10);
    s.rde->switch_and_sync();
    s.rde->etl();
    auto st = s.rde->freshness_stats();
    EXPECT_EQ(st.n_ft, 0u);
    EXPECT_EQ(st.freshness_rate(), 1.0);
    for (RowId r = 0; r < 5; ++r)
        s.db.table(0).update_committed(r, {{2, Value{std::int64_t{99}}}});
    s.rde->switch_and_sync();
    st = s.rde->freshness_stats();
    EXPECT_DOUBLE_EQ(st.freshness_rate(), 0.5);
    EXPECT_EQ(st.n_ft, 40u);
    EXPECT_DOUBLE_EQ(oracle::freshness_rate(s.rde->snapshot(), s.rde->olap()), 0.5);
}

TEST(Freshness, RandomHistoriesMatchOracles)
{
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
        ch::LoadConfig cfg;
        cfg.warehouses = 2;
        cfg.items = 30;
        cfg.seed = seed;
        Database db;
        ch::create_schema(db, cfg);
        ch::populate(db, cfg);
        TransactionManager tm(db);
        Rde rde(db, ResourceLedger(Topology::uniform(2, 4), thres(1, {2, 0})));
        rde.switch_and_sync();
        rde.etl();
        for (int round = 0; round < 3; ++round) {
            oracle::random_history(tm, seed * 10 + round, {}, cfg.warehouses, cfg.items);
            rde.switch_and_sync();
            for (std::size_t t = 0; t < db.table_count(); ++t)
                ASSERT_TRUE(oracle::instance_diff(db.table(t), rde.snapshot().tables[t].rows()).empty());
            if (round == 1)
                continue; // let fresh data accumulate across two switches
            const auto st = rde.freshness_stats();
            ASSERT_EQ(st.n_ft, oracle::etl_bytes(rde.snapshot(), rde.olap()));
            ASSERT_DOUBLE_EQ(st.freshness_rate(), oracle::freshness_rate(rde.snapshot(), rde.olap()));
            ASSERT_EQ(rde.etl().bytes_copied, st.n_ft);
            ASSERT_EQ(rde.freshness_stats().freshness_rate(), 1.0);
            ASSERT_EQ(oracle::freshness_rate(rde.snapshot(), rde.olap()), 1.0);
        }
    }
}

TEST(Freshness, SkippedBitClearIsDetected)
{
    Simple s;
    s.insert(0, 20);
    s.rde->switch_and_sync();
    s.rde->etl();
    s.db.table(0).update_committed(3, {{1, Value{std::int64_t{77}}}});
    s.rde->switch_and_sync();
    s.rde->set_etl_options({.skip_bit_clear = true});
    s.rde->etl();
    EXPECT_LT(s.rde->freshness_stats().freshness_rate(), 1.0);
    EXPECT_EQ(oracle::freshness_rate(s.rde->snapshot(), s.rde->olap()), 1.0);
}

TEST(Migrations, StatesAndSources)
{
    Simple s;
    s.insert(0, 30);
    s.rde->switch_and_sync();
    s.rde->etl();
    std::vector<CpuId> oltp_seen;
    s.rde->on_oltp_cpus([&](std::span<const CpuId> c) { oltp_seen.assign(c.begin(), c.end()); });

    auto st = s.rde->migrate_s1();
    EXPECT_EQ(st.tag, StateTag::S1);
    EXPECT_EQ(s.rde->olap_source(), OlapSource::FrozenOltp);
    EXPECT_EQ(oltp_seen, (std::vector<CpuId>{0, 1}));
    EXPECT_EQ(st.olap_cpus, (std::vector<CpuId>{2, 3, 4, 5, 6, 7}));

    s.insert(30, 40);
    const auto wm = s.rde->olap().table(0).watermark();
    const auto bytes = s.rde->olap().bytes();
    for (int i = 0; i < 3; ++i) {
        st = s.rde->migrate_s3(S3Mode::Isolated);
        EXPECT_EQ(st.tag, StateTag::S3_IS);
        EXPECT_EQ(s.rde->olap().table(0).watermark(), wm);
        EXPECT_EQ(s.rde->olap().bytes(), bytes);
    }
    EXPECT_EQ(st.olap_cpus, (std::vector<CpuId>{4, 5, 6, 7}));

    st = s.rde->migrate_s3(S3Mode::NonIsolated);
    EXPECT_EQ(st.olap_cpus, (std::vector<CpuId>{2, 3, 4, 5, 6, 7}));
    EXPECT_EQ(oltp_seen, (std::vector<CpuId>{0, 1}));

    const auto before = s.rde->snapshot().epoch;
    st = s.rde->migrate_s2(false);
    EXPECT_EQ(st.epoch, before);
    EXPECT_EQ(s.rde->olap_source(), OlapSource::LocalInstance);
    EXPECT_EQ(s.rde->olap().table(0).watermark(), 40u);
    EXPECT_EQ(oltp_seen, (std::vector<CpuId>{0, 1, 2, 3}));
}

TEST(Migrations, RejectedMigrationLeavesLedger)
{
    Database db;
    db.create_table("t", {int64_column("id")});
    Rde rde(db, ResourceLedger(Topology::uniform(2, 2), thres(1, {2, 2})));
    const auto before = rde.ledger().assignment();
    EXPECT_THROW(rde.migrate_s1(), Error);
    EXPECT_EQ(rde.ledger().assignment(), before);
    EXPECT_FALSE(rde.has_snapshot());
}
