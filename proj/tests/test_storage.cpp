#include <gtest/gtest.h>

#include <atomic>
#include <future>
#include <map>
#include <random>
#include <thread>

#include "htap/database.hpp"
#include "htap/storage.hpp"

using namespace htap;
using namespace std::chrono_literals;

namespace {

Schema three_cols() { return {int64_column("id"), int64_column("qty"), float64_column("price")}; }

std::unique_ptr<TwinStore> filled(std::size_t n)
{
    auto t = create_table("t", three_cols(), n);
    for (std::size_t i = 0; i < n; ++i)
        t->insert_committed(Row{static_cast<std::int64_t>(i), static_cast<std::int64_t>(10 * i), 1.5 * i});
    return t;
}

std::int64_t qty(const TwinStore &t, int inst, RowId r) { return std::get<std::int64_t>(t.get(inst, r, 1)); }

} // namespace

TEST(StorageCreate, EmptyTwinInstances)
{
    auto t = create_table("t", three_cols(), 16);
    EXPECT_EQ(t->schema().size(), 3u);
    EXPECT_EQ(t->physical_rows(), 0u);
    EXPECT_EQ(t->active_instance(), 0);
    EXPECT_EQ(t->epoch(), 0u);
    EXPECT_EQ(t->committed_count(0), 0u);
    EXPECT_EQ(t->committed_count(1), 0u);
}

TEST(StorageCreate, RejectsDuplicateColumn)
{
    EXPECT_THROW(create_table("t", {int64_column("qty"), int64_column("qty")}, 0), Error);
    EXPECT_THROW(create_table("t", {}, 0), Error);
}

TEST(StorageCreate, CapacityHintHoldsInserts)
{
    auto t = filled(10'000);
    EXPECT_EQ(t->physical_rows(), 10'000u);
    EXPECT_EQ(std::get<std::int64_t>(t->read_latest(9'999)->at(1)), 99'990);
}

TEST(StorageInsert, FirstInsertInvisibleInInactive)
{
    auto t = create_table("t", three_cols(), 0);
    EXPECT_EQ(t->insert_committed(Row{std::int64_t{7}, std::int64_t{1}, 2.0}), 0u);
    EXPECT_EQ(t->physical_rows(), 1u);
    EXPECT_EQ(t->committed_count(1), 0u);
    EXPECT_FALSE(t->update_bit(0));
}

TEST(StorageInsert, SwitchPublishesInsert)
{
    auto t = filled(3);
    auto [frozen, stats] = t->switch_instance();
    EXPECT_EQ(frozen.rows(), 3u);
    EXPECT_EQ(t->committed_count(frozen.instance()), 3u);
    EXPECT_EQ(std::get<std::int64_t>(frozen.get(2, 1)), 20);
}

TEST(StorageInsert, DuplicateKeyAndSchemaMismatch)
{
    auto t = filled(2);
    EXPECT_THROW(t->insert_committed(Row{std::int64_t{1}, std::int64_t{0}, 0.0}), Error);
    EXPECT_THROW(t->insert_committed(Row{std::int64_t{9}, 1.0, 0.0}), Error);
    EXPECT_THROW(t->insert_committed(Row{std::int64_t{9}}), Error);
}

TEST(StorageUpdate, UpdateSetsBitAndDelta)
{
    auto t = filled(6);
    t->update_committed(5, {{1, Value{std::int64_t{10}}}}, 1);
    t->update_committed(5, {{1, Value{std::int64_t{12}}}}, 2);
    EXPECT_EQ(qty(*t, t->active_instance(), 5), 12);
    const auto chain = t->delta_chain(5);
    ASSERT_EQ(chain.size(), 2u);
    EXPECT_EQ(chain[0].commit_ts, 2u);
    EXPECT_EQ(std::get<std::int64_t>(chain[0].prior[0].second), 10);
    EXPECT_EQ(std::get<std::int64_t>(chain[1].prior[0].second), 50);
    EXPECT_TRUE(t->update_bit(5));
    EXPECT_FALSE(t->update_bit(4));
    EXPECT_EQ(t->lookup(5)->instances, 1u);
}

TEST(StorageUpdate, BitSetIsIdempotent)
{
    auto t = filled(2);
    t->update_committed(1, {{1, Value{std::int64_t{1}}}});
    t->update_committed(1, {{1, Value{std::int64_t{2}}}});
    EXPECT_TRUE(t->update_bit(1));
    EXPECT_EQ(t->olap_dirty().count_below(2), 0u);
}

TEST(StorageUpdate, Errors)
{
    auto t = filled(2);
    EXPECT_THROW(t->update_committed(2, {{1, Value{std::int64_t{1}}}}), Error);
    EXPECT_THROW(t->update_committed(0, {{3, Value{std::int64_t{1}}}}), Error);
    EXPECT_THROW(t->update_committed(0, {{0, Value{std::int64_t{1}}}}), Error);
    EXPECT_THROW(t->update_committed(0, {{2, Value{std::int64_t{1}}}}), Error);
}

TEST(StorageUpdate, ReadVersionWalksChain)
{
    auto t = filled(1);
    t->update_committed(0, {{1, Value{std::int64_t{5}}}}, 10);
    t->update_committed(0, {{1, Value{std::int64_t{6}}}, {2, Value{9.0}}}, 20);
    EXPECT_EQ(std::get<std::int64_t>(t->read_version(0, 25)[1]), 6);
    EXPECT_EQ(std::get<std::int64_t>(t->read_version(0, 15)[1]), 5);
    EXPECT_EQ(std::get<double>(t->read_version(0, 15)[2]), 0.0);
    EXPECT_EQ(std::get<std::int64_t>(t->read_version(0, 0)[1]), 0);
}

TEST(StorageUpdate, DeltaRetention)
{
    StoreOptions o;
    o.delta_retention = 3;
    TwinStore t("t", three_cols(), o);
    t.insert_committed(Row{std::int64_t{0}, std::int64_t{0}, 0.0});
    for (std::int64_t v = 1; v <= 10; ++v)
        t.update_committed(0, {{1, Value{v}}}, v);
    const auto chain = t.delta_chain(0);
    ASSERT_EQ(chain.size(), 3u);
    EXPECT_EQ(chain.front().commit_ts, 10u);
}

TEST(StorageReadLatest, HandTracedSwitchSync)
{
    auto t = filled(3); // qty 0,10,20
    EXPECT_FALSE(t->read_latest(42).has_value());
    t->update_committed(1, {{1, Value{std::int64_t{21}}}}, 1);
    EXPECT_EQ(std::get<std::int64_t>(t->read_latest(1)->at(1)), 21);

    auto [frozen, stats] = t->switch_instance();
    EXPECT_EQ(frozen.instance(), 0);
    EXPECT_EQ(t->active_instance(), 1);
    EXPECT_TRUE(stats.per_column[1].has_updates);
    EXPECT_FALSE(stats.per_column[2].has_updates);
    EXPECT_EQ(qty(*t, 0, 1), 21);
    EXPECT_EQ(qty(*t, 1, 1), 10); // stale until sync
    EXPECT_EQ(std::get<std::int64_t>(t->read_latest(1)->at(1)), 21);

    const auto rep = t->sync(frozen, stats);
    EXPECT_EQ(rep.rows_copied, 1u);
    EXPECT_EQ(qty(*t, 0, 1), 21);
    EXPECT_EQ(qty(*t, 1, 1), 21);
    EXPECT_FALSE(t->update_bit(1));
    EXPECT_TRUE(t->olap_dirty().test(1));
    EXPECT_EQ(t->lookup(1)->instances, 3u);
    EXPECT_EQ(std::get<std::int64_t>(t->read_latest(1)->at(1)), 21);
}

TEST(StorageSync, SkipsRowsReupdatedAfterSwitch)
{
    auto t = filled(3);
    t->update_committed(1, {{1, Value{std::int64_t{21}}}}, 1);
    auto [frozen, stats] = t->switch_instance();
    t->update_committed(1, {{1, Value{std::int64_t{22}}}}, 2);
    EXPECT_EQ(t->lookup(1)->instances, 2u);
    const auto rep = t->sync(frozen, stats);
    EXPECT_EQ(rep.rows_copied, 0u);
    EXPECT_EQ(rep.rows_skipped, 1u);
    EXPECT_EQ(qty(*t, 1, 1), 22);
    EXPECT_EQ(std::get<std::int64_t>(frozen.get(1, 1)), 21);
    EXPECT_TRUE(t->update_bit(1, 1));
}

TEST(StorageSync, ShortCircuitWithoutUpdates)
{
    auto t = filled(3);
    auto [frozen, stats] = t->switch_instance();
    EXPECT_TRUE(t->sync(frozen, stats).short_circuited);
}

TEST(StorageSync, StaleHandleRejected)
{
    auto t = filled(3);
    auto s1 = t->switch_instance();
    t->sync(s1.first, s1.second);
    auto s2 = t->switch_instance();
    EXPECT_FALSE(s1.first.valid());
    EXPECT_TRUE(s2.first.valid());
    EXPECT_THROW(t->sync(s1.first, s1.second), Error);
}

TEST(StorageSwitch, QuiescedCountsAndEpoch)
{
    auto t = filled(100);
    const auto before = t->epoch();
    auto [frozen, stats] = t->switch_instance();
    EXPECT_EQ(stats.epoch, before + 1);
    for (const auto &c : stats.per_column) {
        EXPECT_EQ(c.record_count_at_switch, 100u);
        EXPECT_FALSE(c.has_updates);
    }
}

TEST(StorageSwitch, RejectsSecondSwitchBeforeSync)
{
    auto t = filled(3);
    t->switch_instance();
    EXPECT_THROW(t->switch_instance(), Error);
}

TEST(StorageSwitch, EpochOfActivatedInstanceIncreases)
{
    auto t = filled(1);
    for (int i = 0; i < 4; ++i) {
        auto [f, s] = t->switch_instance();
        EXPECT_EQ(t->instance_epoch(t->active_instance()), s.epoch);
        t->sync(f, s);
    }
}

TEST(StorageSwitch, BlocksOnInFlightCommit)
{
    auto t = filled(4);
    std::promise<void> pinned;
    std::promise<void> release;
    auto release_f = release.get_future();
    std::thread writer([&] {
        auto pin = t->gate().enter_commit();
        pinned.set_value();
        release_f.wait();
        t->update_committed(pin, 0, {{1, Value{std::int64_t{99}}}}, 1);
    });
    pinned.get_future().wait();
    auto sw = std::async(std::launch::async, [&] { return t->switch_instance(); });
    EXPECT_EQ(sw.wait_for(50ms), std::future_status::timeout);
    // a second switcher is rejected while the first waits
    while (!t->gate().switching())
        std::this_thread::yield();
    EXPECT_THROW(t->switch_instance(), Error);
    release.set_value();
    writer.join();
    auto [frozen, stats] = sw.get();
    EXPECT_EQ(std::get<std::int64_t>(frozen.get(0, 1)), 99);
    EXPECT_TRUE(stats.per_column[1].has_updates);
}

TEST(StorageSwitch, CommitsWaitWhileSwitching)
{
    auto t = filled(4);
    std::atomic<bool> frozen_seen{false};
    std::thread writer;
    t->gate().switch_active([&](int, Epoch) {
        writer = std::thread([&] {
            t->update_committed(0, {{1, Value{std::int64_t{1}}}});
            EXPECT_TRUE(frozen_seen.load());
        });
        std::this_thread::sleep_for(20ms);
        frozen_seen = true;
    });
    writer.join();
}

// Random insert/update/switch/sync histories against a replayed log.
TEST(StorageProperty, RandomHistoriesAgainstReplay)
{
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::mt19937_64 rng(seed);
        auto t = create_table("t", three_cols(), 0);
        std::map<std::int64_t, Row> oracle;
        std::vector<std::int64_t> keys;
        std::map<RowId, Row> oldest;
        std::size_t rows_at_switch = 0;
        std::optional<std::pair<FrozenTable, SwitchStats>> pending;
        std::map<std::int64_t, Row> oracle_at_switch;
        Timestamp ts = 0;

        for (int step = 0; step < 2'000; ++step) {
            const auto op = rng() % 20;
            if (op < 6 || keys.empty()) {
                const auto k = static_cast<std::int64_t>(keys.size()) * 3 + 1;
                Row r{k, static_cast<std::int64_t>(rng() % 100), static_cast<double>(rng() % 1000) / 8};
                const auto rid = t->insert_committed(r);
                oldest[rid] = r;
                oracle[k] = r;
                keys.push_back(k);
            } else if (op < 18) {
                const auto k = keys[rng() % keys.size()];
                const auto rid = t->lookup(k)->row;
                ColumnDeltas d;
                if (rng() % 2)
                    d.emplace_back(1, Value{static_cast<std::int64_t>(rng() % 100)});
                if (rng() % 2 || d.empty())
                    d.emplace_back(2, Value{static_cast<double>(rng() % 1000) / 8});
                t->update_committed(rid, d, ++ts);
                for (const auto &[c, v] : d)
                    oracle[k][c] = v;
            } else if (!pending) {
                pending = t->switch_instance();
                rows_at_switch = t->physical_rows();
                oracle_at_switch = oracle;
                ASSERT_EQ(pending->first.rows(), rows_at_switch);
            } else {
                // frozen handle equals the committed state at the switch instant
                const auto &f = pending->first;
                for (RowId r = 0; r < f.rows(); ++r) {
                    const auto k = std::get<std::int64_t>(f.get(r, 0));
                    ASSERT_EQ(f.row(r), oracle_at_switch.at(k));
                }
                t->sync(pending->first, pending->second);
                pending.reset();
                // bit soundness
                const int act = t->active_instance();
                for (RowId r = 0; r < t->physical_rows(); ++r) {
                    bool differ = false;
                    for (std::size_t c = 0; c < 3; ++c)
                        differ |= !(t->get(0, r, c) == t->get(1, r, c));
                    if (differ)
                        ASSERT_TRUE(t->update_bit(act, r) || r >= rows_at_switch) << "row " << r;
                }
            }
        }
        for (const auto &[k, row] : oracle)
            ASSERT_EQ(*t->read_latest(k), row);
        // replay delta chains oldest to newest
        for (const auto &[rid, first] : oldest) {
            auto chain = t->delta_chain(rid);
            if (chain.size() >= 64)
                continue;
            Row r = first;
            Row cur = t->read_row(rid);
            for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
                auto next = std::next(it);
                for (const auto &[c, v] : it->prior)
                    ASSERT_EQ(r[c], v);
                for (const auto &[c, v] : it->prior) {
                    // value after this version: prior of the next newer version touching c, else current
                    Value after = cur[c];
                    for (auto jt = next; jt != chain.rend(); ++jt) {
                        auto f = std::ranges::find_if(jt->prior, [&](const auto &p) { return p.first == c; });
                        if (f != jt->prior.end()) {
                            after = f->second;
                            break;
                        }
                    }
                    r[c] = after;
                }
            }
            ASSERT_EQ(r, cur);
        }
    }
}

// Writers update row pairs to equal values in one commit; frozen handles never show torn pairs.
TEST(StorageProperty, SwitchLinearizability)
{
    Database db;
    auto &t = db.create_table("pairs", {int64_column("id"), int64_column("v")});
    constexpr int kPairs = 64;
    for (int i = 0; i < 2 * kPairs; ++i)
        t.insert_committed(Row{std::int64_t{i}, std::int64_t{0}});
    std::atomic<bool> stop{false};
    std::vector<std::thread> writers;
    for (int w = 0; w < 2; ++w)
        writers.emplace_back([&, w] {
            std::int64_t v = w * 1'000'000;
            while (!stop) {
                const RowId pair = 2 * static_cast<RowId>(v % (kPairs / 2)) + w;
                auto pin = db.gate().enter_commit();
                ++v;
                t.update_committed(pin, 2 * pair, {{1, Value{v}}}, 0);
                t.update_committed(pin, 2 * pair + 1, {{1, Value{v}}}, 0);
            }
        });
    for (int round = 0; round < 50; ++round) {
        std::this_thread::sleep_for(1ms);
        auto snap = db.switch_instances();
        const auto &f = snap.table(0);
        for (RowId r = 0; r < f.rows(); r += 2)
            ASSERT_EQ(f.get(r, 1), f.get(r + 1, 1));
        db.sync(snap);
    }
    stop = true;
    for (auto &w : writers)
        w.join();
    EXPECT_GT(t.delta_chain(0).size() + t.delta_chain(1).size(), 0u);
}

TEST(DatabaseSwitch, SharedGateAndShortCircuit)
{
    Database db;
    auto &a = db.create_table("a", three_cols());
    auto &b = db.create_table("b", three_cols());
    EXPECT_THROW(db.create_table("a", three_cols()), Error);
    a.insert_committed(Row{std::int64_t{1}, std::int64_t{1}, 1.0});
    b.insert_committed(Row{std::int64_t{1}, std::int64_t{1}, 1.0});
    EXPECT_THROW(a.switch_instance(), Error);

    auto s1 = db.switch_instances();
    EXPECT_EQ(s1.tables.size(), 2u);
    EXPECT_EQ(s1.table(0).rows(), 1u);
    EXPECT_TRUE(db.sync(s1).short_circuited);

    b.update_committed(0, {{1, Value{std::int64_t{5}}}});
    auto s2 = db.switch_instances();
    EXPECT_THROW(db.switch_instances(), Error);
    const auto rep = db.sync(s2);
    EXPECT_FALSE(rep.short_circuited);
    EXPECT_TRUE(rep.tables[0].short_circuited);
    EXPECT_EQ(rep.tables[1].rows_copied, 1u);
    EXPECT_EQ(rep.rows_copied(), 1u);
    EXPECT_EQ(db.ordinal("b"), 1u);
}

TEST(Cells, FixedStringRoundTrip)
{
    auto col = string_column("s", 4);
    std::array<std::byte, 4> cell{};
    encode_cell(col, Value{std::string("abcdef")}, cell.data());
    EXPECT_EQ(std::get<std::string>(decode_cell(col, cell.data())), "abcd");
    encode_cell(col, Value{std::string("x")}, cell.data());
    EXPECT_EQ(std::get<std::string>(decode_cell(col, cell.data())), "x");
}
