#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "htap/database.hpp"

namespace htap {

/// Lock keys order first by table ordinal, then by row id.
inline std::uint64_t lock_key(std::size_t table, RowId row)
{
    return (static_cast<std::uint64_t>(table) << 48) | static_cast<std::uint64_t>(row);
}

/// Exclusive row locks under a global (table, row) order. An in-order request
/// waits; a request below the highest key already held is only granted if the
/// lock is free, otherwise the caller must abort.
class LockManager {
public:
    enum class Result { Acquired, AlreadyHeld, Conflict };

    Result acquire(std::uint64_t txn, std::uint64_t key, std::optional<std::uint64_t> max_held);
    void release(std::uint64_t txn, std::span<const std::uint64_t> keys);
    std::size_t held() const;

private:
    mutable std::mutex m_;
    std::condition_variable cv_;
    std::unordered_map<std::uint64_t, std::uint64_t> owners_;
};

struct PendingInsert {
    std::size_t table = 0;
    Row row;
};

struct PendingUpdate {
    std::size_t table = 0;
    RowId row = 0;
    ColumnDeltas deltas;
};

struct TxnContext {
    std::uint64_t id = 0;
    Timestamp start_ts = 0;
    std::vector<std::uint64_t> locks;
    std::optional<std::uint64_t> max_lock;
    std::vector<PendingInsert> inserts;
    std::vector<PendingUpdate> updates;
    bool finished = false;
    Timestamp commit_ts = 0; ///< set on commit
    std::string abort_reason;
};

struct NewOrderLine {
    std::int64_t item = 0;
    std::int64_t quantity = 0;
};

struct NewOrderParams {
    std::int64_t warehouse = 0;
    std::vector<NewOrderLine> lines;
};

enum class TxnOutcome { Committed, Aborted };

/// Write-lock-only transactions over a CH-lite database. Reads go to the
/// newest committed value; writes are buffered and applied at commit under a
/// gate pin so an instance switch never splits a write set.
class TransactionManager {
public:
    explicit TransactionManager(Database &db);

    Database &db() const { return db_; }

    TxnContext begin();
    /// False when the lock would violate the order and is taken; the caller must abort.
    bool lock(TxnContext &t, std::size_t table, RowId row);
    void buffer_insert(TxnContext &t, std::size_t table, Row row);
    void buffer_update(TxnContext &t, std::size_t table, RowId row, ColumnDeltas deltas);
    /// Applies the write set and releases locks. Returns nullopt if the
    /// transaction had to abort (duplicate key).
    std::optional<Timestamp> commit(TxnContext &t);
    void abort(TxnContext &t, std::string reason);

    TxnOutcome execute_new_order(TxnContext &t, const NewOrderParams &p);
    TxnOutcome new_order(const NewOrderParams &p);

    Timestamp clock() const { return clock_.load(std::memory_order_acquire); }
    std::uint64_t committed() const { return committed_.load(std::memory_order_relaxed); }
    std::uint64_t aborted() const { return aborted_.load(std::memory_order_relaxed); }
    const LockManager &locks() const { return locks_; }

private:
    void finish(TxnContext &t);

    Database &db_;
    LockManager locks_;
    std::atomic<std::uint64_t> next_txn_{1};
    std::atomic<Timestamp> clock_{0};
    std::atomic<std::uint64_t> committed_{0};
    std::atomic<std::uint64_t> aborted_{0};
};

/// Seeded NewOrder parameters: 5-15 lines, distinct items, quantity 1-10.
class NewOrderGenerator {
public:
    NewOrderGenerator(std::uint64_t seed, std::int64_t items);
    NewOrderParams next(std::int64_t warehouse);

private:
    std::mt19937_64 rng_;
    std::int64_t items_;
};

struct WorkerConfig {
    std::uint64_t seed = 1;
    std::int64_t warehouses = 1;
    std::int64_t items = 1;
    std::uint64_t max_transactions = 0; ///< 0: unbounded
    int max_retries = 16;
};

struct ThroughputSnapshot {
    std::uint64_t committed = 0;
    double window_seconds = 0;
    double tps() const { return window_seconds > 0 ? committed / window_seconds : 0.0; }
};

/// OLTP workers, one per CPU handed out by the resource ledger. CPU ids are
/// logical; no thread pinning is attempted.
class WorkerPool {
public:
    WorkerPool(TransactionManager &tm, WorkerConfig cfg);
    ~WorkerPool();
    WorkerPool(const WorkerPool &) = delete;
    WorkerPool &operator=(const WorkerPool &) = delete;

    /// Starts workers for new CPUs and stops workers whose CPU was taken away.
    /// A stopping worker finishes its in-flight transaction first.
    void set_cpus(std::span<const CpuId> cpus);
    std::vector<CpuId> cpus() const;
    std::size_t size() const;

    ThroughputSnapshot throughput_snapshot() const;
    std::uint64_t committed() const { return committed_.load(std::memory_order_relaxed); }
    /// Blocks until the transaction budget is used up and all workers idle.
    void wait_for_budget();
    void stop();

private:
    struct Worker {
        int id = 0;
        CpuId cpu = 0;
        std::jthread thread;
    };

    void run(std::stop_token st, int id);

    TransactionManager &tm_;
    WorkerConfig cfg_;
    mutable std::mutex m_;
    std::vector<std::unique_ptr<Worker>> workers_;
    int next_id_ = 0;
    std::atomic<std::uint64_t> issued_{0};
    std::atomic<std::uint64_t> committed_{0};
    std::chrono::steady_clock::time_point started_;
};

} // namespace htap
