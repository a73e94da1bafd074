#pragma once

#include <array>
#include <atomic>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "htap/chunked.hpp"
#include "htap/types.hpp"

namespace htap {

using Timestamp = std::uint64_t;

/// Coordinates instance switches with committing writers.
///
/// Writers hold a CommitPin while they apply a write set. A switch waits until
/// no pin is outstanding, flips the active instance, runs the caller's freeze
/// step and reopens the gate. New pins block while a switch is pending, so a
/// stream of commits cannot starve the switcher.
class InstanceGate {
public:
    class CommitPin {
    public:
        CommitPin() = default;
        CommitPin(CommitPin &&o) noexcept : gate_(std::exchange(o.gate_, nullptr)), instance_(o.instance_) {}
        CommitPin &operator=(CommitPin &&o) noexcept
        {
            release();
            gate_ = std::exchange(o.gate_, nullptr);
            instance_ = o.instance_;
            return *this;
        }
        ~CommitPin() { release(); }

        int instance() const { return instance_; }
        bool held() const { return gate_ != nullptr; }
        void release();

    private:
        friend class InstanceGate;
        CommitPin(InstanceGate *g, int inst) : gate_(g), instance_(inst) {}
        InstanceGate *gate_ = nullptr;
        int instance_ = 0;
    };

    /// Blocks while a switch is in progress; returns a pin on the active instance.
    CommitPin enter_commit();

    int active() const;
    Epoch epoch() const;
    bool switching() const;

    /// Flips the active instance once all pins drain. `freeze(old_instance, new_epoch)`
    /// runs while writers are excluded. Throws if another switch is in flight.
    template <class Freeze>
    Epoch switch_active(Freeze &&freeze);

    /// Database-level update-presence flag, one per instance.
    void mark_updated(int instance) { updated_[instance].store(true, std::memory_order_release); }
    bool take_updated(int instance) { return updated_[instance].exchange(false, std::memory_order_acq_rel); }

private:
    void leave_commit();

    mutable std::mutex m_;
    std::condition_variable cv_;
    int active_ = 0;
    int commits_ = 0;
    bool switching_ = false;
    Epoch epoch_ = 0;
    std::array<std::atomic<bool>, 2> updated_{};
};

template <class Freeze>
Epoch InstanceGate::switch_active(Freeze &&freeze)
{
    int old = 0;
    Epoch epoch = 0;
    {
        std::unique_lock lk(m_);
        if (switching_)
            throw Error("instance switch already in flight");
        switching_ = true;
        cv_.wait(lk, [&] { return commits_ == 0; });
        old = active_;
        active_ ^= 1;
        epoch = ++epoch_;
    }
    try {
        freeze(old, epoch);
    } catch (...) {
        std::lock_guard lk(m_);
        switching_ = false;
        cv_.notify_all();
        throw;
    }
    std::lock_guard lk(m_);
    switching_ = false;
    cv_.notify_all();
    return epoch;
}

/// Prior values of the columns touched by one committed update.
struct DeltaVersion {
    Timestamp commit_ts = 0;
    std::vector<std::pair<std::size_t, Value>> prior;
};

using ColumnDeltas = std::vector<std::pair<std::size_t, Value>>;

struct ColumnSwitchStats {
    std::size_t record_count_at_switch = 0;
    bool has_updates = false;
};

struct SwitchStats {
    Epoch epoch = 0;
    std::vector<ColumnSwitchStats> per_column;
};

struct SyncReport {
    std::size_t rows_copied = 0;
    std::size_t rows_skipped = 0; ///< re-updated in the new active instance
    bool short_circuited = false;
};

/// Where the index says the newest value of a row lives.
struct IndexEntry {
    RowId row = 0;
    std::uint8_t instances = 0; ///< bit i set: instance i holds the newest value
};

class TwinStore;

/// Read-only view of an inactive instance, valid until the next switch of its store.
class FrozenTable {
public:
    FrozenTable() = default;

    const TwinStore &store() const { return *store_; }
    int instance() const { return instance_; }
    std::size_t rows() const { return rows_; }
    Epoch epoch() const { return epoch_; }
    bool valid() const;

    const std::byte *cell(RowId row, std::size_t col) const;
    Value get(RowId row, std::size_t col) const;
    Row row(RowId row) const;

private:
    friend class TwinStore;
    FrozenTable(const TwinStore *s, int inst, std::size_t rows, Epoch e) : store_(s), instance_(inst), rows_(rows), epoch_(e) {}

    const TwinStore *store_ = nullptr;
    int instance_ = 0;
    std::size_t rows_ = 0;
    Epoch epoch_ = 0;
};

struct StoreOptions {
    std::size_t capacity_hint = 0;
    std::size_t key_column = 0;
    std::size_t delta_retention = 64; ///< versions kept per row
};

/// Twin-instance columnar table: two equally shaped instances, per-row update
/// bits, per-row delta chains and a primary-key index.
class TwinStore {
public:
    TwinStore(std::string name, Schema schema, StoreOptions opts = {}, std::shared_ptr<InstanceGate> gate = nullptr);
    TwinStore(const TwinStore &) = delete;
    TwinStore &operator=(const TwinStore &) = delete;

    const std::string &name() const { return name_; }
    const Schema &schema() const { return schema_; }
    std::size_t key_column() const { return opts_.key_column; }
    std::size_t column_index(const std::string &name) const;
    std::optional<std::size_t> find_column(const std::string &name) const;
    ColumnDeltas deltas(std::initializer_list<std::pair<std::string, Value>> by_name) const;

    /// Appends a committed row to both instances. Visible through the
    /// inactive instance only after the next switch.
    RowId insert_committed(const Row &row);
    RowId insert_committed(const InstanceGate::CommitPin &pin, const Row &row);

    /// Applies an update to the pinned (active) instance and records the prior values.
    void update_committed(RowId row, const ColumnDeltas &deltas, Timestamp ts = 0);
    void update_committed(const InstanceGate::CommitPin &pin, RowId row, const ColumnDeltas &deltas, Timestamp ts);

    std::optional<IndexEntry> lookup(std::int64_t key) const;
    std::optional<Row> read_latest(std::int64_t key) const;
    Row read_row(RowId row) const;
    Value read_value(RowId row, std::size_t col) const;

    /// Row state as of `as_of` by walking the delta chain backwards.
    Row read_version(RowId row, Timestamp as_of) const;
    /// Delta chain, newest first.
    std::vector<DeltaVersion> delta_chain(RowId row) const;

    /// Standalone switch; rejected when the gate is shared by a Database.
    std::pair<FrozenTable, SwitchStats> switch_instance();

    /// Copies rows updated in the frozen instance into the new active one,
    /// skipping rows re-updated there since the switch. Clears consumed bits
    /// and hands them over to OLAP-side tracking.
    SyncReport sync(const FrozenTable &frozen, const SwitchStats &stats);
    /// True between a switch and the sync that follows it. Another switch is refused meanwhile.
    bool sync_pending() const { return sync_pending_.load(std::memory_order_acquire); }
    void mark_synced() { sync_pending_.store(false, std::memory_order_release); }

    std::size_t physical_rows() const { return physical_rows_.load(std::memory_order_acquire); }
    int active_instance() const { return gate_->active(); }
    std::size_t committed_count(int instance) const { return instances_[instance].committed_count; }
    Epoch instance_epoch(int instance) const { return instances_[instance].epoch; }
    Epoch epoch() const { return current_epoch_.load(std::memory_order_acquire); }

    bool update_bit(RowId row) const { return dirty_[0].test(row) || dirty_[1].test(row); }
    bool update_bit(int instance, RowId row) const { return dirty_[instance].test(row); }

    /// Rows updated since the last ETL whose newest values sit in the frozen instance.
    const UpdateBitmap &olap_dirty() const { return olap_dirty_; }
    void clear_olap_dirty(RowId row) { olap_dirty_.clear(row); }
    const std::vector<bool> &olap_dirty_columns() const { return olap_col_dirty_; }
    void clear_olap_dirty_columns();

    const std::byte *cell(int instance, RowId row, std::size_t col) const;
    Value get(int instance, RowId row, std::size_t col) const;

    InstanceGate &gate() const { return *gate_; }
    bool shares_gate() const { return shared_gate_; }

    /// Fixes the frozen instance's watermark and collects switch stats.
    /// Called with writers excluded by the gate.
    std::pair<FrozenTable, SwitchStats> freeze(int old_instance, Epoch epoch);

private:
    struct Instance {
        std::vector<std::unique_ptr<ChunkedColumn>> columns;
        std::size_t committed_count = 0;
        Epoch epoch = 0;
    };

    void check_row(const Row &row) const;
    void ensure_capacity(std::size_t rows);
    void copy_row(int from, int to, RowId row, const std::vector<bool> *columns = nullptr);
    std::mutex &latch(RowId row) const { return latches_[row % kLatches]; }
    int newest_instance(RowId row) const;

    static constexpr std::size_t kLatches = 1024;

    std::string name_;
    Schema schema_;
    StoreOptions opts_;
    std::shared_ptr<InstanceGate> gate_;
    bool shared_gate_ = false;

    std::array<Instance, 2> instances_;
    std::atomic<std::size_t> physical_rows_{0};
    std::atomic<Epoch> current_epoch_{0};
    std::atomic<bool> sync_pending_{false};

    std::array<UpdateBitmap, 2> dirty_;
    std::array<std::unique_ptr<std::atomic<bool>[]>, 2> col_dirty_;
    std::array<std::atomic<bool>, 2> table_dirty_{};
    UpdateBitmap olap_dirty_;
    std::vector<bool> olap_col_dirty_;

    ChunkedArray<std::atomic<std::uint8_t>> row_home_;
    ChunkedArray<std::vector<DeltaVersion>> deltas_;

    mutable std::unique_ptr<std::mutex[]> latches_;
    std::mutex append_mutex_;
    mutable std::shared_mutex index_mutex_;
    std::unordered_map<std::int64_t, RowId> index_;
};

/// Convenience constructor mirroring the storage contract.
std::unique_ptr<TwinStore> create_table(std::string name, Schema schema, std::size_t capacity_hint);

/// Encodes a value into a cell of the given column; the cell must be `col.width()` bytes.
void encode_cell(const ColumnSchema &col, const Value &value, std::byte *cell);
Value decode_cell(const ColumnSchema &col, const std::byte *cell);

inline std::int64_t load_int64(const std::byte *cell)
{
    std::int64_t v;
    std::memcpy(&v, cell, sizeof v);
    return v;
}

inline double load_float64(const std::byte *cell)
{
    double v;
    std::memcpy(&v, cell, sizeof v);
    return v;
}

} // namespace htap
