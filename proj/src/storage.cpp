#include "htap/storage.hpp"

#include <algorithm>

namespace htap {

namespace {

constexpr std::uint8_t instance_bit(int instance) { return static_cast<std::uint8_t>(1u << instance); }
constexpr std::uint8_t kBothInstances = 3;

} // namespace

// ---------------------------------------------------------------- InstanceGate

void InstanceGate::CommitPin::release()
{
    if (gate_) {
        gate_->leave_commit();
        gate_ = nullptr;
    }
}

InstanceGate::CommitPin InstanceGate::enter_commit()
{
    std::unique_lock lk(m_);
    cv_.wait(lk, [&] { return !switching_; });
    ++commits_;
    return CommitPin(this, active_);
}

void InstanceGate::leave_commit()
{
    std::lock_guard lk(m_);
    if (--commits_ == 0)
        cv_.notify_all();
}

int InstanceGate::active() const
{
    std::lock_guard lk(m_);
    return active_;
}

Epoch InstanceGate::epoch() const
{
    std::lock_guard lk(m_);
    return epoch_;
}

bool InstanceGate::switching() const
{
    std::lock_guard lk(m_);
    return switching_;
}

// ---------------------------------------------------------------- cells

void encode_cell(const ColumnSchema &col, const Value &value, std::byte *cell)
{
    switch (col.kind) {
    case ColumnKind::Int64:
    case ColumnKind::Date: {
        const auto v = std::get<std::int64_t>(value);
        std::memcpy(cell, &v, sizeof v);
        break;
    }
    case ColumnKind::Float64: {
        const auto v = std::get<double>(value);
        std::memcpy(cell, &v, sizeof v);
        break;
    }
    case ColumnKind::FixedString: {
        const auto &s = std::get<std::string>(value);
        std::memset(cell, 0, col.string_width);
        std::memcpy(cell, s.data(), std::min(s.size(), col.string_width));
        break;
    }
    }
}

Value decode_cell(const ColumnSchema &col, const std::byte *cell)
{
    switch (col.kind) {
    case ColumnKind::Int64:
    case ColumnKind::Date:
        return load_int64(cell);
    case ColumnKind::Float64:
        return load_float64(cell);
    case ColumnKind::FixedString: {
        const char *p = reinterpret_cast<const char *>(cell);
        std::size_t n = col.string_width;
        while (n > 0 && p[n - 1] == '\0')
            --n;
        return std::string(p, n);
    }
    }
    return std::int64_t{0};
}

// ---------------------------------------------------------------- FrozenTable

bool FrozenTable::valid() const { return store_ && store_->epoch() == epoch_; }

const std::byte *FrozenTable::cell(RowId row, std::size_t col) const { return store_->cell(instance_, row, col); }

Value FrozenTable::get(RowId row, std::size_t col) const { return store_->get(instance_, row, col); }

Row FrozenTable::row(RowId row) const
{
    Row r;
    r.reserve(store_->schema().size());
    for (std::size_t c = 0; c < store_->schema().size(); ++c)
        r.push_back(get(row, c));
    return r;
}

// ---------------------------------------------------------------- TwinStore

TwinStore::TwinStore(std::string name, Schema schema, StoreOptions opts, std::shared_ptr<InstanceGate> gate)
    : name_(std::move(name)), schema_(std::move(schema)), opts_(opts), gate_(std::move(gate)),
      latches_(new std::mutex[kLatches])
{
    validate_schema(schema_);
    if (opts_.key_column >= schema_.size() || !schema_[opts_.key_column].integral())
        throw Error("primary key must be an int64 or date column");
    shared_gate_ = gate_ != nullptr;
    if (!gate_)
        gate_ = std::make_shared<InstanceGate>();

    for (auto &inst : instances_)
        for (const auto &col : schema_)
            inst.columns.push_back(std::make_unique<ChunkedColumn>(col.width()));
    for (auto &flags : col_dirty_) {
        flags.reset(new std::atomic<bool>[schema_.size()]);
        for (std::size_t c = 0; c < schema_.size(); ++c)
            flags[c].store(false, std::memory_order_relaxed);
    }
    olap_col_dirty_.assign(schema_.size(), false);
    current_epoch_.store(gate_->epoch());
    instances_[gate_->active()].epoch = gate_->epoch();

    std::lock_guard lk(append_mutex_);
    ensure_capacity(std::max<std::size_t>(opts_.capacity_hint, 1));
}

std::unique_ptr<TwinStore> create_table(std::string name, Schema schema, std::size_t capacity_hint)
{
    StoreOptions opts;
    opts.capacity_hint = capacity_hint;
    return std::make_unique<TwinStore>(std::move(name), std::move(schema), opts);
}

std::optional<std::size_t> TwinStore::find_column(const std::string &name) const
{
    for (std::size_t c = 0; c < schema_.size(); ++c)
        if (schema_[c].name == name)
            return c;
    return std::nullopt;
}

std::size_t TwinStore::column_index(const std::string &name) const
{
    if (auto c = find_column(name))
        return *c;
    throw Error("unknown column " + name + " in table " + name_);
}

ColumnDeltas TwinStore::deltas(std::initializer_list<std::pair<std::string, Value>> by_name) const
{
    ColumnDeltas out;
    for (const auto &[n, v] : by_name)
        out.emplace_back(column_index(n), v);
    return out;
}

void TwinStore::ensure_capacity(std::size_t rows)
{
    if (rows <= instances_[0].columns[0]->capacity())
        return;
    // grow in whole chunks so reserve calls stay rare
    const std::size_t target = ((rows + ChunkedColumn::kChunkRows - 1) / ChunkedColumn::kChunkRows) * ChunkedColumn::kChunkRows;
    for (auto &inst : instances_)
        for (auto &col : inst.columns)
            col->reserve(target);
    dirty_[0].reserve(target);
    dirty_[1].reserve(target);
    olap_dirty_.reserve(target);
    row_home_.reserve(target);
    deltas_.reserve(target);
}

void TwinStore::check_row(const Row &row) const
{
    if (row.size() != schema_.size())
        throw Error("row arity does not match schema of " + name_);
    for (std::size_t c = 0; c < schema_.size(); ++c)
        if (!value_matches(schema_[c], row[c]))
            throw Error("value kind mismatch for column " + schema_[c].name);
}

RowId TwinStore::insert_committed(const Row &row)
{
    auto pin = gate_->enter_commit();
    return insert_committed(pin, row);
}

RowId TwinStore::insert_committed(const InstanceGate::CommitPin &, const Row &row)
{
    check_row(row);
    const std::int64_t key = std::get<std::int64_t>(row[opts_.key_column]);

    std::lock_guard lk(append_mutex_);
    {
        std::shared_lock ilk(index_mutex_);
        if (index_.contains(key))
            throw Error("duplicate primary key " + std::to_string(key) + " in " + name_);
    }
    const RowId rid = physical_rows_.load(std::memory_order_relaxed);
    ensure_capacity(rid + 1);
    for (auto &inst : instances_)
        for (std::size_t c = 0; c < schema_.size(); ++c)
            encode_cell(schema_[c], row[c], inst.columns[c]->cell(rid));
    row_home_[rid].store(kBothInstances, std::memory_order_release);
    {
        std::unique_lock ilk(index_mutex_);
        index_.emplace(key, rid);
    }
    physical_rows_.store(rid + 1, std::memory_order_release);
    return rid;
}

void TwinStore::update_committed(RowId row, const ColumnDeltas &deltas, Timestamp ts)
{
    auto pin = gate_->enter_commit();
    update_committed(pin, row, deltas, ts);
}

void TwinStore::update_committed(const InstanceGate::CommitPin &pin, RowId row, const ColumnDeltas &deltas, Timestamp ts)
{
    if (row >= physical_rows())
        throw Error("unknown row id " + std::to_string(row) + " in " + name_);
    for (const auto &[c, v] : deltas) {
        if (c >= schema_.size())
            throw Error("unknown column ordinal " + std::to_string(c) + " in " + name_);
        if (c == opts_.key_column)
            throw Error("primary key columns are immutable");
        if (!value_matches(schema_[c], v))
            throw Error("value kind mismatch for column " + schema_[c].name);
    }

    const int inst = pin.instance();
    const int other = inst ^ 1;
    std::lock_guard lk(latch(row));

    // bring the row forward if the newest version lives in the other instance
    if (!(row_home_[row].load(std::memory_order_acquire) & instance_bit(inst)))
        copy_row(other, inst, row);

    DeltaVersion version;
    version.commit_ts = ts;
    for (const auto &[c, v] : deltas) {
        version.prior.emplace_back(c, get(inst, row, c));
        encode_cell(schema_[c], v, instances_[inst].columns[c]->cell(row));
        col_dirty_[inst][c].store(true, std::memory_order_release);
    }
    auto &chain = deltas_[row];
    chain.push_back(std::move(version));
    if (chain.size() > opts_.delta_retention)
        chain.erase(chain.begin(), chain.begin() + static_cast<std::ptrdiff_t>(chain.size() - opts_.delta_retention));

    row_home_[row].store(instance_bit(inst), std::memory_order_release);
    dirty_[inst].set(row);
    table_dirty_[inst].store(true, std::memory_order_release);
    gate_->mark_updated(inst);
}

void TwinStore::copy_row(int from, int to, RowId row, const std::vector<bool> *columns)
{
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        if (columns && !(*columns)[c])
            continue;
        std::memcpy(instances_[to].columns[c]->cell(row), instances_[from].columns[c]->cell(row), schema_[c].width());
    }
}

int TwinStore::newest_instance(RowId row) const
{
    const auto home = row_home_[row].load(std::memory_order_acquire);
    if (home == kBothInstances)
        return gate_->active();
    return home == instance_bit(1) ? 1 : 0;
}

std::optional<IndexEntry> TwinStore::lookup(std::int64_t key) const
{
    RowId rid;
    {
        std::shared_lock ilk(index_mutex_);
        auto it = index_.find(key);
        if (it == index_.end())
            return std::nullopt;
        rid = it->second;
    }
    std::lock_guard lk(latch(rid));
    return IndexEntry{rid, row_home_[rid].load(std::memory_order_acquire)};
}

std::optional<Row> TwinStore::read_latest(std::int64_t key) const
{
    RowId rid;
    {
        std::shared_lock ilk(index_mutex_);
        auto it = index_.find(key);
        if (it == index_.end())
            return std::nullopt;
        rid = it->second;
    }
    return read_row(rid);
}

Row TwinStore::read_row(RowId row) const
{
    if (row >= physical_rows())
        throw Error("unknown row id " + std::to_string(row) + " in " + name_);
    std::lock_guard lk(latch(row));
    const int inst = newest_instance(row);
    Row r;
    r.reserve(schema_.size());
    for (std::size_t c = 0; c < schema_.size(); ++c)
        r.push_back(get(inst, row, c));
    return r;
}

Value TwinStore::read_value(RowId row, std::size_t col) const
{
    if (row >= physical_rows())
        throw Error("unknown row id " + std::to_string(row) + " in " + name_);
    std::lock_guard lk(latch(row));
    return get(newest_instance(row), row, col);
}

Row TwinStore::read_version(RowId row, Timestamp as_of) const
{
    Row r = read_row(row);
    std::lock_guard lk(latch(row));
    const auto &chain = deltas_[row];
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        if (it->commit_ts <= as_of)
            break;
        for (const auto &[c, v] : it->prior)
            r[c] = v;
    }
    return r;
}

std::vector<DeltaVersion> TwinStore::delta_chain(RowId row) const
{
    if (row >= physical_rows())
        throw Error("unknown row id " + std::to_string(row) + " in " + name_);
    std::lock_guard lk(latch(row));
    const auto &chain = deltas_[row];
    return {chain.rbegin(), chain.rend()};
}

const std::byte *TwinStore::cell(int instance, RowId row, std::size_t col) const
{
    return instances_[instance].columns[col]->cell(row);
}

Value TwinStore::get(int instance, RowId row, std::size_t col) const
{
    return decode_cell(schema_[col], cell(instance, row, col));
}

std::pair<FrozenTable, SwitchStats> TwinStore::freeze(int old_instance, Epoch epoch)
{
    auto &frozen = instances_[old_instance];
    frozen.committed_count = physical_rows();
    instances_[old_instance ^ 1].epoch = epoch;

    SwitchStats stats;
    stats.epoch = epoch;
    stats.per_column.resize(schema_.size());
    for (std::size_t c = 0; c < schema_.size(); ++c) {
        const bool updated = col_dirty_[old_instance][c].exchange(false, std::memory_order_acq_rel);
        stats.per_column[c] = {frozen.committed_count, updated};
        if (updated)
            olap_col_dirty_[c] = true;
    }
    current_epoch_.store(epoch, std::memory_order_release);
    sync_pending_.store(true, std::memory_order_release);
    return {FrozenTable(this, old_instance, frozen.committed_count, epoch), std::move(stats)};
}

std::pair<FrozenTable, SwitchStats> TwinStore::switch_instance()
{
    if (shared_gate_)
        throw Error("table " + name_ + " shares its instance gate; switch through the database");
    if (sync_pending())
        throw Error("previous switch of " + name_ + " has not been synced");
    std::pair<FrozenTable, SwitchStats> out;
    gate_->switch_active([&](int old, Epoch e) { out = freeze(old, e); });
    return out;
}

SyncReport TwinStore::sync(const FrozenTable &frozen, const SwitchStats &stats)
{
    SyncReport report;
    if (frozen.store_ != this || frozen.epoch() != epoch())
        throw Error("sync requires the current frozen handle of " + name_);
    const int old = frozen.instance();
    const int fresh = old ^ 1;
    if (!table_dirty_[old].exchange(false, std::memory_order_acq_rel)) {
        report.short_circuited = true;
        mark_synced();
        return report;
    }
    std::vector<bool> columns(schema_.size());
    for (std::size_t c = 0; c < schema_.size(); ++c)
        columns[c] = stats.per_column[c].has_updates;

    dirty_[old].for_each_set(frozen.rows(), [&](RowId row) {
        std::lock_guard lk(latch(row));
        if (dirty_[fresh].test(row)) {
            ++report.rows_skipped;
        } else {
            copy_row(old, fresh, row, &columns);
            row_home_[row].store(kBothInstances, std::memory_order_release);
            ++report.rows_copied;
        }
        olap_dirty_.set(row);
        dirty_[old].clear(row);
    });
    mark_synced();
    return report;
}

void TwinStore::clear_olap_dirty_columns() { std::fill(olap_col_dirty_.begin(), olap_col_dirty_.end(), false); }

} // namespace htap
