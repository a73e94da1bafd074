#include "htap/txn.hpp"

#include <algorithm>
#include <map>

#include "htap/ch_schema.hpp"

namespace htap {

LockManager::Result LockManager::acquire(std::uint64_t txn, std::uint64_t key, std::optional<std::uint64_t> max_held)
{
    std::unique_lock lk(m_);
    auto it = owners_.find(key);
    if (it != owners_.end() && it->second == txn)
        return Result::AlreadyHeld;
    if (max_held && key < *max_held) {
        if (it != owners_.end())
            return Result::Conflict;
        owners_.emplace(key, txn);
        return Result::Acquired;
    }
    cv_.wait(lk, [&] { return !owners_.contains(key); });
    owners_.emplace(key, txn);
    return Result::Acquired;
}

void LockManager::release(std::uint64_t txn, std::span<const std::uint64_t> keys)
{
    {
        std::lock_guard lk(m_);
        for (auto k : keys) {
            auto it = owners_.find(k);
            if (it != owners_.end() && it->second == txn)
                owners_.erase(it);
        }
    }
    cv_.notify_all();
}

std::size_t LockManager::held() const
{
    std::lock_guard lk(m_);
    return owners_.size();
}

TransactionManager::TransactionManager(Database &db) : db_(db) {}

TxnContext TransactionManager::begin()
{
    TxnContext t;
    t.id = next_txn_.fetch_add(1, std::memory_order_relaxed);
    t.start_ts = clock();
    return t;
}

bool TransactionManager::lock(TxnContext &t, std::size_t table, RowId row)
{
    if (t.finished)
        throw Error("transaction already finished");
    const auto key = lock_key(table, row);
    switch (locks_.acquire(t.id, key, t.max_lock)) {
    case LockManager::Result::AlreadyHeld:
        return true;
    case LockManager::Result::Conflict:
        return false;
    case LockManager::Result::Acquired:
        t.locks.push_back(key);
        t.max_lock = t.max_lock ? std::max(*t.max_lock, key) : key;
        return true;
    }
    return false;
}

void TransactionManager::buffer_insert(TxnContext &t, std::size_t table, Row row)
{
    db_.table(table); // bounds check
    t.inserts.push_back({table, std::move(row)});
}

void TransactionManager::buffer_update(TxnContext &t, std::size_t table, RowId row, ColumnDeltas deltas)
{
    if (!std::ranges::count(t.locks, lock_key(table, row)))
        throw Error("update without a write lock");
    t.updates.push_back({table, row, std::move(deltas)});
}

void TransactionManager::finish(TxnContext &t)
{
    locks_.release(t.id, t.locks);
    t.locks.clear();
    t.max_lock.reset();
    t.inserts.clear();
    t.updates.clear();
    t.finished = true;
}

void TransactionManager::abort(TxnContext &t, std::string reason)
{
    if (t.finished)
        return;
    t.abort_reason = std::move(reason);
    finish(t);
    aborted_.fetch_add(1, std::memory_order_relaxed);
}

std::optional<Timestamp> TransactionManager::commit(TxnContext &t)
{
    if (t.finished)
        throw Error("transaction already finished");
    for (const auto &ins : t.inserts) {
        const auto &store = db_.table(ins.table);
        const auto &key = ins.row.at(store.key_column());
        if (!std::holds_alternative<std::int64_t>(key) || store.lookup(std::get<std::int64_t>(key))) {
            abort(t, "duplicate primary key");
            return std::nullopt;
        }
    }
    Timestamp ts = 0;
    {
        auto pin = db_.gate().enter_commit();
        ts = clock_.fetch_add(1, std::memory_order_acq_rel) + 1;
        for (const auto &u : t.updates)
            db_.table(u.table).update_committed(pin, u.row, u.deltas, ts);
        for (const auto &ins : t.inserts)
            db_.table(ins.table).insert_committed(pin, ins.row);
    }
    finish(t);
    t.commit_ts = ts;
    committed_.fetch_add(1, std::memory_order_relaxed);
    return ts;
}

TxnOutcome TransactionManager::execute_new_order(TxnContext &t, const NewOrderParams &p)
{
    using namespace ch;
    if (p.lines.empty()) {
        abort(t, "empty order");
        return TxnOutcome::Aborted;
    }
    auto &wh = db_.table(Warehouse);
    auto &item = db_.table(Item);
    auto &stock = db_.table(Stock);

    const auto w = wh.lookup(p.warehouse);
    if (!w) {
        abort(t, "unknown warehouse");
        return TxnOutcome::Aborted;
    }
    if (!lock(t, Warehouse, w->row)) {
        abort(t, "lock order conflict");
        return TxnOutcome::Aborted;
    }
    const auto next_col = wh.column_index("w_next_o_id");
    const auto o_id = std::get<std::int64_t>(wh.read_value(w->row, next_col));

    struct StockUse {
        std::int64_t quantity = 0;
        std::int64_t lines = 0;
    };
    std::map<RowId, StockUse> uses;
    std::vector<double> prices;
    std::vector<RowId> line_rows;
    const auto price_col = item.column_index("i_price");
    for (const auto &l : p.lines) {
        const auto it = item.lookup(l.item);
        const auto st = stock.lookup(stock_key(p.warehouse, l.item));
        if (!it || !st || l.quantity <= 0) {
            abort(t, "unknown item");
            return TxnOutcome::Aborted;
        }
        prices.push_back(std::get<double>(item.read_value(it->row, price_col)));
        line_rows.push_back(st->row);
        auto &u = uses[st->row];
        u.quantity += l.quantity;
        u.lines += 1;
    }
    for (const auto &[row, use] : uses)
        if (!lock(t, Stock, row)) {
            abort(t, "lock order conflict");
            return TxnOutcome::Aborted;
        }

    buffer_update(t, Warehouse, w->row, {{next_col, Value{o_id + 1}}});
    const auto q_col = stock.column_index("s_quantity");
    const auto ytd_col = stock.column_index("s_ytd");
    const auto cnt_col = stock.column_index("s_order_cnt");
    for (const auto &[row, use] : uses) {
        const auto q = std::get<std::int64_t>(stock.read_value(row, q_col));
        const auto ytd = std::get<std::int64_t>(stock.read_value(row, ytd_col));
        const auto cnt = std::get<std::int64_t>(stock.read_value(row, cnt_col));
        buffer_update(t, Stock, row,
                      {{q_col, Value{q - use.quantity}}, {ytd_col, Value{ytd + use.quantity}},
                       {cnt_col, Value{cnt + use.lines}}});
    }

    const auto okey = order_key(p.warehouse, o_id);
    const std::int64_t date = kBaseDate + o_id % 3650;
    const auto n_lines = static_cast<std::int64_t>(p.lines.size());
    buffer_insert(t, Orders, Row{okey, p.warehouse, o_id, n_lines, date});
    for (std::int64_t n = 1; n <= n_lines; ++n) {
        const auto &l = p.lines[n - 1];
        buffer_insert(t, OrderLine,
                      Row{orderline_key(okey, n), okey, p.warehouse, n, l.item, l.quantity,
                          static_cast<double>(l.quantity) * prices[n - 1], date});
    }
    return commit(t) ? TxnOutcome::Committed : TxnOutcome::Aborted;
}

TxnOutcome TransactionManager::new_order(const NewOrderParams &p)
{
    auto t = begin();
    return execute_new_order(t, p);
}

NewOrderGenerator::NewOrderGenerator(std::uint64_t seed, std::int64_t items) : rng_(seed), items_(items)
{
    if (items < 1)
        throw Error("generator needs at least one item");
}

NewOrderParams NewOrderGenerator::next(std::int64_t warehouse)
{
    NewOrderParams p;
    p.warehouse = warehouse;
    const auto want = std::uniform_int_distribution<std::int64_t>(5, 15)(rng_);
    const auto n = std::min(want, items_);
    std::uniform_int_distribution<std::int64_t> item(1, items_);
    std::uniform_int_distribution<std::int64_t> qty(1, 10);
    while (static_cast<std::int64_t>(p.lines.size()) < n) {
        const auto i = item(rng_);
        if (std::ranges::any_of(p.lines, [&](const NewOrderLine &l) { return l.item == i; }))
            continue;
        p.lines.push_back({i, qty(rng_)});
    }
    return p;
}

WorkerPool::WorkerPool(TransactionManager &tm, WorkerConfig cfg)
    : tm_(tm), cfg_(cfg), started_(std::chrono::steady_clock::now())
{
    if (cfg_.warehouses < 1 || cfg_.items < 1)
        throw Error("worker pool needs warehouses and items");
}

WorkerPool::~WorkerPool() { stop(); }

void WorkerPool::run(std::stop_token st, int id)
{
    NewOrderGenerator gen(cfg_.seed * 1'000'003ULL + static_cast<std::uint64_t>(id), cfg_.items);
    const std::int64_t warehouse = id % cfg_.warehouses + 1;
    while (!st.stop_requested()) {
        if (cfg_.max_transactions && issued_.fetch_add(1, std::memory_order_relaxed) >= cfg_.max_transactions)
            return;
        const auto params = gen.next(warehouse);
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt)
            if (tm_.new_order(params) == TxnOutcome::Committed) {
                committed_.fetch_add(1, std::memory_order_relaxed);
                break;
            }
    }
}

void WorkerPool::set_cpus(std::span<const CpuId> cpus)
{
    if (cpus.empty())
        throw Error("OLTP must keep at least one CPU");
    std::vector<std::unique_ptr<Worker>> retired;
    {
        std::lock_guard lk(m_);
        std::vector<std::unique_ptr<Worker>> keep;
        for (auto &w : workers_) {
            if (std::ranges::find(cpus, w->cpu) != cpus.end())
                keep.push_back(std::move(w));
            else {
                w->thread.request_stop();
                retired.push_back(std::move(w));
            }
        }
        for (auto cpu : cpus) {
            if (std::ranges::any_of(keep, [&](const auto &w) { return w->cpu == cpu; }))
                continue;
            auto w = std::make_unique<Worker>();
            w->id = next_id_++;
            w->cpu = cpu;
            w->thread = std::jthread([this, id = w->id](std::stop_token st) { run(st, id); });
            keep.push_back(std::move(w));
        }
        workers_ = std::move(keep);
    }
    retired.clear(); // joins
}

std::vector<CpuId> WorkerPool::cpus() const
{
    std::lock_guard lk(m_);
    std::vector<CpuId> out;
    for (const auto &w : workers_)
        out.push_back(w->cpu);
    return out;
}

std::size_t WorkerPool::size() const
{
    std::lock_guard lk(m_);
    return workers_.size();
}

ThroughputSnapshot WorkerPool::throughput_snapshot() const
{
    ThroughputSnapshot s;
    s.committed = committed();
    s.window_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    return s;
}

void WorkerPool::wait_for_budget()
{
    if (!cfg_.max_transactions)
        throw Error("worker pool has no transaction budget");
    std::vector<std::unique_ptr<Worker>> done;
    {
        std::lock_guard lk(m_);
        done = std::move(workers_);
        workers_.clear();
    }
    for (auto &w : done)
        if (w->thread.joinable())
            w->thread.join();
}

void WorkerPool::stop()
{
    std::vector<std::unique_ptr<Worker>> done;
    {
        std::lock_guard lk(m_);
        done = std::move(workers_);
        workers_.clear();
    }
    for (auto &w : done)
        w->thread.request_stop();
    done.clear();
}

} // namespace htap
