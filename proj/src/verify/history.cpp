#include <random>

#include "htap/ch_schema.hpp"
#include "htap/txn.hpp"
#include "htap/verify/oracle.hpp"

namespace htap::oracle {

namespace {

void bump(TransactionManager &tm, std::size_t table, RowId row, std::mt19937_64 &rng)
{
    auto &store = tm.db().table(table);
    auto t = tm.begin();
    if (!tm.lock(t, table, row))
        throw Error("history: unexpected lock conflict");
    ColumnDeltas d;
    if (table == ch::OrderLine) {
        const auto q = store.column_index("ol_quantity");
        const auto a = store.column_index("ol_amount");
        d.emplace_back(q, Value{std::get<std::int64_t>(store.read_value(row, q)) + static_cast<std::int64_t>(rng() % 3 + 1)});
        d.emplace_back(a, Value{std::get<double>(store.read_value(row, a)) + static_cast<double>(rng() % 1000 + 1) / 16});
    } else {
        const auto p = store.column_index("i_price");
        d.emplace_back(p, Value{std::get<double>(store.read_value(row, p)) + static_cast<double>(rng() % 100 + 1) / 4});
    }
    tm.buffer_update(t, table, row, std::move(d));
    tm.commit(t);
}

} // namespace

void random_history(TransactionManager &tm, std::uint64_t seed, const HistoryOptions &opts, std::int64_t warehouses,
                    std::int64_t items)
{
    std::mt19937_64 rng(seed);
    NewOrderGenerator gen(seed ^ 0x9e3779b97f4a7c15ULL, items);
    int inserts = opts.new_orders, ol = opts.orderline_updates, it = opts.item_updates;
    while (inserts + ol + it > 0) {
        const auto pick = static_cast<int>(rng() % static_cast<std::uint64_t>(inserts + ol + it));
        if (pick < inserts) {
            --inserts;
            const auto w = static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(warehouses)) + 1;
            if (tm.new_order(gen.next(w)) != TxnOutcome::Committed)
                throw Error("history: NewOrder aborted");
        } else if (pick < inserts + ol) {
            --ol;
            const auto rows = tm.db().table(ch::OrderLine).physical_rows();
            if (rows)
                bump(tm, ch::OrderLine, rng() % rows, rng);
        } else {
            --it;
            bump(tm, ch::Item, rng() % tm.db().table(ch::Item).physical_rows(), rng);
        }
    }
}

} // namespace htap::oracle
