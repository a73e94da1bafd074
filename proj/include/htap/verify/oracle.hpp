#pragma once

#include <cstdint>
#include <vector>

#include "htap/database.hpp"
#include "htap/olap.hpp"
#include "htap/olap_instance.hpp"

/// Reference implementations that share no code paths with the engine.
namespace htap::oracle {

/// Row-at-a-time evaluation over the frozen rows, key-set semi-joins, sequential sums.
ResultSet evaluate(const QueryPlan &plan, const Snapshot &snapshot);

/// Integers exact, floats within `rel` relative (absolute near zero).
bool results_match(const ResultSet &a, const ResultSet &b, double rel = 1e-9);

/// Bytes an ETL must move: the insert tail in full, plus the rows below the
/// watermark that differ, times the widths of the columns that differ anywhere.
std::uint64_t etl_bytes(const Snapshot &snapshot, const OlapInstance &olap);

/// Identical tuples over all snapshot tuples, by full comparison.
double freshness_rate(const Snapshot &snapshot, const OlapInstance &olap);

/// Rows below `limit` whose two OLTP instances differ.
std::vector<RowId> instance_diff(const TwinStore &store, std::size_t limit);

} // namespace htap::oracle

namespace htap {
class TransactionManager;
}

namespace htap::oracle {

struct HistoryOptions {
    int new_orders = 20;
    int orderline_updates = 20;
    int item_updates = 5;
};

/// Seeded mix of NewOrder inserts and value-increasing updates of order lines
/// and item prices, committed through the transaction manager in random order.
void random_history(TransactionManager &tm, std::uint64_t seed, const HistoryOptions &opts, std::int64_t warehouses,
                    std::int64_t items);

} // namespace htap::oracle
