#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "htap/freshness.hpp"
#include "htap/olap_instance.hpp"
#include "htap/resources.hpp"

namespace htap {

enum class QueryShape { ScanFilterReduce, ScanFilterGroupBy, FactDimensionJoin };
enum class AggOp { Sum, Count, Avg, Min };

/// Closed range on a numeric column; bounds use the column's own kind.
struct RangePredicate {
    std::string column;
    Value lo;
    Value hi;
};

struct TableScan {
    std::string table;
    std::vector<std::string> columns;
    std::vector<RangePredicate> predicates;
};

/// Aggregates read columns of the first (fact) scan. Count ignores `column`.
struct Aggregate {
    AggOp op = AggOp::Sum;
    std::string column;
};

/// Semi-join of the fact scan against the dimension rows passing their predicates.
struct JoinSpec {
    std::string fact_table;
    std::string dim_table;
    std::string fact_key;
    std::string dim_key;
};

struct QueryPlan {
    std::string name;
    QueryShape shape = QueryShape::ScanFilterReduce;
    std::vector<TableScan> scans;
    std::vector<Aggregate> aggregates;
    std::vector<std::string> group_by;
    std::optional<JoinSpec> join;

    /// Checks the shape rules and that every referenced column is scanned.
    void validate() const;
};

enum class PathKind { Local, Remote, Split };

std::string_view to_string(PathKind p);

struct ColumnPath {
    std::string table;
    std::string column;
    PathKind kind = PathKind::Local;
    std::size_t local_rows = 0; ///< [0, local_rows) from the OLAP instance
    std::size_t total_rows = 0; ///< [local_rows, total_rows) from the frozen OLTP instance
};

struct AccessPathPlan {
    Epoch epoch = 0;
    std::vector<ColumnPath> columns;
    std::vector<CpuId> execution_cpus;

    const ColumnPath &path(const std::string &table, const std::string &column) const;
};

/// Per-column access paths: S1 reads everything from the frozen instance;
/// otherwise a column with updated tuples is read remotely, an insert-only
/// column with a tail is split at the OLAP watermark, and the rest is local.
AccessPathPlan choose_access_paths(const QueryPlan &plan, const FreshnessStats &stats, const SystemState &state);

/// Fresh bytes over the distinct columns the plan scans.
std::uint64_t fresh_bytes_for_query(const QueryPlan &plan, const FreshnessStats &stats);

struct ResultSet {
    std::vector<std::string> columns;
    std::vector<Row> rows;
};

struct ExecOptions {
    std::size_t workers = 0; ///< 0: one per execution CPU
    std::size_t block_rows = 4096;
    const Topology *topology = nullptr; ///< for block locality; all blocks local if absent
    std::vector<std::size_t> data_sockets;  ///< sockets backing the frozen OLTP instance
};

/// Runs the plan over the logical snapshot: the frozen OLTP rows, with each
/// column read through its assigned path. Block partials are combined in
/// block order, so results do not depend on the worker count.
ResultSet execute(const QueryPlan &plan, const AccessPathPlan &paths, const OlapInstance &olap, const Snapshot &snapshot,
                  const ExecOptions &opts = {});

/// Parameterized CH-lite query shapes.
namespace queries {

QueryPlan q1(std::int64_t delivery_after = 0);
QueryPlan q6(std::int64_t date_lo = 0, std::int64_t date_hi = INT64_MAX, std::int64_t qty_lo = 1,
             std::int64_t qty_hi = 100'000);
QueryPlan q19(std::int64_t qty_lo = 1, std::int64_t qty_hi = 10, double price_lo = 1.0, double price_hi = 400'000.0);
QueryPlan by_name(const std::string &name);

} // namespace queries

} // namespace htap
