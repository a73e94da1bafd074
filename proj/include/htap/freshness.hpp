#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "htap/database.hpp"
#include "htap/olap_instance.hpp"

namespace htap {

struct ColumnFreshness {
    std::string name;
    std::size_t width = 0;
    std::size_t insert_tail_rows = 0; ///< OLTP committed count minus OLAP watermark
    std::size_t updated_rows = 0;     ///< updated rows below the watermark, if the column was touched

    std::uint64_t fresh_bytes() const { return static_cast<std::uint64_t>(insert_tail_rows + updated_rows) * width; }
};

struct TableFreshness {
    std::string name;
    std::size_t oltp_rows = 0;
    std::size_t olap_watermark = 0;
    std::size_t stale_rows = 0; ///< rows below the watermark that differ from the OLTP snapshot
    std::vector<ColumnFreshness> columns;

    const ColumnFreshness &column(const std::string &name) const;
};

/// Fresh-data accounting between the frozen OLTP snapshot and the OLAP instance.
struct FreshnessStats {
    Epoch epoch = 0;
    std::vector<TableFreshness> tables;
    std::uint64_t n_ft = 0; ///< fresh bytes over all columns

    const TableFreshness &table(const std::string &name) const;
    /// Identical tuples over all tuples of the snapshot; 1 for an empty database.
    double freshness_rate() const;
};

/// Requires a synced snapshot: sync hands update tracking to the OLAP side.
FreshnessStats compute_freshness_stats(const Snapshot &snapshot, const OlapInstance &olap);

} // namespace htap
