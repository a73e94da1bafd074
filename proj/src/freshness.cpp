#include "htap/freshness.hpp"

namespace htap {

const ColumnFreshness &TableFreshness::column(const std::string &n) const
{
    for (const auto &c : columns)
        if (c.name == n)
            return c;
    throw Error("unknown column " + n + " in freshness stats of " + name);
}

const TableFreshness &FreshnessStats::table(const std::string &n) const
{
    for (const auto &t : tables)
        if (t.name == n)
            return t;
    throw Error("unknown table " + n + " in freshness stats");
}

double FreshnessStats::freshness_rate() const
{
    std::uint64_t total = 0;
    std::uint64_t same = 0;
    for (const auto &t : tables) {
        total += t.oltp_rows;
        same += t.olap_watermark - t.stale_rows;
    }
    return total == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(total);
}

FreshnessStats compute_freshness_stats(const Snapshot &snapshot, const OlapInstance &olap)
{
    if (snapshot.tables.size() != olap.table_count())
        throw Error("snapshot and OLAP instance disagree on tables");
    FreshnessStats out;
    out.epoch = snapshot.epoch;
    for (std::size_t i = 0; i < snapshot.tables.size(); ++i) {
        const auto &frozen = snapshot.tables[i];
        if (!frozen.valid())
            throw Error("freshness stats need the current snapshot");
        const auto &store = frozen.store();
        if (store.sync_pending())
            throw Error("freshness stats need a synced snapshot");
        const auto &ot = olap.table(i);
        TableFreshness tf;
        tf.name = store.name();
        tf.oltp_rows = frozen.rows();
        tf.olap_watermark = ot.watermark();
        tf.stale_rows = store.olap_dirty().count_below(tf.olap_watermark);
        const auto &flags = store.olap_dirty_columns();
        for (std::size_t c = 0; c < store.schema().size(); ++c) {
            ColumnFreshness cf;
            cf.name = store.schema()[c].name;
            cf.width = store.schema()[c].width();
            cf.insert_tail_rows = tf.oltp_rows - tf.olap_watermark;
            cf.updated_rows = flags[c] ? tf.stale_rows : 0;
            out.n_ft += cf.fresh_bytes();
            tf.columns.push_back(std::move(cf));
        }
        out.tables.push_back(std::move(tf));
    }
    return out;
}

} // namespace htap
