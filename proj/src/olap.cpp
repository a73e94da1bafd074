#include "htap/olap.hpp"

#include <algorithm>
#include <atomic>
#include <limits>
#include <map>
#include <set>
#include <thread>
#include <unordered_set>

namespace htap {

std::string_view to_string(PathKind p)
{
    switch (p) {
    case PathKind::Local:
        return "LOCAL";
    case PathKind::Remote:
        return "REMOTE";
    case PathKind::Split:
        return "SPLIT";
    }
    return "?";
}

namespace {

bool contains(const std::vector<std::string> &v, const std::string &s) { return std::ranges::find(v, s) != v.end(); }

} // namespace

void QueryPlan::validate() const
{
    if (scans.empty())
        throw Error("plan " + name + " has no scans");
    if (aggregates.empty())
        throw Error("plan " + name + " has no aggregates");
    const auto &fact = scans.front();
    for (const auto &s : scans)
        for (const auto &p : s.predicates)
            if (!contains(s.columns, p.column))
                throw Error("predicate column " + p.column + " is not scanned");
    for (const auto &a : aggregates)
        if (a.op != AggOp::Count && !contains(fact.columns, a.column))
            throw Error("aggregate column " + a.column + " is not scanned");
    for (const auto &g : group_by)
        if (!contains(fact.columns, g))
            throw Error("group-by column " + g + " is not scanned");

    switch (shape) {
    case QueryShape::ScanFilterReduce:
    case QueryShape::ScanFilterGroupBy:
        if (scans.size() != 1 || join)
            throw Error("plan " + name + ": scan shapes read exactly one table");
        if ((shape == QueryShape::ScanFilterGroupBy) == group_by.empty())
            throw Error("plan " + name + ": group-by keys must match the shape");
        break;
    case QueryShape::FactDimensionJoin:
        if (scans.size() != 2 || !join || !group_by.empty())
            throw Error("plan " + name + ": join shape needs a fact and a dimension scan");
        if (join->fact_table != fact.table || join->dim_table != scans[1].table)
            throw Error("plan " + name + ": join tables do not match the scans");
        if (!contains(fact.columns, join->fact_key) || !contains(scans[1].columns, join->dim_key))
            throw Error("plan " + name + ": join keys are not scanned");
        break;
    }
}

const ColumnPath &AccessPathPlan::path(const std::string &table, const std::string &column) const
{
    for (const auto &c : columns)
        if (c.table == table && c.column == column)
            return c;
    throw Error("no access path for " + table + "." + column);
}

AccessPathPlan choose_access_paths(const QueryPlan &plan, const FreshnessStats &stats, const SystemState &state)
{
    plan.validate();
    if (stats.epoch != state.epoch)
        throw Error("freshness stats are from epoch " + std::to_string(stats.epoch) + " but the state is at epoch " +
                    std::to_string(state.epoch));
    if (state.olap_cpus.empty())
        throw Error("OLAP holds no CPUs");
    AccessPathPlan out;
    out.epoch = state.epoch;
    out.execution_cpus = state.olap_cpus;
    for (const auto &scan : plan.scans) {
        const auto &tf = stats.table(scan.table);
        for (const auto &col : scan.columns) {
            if (std::ranges::any_of(out.columns, [&](const ColumnPath &p) { return p.table == scan.table && p.column == col; }))
                continue;
            const auto &cf = tf.column(col);
            ColumnPath p{scan.table, col, PathKind::Local, tf.oltp_rows, tf.oltp_rows};
            if (state.tag == StateTag::S1 || cf.updated_rows > 0) {
                p.kind = PathKind::Remote;
                p.local_rows = 0;
            } else if (cf.insert_tail_rows > 0) {
                p.kind = PathKind::Split;
                p.local_rows = tf.olap_watermark;
            }
            out.columns.push_back(std::move(p));
        }
    }
    return out;
}

std::uint64_t fresh_bytes_for_query(const QueryPlan &plan, const FreshnessStats &stats)
{
    std::set<std::pair<std::string, std::string>> seen;
    std::uint64_t n = 0;
    for (const auto &scan : plan.scans) {
        const auto &tf = stats.table(scan.table);
        for (const auto &col : scan.columns)
            if (seen.emplace(scan.table, col).second)
                n += tf.column(col).fresh_bytes();
    }
    return n;
}

// ---------------------------------------------------------------- execution

namespace {

struct Source {
    const FrozenTable *frozen = nullptr;
    const OlapTable *olap = nullptr;
    std::size_t col = 0;
    std::size_t local_rows = 0;
    const ColumnSchema *schema = nullptr;

    const std::byte *cell(RowId r) const { return r < local_rows ? olap->cell(r, col) : frozen->cell(r, col); }
};

struct Vec {
    bool integral = true;
    std::vector<std::int64_t> i;
    std::vector<double> f;

    double as_double(std::size_t k) const { return integral ? static_cast<double>(i[k]) : f[k]; }
};

void gather(const Source &s, RowId begin, RowId end, Vec &out)
{
    const auto n = end - begin;
    out.integral = s.schema->integral();
    if (out.integral) {
        out.i.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            out.i[k] = load_int64(s.cell(begin + k));
    } else {
        out.f.resize(n);
        for (std::size_t k = 0; k < n; ++k)
            out.f[k] = load_float64(s.cell(begin + k));
    }
}

struct Bound {
    bool integral = true;
    std::int64_t ilo = 0, ihi = 0;
    double flo = 0, fhi = 0;
};

Bound make_bound(const ColumnSchema &col, const RangePredicate &p)
{
    if (!col.numeric())
        throw Error("predicate on non-numeric column " + col.name);
    auto to_d = [](const Value &v) {
        if (auto i = std::get_if<std::int64_t>(&v))
            return static_cast<double>(*i);
        if (auto d = std::get_if<double>(&v))
            return *d;
        throw Error("string bound on a numeric predicate");
    };
    Bound b;
    b.integral = col.integral() && std::holds_alternative<std::int64_t>(p.lo) && std::holds_alternative<std::int64_t>(p.hi);
    if (b.integral) {
        b.ilo = std::get<std::int64_t>(p.lo);
        b.ihi = std::get<std::int64_t>(p.hi);
    } else {
        b.flo = to_d(p.lo);
        b.fhi = to_d(p.hi);
    }
    return b;
}

void apply(const Vec &v, const Bound &b, std::vector<std::uint8_t> &sel)
{
    for (std::size_t k = 0; k < sel.size(); ++k) {
        if (!sel[k])
            continue;
        if (b.integral)
            sel[k] = v.i[k] >= b.ilo && v.i[k] <= b.ihi;
        else {
            const double x = v.as_double(k);
            sel[k] = x >= b.flo && x <= b.fhi;
        }
    }
}

struct Acc {
    std::int64_t count = 0;
    std::int64_t isum = 0;
    double fsum = 0;
    bool has_min = false;
    std::int64_t imin = 0;
    double fmin = 0;

    void add(const Vec &v, std::size_t k)
    {
        ++count;
        if (v.integral) {
            isum += v.i[k];
            if (!has_min || v.i[k] < imin)
                imin = v.i[k];
        } else {
            fsum += v.f[k];
            if (!has_min || v.f[k] < fmin)
                fmin = v.f[k];
        }
        has_min = true;
    }

    void merge(const Acc &o)
    {
        count += o.count;
        isum += o.isum;
        fsum += o.fsum;
        if (o.has_min) {
            if (!has_min || o.imin < imin)
                imin = o.imin;
            if (!has_min || o.fmin < fmin)
                fmin = o.fmin;
            has_min = true;
        }
    }
};

using AccRow = std::vector<Acc>;
using GroupKey = std::vector<std::int64_t>;

struct Partial {
    AccRow total;
    std::map<GroupKey, AccRow> groups;
};

struct ScanBinding {
    const FrozenTable *frozen = nullptr;
    const OlapTable *olap = nullptr;
    std::size_t rows = 0;
    std::vector<Source> sources; ///< in scan column order
    std::vector<std::pair<std::size_t, Bound>> predicates;

    std::size_t index(const std::vector<std::string> &cols, const std::string &c) const
    {
        return static_cast<std::size_t>(std::ranges::find(cols, c) - cols.begin());
    }
};

ScanBinding bind(const TableScan &scan, const AccessPathPlan &paths, const OlapInstance &olap, const Snapshot &snapshot)
{
    ScanBinding b;
    for (std::size_t i = 0; i < snapshot.tables.size(); ++i)
        if (snapshot.tables[i].store().name() == scan.table) {
            b.frozen = &snapshot.tables[i];
            b.olap = &olap.table(i);
        }
    if (!b.frozen)
        throw Error("unknown table " + scan.table);
    if (!b.frozen->valid())
        throw Error("snapshot of " + scan.table + " is no longer current");
    b.rows = b.frozen->rows();
    const auto &store = b.frozen->store();
    for (const auto &c : scan.columns) {
        const auto &p = paths.path(scan.table, c);
        if (p.total_rows != b.rows)
            throw Error("access path for " + scan.table + "." + c + " was planned for another snapshot");
        if (p.local_rows > b.olap->watermark())
            throw Error("access path for " + scan.table + "." + c + " reads past the OLAP watermark");
        const auto col = store.column_index(c);
        b.sources.push_back({b.frozen, b.olap, col, p.local_rows, &store.schema()[col]});
    }
    for (const auto &p : scan.predicates) {
        const auto k = b.index(scan.columns, p.column);
        b.predicates.emplace_back(k, make_bound(*b.sources[k].schema, p));
    }
    return b;
}

/// Rows of a block that pass the scan's predicates; gathers every scanned column.
std::vector<std::uint8_t> filter_block(const ScanBinding &b, RowId begin, RowId end, std::vector<Vec> &vecs)
{
    vecs.resize(b.sources.size());
    for (std::size_t k = 0; k < b.sources.size(); ++k)
        if (b.sources[k].schema->numeric())
            gather(b.sources[k], begin, end, vecs[k]);
    std::vector<std::uint8_t> sel(end - begin, 1);
    for (const auto &[k, bound] : b.predicates)
        apply(vecs[k], bound, sel);
    return sel;
}

Value finish(const Aggregate &a, const ColumnSchema *col, const Acc &acc)
{
    switch (a.op) {
    case AggOp::Count:
        return acc.count;
    case AggOp::Sum:
        return col->integral() ? Value{acc.isum} : Value{acc.fsum};
    case AggOp::Avg:
        if (acc.count == 0)
            return 0.0;
        return (col->integral() ? static_cast<double>(acc.isum) : acc.fsum) / static_cast<double>(acc.count);
    case AggOp::Min:
        if (!acc.has_min)
            return col->integral() ? Value{std::int64_t{0}} : Value{0.0};
        return col->integral() ? Value{acc.imin} : Value{acc.fmin};
    }
    return std::int64_t{0};
}

std::string agg_name(const Aggregate &a)
{
    switch (a.op) {
    case AggOp::Sum:
        return "sum(" + a.column + ")";
    case AggOp::Count:
        return "count(*)";
    case AggOp::Avg:
        return "avg(" + a.column + ")";
    case AggOp::Min:
        return "min(" + a.column + ")";
    }
    return "?";
}

} // namespace

ResultSet execute(const QueryPlan &plan, const AccessPathPlan &paths, const OlapInstance &olap, const Snapshot &snapshot,
                  const ExecOptions &opts)
{
    plan.validate();
    if (paths.epoch != snapshot.epoch)
        throw Error("access paths were planned for another epoch");
    if (opts.block_rows == 0)
        throw Error("block size must be positive");
    const auto &fact_scan = plan.scans.front();
    const ScanBinding fact = bind(fact_scan, paths, olap, snapshot);

    std::vector<std::size_t> agg_col(plan.aggregates.size(), 0);
    std::vector<const ColumnSchema *> agg_schema(plan.aggregates.size(), nullptr);
    for (std::size_t a = 0; a < plan.aggregates.size(); ++a) {
        const auto &ag = plan.aggregates[a];
        if (ag.op == AggOp::Count)
            continue;
        agg_col[a] = fact.index(fact_scan.columns, ag.column);
        agg_schema[a] = fact.sources[agg_col[a]].schema;
        if (!agg_schema[a]->numeric())
            throw Error("aggregate over non-numeric column " + ag.column);
    }
    std::vector<std::size_t> key_col;
    for (const auto &g : plan.group_by) {
        key_col.push_back(fact.index(fact_scan.columns, g));
        if (!fact.sources[key_col.back()].schema->integral())
            throw Error("group-by key " + g + " must be integral");
    }

    std::optional<ScanBinding> dim;
    std::size_t fact_key = 0, dim_key = 0;
    if (plan.join) {
        dim = bind(plan.scans[1], paths, olap, snapshot);
        fact_key = fact.index(fact_scan.columns, plan.join->fact_key);
        dim_key = dim->index(plan.scans[1].columns, plan.join->dim_key);
        if (!fact.sources[fact_key].schema->integral() || !dim->sources[dim_key].schema->integral())
            throw Error("join keys must be integral");
    }

    // blocks and their home sockets
    const std::size_t nblocks = (fact.rows + opts.block_rows - 1) / opts.block_rows;
    std::size_t olap_socket = 0, data_socket = 0;
    std::size_t nsockets = 1;
    if (opts.topology) {
        nsockets = opts.topology->socket_count();
        if (!opts.data_sockets.empty())
            data_socket = opts.data_sockets.front();
        olap_socket = data_socket;
        for (std::size_t s = 0; s < nsockets; ++s)
            if (std::ranges::find(opts.data_sockets, s) == opts.data_sockets.end()) {
                olap_socket = s;
                break;
            }
    }
    std::vector<std::vector<std::size_t>> queues(nsockets);
    for (std::size_t blk = 0; blk < nblocks; ++blk) {
        const RowId end = std::min(fact.rows, (blk + 1) * opts.block_rows);
        const bool local = std::ranges::all_of(fact.sources, [&](const Source &s) { return end <= s.local_rows; });
        queues[local ? olap_socket : data_socket].push_back(blk);
    }
    std::vector<std::atomic<std::size_t>> heads(nsockets);

    std::vector<Partial> partials(nblocks);
    const std::size_t nworkers = std::max<std::size_t>(1, opts.workers ? opts.workers : paths.execution_cpus.size());

    auto work = [&](std::size_t w) {
        std::size_t home = 0;
        if (opts.topology && !paths.execution_cpus.empty())
            home = opts.topology->socket_of(paths.execution_cpus[w % paths.execution_cpus.size()]);
        // private dimension hash set
        std::unordered_set<std::int64_t> dim_keys;
        if (dim) {
            std::vector<Vec> vecs;
            for (RowId b = 0; b < dim->rows; b += opts.block_rows) {
                const RowId e = std::min(dim->rows, b + opts.block_rows);
                const auto sel = filter_block(*dim, b, e, vecs);
                for (std::size_t k = 0; k < sel.size(); ++k)
                    if (sel[k])
                        dim_keys.insert(vecs[dim_key].i[k]);
            }
        }
        std::vector<Vec> vecs;
        for (std::size_t probe = 0; probe < nsockets; ++probe) {
            const std::size_t q = (home + probe) % nsockets;
            for (;;) {
                const std::size_t slot = heads[q].fetch_add(1, std::memory_order_relaxed);
                if (slot >= queues[q].size())
                    break;
                const std::size_t blk = queues[q][slot];
                const RowId b = blk * opts.block_rows;
                const RowId e = std::min(fact.rows, b + opts.block_rows);
                const auto sel = filter_block(fact, b, e, vecs);
                Partial &part = partials[blk];
                part.total.assign(plan.aggregates.size(), Acc{});
                GroupKey key(key_col.size());
                for (std::size_t k = 0; k < sel.size(); ++k) {
                    if (!sel[k])
                        continue;
                    if (dim && !dim_keys.contains(vecs[fact_key].i[k]))
                        continue;
                    AccRow *row = &part.total;
                    if (!key_col.empty()) {
                        for (std::size_t g = 0; g < key_col.size(); ++g)
                            key[g] = vecs[key_col[g]].i[k];
                        auto [it, fresh] = part.groups.try_emplace(key);
                        if (fresh)
                            it->second.assign(plan.aggregates.size(), Acc{});
                        row = &it->second;
                    }
                    for (std::size_t a = 0; a < plan.aggregates.size(); ++a) {
                        if (plan.aggregates[a].op == AggOp::Count)
                            ++(*row)[a].count;
                        else
                            (*row)[a].add(vecs[agg_col[a]], k);
                    }
                }
            }
        }
    };

    if (nworkers == 1 || nblocks <= 1) {
        work(0);
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t w = 0; w < nworkers; ++w)
            threads.emplace_back(work, w);
    }

    // combine in block order
    AccRow total(plan.aggregates.size());
    std::map<GroupKey, AccRow> groups;
    for (const auto &p : partials) {
        for (std::size_t a = 0; a < p.total.size(); ++a)
            total[a].merge(p.total[a]);
        for (const auto &[k, accs] : p.groups) {
            auto [it, fresh] = groups.try_emplace(k, plan.aggregates.size());
            for (std::size_t a = 0; a < accs.size(); ++a)
                it->second[a].merge(accs[a]);
        }
    }

    ResultSet rs;
    rs.columns = plan.group_by;
    for (const auto &a : plan.aggregates)
        rs.columns.push_back(agg_name(a));
    auto emit = [&](const GroupKey &key, const AccRow &accs) {
        Row r;
        for (auto k : key)
            r.emplace_back(k);
        for (std::size_t a = 0; a < plan.aggregates.size(); ++a)
            r.push_back(finish(plan.aggregates[a], agg_schema[a], accs[a]));
        rs.rows.push_back(std::move(r));
    };
    if (key_col.empty())
        emit({}, total);
    else
        for (const auto &[k, accs] : groups)
            emit(k, accs);
    return rs;
}

namespace queries {

QueryPlan q1(std::int64_t delivery_after)
{
    QueryPlan p;
    p.name = "Q1";
    p.shape = QueryShape::ScanFilterGroupBy;
    p.scans = {{"orderline",
                {"ol_number", "ol_quantity", "ol_amount", "ol_delivery_d"},
                {{"ol_delivery_d", Value{delivery_after}, Value{std::numeric_limits<std::int64_t>::max()}}}}};
    p.aggregates = {{AggOp::Sum, "ol_quantity"}, {AggOp::Sum, "ol_amount"}, {AggOp::Avg, "ol_quantity"},
                    {AggOp::Avg, "ol_amount"},   {AggOp::Count, ""}};
    p.group_by = {"ol_number"};
    return p;
}

QueryPlan q6(std::int64_t date_lo, std::int64_t date_hi, std::int64_t qty_lo, std::int64_t qty_hi)
{
    QueryPlan p;
    p.name = "Q6";
    p.shape = QueryShape::ScanFilterReduce;
    p.scans = {{"orderline",
                {"ol_amount", "ol_delivery_d", "ol_quantity"},
                {{"ol_delivery_d", Value{date_lo}, Value{date_hi}}, {"ol_quantity", Value{qty_lo}, Value{qty_hi}}}}};
    p.aggregates = {{AggOp::Sum, "ol_amount"}};
    return p;
}

QueryPlan q19(std::int64_t qty_lo, std::int64_t qty_hi, double price_lo, double price_hi)
{
    QueryPlan p;
    p.name = "Q19";
    p.shape = QueryShape::FactDimensionJoin;
    p.scans = {{"orderline", {"ol_i_id", "ol_quantity", "ol_amount"}, {{"ol_quantity", Value{qty_lo}, Value{qty_hi}}}},
               {"item", {"i_id", "i_price"}, {{"i_price", Value{price_lo}, Value{price_hi}}}}};
    p.aggregates = {{AggOp::Sum, "ol_amount"}};
    p.join = JoinSpec{"orderline", "item", "ol_i_id", "i_id"};
    return p;
}

QueryPlan by_name(const std::string &name)
{
    if (name == "Q1" || name == "q1")
        return q1();
    if (name == "Q6" || name == "q6")
        return q6();
    if (name == "Q19" || name == "q19")
        return q19();
    throw Error("unknown query " + name);
}

} // namespace queries

} // namespace htap
