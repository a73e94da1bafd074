#include "htap/verify/oracle.hpp"

#include <cmath>
#include <cstring>
#include <map>
#include <set>

namespace htap::oracle {

namespace {

double num(const Value &v)
{
    if (auto i = std::get_if<std::int64_t>(&v))
        return static_cast<double>(*i);
    return std::get<double>(v);
}

bool in_range(const Value &v, const RangePredicate &p)
{
    if (std::holds_alternative<std::int64_t>(v) && std::holds_alternative<std::int64_t>(p.lo) &&
        std::holds_alternative<std::int64_t>(p.hi)) {
        const auto x = std::get<std::int64_t>(v);
        return x >= std::get<std::int64_t>(p.lo) && x <= std::get<std::int64_t>(p.hi);
    }
    const double x = num(v);
    return x >= num(p.lo) && x <= num(p.hi);
}

const FrozenTable &find(const Snapshot &s, const std::string &name)
{
    for (const auto &t : s.tables)
        if (t.store().name() == name)
            return t;
    throw Error("oracle: unknown table " + name);
}

bool passes(const FrozenTable &t, RowId r, const TableScan &scan)
{
    for (const auto &p : scan.predicates)
        if (!in_range(t.get(r, t.store().column_index(p.column)), p))
            return false;
    return true;
}

struct Agg {
    std::int64_t n = 0;
    bool integral = true;
    std::int64_t isum = 0;
    double fsum = 0;
    std::optional<Value> min;
};

} // namespace

ResultSet evaluate(const QueryPlan &plan, const Snapshot &snapshot)
{
    const auto &fact_scan = plan.scans.at(0);
    const auto &fact = find(snapshot, fact_scan.table);
    const auto &fstore = fact.store();

    std::map<std::vector<std::int64_t>, std::vector<Agg>> groups;
    if (plan.group_by.empty())
        groups[{}].resize(plan.aggregates.size());

    // dimension keys whose rows pass their predicates
    std::set<Value> dim_keys;
    if (plan.join) {
        const auto &dim_scan = plan.scans.at(1);
        const auto &dim = find(snapshot, dim_scan.table);
        const auto dk = dim.store().column_index(plan.join->dim_key);
        for (RowId d = 0; d < dim.rows(); ++d)
            if (passes(dim, d, dim_scan))
                dim_keys.insert(dim.get(d, dk));
    }

    for (RowId r = 0; r < fact.rows(); ++r) {
        if (!passes(fact, r, fact_scan))
            continue;
        if (plan.join && !dim_keys.contains(fact.get(r, fstore.column_index(plan.join->fact_key))))
            continue;
        std::vector<std::int64_t> key;
        for (const auto &g : plan.group_by)
            key.push_back(std::get<std::int64_t>(fact.get(r, fstore.column_index(g))));
        auto &accs = groups[key];
        accs.resize(plan.aggregates.size());
        for (std::size_t a = 0; a < plan.aggregates.size(); ++a) {
            auto &acc = accs[a];
            ++acc.n;
            if (plan.aggregates[a].op == AggOp::Count)
                continue;
            const auto v = fact.get(r, fstore.column_index(plan.aggregates[a].column));
            if (auto i = std::get_if<std::int64_t>(&v)) {
                acc.isum += *i;
                if (!acc.min || *i < std::get<std::int64_t>(*acc.min))
                    acc.min = v;
            } else {
                acc.integral = false;
                acc.fsum += std::get<double>(v);
                if (!acc.min || std::get<double>(v) < std::get<double>(*acc.min))
                    acc.min = v;
            }
        }
    }

    ResultSet rs;
    rs.columns = plan.group_by;
    for (const auto &a : plan.aggregates)
        rs.columns.push_back(a.column);
    for (const auto &[key, accs] : groups) {
        Row row;
        for (auto k : key)
            row.emplace_back(k);
        for (std::size_t a = 0; a < plan.aggregates.size(); ++a) {
            const auto &acc = accs[a];
            bool integral = true;
            if (plan.aggregates[a].op != AggOp::Count)
                integral = fstore.schema()[fstore.column_index(plan.aggregates[a].column)].integral();
            switch (plan.aggregates[a].op) {
            case AggOp::Count:
                row.emplace_back(acc.n);
                break;
            case AggOp::Sum:
                row.push_back(integral ? Value{acc.isum} : Value{acc.fsum});
                break;
            case AggOp::Avg:
                row.emplace_back(acc.n == 0 ? 0.0 : (integral ? static_cast<double>(acc.isum) : acc.fsum) / acc.n);
                break;
            case AggOp::Min:
                row.push_back(acc.min ? *acc.min : (integral ? Value{std::int64_t{0}} : Value{0.0}));
                break;
            }
        }
        rs.rows.push_back(std::move(row));
    }
    return rs;
}

bool results_match(const ResultSet &a, const ResultSet &b, double rel)
{
    if (a.rows.size() != b.rows.size())
        return false;
    for (std::size_t r = 0; r < a.rows.size(); ++r) {
        if (a.rows[r].size() != b.rows[r].size())
            return false;
        for (std::size_t c = 0; c < a.rows[r].size(); ++c) {
            const auto &x = a.rows[r][c];
            const auto &y = b.rows[r][c];
            if (x.index() != y.index())
                return false;
            if (auto dx = std::get_if<double>(&x)) {
                const double dy = std::get<double>(y);
                const double scale = std::max({std::fabs(*dx), std::fabs(dy), 1.0});
                if (std::fabs(*dx - dy) > rel * scale)
                    return false;
            } else if (!(x == y)) {
                return false;
            }
        }
    }
    return true;
}

std::uint64_t etl_bytes(const Snapshot &snapshot, const OlapInstance &olap)
{
    std::uint64_t bytes = 0;
    for (std::size_t i = 0; i < snapshot.tables.size(); ++i) {
        const auto &f = snapshot.tables[i];
        const auto &o = olap.table(i);
        const auto &schema = f.store().schema();
        const std::size_t wm = o.watermark();
        std::size_t width = 0;
        for (const auto &c : schema)
            width += c.width();
        bytes += static_cast<std::uint64_t>(f.rows() - wm) * width;
        std::set<std::size_t> cols;
        std::size_t rows = 0;
        for (RowId r = 0; r < wm; ++r) {
            bool differs = false;
            for (std::size_t c = 0; c < schema.size(); ++c)
                if (std::memcmp(f.cell(r, c), o.cell(r, c), schema[c].width()) != 0) {
                    cols.insert(c);
                    differs = true;
                }
            rows += differs;
        }
        std::size_t diff_width = 0;
        for (auto c : cols)
            diff_width += schema[c].width();
        bytes += static_cast<std::uint64_t>(rows) * diff_width;
    }
    return bytes;
}

double freshness_rate(const Snapshot &snapshot, const OlapInstance &olap)
{
    std::uint64_t total = 0, same = 0;
    for (std::size_t i = 0; i < snapshot.tables.size(); ++i) {
        const auto &f = snapshot.tables[i];
        const auto &o = olap.table(i);
        const auto &schema = f.store().schema();
        total += f.rows();
        for (RowId r = 0; r < std::min(o.watermark(), f.rows()); ++r) {
            bool eq = true;
            for (std::size_t c = 0; c < schema.size() && eq; ++c)
                eq = std::memcmp(f.cell(r, c), o.cell(r, c), schema[c].width()) == 0;
            same += eq;
        }
    }
    return total == 0 ? 1.0 : static_cast<double>(same) / static_cast<double>(total);
}

std::vector<RowId> instance_diff(const TwinStore &store, std::size_t limit)
{
    std::vector<RowId> out;
    const auto &schema = store.schema();
    for (RowId r = 0; r < std::min(limit, store.physical_rows()); ++r)
        for (std::size_t c = 0; c < schema.size(); ++c)
            if (std::memcmp(store.cell(0, r, c), store.cell(1, r, c), schema[c].width()) != 0) {
                out.push_back(r);
                break;
            }
    return out;
}

} // namespace htap::oracle
