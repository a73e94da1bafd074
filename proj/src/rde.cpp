#include "htap/rde.hpp"

#include <algorithm>
#include <cstring>

namespace htap {

std::string_view to_string(Engine e)
{
    switch (e) {
    case Engine::Free:
        return "FREE";
    case Engine::Oltp:
        return "OLTP";
    case Engine::Olap:
        return "OLAP";
    }
    return "?";
}

// ---------------------------------------------------------------- ledger

namespace {

void check_thresholds(const Topology &topo, const Thresholds &thres)
{
    if (thres.oltp_cpu_thres.size() != topo.socket_count())
        throw Error("need one OLTP CPU threshold per socket");
    for (std::size_t s = 0; s < topo.socket_count(); ++s)
        if (thres.oltp_cpu_thres[s] > topo.sockets[s].size())
            throw Error("OLTP CPU threshold exceeds socket " + std::to_string(s));
    if (thres.oltp_sock_thres < 1)
        throw Error("OLTP needs at least one socket");
}

void check_olap(const Assignment &a)
{
    if (!std::ranges::any_of(a, [](const auto &kv) { return kv.second == Engine::Olap; }))
        throw Error("migration would leave OLAP without CPUs");
    if (!std::ranges::any_of(a, [](const auto &kv) { return kv.second == Engine::Oltp; }))
        throw Error("migration would leave OLTP without CPUs");
}

} // namespace

ResourceLedger::ResourceLedger(Topology topology, Thresholds thresholds)
    : topo_(std::move(topology)), thres_(std::move(thresholds))
{
    topo_.validate();
    check_thresholds(topo_, thres_);
    apply(assign_s2(topo_, thres_));
}

std::vector<CpuId> ResourceLedger::cpus(Engine e) const
{
    std::vector<CpuId> out;
    for (const auto &s : topo_.sockets)
        for (auto c : s)
            if (assign_.at(c) == e)
                out.push_back(c);
    return out;
}

std::vector<CpuId> ResourceLedger::cpus(Engine e, std::size_t socket) const
{
    std::vector<CpuId> out;
    for (auto c : topo_.sockets.at(socket))
        if (assign_.at(c) == e)
            out.push_back(c);
    return out;
}

std::vector<std::size_t> ResourceLedger::oltp_sockets() const
{
    std::vector<std::size_t> out;
    for (std::size_t s = 0; s < topo_.socket_count(); ++s)
        if (!cpus(Engine::Oltp, s).empty())
            out.push_back(s);
    return out;
}

void ResourceLedger::apply(const Assignment &a)
{
    if (a.size() != topo_.cpu_count())
        throw Error("assignment must cover every CPU exactly once");
    for (const auto &s : topo_.sockets)
        for (auto c : s)
            if (!a.contains(c))
                throw Error("assignment misses CPU " + std::to_string(c));
    assign_ = a;
}

Assignment assign_s1(const Topology &topo, const Thresholds &thres)
{
    check_thresholds(topo, thres);
    Assignment a;
    for (std::size_t s = 0; s < topo.socket_count(); ++s) {
        const auto &cpus = topo.sockets[s];
        for (std::size_t i = 0; i < cpus.size(); ++i)
            a[cpus[i]] = i < thres.oltp_cpu_thres[s] ? Engine::Oltp : Engine::Olap;
    }
    check_olap(a);
    return a;
}

Assignment assign_s2(const Topology &topo, const Thresholds &thres)
{
    check_thresholds(topo, thres);
    if (topo.socket_count() < thres.oltp_sock_thres + 1)
        throw Error("isolation needs more sockets than the OLTP socket threshold");
    Assignment a;
    for (std::size_t s = 0; s < topo.socket_count(); ++s)
        for (auto c : topo.sockets[s])
            a[c] = s < thres.oltp_sock_thres ? Engine::Oltp : Engine::Olap;
    check_olap(a);
    return a;
}

Assignment assign_s3(const Topology &topo, const Thresholds &thres, S3Mode mode)
{
    Assignment a = assign_s2(topo, thres);
    if (mode == S3Mode::NonIsolated)
        for (std::size_t s = 0; s < thres.oltp_sock_thres; ++s) {
            const auto &cpus = topo.sockets[s];
            for (std::size_t i = thres.oltp_cpu_thres[s]; i < cpus.size(); ++i)
                a[cpus[i]] = Engine::Olap;
        }
    check_olap(a);
    return a;
}

Assignment assign_for(StateTag tag, const Topology &topo, const Thresholds &thres)
{
    switch (tag) {
    case StateTag::S1:
        return assign_s1(topo, thres);
    case StateTag::S2:
        return assign_s2(topo, thres);
    case StateTag::S3_IS:
        return assign_s3(topo, thres, S3Mode::Isolated);
    case StateTag::S3_NI:
        return assign_s3(topo, thres, S3Mode::NonIsolated);
    }
    throw Error("unknown state");
}

// ---------------------------------------------------------------- ETL

EtlReport etl_delta(Database &db, const Snapshot &snapshot, OlapInstance &olap, const EtlOptions &opts)
{
    if (snapshot.tables.size() != db.table_count() || snapshot.tables.size() != olap.table_count())
        throw Error("ETL needs a snapshot of every table");
    if (snapshot.epoch != db.gate().epoch())
        throw Error("ETL snapshot is from epoch " + std::to_string(snapshot.epoch) + ", current epoch is " +
                    std::to_string(db.gate().epoch()));
    EtlReport rep;
    for (std::size_t i = 0; i < db.table_count(); ++i) {
        auto &store = db.table(i);
        const auto &frozen = snapshot.tables[i];
        if (store.sync_pending())
            throw Error("ETL needs a synced snapshot");
        auto &ot = olap.table(i);
        const std::size_t rows = frozen.rows();
        const std::size_t wm = ot.watermark();
        const auto &schema = store.schema();
        ot.reserve(rows);

        // insert tail, contiguous ranges per column
        for (std::size_t c = 0; c < schema.size(); ++c) {
            const auto w = schema[c].width();
            for (RowId r = wm; r < rows;) {
                const RowId end = std::min(rows, (r / ChunkedColumn::kChunkRows + 1) * ChunkedColumn::kChunkRows);
                std::memcpy(ot.cell(r, c), frozen.cell(r, c), (end - r) * w);
                r = end;
            }
            rep.bytes_copied += static_cast<std::uint64_t>(rows - wm) * w;
        }
        rep.tail_rows += rows - wm;

        // updated rows of the touched columns
        const auto flags = store.olap_dirty_columns();
        std::size_t row_bytes = 0;
        for (std::size_t c = 0; c < schema.size(); ++c)
            if (flags[c])
                row_bytes += schema[c].width();
        std::vector<RowId> updated;
        store.olap_dirty().for_each_set(wm, [&](RowId r) { updated.push_back(r); });
        if (row_bytes > 0)
            for (auto r : updated) {
                for (std::size_t c = 0; c < schema.size(); ++c)
                    if (flags[c])
                        std::memcpy(ot.cell(r, c), frozen.cell(r, c), schema[c].width());
                rep.bytes_copied += row_bytes;
                ++rep.updated_rows;
            }

        ot.set_watermark(rows);
        if (!opts.skip_bit_clear)
            store.olap_dirty().for_each_set(rows, [&](RowId r) { store.clear_olap_dirty(r); });
        store.clear_olap_dirty_columns();
    }
    olap.set_epoch_synced(snapshot.epoch);
    return rep;
}

// ---------------------------------------------------------------- Rde

Rde::Rde(Database &db, ResourceLedger ledger) : db_(db), ledger_(std::move(ledger)), olap_(db)
{
    state_.tag = StateTag::S2;
    state_.epoch = db_.gate().epoch();
    state_.olap_cpus = ledger_.cpus(Engine::Olap);
    state_.oltp_sockets = ledger_.oltp_sockets();
}

const Snapshot &Rde::switch_and_sync()
{
    snapshot_ = db_.switch_instances();
    last_sync_ = db_.sync(*snapshot_);
    return *snapshot_;
}

const Snapshot &Rde::snapshot() const
{
    if (!snapshot_)
        throw Error("no snapshot has been taken");
    return *snapshot_;
}

FreshnessStats Rde::freshness_stats() const { return compute_freshness_stats(snapshot(), olap_); }

EtlReport Rde::etl()
{
    auto rep = etl_delta(db_, snapshot(), olap_, etl_opts_);
    ++etl_count_;
    etl_bytes_ += rep.bytes_copied;
    return rep;
}

SystemState Rde::enter(StateTag tag, const Assignment &a, bool switch_first)
{
    ledger_.apply(a);
    if (oltp_hook_) {
        const auto oltp = ledger_.cpus(Engine::Oltp);
        oltp_hook_(oltp);
    }
    if (switch_first || !snapshot_)
        switch_and_sync();
    state_.tag = tag;
    state_.epoch = snapshot_->epoch;
    state_.olap_cpus = ledger_.cpus(Engine::Olap);
    state_.oltp_sockets = ledger_.oltp_sockets();
    return state_;
}

SystemState Rde::migrate_s1(bool switch_first)
{
    const auto a = assign_s1(ledger_.topology(), ledger_.thresholds());
    source_ = OlapSource::FrozenOltp;
    return enter(StateTag::S1, a, switch_first);
}

SystemState Rde::migrate_s2(bool switch_first)
{
    const auto a = assign_s2(ledger_.topology(), ledger_.thresholds());
    auto s = enter(StateTag::S2, a, switch_first);
    etl();
    source_ = OlapSource::LocalInstance;
    return s;
}

SystemState Rde::migrate_s3(S3Mode mode, bool switch_first)
{
    const auto a = assign_s3(ledger_.topology(), ledger_.thresholds(), mode);
    source_ = OlapSource::FrozenOltp;
    return enter(mode == S3Mode::Isolated ? StateTag::S3_IS : StateTag::S3_NI, a, switch_first);
}

SystemState Rde::migrate(StateTag tag, bool switch_first)
{
    switch (tag) {
    case StateTag::S1:
        return migrate_s1(switch_first);
    case StateTag::S2:
        return migrate_s2(switch_first);
    case StateTag::S3_IS:
        return migrate_s3(S3Mode::Isolated, switch_first);
    case StateTag::S3_NI:
        return migrate_s3(S3Mode::NonIsolated, switch_first);
    }
    throw Error("unknown state");
}

} // namespace htap
