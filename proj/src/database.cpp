#include "htap/database.hpp"

namespace htap {

std::size_t DatabaseSyncReport::rows_copied() const
{
    std::size_t n = 0;
    for (const auto &t : tables)
        n += t.rows_copied;
    return n;
}

Database::Database() : gate_(std::make_shared<InstanceGate>()) {}

TwinStore &Database::create_table(const std::string &name, Schema schema, StoreOptions opts)
{
    for (const auto &t : tables_)
        if (t->name() == name)
            throw Error("duplicate table name " + name);
    tables_.push_back(std::make_unique<TwinStore>(name, std::move(schema), opts, gate_));
    return *tables_.back();
}

std::size_t Database::ordinal(const std::string &name) const
{
    for (std::size_t i = 0; i < tables_.size(); ++i)
        if (tables_[i]->name() == name)
            return i;
    throw Error("unknown table " + name);
}

TwinStore &Database::table(const std::string &name) { return *tables_[ordinal(name)]; }
const TwinStore &Database::table(const std::string &name) const { return *tables_[ordinal(name)]; }

Snapshot Database::switch_instances()
{
    for (const auto &t : tables_)
        if (t->sync_pending())
            throw Error("previous switch has not been synced");
    Snapshot snap;
    snap.epoch = gate_->switch_active([&](int old, Epoch epoch) {
        snap.tables.reserve(tables_.size());
        snap.stats.reserve(tables_.size());
        for (auto &t : tables_) {
            auto [frozen, stats] = t->freeze(old, epoch);
            snap.tables.push_back(frozen);
            snap.stats.push_back(std::move(stats));
        }
    });
    return snap;
}

DatabaseSyncReport Database::sync(const Snapshot &snapshot)
{
    DatabaseSyncReport report;
    report.tables.resize(tables_.size());
    if (snapshot.tables.size() != tables_.size() || snapshot.epoch != gate_->epoch())
        throw Error("sync requires the current snapshot");
    if (tables_.empty())
        return report;
    const int old = snapshot.tables.front().instance();
    if (!gate_->take_updated(old)) {
        report.short_circuited = true;
        for (std::size_t i = 0; i < tables_.size(); ++i) {
            report.tables[i].short_circuited = true;
            tables_[i]->mark_synced();
        }
        return report;
    }
    for (std::size_t i = 0; i < tables_.size(); ++i)
        report.tables[i] = tables_[i]->sync(snapshot.tables[i], snapshot.stats[i]);
    return report;
}

} // namespace htap
