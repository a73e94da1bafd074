#pragma once

#include <memory>
#include <string>
#include <vector>

#include "htap/storage.hpp"

namespace htap {

/// Frozen handles and switch statistics of every table, taken at one switch instant.
struct Snapshot {
    Epoch epoch = 0;
    std::vector<FrozenTable> tables;
    std::vector<SwitchStats> stats;

    const FrozenTable &table(std::size_t ordinal) const { return tables.at(ordinal); }
};

struct DatabaseSyncReport {
    std::vector<SyncReport> tables;
    bool short_circuited = false; ///< no table had updates
    std::size_t rows_copied() const;
};

/// A set of twin-instance tables sharing one instance gate, so a switch
/// freezes all of them at the same instant.
class Database {
public:
    Database();
    Database(const Database &) = delete;
    Database &operator=(const Database &) = delete;

    /// Table ordinals follow creation order and define the global lock order.
    TwinStore &create_table(const std::string &name, Schema schema, StoreOptions opts = {});

    std::size_t table_count() const { return tables_.size(); }
    TwinStore &table(std::size_t ordinal) { return *tables_.at(ordinal); }
    const TwinStore &table(std::size_t ordinal) const { return *tables_.at(ordinal); }
    TwinStore &table(const std::string &name);
    const TwinStore &table(const std::string &name) const;
    std::size_t ordinal(const std::string &name) const;

    InstanceGate &gate() const { return *gate_; }

    Snapshot switch_instances();

    /// Sync step for a snapshot; checks the database flag first, then each table.
    DatabaseSyncReport sync(const Snapshot &snapshot);

private:
    std::shared_ptr<InstanceGate> gate_;
    std::vector<std::unique_ptr<TwinStore>> tables_;
};

} // namespace htap
