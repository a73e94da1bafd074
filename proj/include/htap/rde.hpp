#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "htap/database.hpp"
#include "htap/freshness.hpp"
#include "htap/olap_instance.hpp"
#include "htap/resources.hpp"

namespace htap {

enum class Engine { Free, Oltp, Olap };
enum class S3Mode { Isolated, NonIsolated };

std::string_view to_string(Engine e);

/// CPU id to owning engine.
using Assignment = std::map<CpuId, Engine>;

struct Thresholds {
    std::size_t oltp_sock_thres = 1;          ///< minimum whole sockets kept by OLTP
    std::vector<std::size_t> oltp_cpu_thres;  ///< minimum OLTP CPUs per socket
};

/// Sockets and CPUs with their current owner, plus the administrator thresholds.
class ResourceLedger {
public:
    ResourceLedger(Topology topology, Thresholds thresholds);

    const Topology &topology() const { return topo_; }
    const Thresholds &thresholds() const { return thres_; }
    const Assignment &assignment() const { return assign_; }
    Engine owner(CpuId cpu) const { return assign_.at(cpu); }
    std::vector<CpuId> cpus(Engine e) const;
    std::vector<CpuId> cpus(Engine e, std::size_t socket) const;
    /// Sockets where OLTP holds at least one CPU.
    std::vector<std::size_t> oltp_sockets() const;

    /// Replaces the assignment; it must cover every CPU exactly once.
    void apply(const Assignment &a);

private:
    Topology topo_;
    Thresholds thres_;
    Assignment assign_;
};

/// Co-location: on every socket OLTP takes its threshold of CPUs in ascending
/// id order and OLAP the remainder.
Assignment assign_s1(const Topology &topo, const Thresholds &thres);
/// Isolation: the first oltp_sock_thres sockets go to OLTP, the rest to OLAP.
Assignment assign_s2(const Topology &topo, const Thresholds &thres);
/// Hybrid: isolated is the S2 split; non-isolated additionally hands OLAP the
/// CPUs of OLTP sockets above the per-socket threshold.
Assignment assign_s3(const Topology &topo, const Thresholds &thres, S3Mode mode);
Assignment assign_for(StateTag tag, const Topology &topo, const Thresholds &thres);

struct EtlReport {
    std::uint64_t bytes_copied = 0;
    std::size_t tail_rows = 0;
    std::size_t updated_rows = 0;
};

struct EtlOptions {
    bool skip_bit_clear = false; ///< fault injection for mutation tests
};

/// Copies the insert tail and the updated rows of the touched columns from the
/// frozen instance into the OLAP instance, then advances the watermarks and
/// clears OLAP-side update tracking.
EtlReport etl_delta(Database &db, const Snapshot &snapshot, OlapInstance &olap, const EtlOptions &opts = {});

/// Where OLAP reads its data in the current state.
enum class OlapSource { LocalInstance, FrozenOltp };

/// The resource-and-data-exchange actor: switches and syncs the OLTP
/// instances, moves deltas into the OLAP instance and applies migrations to
/// the ledger. Single caller.
class Rde {
public:
    Rde(Database &db, ResourceLedger ledger);

    Database &db() { return db_; }
    ResourceLedger &ledger() { return ledger_; }
    const ResourceLedger &ledger() const { return ledger_; }
    OlapInstance &olap() { return olap_; }
    const OlapInstance &olap() const { return olap_; }
    const SystemState &state() const { return state_; }
    OlapSource olap_source() const { return source_; }

    /// Switches all tables at one instant and syncs them.
    const Snapshot &switch_and_sync();
    const Snapshot &snapshot() const;
    bool has_snapshot() const { return snapshot_.has_value(); }
    const DatabaseSyncReport &last_sync() const { return last_sync_; }

    FreshnessStats freshness_stats() const;
    EtlReport etl();

    /// Migrations. Each switches first unless `switch_first`
    /// is false, in which case the current snapshot is reused. The ledger is
    /// left untouched if the target assignment is rejected.
    SystemState migrate_s1(bool switch_first = true);
    SystemState migrate_s2(bool switch_first = true);
    SystemState migrate_s3(S3Mode mode, bool switch_first = true);
    SystemState migrate(StateTag tag, bool switch_first = true);

    /// Called with the OLTP CPU set after every ledger change.
    void on_oltp_cpus(std::function<void(std::span<const CpuId>)> fn) { oltp_hook_ = std::move(fn); }
    void set_etl_options(EtlOptions o) { etl_opts_ = o; }

    std::uint64_t etl_count() const { return etl_count_; }
    std::uint64_t etl_bytes() const { return etl_bytes_; }

private:
    SystemState enter(StateTag tag, const Assignment &a, bool switch_first);

    Database &db_;
    ResourceLedger ledger_;
    OlapInstance olap_;
    std::optional<Snapshot> snapshot_;
    DatabaseSyncReport last_sync_;
    SystemState state_;
    OlapSource source_ = OlapSource::LocalInstance;
    EtlOptions etl_opts_;
    std::function<void(std::span<const CpuId>)> oltp_hook_;
    std::uint64_t etl_count_ = 0;
    std::uint64_t etl_bytes_ = 0;
};

} // namespace htap
