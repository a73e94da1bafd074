#pragma once

#include <memory>
#include <string>
#include <vector>

#include "htap/bench/config.hpp"
#include "htap/txn.hpp"

namespace htap::bench {

/// One CSV file: a versioned header comment, a column line, then rows.
struct CsvTable {
    std::string name; ///< schema name and file stem
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    void add(std::vector<std::string> row);
    std::string render() const;
    /// Column values of rows, by header name.
    std::vector<std::string> column(const std::string &name) const;
};

/// Parses what `render` wrote; throws on a bad version line or ragged rows.
CsvTable parse_csv(const std::string &text);

/// Desk-scale engine: loaded, synchronized and ETL'd, with a serial NewOrder feed.
struct LiveEnv {
    Database db;
    ch::LoadSummary summary;
    std::unique_ptr<TransactionManager> tm;
    std::unique_ptr<Rde> rde;

    LiveEnv(const BenchConfig &cfg, const Thresholds &thresholds);
    /// Commits `n` NewOrders, warehouses in rotation.
    void new_orders(std::size_t n);

private:
    NewOrderGenerator gen_;
    std::int64_t warehouses_;
    std::uint64_t next_ = 0;
};

/// Loads the CH-lite tables and dumps every row, one table per CSV.
std::vector<CsvTable> datagen(const BenchConfig &cfg);

struct ExperimentOutput {
    std::vector<CsvTable> tables;
    bool live_ok = true; ///< every live result matched the oracle
};

const std::vector<std::string> &experiment_names();

/// Simulator timing plus, when `live` is set, the live-engine checks and the
/// decision log. Throws Error for an unknown name or an invalid config.
ExperimentOutput run_experiment(const std::string &name, const BenchConfig &cfg, bool live = true);

/// Writes `<dir>/<table name>.csv` for each table and returns the paths.
std::vector<std::string> write_tables(const std::vector<CsvTable> &tables, const std::string &dir);

} // namespace htap::bench
