#pragma once

#include <string>
#include <vector>

#include "htap/bench/config.hpp"
#include "htap/bench/experiments.hpp"

namespace htap::bench {

struct CheckResult {
    int id = 0; ///< 0 for config validation, 1-10 for the criteria
    std::string name;
    bool pass = false;
    std::string detail; ///< deterministic; no timings
    double seconds = 0;
};

struct VerifyOptions {
    BenchConfig cfg;
    std::vector<int> only;         ///< criteria to run; empty runs all
    bool skip_etl_bit_clear = false; ///< fault injection
};

const std::vector<std::string> &criterion_names();

/// Config problems as id-0 entries, then the selected criteria in order.
/// A criterion that throws is reported as failed with the message.
std::vector<CheckResult> run_verify(const VerifyOptions &opts);

/// id,criterion,status,detail
CsvTable verify_report(const std::vector<CheckResult> &results);

} // namespace htap::bench
