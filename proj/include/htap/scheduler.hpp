#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "htap/olap.hpp"
#include "htap/rde.hpp"

namespace htap {

enum class ElasticityMode { Hybrid, Colocation };

std::string_view to_string(ElasticityMode m);
ElasticityMode parse_elasticity_mode(std::string_view s);

struct SchedulerConfig {
    double alpha = 0.5;
    bool f_el = false;
    ElasticityMode m_el = ElasticityMode::Hybrid;

    void validate() const;
};

struct SchedulerInput {
    std::uint64_t n_fq = 0;
    std::uint64_t n_ft = 0;
    bool is_batch = false;

    void validate() const;
};

/// Exact test of n_fq < alpha * n_ft, no rounding.
bool below_alpha_share(std::uint64_t n_fq, std::uint64_t n_ft, double alpha);

/// Remote reads while the query's fresh share stays below alpha and it is not
/// part of a batch; otherwise isolation with ETL. Equality goes to S2.
StateTag resource_schedule(const SchedulerInput &in, const SchedulerConfig &cfg);

struct DecisionRecord {
    std::string query;
    Epoch epoch = 0;
    std::uint64_t n_fq = 0;
    std::uint64_t n_ft = 0;
    double alpha = 0;
    bool f_el = false;
    ElasticityMode m_el = ElasticityMode::Hybrid;
    bool batch = false;
    StateTag state = StateTag::S2;
};

struct QueryOutcome {
    DecisionRecord decision;
    AccessPathPlan paths;
    ResultSet result;
    std::uint64_t etl_bytes = 0;
};

/// Per query: switch, measure freshness, decide, migrate on the new snapshot,
/// plan access paths and execute. Batches share one switch and one decision.
class AdaptiveScheduler {
public:
    AdaptiveScheduler(Rde &rde, SchedulerConfig cfg, ExecOptions exec = {});

    QueryOutcome run_query(const QueryPlan &plan);
    std::vector<QueryOutcome> run_batch(const std::vector<QueryPlan> &plans);

    const std::vector<DecisionRecord> &log() const { return log_; }
    const SchedulerConfig &config() const { return cfg_; }

private:
    QueryOutcome execute_in_state(const QueryPlan &plan, const DecisionRecord &d, std::uint64_t etl_bytes);

    Rde &rde_;
    SchedulerConfig cfg_;
    ExecOptions exec_;
    std::vector<DecisionRecord> log_;
};

/// Header comment, column line, one row per decision; alpha printed round-trip exact.
void write_decision_log(std::ostream &os, const std::vector<DecisionRecord> &log);
std::vector<DecisionRecord> read_decision_log(std::istream &is);

} // namespace htap
