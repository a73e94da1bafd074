#include "htap/scheduler.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <sstream>

namespace htap {

std::string_view to_string(ElasticityMode m) { return m == ElasticityMode::Hybrid ? "HYBRID" : "COLOCATION"; }

ElasticityMode parse_elasticity_mode(std::string_view s)
{
    if (s == "HYBRID" || s == "hybrid")
        return ElasticityMode::Hybrid;
    if (s == "COLOCATION" || s == "colocation")
        return ElasticityMode::Colocation;
    throw Error("unknown elasticity mode: " + std::string(s));
}

void SchedulerConfig::validate() const
{
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw Error("alpha must lie in [0, 1]");
}

void SchedulerInput::validate() const
{
    if (n_fq > n_ft)
        throw Error("query fresh bytes exceed total fresh bytes");
}

bool below_alpha_share(std::uint64_t n_fq, std::uint64_t n_ft, double alpha)
{
    if (!(alpha > 0.0))
        return false;
    int e = 0;
    const double m = std::frexp(alpha, &e);
    // alpha = mant * 2^(e - 53), mant < 2^53
    const auto mant = static_cast<std::uint64_t>(std::ldexp(m, 53));
    const int k = 53 - e;
    using u128 = unsigned __int128;
    const u128 p = static_cast<u128>(mant) * n_ft;
    // n_fq * 2^k < p  <=>  n_fq < ceil(p / 2^k)
    u128 bound;
    if (k >= 128)
        bound = p > 0 ? 1 : 0;
    else if (k <= 0)
        return static_cast<u128>(n_fq) < (p << -k);
    else
        bound = (p >> k) + ((p & ((u128{1} << k) - 1)) != 0 ? 1 : 0);
    return static_cast<u128>(n_fq) < bound;
}

StateTag resource_schedule(const SchedulerInput &in, const SchedulerConfig &cfg)
{
    cfg.validate();
    in.validate();
    if (below_alpha_share(in.n_fq, in.n_ft, cfg.alpha) && !in.is_batch) {
        if (!cfg.f_el)
            return StateTag::S3_IS;
        if (cfg.m_el == ElasticityMode::Hybrid)
            return StateTag::S3_NI;
        return StateTag::S1;
    }
    return StateTag::S2;
}

AdaptiveScheduler::AdaptiveScheduler(Rde &rde, SchedulerConfig cfg, ExecOptions exec)
    : rde_(rde), cfg_(cfg), exec_(std::move(exec))
{
    cfg_.validate();
}

QueryOutcome AdaptiveScheduler::execute_in_state(const QueryPlan &plan, const DecisionRecord &d,
                                                 std::uint64_t etl_bytes)
{
    QueryOutcome out;
    out.decision = d;
    out.etl_bytes = etl_bytes;
    const auto stats = rde_.freshness_stats();
    out.paths = choose_access_paths(plan, stats, rde_.state());
    ExecOptions opts = exec_;
    if (!opts.topology)
        opts.topology = &rde_.ledger().topology();
    if (opts.data_sockets.empty())
        opts.data_sockets = rde_.state().oltp_sockets;
    out.result = execute(plan, out.paths, rde_.olap(), rde_.snapshot(), opts);
    log_.push_back(d);
    return out;
}

QueryOutcome AdaptiveScheduler::run_query(const QueryPlan &plan)
{
    const auto &snap = rde_.switch_and_sync();
    const auto stats = rde_.freshness_stats();
    DecisionRecord d{plan.name, snap.epoch, fresh_bytes_for_query(plan, stats), stats.n_ft, cfg_.alpha, cfg_.f_el,
                     cfg_.m_el, false, StateTag::S2};
    d.state = resource_schedule({d.n_fq, d.n_ft, false}, cfg_);
    const auto before = rde_.etl_bytes();
    rde_.migrate(d.state, false);
    return execute_in_state(plan, d, rde_.etl_bytes() - before);
}

std::vector<QueryOutcome> AdaptiveScheduler::run_batch(const std::vector<QueryPlan> &plans)
{
    if (plans.empty())
        throw Error("empty query batch");
    const auto &snap = rde_.switch_and_sync();
    const auto stats = rde_.freshness_stats();
    std::vector<DecisionRecord> ds;
    for (const auto &p : plans) {
        DecisionRecord d{p.name, snap.epoch, fresh_bytes_for_query(p, stats), stats.n_ft, cfg_.alpha, cfg_.f_el,
                         cfg_.m_el, true, StateTag::S2};
        d.state = resource_schedule({d.n_fq, d.n_ft, true}, cfg_);
        ds.push_back(d);
    }
    const auto before = rde_.etl_bytes();
    rde_.migrate(ds.front().state, false);
    const auto bytes = rde_.etl_bytes() - before;
    std::vector<QueryOutcome> out;
    for (std::size_t i = 0; i < plans.size(); ++i)
        out.push_back(execute_in_state(plans[i], ds[i], i == 0 ? bytes : 0));
    return out;
}

void write_decision_log(std::ostream &os, const std::vector<DecisionRecord> &log)
{
    os << "# htap-csv v1 decisions\n";
    os << "query,epoch,n_fq,n_ft,alpha,f_el,m_el,batch,state\n";
    char alpha[32];
    for (const auto &d : log) {
        std::snprintf(alpha, sizeof alpha, "%.17g", d.alpha);
        os << d.query << ',' << d.epoch << ',' << d.n_fq << ',' << d.n_ft << ',' << alpha << ',' << int(d.f_el) << ','
           << to_string(d.m_el) << ',' << int(d.batch) << ',' << to_string(d.state) << '\n';
    }
}

std::vector<DecisionRecord> read_decision_log(std::istream &is)
{
    std::vector<DecisionRecord> out;
    std::string line;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#')
            continue;
        if (!header) {
            header = true;
            continue;
        }
        std::vector<std::string> f;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');)
            f.push_back(cell);
        if (f.size() != 9)
            throw Error("malformed decision log line: " + line);
        DecisionRecord d;
        d.query = f[0];
        d.epoch = std::stoull(f[1]);
        d.n_fq = std::stoull(f[2]);
        d.n_ft = std::stoull(f[3]);
        d.alpha = std::strtod(f[4].c_str(), nullptr);
        d.f_el = f[5] == "1";
        d.m_el = parse_elasticity_mode(f[6]);
        d.batch = f[7] == "1";
        d.state = parse_state(f[8]);
        out.push_back(d);
    }
    return out;
}

} // namespace htap
