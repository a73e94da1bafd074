#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "htap/bench/acceptance.hpp"
#include "htap/bench/experiments.hpp"

using namespace htap;
using namespace htap::bench;

namespace {

void add_config_options(CLI::App &app, BenchConfig &c, std::string &m_el)
{
    auto &l = c.load;
    app.add_option("--seed", l.seed, "data and workload seed");
    app.add_option("--scale_factor", l.scale_factor, "CH scale factor");
    app.add_option("--divisor", l.divisor, "desk-scale divisor on the order-line cardinality");
    app.add_option("--warehouses", l.warehouses, "live warehouses");
    app.add_option("--items", l.items, "live items");
    app.add_option("--sockets", c.sockets, "sockets of the modelled machine");
    app.add_option("--cpus_per_socket", c.cpus_per_socket, "CPUs per socket");
    app.add_option("--oltp_sock_thres", c.thresholds.oltp_sock_thres, "whole sockets kept by OLTP");
    app.add_option("--oltp_cpu_thres", c.thresholds.oltp_cpu_thres, "OLTP CPUs kept per socket")->delimiter(',');
    app.add_option("--alpha", c.sched.alpha, "fresh-share threshold of the scheduler");
    app.add_option("--f_el", c.sched.f_el, "elastic OLAP CPUs (true/false)");
    app.add_option("--m_el", m_el, "elasticity mode")->check(CLI::IsMember({"HYBRID", "COLOCATION"}));
    auto &p = c.cost;
    app.add_option("--mem_bw_bytes_per_sec", p.mem_bw_bytes_per_sec, "memory bandwidth per socket");
    app.add_option("--ic_bw_bytes_per_sec", p.ic_bw_bytes_per_sec, "interconnect bandwidth");
    app.add_option("--per_core_scan_bytes_per_sec", p.per_core_scan_bytes_per_sec, "scan rate of one core");
    app.add_option("--remote_core_rate_fraction", p.remote_core_rate_fraction, "per-core remote scan rate, relative");
    app.add_option("--oltp_base_tps", p.oltp_base_tps, "OLTP throughput on its full socket");
    app.add_option("--oltp_remote_penalty", p.oltp_remote_penalty, "OLTP drop with all CPUs traded");
    app.add_option("--oltp_olap_interference_penalty", p.oltp_olap_interference_penalty, "extra drop under a scan");
    app.add_option("--join_probe_tuples_per_sec", p.join_probe_tuples_per_sec, "join probes per core");
    app.add_option("--group_seconds_per_group", p.group_seconds_per_group, "group merge cost");
    app.add_option("--oltp_mem_bw_share", p.oltp_mem_bw_share, "data-socket bandwidth kept by OLTP");
    app.add_option("--sync_seconds_per_tuple", p.sync_seconds_per_tuple, "instance sync cost");
    app.add_option("--sim_scale_factor", c.sim_scale.scale_factor, "simulated scale factor");
    app.add_option("--sim_warehouses", c.sim_scale.warehouses, "simulated warehouses");
    app.add_option("--sim_items", c.sim_scale.items, "simulated items");
    app.add_option("--step_seconds", c.step_seconds, "OLTP time between two simulated queries");
    app.add_option("--iterations", c.iterations, "passes over the Q1/Q6/Q19 mix");
    app.add_option("--warmup_passes", c.warmup_passes, "live mix passes before logging");
    app.add_option("--live_txns_per_query", c.live_txns_per_query, "serial NewOrders between live queries");
    app.add_option("--olap_workers", c.olap_workers, "live OLAP worker threads");
    app.add_option("--batch_etl_bytes", c.batch_etl_bytes, "ETL volume per batch in the batch experiment");
    app.add_option("--batch_scan_bytes", c.batch_scan_bytes, "scan volume per query in the batch experiment");
    app.add_option("--output_dir", c.output_dir, "directory for CSV output");
}

void print_paths(const std::vector<std::string> &paths)
{
    for (const auto &p : paths)
        std::cout << p << '\n';
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"HTAP engine benchmark harness"};
    app.set_config("--config", "", "flat key = value config file");
    app.require_subcommand(1);
    app.fallthrough();

    BenchConfig cfg;
    std::string m_el(to_string(cfg.sched.m_el));
    add_config_options(app, cfg, m_el);

    auto *datagen_cmd = app.add_subcommand("datagen", "load CH-lite tables and dump them as CSV");
    std::string experiment;
    auto *run_cmd = app.add_subcommand("run", "run an experiment on the live engine and the simulator");
    run_cmd->add_option("experiment", experiment)->required()->check(CLI::IsMember(experiment_names()));
    auto *sim_cmd = app.add_subcommand("simulate", "run the simulator part of an experiment");
    sim_cmd->add_option("experiment", experiment)->required()->check(CLI::IsMember(experiment_names()));
    auto *verify_cmd = app.add_subcommand("verify", "run the acceptance checks and write verify.csv");
    std::vector<int> only;
    std::string fault;
    verify_cmd->add_option("--only", only, "criteria to run")->delimiter(',')->check(CLI::Range(1, 10));
    verify_cmd->add_option("--inject-fault", fault, "fault injection")->check(CLI::IsMember({"skip-bit-clear"}));

    CLI11_PARSE(app, argc, argv);

    try {
        cfg.sched.m_el = parse_elasticity_mode(m_el);

        if (verify_cmd->parsed()) {
            VerifyOptions opts{cfg, only, fault == "skip-bit-clear"};
            const auto results = run_verify(opts);
            const auto report = verify_report(results);
            std::cout << report.render();
            write_tables({report}, cfg.output_dir);
            for (const auto &r : results)
                if (!r.pass)
                    return 1;
            return 0;
        }

        cfg.validate();
        if (datagen_cmd->parsed()) {
            print_paths(write_tables(datagen(cfg), cfg.output_dir));
            return 0;
        }
        const auto out = run_experiment(experiment, cfg, run_cmd->parsed());
        print_paths(write_tables(out.tables, cfg.output_dir));
        if (!out.live_ok) {
            std::cerr << "live results disagree with the oracle\n";
            return 1;
        }
        return 0;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
