#include "htap/bench/config.hpp"

#include <fmt/format.h>

namespace htap::bench {

namespace {

template <class F>
void check(std::vector<std::string> &out, F &&f)
{
    try {
        f();
    } catch (const Error &e) {
        out.emplace_back(e.what());
    }
}

} // namespace

std::vector<std::string> BenchConfig::problems() const
{
    std::vector<std::string> out;
    check(out, [&] { load.validate(); });
    check(out, [&] { sched.validate(); });
    check(out, [&] { cost.validate(); });
    check(out, [&] {
        if (sockets < 2 || cpus_per_socket < 2)
            throw Error("topology needs at least 2 sockets of 2 CPUs");
        if (thresholds.oltp_sock_thres < 1 || thresholds.oltp_sock_thres >= static_cast<std::size_t>(sockets))
            throw Error("oltp_sock_thres must leave OLTP and OLAP at least one socket each");
        if (thresholds.oltp_cpu_thres.size() != static_cast<std::size_t>(sockets))
            throw Error("oltp_cpu_thres needs one entry per socket");
        for (auto t : thresholds.oltp_cpu_thres)
            if (t > static_cast<std::size_t>(cpus_per_socket))
                throw Error("oltp_cpu_thres entry exceeds the socket size");
    });
    check(out, [&] {
        if (!(sim_scale.scale_factor > 0) || sim_scale.warehouses < 1 || sim_scale.items < 1 ||
            !(sim_scale.lines_per_order > 0))
            throw Error("simulator scale must be positive");
        if (!(step_seconds > 0))
            throw Error("step_seconds must be positive");
        if (iterations < 1)
            throw Error("iterations must be at least 1");
        if (olap_workers < 1)
            throw Error("olap_workers must be at least 1");
        if (!(batch_etl_bytes >= 0) || !(batch_scan_bytes > 0))
            throw Error("batch byte volumes must be positive");
    });
    return out;
}

void BenchConfig::validate() const
{
    const auto p = problems();
    if (!p.empty())
        throw Error(p.front());
}

Topology BenchConfig::topology() const { return Topology::uniform(sockets, cpus_per_socket); }

sim::SimConfig BenchConfig::sim() const
{
    sim::SimConfig c;
    c.topology = topology();
    c.thresholds = thresholds;
    c.params = cost;
    c.scale = sim_scale;
    c.step_seconds = step_seconds;
    return c;
}

std::string format_size_list(const std::vector<std::size_t> &v, char sep)
{
    return fmt::format("{}", fmt::join(v, std::string(1, sep)));
}

std::string num(double v) { return fmt::format("{}", v); }

} // namespace htap::bench
