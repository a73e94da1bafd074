#include "htap/bench/experiments.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "htap/scheduler.hpp"
#include "htap/verify/oracle.hpp"

namespace htap::bench {

namespace {

constexpr const char *kCsvVersion = "# htap-csv v1 ";

std::string cell(const Value &v)
{
    if (const auto *i = std::get_if<std::int64_t>(&v))
        return std::to_string(*i);
    if (const auto *d = std::get_if<double>(&v))
        return num(*d);
    return std::get<std::string>(v);
}

std::string b01(bool b) { return b ? "1" : "0"; }

std::vector<QueryPlan> mix() { return {queries::q1(), queries::q6(), queries::q19()}; }

ExecOptions exec_options(const BenchConfig &cfg)
{
    ExecOptions o;
    o.workers = cfg.olap_workers;
    return o;
}

SystemState state_of(const Rde &rde, StateTag tag)
{
    SystemState s;
    s.tag = tag;
    s.epoch = rde.snapshot().epoch;
    s.olap_cpus = rde.ledger().cpus(Engine::Olap);
    s.oltp_sockets = rde.ledger().oltp_sockets();
    return s;
}

/// Executes on the current snapshot in `tag` and compares with the oracle.
bool live_query_ok(const BenchConfig &cfg, Rde &rde, const QueryPlan &plan, StateTag tag, std::string *paths_out = nullptr)
{
    const auto st = rde.freshness_stats();
    const auto paths = choose_access_paths(plan, st, state_of(rde, tag));
    if (paths_out) {
        std::vector<std::string> kinds;
        for (const auto &c : paths.columns)
            kinds.emplace_back(to_string(c.kind));
        *paths_out = fmt::format("{}", fmt::join(kinds, " "));
    }
    const auto got = execute(plan, paths, rde.olap(), rde.snapshot(), exec_options(cfg));
    return oracle::results_match(got, oracle::evaluate(plan, rde.snapshot()));
}

Thresholds s1_thresholds(const BenchConfig &cfg, std::size_t traded)
{
    Thresholds th{1, std::vector<std::size_t>(cfg.sockets, 0)};
    th.oltp_cpu_thres[0] = cfg.cpus_per_socket - traded / 2;
    th.oltp_cpu_thres[1] = traded / 2;
    return th;
}

Thresholds elastic_thresholds(const BenchConfig &cfg, std::size_t granted)
{
    auto th = cfg.thresholds;
    th.oltp_cpu_thres[0] = cfg.cpus_per_socket - granted;
    return th;
}

std::size_t count_cpus(const Assignment &a, Engine e)
{
    std::size_t n = 0;
    for (const auto &[cpu, owner] : a)
        n += owner == e;
    return n;
}

ExperimentOutput s1_sweep(const BenchConfig &cfg, bool live)
{
    std::vector<std::size_t> traded;
    for (std::size_t t = 0; t <= static_cast<std::size_t>(cfg.cpus_per_socket); t += 2)
        traded.push_back(t);
    const auto sim_cfg = cfg.sim();
    const auto rows = sim::s1_trade_sweep(sim_cfg, queries::q6(), traded);

    ExperimentOutput out;
    CsvTable t{"s1_sweep",
               {"traded_cpus", "oltp_cpu_thres", "oltp_cpus", "olap_cpus", "tps_no_olap", "tps_with_olap",
                "tps_rel_no_olap", "tps_rel_with_olap", "q6_query_s", "live_result_ok"},
               {}};
    for (const auto &r : rows) {
        const auto th = s1_thresholds(cfg, r.traded);
        const auto a = assign_s1(cfg.topology(), th);
        std::string ok = "";
        if (live) {
            LiveEnv env(cfg, th);
            env.new_orders(cfg.live_txns_per_query);
            env.rde->migrate_s1();
            const bool good = live_query_ok(cfg, *env.rde, queries::q6(), StateTag::S1) &&
                              env.rde->ledger().assignment() == a;
            out.live_ok &= good;
            ok = b01(good);
        }
        const double base = cfg.cost.oltp_base_tps;
        t.add({std::to_string(r.traded), format_size_list(r.thresholds, ' '), std::to_string(count_cpus(a, Engine::Oltp)),
               std::to_string(count_cpus(a, Engine::Olap)), num(r.tps_no_olap), num(r.tps_with_olap),
               num(r.tps_no_olap / base), num(r.tps_with_olap / base), num(r.query_s), ok});
    }
    out.tables.push_back(std::move(t));
    return out;
}

ExperimentOutput s2_batch(const BenchConfig &cfg, bool live)
{
    const std::vector<std::size_t> batches{1, 2, 4, 8, 16};
    const std::size_t queries = 16;
    const auto rows = sim::s2_batch_sweep(cfg.sim(), batches, queries, cfg.batch_etl_bytes, cfg.batch_scan_bytes);

    ExperimentOutput out;
    CsvTable t{"s2_batch",
               {"batch", "queries", "etl_s", "exec_s", "cumulative_s", "etl_share", "live_etl_count", "live_etl_bytes",
                "live_result_ok"},
               {}};
    const auto plans = mix();
    for (const auto &r : rows) {
        std::string count, bytes, ok;
        if (live) {
            LiveEnv env(cfg, cfg.thresholds);
            AdaptiveScheduler sched(*env.rde, cfg.sched, exec_options(cfg));
            const auto etl0 = env.rde->etl_count();
            const auto bytes0 = env.rde->etl_bytes();
            bool good = true;
            for (std::size_t q = 0; q < queries; q += r.batch) {
                env.new_orders(cfg.live_txns_per_query * r.batch);
                std::vector<QueryPlan> batch;
                for (std::size_t i = q; i < q + r.batch; ++i)
                    batch.push_back(plans[i % plans.size()]);
                const auto outs = sched.run_batch(batch);
                for (std::size_t i = 0; i < outs.size(); ++i)
                    good &= outs[i].decision.state == StateTag::S2 &&
                            oracle::results_match(outs[i].result, oracle::evaluate(batch[i], env.rde->snapshot()));
            }
            const auto etls = env.rde->etl_count() - etl0;
            good &= etls == queries / r.batch;
            out.live_ok &= good;
            count = std::to_string(etls);
            bytes = std::to_string(env.rde->etl_bytes() - bytes0);
            ok = b01(good);
        }
        t.add({std::to_string(r.batch), std::to_string(queries), num(r.etl_s), num(r.exec_s), num(r.total_s),
               num(r.etl_share), count, bytes, ok});
    }
    out.tables.push_back(std::move(t));
    return out;
}

ExperimentOutput s3_fresh_sweep(const BenchConfig &cfg, bool live)
{
    ExperimentOutput out;
    CsvTable t{"s3_fresh_sweep",
               {"query", "fresh_fraction", "split_s", "s2_steady_s", "remote_s", "live_tail_fraction", "live_paths",
                "live_result_ok"},
               {}};
    CsvTable f{"s3_crossover", {"query", "f_star"}, {}};
    const auto sim_cfg = cfg.sim();
    for (const auto &plan : mix()) {
        const auto rows = sim::fresh_fraction_sweep(sim_cfg, plan);
        const auto star = sim::crossover(rows);
        f.add({plan.name, star ? num(*star) : "none"});

        std::unique_ptr<LiveEnv> env;
        if (live) {
            env = std::make_unique<LiveEnv>(cfg, cfg.thresholds);
            env->rde->migrate_s3(S3Mode::Isolated);
        }
        for (const auto &r : rows) {
            std::string frac, paths, ok;
            if (env) {
                // live tails stop short of 1, where the OLAP side would be empty
                const double target = std::min(r.fraction, 0.9);
                const auto wm = static_cast<double>(env->rde->olap().table(ch::OrderLine).watermark());
                auto tail = [&] {
                    const auto rows = static_cast<double>(env->db.table(ch::OrderLine).physical_rows());
                    return rows > 0 ? (rows - wm) / rows : 0.0;
                };
                while (tail() < target)
                    env->new_orders(1);
                env->rde->migrate_s3(S3Mode::Isolated);
                const bool good = live_query_ok(cfg, *env->rde, plan, StateTag::S3_IS, &paths);
                out.live_ok &= good;
                frac = num(tail());
                ok = b01(good);
            }
            t.add({plan.name, num(r.fraction), num(r.split_s), num(r.s2_s), num(r.remote_s), frac, paths, ok});
        }
    }
    out.tables.push_back(std::move(t));
    out.tables.push_back(std::move(f));
    return out;
}

ExperimentOutput s3_elastic_sweep(const BenchConfig &cfg, bool live)
{
    std::vector<std::size_t> granted;
    for (std::size_t g = 0; g < static_cast<std::size_t>(cfg.cpus_per_socket); g += 2)
        granted.push_back(g);
    const auto rows = sim::s3_elastic_sweep(cfg.sim(), queries::q1(), granted);

    ExperimentOutput out;
    CsvTable t{"s3_elastic_sweep",
               {"granted_cpus", "oltp_cpu_thres", "olap_cpus", "q1_query_s", "tps", "live_olap_cpus",
                "live_result_ok"},
               {}};
    for (const auto &r : rows) {
        const auto th = elastic_thresholds(cfg, r.granted);
        const auto a = assign_s3(cfg.topology(), th, S3Mode::NonIsolated);
        std::string cpus, ok;
        if (live) {
            LiveEnv env(cfg, th);
            env.new_orders(cfg.live_txns_per_query);
            env.rde->migrate_s3(S3Mode::NonIsolated);
            const bool good = live_query_ok(cfg, *env.rde, queries::q1(), StateTag::S3_NI);
            out.live_ok &= good;
            cpus = std::to_string(env.rde->ledger().cpus(Engine::Olap).size());
            ok = b01(good);
        }
        t.add({std::to_string(r.granted), format_size_list(th.oltp_cpu_thres, ' '),
               std::to_string(count_cpus(a, Engine::Olap)), num(r.query_s), num(r.tps), cpus, ok});
    }
    out.tables.push_back(std::move(t));
    return out;
}

std::vector<sim::Policy> sequence_policies(const SchedulerConfig &sched)
{
    return {sim::Policy::fixed_state(StateTag::S1),      sim::Policy::fixed_state(StateTag::S2),
            sim::Policy::fixed_state(StateTag::S3_IS),   sim::Policy::fixed_state(StateTag::S3_NI),
            sim::Policy::adaptive_is(sched.alpha),       sim::Policy::adaptive_ni(sched.alpha),
            sim::Policy::adaptive_s1(sched.alpha)};
}

ExperimentOutput adaptive_seq(const BenchConfig &cfg, bool live)
{
    const auto sim_cfg = cfg.sim();
    const auto workload = sim::mix_workload(mix(), cfg.iterations, sim_cfg.txns_per_step());

    ExperimentOutput out;
    CsvTable seq{"adaptive_seq",
                 {"policy", "step", "query", "state", "n_fq", "n_ft", "etl_s", "exec_s", "cum_olap_s", "oltp_tps"},
                 {}};
    CsvTable sum{"adaptive_summary", {"policy", "queries", "total_s", "etl_count", "max_etl_s", "mean_oltp_tps"}, {}};
    for (const auto &pol : sequence_policies(cfg.sched)) {
        const auto tr = sim::run_sequence(workload, pol, sim_cfg);
        double tps = 0;
        for (const auto &e : tr.events) {
            seq.add({tr.policy, std::to_string(e.step), e.query, std::string(to_string(e.state)), std::to_string(e.n_fq),
                     std::to_string(e.n_ft), num(e.etl_s), num(e.exec_s), num(e.cum_olap_s), num(e.oltp_tps)});
            tps += e.oltp_tps;
        }
        sum.add({tr.policy, std::to_string(tr.events.size()), num(tr.total()), std::to_string(tr.etl_count),
                 num(tr.max_etl_s), num(tps / static_cast<double>(tr.events.size()))});
    }
    out.tables.push_back(std::move(seq));
    out.tables.push_back(std::move(sum));

    if (live) {
        LiveEnv env(cfg, cfg.thresholds);
        AdaptiveScheduler sched(*env.rde, cfg.sched, exec_options(cfg));
        const auto plans = mix();
        const std::size_t warm = cfg.warmup_passes * plans.size();
        CsvTable lv{"adaptive_live", {"step", "query", "state", "epoch", "etl_bytes", "result_ok"}, {}};
        for (std::size_t i = 0; i < warm + cfg.iterations * plans.size(); ++i) {
            env.new_orders(cfg.live_txns_per_query);
            const auto &plan = plans[i % plans.size()];
            const auto o = sched.run_query(plan);
            if (i < warm)
                continue;
            const bool good = oracle::results_match(o.result, oracle::evaluate(plan, env.rde->snapshot()));
            out.live_ok &= good;
            lv.add({std::to_string(i - warm), plan.name, std::string(to_string(o.decision.state)),
                    std::to_string(o.decision.epoch), std::to_string(o.etl_bytes), b01(good)});
        }
        const std::vector<DecisionRecord> logged(sched.log().begin() + static_cast<std::ptrdiff_t>(warm),
                                                 sched.log().end());
        std::stringstream ss;
        write_decision_log(ss, logged);
        out.tables.push_back(parse_csv(ss.str()));
        out.tables.push_back(std::move(lv));
    }
    return out;
}

} // namespace

void CsvTable::add(std::vector<std::string> row)
{
    if (row.size() != header.size())
        throw Error("csv row width does not match the header of " + name);
    rows.push_back(std::move(row));
}

std::string CsvTable::render() const
{
    std::string s = kCsvVersion + name + "\n";
    s += fmt::format("{}\n", fmt::join(header, ","));
    for (const auto &r : rows)
        s += fmt::format("{}\n", fmt::join(r, ","));
    return s;
}

std::vector<std::string> CsvTable::column(const std::string &col) const
{
    const auto it = std::find(header.begin(), header.end(), col);
    if (it == header.end())
        throw Error("no column " + col + " in " + name);
    const auto i = static_cast<std::size_t>(it - header.begin());
    std::vector<std::string> out;
    for (const auto &r : rows)
        out.push_back(r[i]);
    return out;
}

CsvTable parse_csv(const std::string &text)
{
    std::istringstream is(text);
    std::string line;
    auto split = [](const std::string &l) {
        std::vector<std::string> f;
        std::size_t pos = 0;
        for (;;) {
            const auto end = l.find(',', pos);
            f.push_back(l.substr(pos, end - pos));
            if (end == std::string::npos)
                return f;
            pos = end + 1;
        }
    };
    CsvTable t;
    if (!std::getline(is, line) || line.rfind(kCsvVersion, 0) != 0)
        throw Error("missing htap-csv v1 header");
    t.name = line.substr(std::string(kCsvVersion).size());
    if (!std::getline(is, line))
        throw Error("missing column line");
    t.header = split(line);
    while (std::getline(is, line))
        t.add(split(line));
    return t;
}

LiveEnv::LiveEnv(const BenchConfig &cfg, const Thresholds &thresholds)
    : gen_(cfg.load.seed ^ 0x9e3779b97f4a7c15ull, cfg.load.items), warehouses_(cfg.load.warehouses)
{
    ch::create_schema(db, cfg.load);
    summary = ch::populate(db, cfg.load);
    tm = std::make_unique<TransactionManager>(db);
    rde = std::make_unique<Rde>(db, ResourceLedger(cfg.topology(), thresholds));
    rde->migrate_s2();
    rde->etl();
}

void LiveEnv::new_orders(std::size_t n)
{
    for (std::size_t i = 0; i < n; ++i) {
        const auto w = static_cast<std::int64_t>(next_++ % static_cast<std::uint64_t>(warehouses_)) + 1;
        if (tm->new_order(gen_.next(w)) != TxnOutcome::Committed)
            throw Error("serial NewOrder aborted");
    }
}

std::vector<CsvTable> datagen(const BenchConfig &cfg)
{
    cfg.load.validate();
    LiveEnv env(cfg, cfg.thresholds);
    if (env.rde->freshness_stats().freshness_rate() != 1.0)
        throw Error("engines not synchronized after load");
    std::vector<CsvTable> out;
    const auto &snap = env.rde->snapshot();
    for (std::size_t ti = 0; ti < env.db.table_count(); ++ti) {
        const auto &store = env.db.table(ti);
        CsvTable t{"table_" + store.name(), {}, {}};
        for (const auto &c : store.schema())
            t.header.push_back(c.name);
        const auto &ft = snap.table(ti);
        for (RowId r = 0; r < ft.rows(); ++r) {
            std::vector<std::string> row;
            for (const auto &v : ft.row(r))
                row.push_back(cell(v));
            t.add(std::move(row));
        }
        out.push_back(std::move(t));
    }
    return out;
}

const std::vector<std::string> &experiment_names()
{
    static const std::vector<std::string> names{"s1-sweep", "s2-batch", "s3-fresh-sweep", "s3-elastic-sweep",
                                                "adaptive-seq"};
    return names;
}

ExperimentOutput run_experiment(const std::string &name, const BenchConfig &cfg, bool live)
{
    cfg.validate();
    if (name == "s1-sweep")
        return s1_sweep(cfg, live);
    if (name == "s2-batch")
        return s2_batch(cfg, live);
    if (name == "s3-fresh-sweep")
        return s3_fresh_sweep(cfg, live);
    if (name == "s3-elastic-sweep")
        return s3_elastic_sweep(cfg, live);
    if (name == "adaptive-seq")
        return adaptive_seq(cfg, live);
    throw Error("unknown experiment: " + name);
}

std::vector<std::string> write_tables(const std::vector<CsvTable> &tables, const std::string &dir)
{
    std::filesystem::create_directories(dir);
    std::vector<std::string> paths;
    for (const auto &t : tables) {
        const auto path = (std::filesystem::path(dir) / (t.name + ".csv")).string();
        std::ofstream os(path, std::ios::binary);
        os << t.render();
        if (!os)
            throw Error("cannot write " + path);
        paths.push_back(path);
    }
    return paths;
}

} // namespace htap::bench
