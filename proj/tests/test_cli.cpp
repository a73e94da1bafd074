#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "htap/bench/acceptance.hpp"
#include "htap/bench/experiments.hpp"

using namespace htap;
using namespace htap::bench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

const CsvTable &table(const ExperimentOutput &o, const std::string &name)
{
    for (const auto &t : o.tables)
        if (t.name == name)
            return t;
    throw std::runtime_error("missing table " + name);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &tag) : path(fs::temp_directory_path() / ("htap_cli_" + tag))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

int cli(const std::string &args, const fs::path &dir)
{
    const auto cmd = std::string(HTAP_CLI_PATH) + " --output_dir " + dir.string() + " " + args + " > " +
                     (dir / "stdout.txt").string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST(Config, DefaultsValidAndProblemsListed)
{
    BenchConfig c;
    EXPECT_TRUE(c.problems().empty());
    c.sched.alpha = 1.5;
    c.load.scale_factor = 0;
    c.thresholds.oltp_cpu_thres = {1};
    const auto p = c.problems();
    ASSERT_EQ(p.size(), 3u);
    EXPECT_NE(p[0].find("scale factor"), std::string::npos);
    EXPECT_NE(p[1].find("alpha"), std::string::npos);
    EXPECT_THROW(c.validate(), Error);
}

TEST(Config, SizeListFormat)
{
    EXPECT_EQ(format_size_list({7, 7}, ' '), "7 7");
}

TEST(Csv, RoundTrip)
{
    CsvTable t{"demo", {"a", "b"}, {}};
    t.add({"1", "x"});
    EXPECT_THROW(t.add({"1"}), Error);
    const auto back = parse_csv(t.render());
    EXPECT_EQ(back.name, "demo");
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_EQ(t.render().rfind("# htap-csv v1 demo\n", 0), 0u);
    EXPECT_THROW(parse_csv("a,b\n"), Error);
}

TEST(Datagen, CardinalitiesAndDeterminism)
{
    BenchConfig c;
    const auto a = datagen(c);
    ASSERT_EQ(a.size(), 5u);
    EXPECT_EQ(a[4].name, "table_orderline");
    EXPECT_EQ(a[4].rows.size(), 600u);
    EXPECT_EQ(a[3].rows.size(), 40u);
    for (const auto &cnt : a[3].column("o_ol_cnt"))
        EXPECT_EQ(cnt, "15");
    const auto b = datagen(c);
    for (std::size_t i = 0; i < a.size(); ++i)
        EXPECT_EQ(a[i].render(), b[i].render());
    c.load.seed = 7;
    EXPECT_NE(datagen(c)[4].render(), a[4].render());
    c.load.scale_factor = 0;
    EXPECT_THROW(datagen(c), Error);
}

TEST(Experiments, ShapesAndLiveChecks)
{
    BenchConfig c;
    EXPECT_THROW(run_experiment("s4-sweep", c), Error);

    const auto s1 = run_experiment("s1-sweep", c);
    EXPECT_TRUE(s1.live_ok);
    EXPECT_EQ(table(s1, "s1_sweep").rows.size(), 8u);

    const auto s2 = run_experiment("s2-batch", c);
    EXPECT_TRUE(s2.live_ok);
    const auto cum = table(s2, "s2_batch").column("cumulative_s");
    ASSERT_EQ(cum.size(), 5u);
    for (std::size_t i = 1; i < cum.size(); ++i)
        EXPECT_LE(std::stod(cum[i]), std::stod(cum[i - 1]));
    EXPECT_EQ(table(s2, "s2_batch").column("live_etl_count"),
              (std::vector<std::string>{"16", "8", "4", "2", "1"}));

    const auto f = run_experiment("s3-fresh-sweep", c);
    EXPECT_TRUE(f.live_ok);
    EXPECT_EQ(table(f, "s3_fresh_sweep").rows.size(), 63u);
    for (const auto &s : table(f, "s3_crossover").column("f_star"))
        EXPECT_NE(s, "none");

    const auto e = run_experiment("s3-elastic-sweep", c);
    EXPECT_TRUE(e.live_ok);
    EXPECT_EQ(table(e, "s3_elastic_sweep").rows.size(), 7u);

    const auto sim_only = run_experiment("s3-elastic-sweep", c, false);
    EXPECT_EQ(table(sim_only, "s3_elastic_sweep").column("live_result_ok"), std::vector<std::string>(7, ""));
}

TEST(Experiments, AdaptiveSequenceAndOfflineRecompute)
{
    BenchConfig c;
    c.iterations = 20;
    const auto out = run_experiment("adaptive-seq", c);
    EXPECT_TRUE(out.live_ok);
    EXPECT_EQ(table(out, "adaptive_seq").rows.size(), 7u * 60u);
    EXPECT_EQ(table(out, "adaptive_summary").rows.size(), 7u);
    EXPECT_EQ(table(out, "adaptive_live").rows.size(), 60u);

    // offline recompute from the logged columns, in extended precision
    std::stringstream ss(table(out, "decisions").render());
    const auto log = read_decision_log(ss);
    ASSERT_EQ(log.size(), 60u);
    for (const auto &d : log) {
        StateTag want = StateTag::S2;
        if (!d.batch && static_cast<long double>(d.n_fq) < static_cast<long double>(d.alpha) * d.n_ft)
            want = !d.f_el ? StateTag::S3_IS : d.m_el == ElasticityMode::Hybrid ? StateTag::S3_NI : StateTag::S1;
        EXPECT_EQ(d.state, want);
    }
    c.iterations = 100;
    EXPECT_EQ(table(run_experiment("adaptive-seq", c, false), "adaptive_seq").rows.size(), 2100u);
}

TEST(Verify, ConfigFailureAndFaultInjection)
{
    VerifyOptions o;
    o.cfg.sched.alpha = -0.5;
    o.only = {2};
    auto r = run_verify(o);
    ASSERT_EQ(r.size(), 2u);
    EXPECT_EQ(r[0].id, 0);
    EXPECT_FALSE(r[0].pass);
    EXPECT_TRUE(r[1].pass);

    o = {};
    o.only = {3};
    EXPECT_TRUE(run_verify(o).at(0).pass);
    o.skip_etl_bit_clear = true;
    EXPECT_FALSE(run_verify(o).at(0).pass);
}

TEST(Cli, ExitCodesAndReports)
{
    TempDir d("codes");
    EXPECT_EQ(cli("--scale_factor 0 datagen", d.path), 2);
    EXPECT_NE(cli("run no-such-experiment", d.path), 0);
    EXPECT_EQ(cli("datagen", d.path), 0);
    EXPECT_TRUE(fs::exists(d.path / "table_orderline.csv"));

    EXPECT_EQ(cli("verify --only 2,7", d.path), 0);
    const auto ok = parse_csv(slurp(d.path / "verify.csv"));
    EXPECT_EQ(ok.column("status"), (std::vector<std::string>{"PASS", "PASS"}));

    EXPECT_EQ(cli("--alpha 1.5 verify --only 2", d.path), 1);
    const auto bad = parse_csv(slurp(d.path / "verify.csv"));
    EXPECT_EQ(bad.rows.at(0).at(1), "config");
    EXPECT_EQ(bad.rows.at(0).at(2), "FAIL");

    EXPECT_EQ(cli("verify --only 3 --inject-fault skip-bit-clear", d.path), 1);
    EXPECT_EQ(parse_csv(slurp(d.path / "verify.csv")).column("status"), std::vector<std::string>{"FAIL"});
}

TEST(Cli, ConfigFileAndFlagOverride)
{
    TempDir d("config");
    const auto cfg = d.path / "bench.cfg";
    std::ofstream(cfg) << "# test config\nbatch_etl_bytes = 250e6\nalpha = 0.25\nseed = 9\n";
    ASSERT_EQ(cli("--config " + cfg.string() + " simulate s2-batch", d.path), 0);
    const auto half = parse_csv(slurp(d.path / "s2_batch.csv")).column("etl_s");
    ASSERT_EQ(cli("--config " + cfg.string() + " --batch_etl_bytes 500e6 simulate s2-batch", d.path), 0);
    const auto full = parse_csv(slurp(d.path / "s2_batch.csv")).column("etl_s");
    for (std::size_t i = 0; i < half.size(); ++i)
        EXPECT_DOUBLE_EQ(2 * std::stod(half[i]), std::stod(full[i]));
}

TEST(Cli, RunsAreByteIdentical)
{
    TempDir a("det_a"), b("det_b");
    for (const auto *e : {"s2-batch", "adaptive-seq"}) {
        ASSERT_EQ(cli(std::string("--iterations 10 run ") + e, a.path), 0);
        ASSERT_EQ(cli(std::string("--iterations 10 run ") + e, b.path), 0);
    }
    std::size_t compared = 0;
    for (const auto &f : fs::directory_iterator(a.path)) {
        if (f.path().extension() != ".csv")
            continue;
        EXPECT_EQ(slurp(f.path()), slurp(b.path / f.path().filename())) << f.path();
        ++compared;
    }
    EXPECT_EQ(compared, 5u);
}

TEST(Cli, DefaultConfigFileMatchesBuiltInDefaults)
{
    TempDir a("cfg_file"), b("cfg_none");
    const std::string cfg = std::string(HTAP_SOURCE_DIR) + "/configs/default.cfg";
    for (const auto *e : {"s1-sweep", "s2-batch", "s3-fresh-sweep", "s3-elastic-sweep", "adaptive-seq"}) {
        ASSERT_EQ(cli("--config " + cfg + " simulate " + e, a.path), 0) << e;
        ASSERT_EQ(cli(std::string("simulate ") + e, b.path), 0) << e;
    }
    std::size_t compared = 0;
    for (const auto &f : fs::directory_iterator(a.path))
        if (f.path().extension() == ".csv") {
            EXPECT_EQ(slurp(f.path()), slurp(b.path / f.path().filename())) << f.path();
            ++compared;
        }
    EXPECT_EQ(compared, 7u);
}

TEST(Cli, VerifyReportIsByteIdentical)
{
    TempDir a("verify_a"), b("verify_b");
    ASSERT_EQ(cli("verify --only 1,3,4", a.path), 0);
    ASSERT_EQ(cli("verify --only 1,3,4", b.path), 0);
    EXPECT_EQ(slurp(a.path / "verify.csv"), slurp(b.path / "verify.csv"));
}
