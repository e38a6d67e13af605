#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "crt/harness/experiments.hpp"

using namespace crt::harness;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("crt-harness-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(dir);
    return dir;
}

ExperimentConfig small(const std::string& name) {
    ExperimentConfig c;
    c.experiment = name;
    c.seed = 99;
    c.threads = 1;
    if (name == "root-volume" || name == "volume-moments") {
        c.grid = 256;
        c.replicas = 300;
    } else if (name == "upcrossing-law") {
        c.replicas = 5000;
    } else if (name == "reroot-ks") {
        c.grid = 256;
        c.replicas = 200;
    } else if (name == "resistance-suite" || name == "hitting-green") {
        c.grid = 1024;
        c.replicas = 3;
        c.marks = 16;
    } else if (name == "annealed-hk") {
        c.grid = 512;
        c.replicas = 3;
        c.marks = 16;
        c.times = std::vector<double>{0.01, 0.03, 0.1};
    } else if (name == "fluctuation-bands") {
        c.grid = 1024;
        c.replicas = 2;
        c.center_stride = 16;
    }
    return c;
}

int run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " '" + CRT_LAB_BINARY + "' " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(ReportCsv, EmptyReportIsHeaderOnly) {
    const auto dir = scratch("empty");
    fs::create_directories(dir);
    ExperimentReport rep;
    emit_csv(rep, dir / "r.csv");
    EXPECT_EQ(slurp(dir / "r.csv"), std::string(kReportHeader) + "\n");
}

TEST(ReportCsv, OneRowIsTwoLines) {
    const auto dir = scratch("one");
    fs::create_directories(dir);
    ExperimentReport rep;
    rep.check_close("mean", 0.5, 0.01, 0.5, 0.03, Basis::published);
    emit_csv(rep, dir / "r.csv");
    const auto text = slurp(dir / "r.csv");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    EXPECT_EQ(text.find('\r'), std::string::npos);
    EXPECT_NE(text.find("\nmean,0.5,0.01,0.5,"), std::string::npos);
}

TEST(ReportCsv, RoundTripReproducesRows) {
    ExperimentReport rep;
    rep.check_close("plain", 1.0 / 3.0, 1e-3, 0.3333, 0.01, Basis::published);
    rep.check_at_most("needs \"quotes\", and commas", 5e-17, NAN, 0.0, 1e-10, Basis::identity);
    rep.check_at_least("p", 0.001, 0.01, Basis::computed);
    rep.record("multi\nline", -2.5e300);
    std::stringstream buf;
    write_report_csv(buf, rep);
    const auto rows = read_report_csv(buf);
    ASSERT_EQ(rows.size(), rep.rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) EXPECT_EQ(rows[i], rep.rows[i]) << rep.rows[i].name;
    EXPECT_FALSE(rows[2].pass);
}

TEST(ReportCsv, WriteFailureNamesThePath) {
    ExperimentReport rep;
    try {
        emit_csv(rep, "/nonexistent-dir/sub/report.csv");
        FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/sub/report.csv"), std::string::npos);
    }
}

TEST(Config, ParsesKeyValueFile) {
    std::istringstream in(
        "# experiment settings\n"
        "experiment = reroot-ks\n"
        "n = 1024   # grid\n"
        "replicas=50\nmarks = 8\nseed = 18446744073709551615\nthreads = 2\n"
        "radii = 0.1, 0.2,0.4\ntimes = 1e-3,1e-2\ncenter_stride = 4\nout = /tmp/x\n\n");
    ExperimentConfig c;
    apply_config_stream(in, c);
    EXPECT_EQ(c.experiment, "reroot-ks");
    EXPECT_EQ(c.grid, 1024u);
    EXPECT_EQ(c.replicas, 50u);
    EXPECT_EQ(c.marks, 8u);
    EXPECT_EQ(c.seed, 18446744073709551615ull);
    EXPECT_EQ(c.threads, 2u);
    EXPECT_EQ(*c.radii, (std::vector<double>{0.1, 0.2, 0.4}));
    EXPECT_EQ(*c.times, (std::vector<double>{1e-3, 1e-2}));
    EXPECT_EQ(c.center_stride, 4u);
    EXPECT_EQ(c.out, "/tmp/x");
    EXPECT_NO_THROW(c.validate());
}

TEST(Config, RejectsMalformedInput) {
    for (const char* text : {"n 1024\n", "colour = red\n", "n = -4\n", "n = 12x\n", "radii = 0.1,,0.2\n"}) {
        std::istringstream in(text);
        ExperimentConfig c;
        EXPECT_THROW(apply_config_stream(in, c), crt::InvalidParameter) << text;
    }
    ExperimentConfig c;
    EXPECT_THROW(apply_config_file("/nonexistent/config.txt", c), crt::InvalidParameter);
}

TEST(Config, ValidationRules) {
    ExperimentConfig c = small("root-volume");
    EXPECT_NO_THROW(c.validate());
    c.grid = 1000;
    EXPECT_THROW(c.validate(), crt::InvalidParameter);
    c = small("root-volume");
    c.replicas = 0;
    EXPECT_THROW(c.validate(), crt::InvalidParameter);
    c = small("root-volume");
    c.radii = std::vector<double>{0.2, 0.1};
    EXPECT_THROW(c.validate(), crt::InvalidParameter);
    c.radii = std::vector<double>{0.0, 0.1};
    EXPECT_THROW(c.validate(), crt::InvalidParameter);
    c = small("root-volume");
    c.experiment = "nope";
    try {
        c.validate();
        FAIL() << "expected an exception";
    } catch (const crt::InvalidParameter& e) {
        const std::string what = e.what();
        for (const auto& name : experiment_names()) EXPECT_NE(what.find(name), std::string::npos) << name;
    }
}

TEST(RunExperiment, EveryExperimentRunsAtSmallSize) {
    for (const auto& name : experiment_names()) {
        const auto rep = run_experiment(small(name));
        EXPECT_EQ(rep.experiment, name);
        EXPECT_FALSE(rep.rows.empty()) << name;
        EXPECT_FALSE(rep.streams.empty()) << name;
        EXPECT_GE(rep.wall_clock_seconds, 0.0);
        for (const auto& row : rep.rows)
            if (row.asserted) EXPECT_NE(row.basis, Basis::recorded) << name << ": " << row.name;
    }
}

TEST(RunExperiment, ReportIndependentOfThreadCount) {
    for (const char* name : {"root-volume", "resistance-suite", "hitting-green", "fluctuation-bands"}) {
        auto c = small(name);
        const auto one = run_experiment(c);
        c.threads = 4;
        const auto four = run_experiment(c);
        ASSERT_EQ(one.rows.size(), four.rows.size());
        for (std::size_t i = 0; i < one.rows.size(); ++i) EXPECT_EQ(one.rows[i], four.rows[i]) << name;
        EXPECT_EQ(one.attachments, four.attachments);
    }
}

TEST(RunExperiment, RepeatedRunsWriteIdenticalFiles) {
    for (const char* name : {"upcrossing-law", "annealed-hk", "hitting-green"}) {
        const auto a = scratch(std::string(name) + "-a");
        auto c = small(name);
        c.out = a.string();
        run_experiment(c);
        c.out = scratch(std::string(name) + "-b").string();
        run_experiment(c);
        std::size_t files = 0;
        for (const auto& entry : fs::directory_iterator(a)) {
            const auto other = fs::path(c.out) / entry.path().filename();
            EXPECT_EQ(slurp(entry.path()), slurp(other)) << entry.path();
            ++files;
        }
        EXPECT_GE(files, 3u);
    }
}

TEST(RunExperiment, OutputsAndSchemas) {
    auto c = small("annealed-hk");
    c.out = scratch("schemas-hk").string();
    run_experiment(c);
    EXPECT_EQ(slurp(fs::path(c.out) / "heat_kernel.csv").rfind("t,estimate,stderr,tree_count\n", 0), 0u);
    EXPECT_EQ(slurp(fs::path(c.out) / "report.csv").rfind(kReportHeader, 0), 0u);
    const auto seeds = slurp(fs::path(c.out) / "seeds.csv");
    EXPECT_EQ(seeds, "replica,seed,stream_id\n0,99,0\n1,99,1\n2,99,2\n");
    EXPECT_NE(slurp(fs::path(c.out) / "config.txt").find("experiment = annealed-hk\n"), std::string::npos);

    c = small("hitting-green");
    c.out = scratch("schemas-hg").string();
    run_experiment(c);
    EXPECT_EQ(slurp(fs::path(c.out) / "exit_times.csv").rfind("center,radius,mean,stderr\n", 0), 0u);
}

TEST(Cli, ExitCodes) {
    const auto out = scratch("cli");
    EXPECT_EQ(run_cli("upcrossing-law --replicas 2000 --seed 5 --out '" + (out / "ok").string() + "'"), 0);
    EXPECT_TRUE(fs::exists(out / "ok" / "report.csv"));
    EXPECT_EQ(run_cli("no-such-experiment"), 2);
    EXPECT_EQ(run_cli("root-volume --n 1000"), 2);
    EXPECT_EQ(run_cli("root-volume --replicas"), 2);
    EXPECT_EQ(run_cli("root-volume --config /nonexistent/file.cfg"), 2);
    EXPECT_EQ(run_cli(""), 2);
}

TEST(Cli, OutputDirectoryPrecedence) {
    const auto base = scratch("precedence");
    fs::create_directories(base);
    const auto cfg = base / "run.cfg";
    std::ofstream(cfg) << "out = " << (base / "from-config").string() << "\nreplicas = 1000\n";
    const std::string env = "CRT_LAB_OUT='" + (base / "from-env").string() + "'";

    EXPECT_EQ(run_cli("upcrossing-law --config '" + cfg.string() + "'"), 0);
    EXPECT_TRUE(fs::exists(base / "from-config" / "report.csv"));
    EXPECT_EQ(run_cli("upcrossing-law --config '" + cfg.string() + "'", env), 0);
    EXPECT_TRUE(fs::exists(base / "from-env" / "report.csv"));
    EXPECT_EQ(run_cli("upcrossing-law --config '" + cfg.string() + "' --out '" + (base / "from-flag").string() + "'",
                      env),
              0);
    EXPECT_TRUE(fs::exists(base / "from-flag" / "report.csv"));
    // Flags override config values too.
    EXPECT_EQ(run_cli("upcrossing-law --config '" + cfg.string() + "' --replicas 1500 --out '" +
                      (base / "flag-replicas").string() + "'"),
              0);
    const auto seeds = slurp(base / "flag-replicas" / "seeds.csv");
    EXPECT_EQ(std::count(seeds.begin(), seeds.end(), '\n'), 1501);
}
