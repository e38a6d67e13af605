// crt-lab: run one experiment and write its CSV outputs.
//
//   crt-lab <experiment> --n <pow2> --replicas <M> --marks <k> --seed <u64> --out <path>
//           [--threads <w>] [--config <file>]
//
// Settings are layered: defaults < config file < CRT_LAB_OUT (output directory) < flags.
// Exit status: 0 all assertions pass, 1 a statistical assertion failed, 2 usage or config error.

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "crt/harness/experiments.hpp"

namespace {

constexpr int kUsageError = 2;

void print_report(const crt::harness::ExperimentReport& rep) {
    for (const auto& r : rep.rows) {
        const char* tag = !r.asserted ? "info" : (r.pass ? "PASS" : "FAIL");
        std::printf("%-4s  %-44s value=%-14.8g", tag, r.name.c_str(), r.value);
        if (!std::isnan(r.stderr_)) std::printf(" se=%-12.4g", r.stderr_);
        if (!std::isnan(r.target)) std::printf(" target=%-12.8g", r.target);
        if (!std::isnan(r.tolerance)) std::printf(" tol=%.4g", r.tolerance);
        std::printf("\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace crt::harness;

    CLI::App app{"Random-walk and volume experiments on the Brownian continuum random tree"};
    app.footer("Experiments: " + experiment_list() + "\nEnvironment: CRT_LAB_OUT sets the output directory.");

    std::string experiment;
    std::optional<std::size_t> n, replicas, marks, threads, stride;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, config;
    std::optional<std::vector<double>> radii, times;

    app.add_option("experiment", experiment, "Experiment name")->required();
    app.add_option("--n", n, "Grid resolution (power of two)");
    app.add_option("--replicas", replicas, "Number of replicas / trees");
    app.add_option("--marks", marks, "Marks per extracted tree");
    app.add_option("--seed", seed, "Master seed");
    app.add_option("--out", out, "Output directory");
    app.add_option("--threads", threads, "Worker threads (0 = available parallelism)");
    app.add_option("--config", config, "Key = value config file");
    app.add_option("--radii", radii, "Radius grid")->delimiter(',');
    app.add_option("--times", times, "Time grid")->delimiter(',');
    app.add_option("--center-stride", stride, "Grid stride of centers for sup/inf volumes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    ExperimentConfig cfg;
    try {
        if (config) apply_config_file(*config, cfg);
        cfg.experiment = experiment;
        if (const char* env = std::getenv("CRT_LAB_OUT"); env && *env) cfg.out = env;
        if (out) cfg.out = *out;
        if (cfg.out.empty()) cfg.out = "crt-lab-out/" + experiment;
        if (n) cfg.grid = n;
        if (replicas) cfg.replicas = replicas;
        if (marks) cfg.marks = marks;
        if (seed) cfg.seed = *seed;
        if (threads) cfg.threads = *threads;
        if (radii) cfg.radii = radii;
        if (times) cfg.times = times;
        if (stride) cfg.center_stride = stride;
        cfg.validate();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "crt-lab: %s\n", e.what());
        return kUsageError;
    }

    try {
        const auto rep = run_experiment(cfg);
        print_report(rep);
        std::printf("%s: %s in %.1f s, outputs in %s\n", cfg.experiment.c_str(), rep.passed() ? "passed" : "FAILED",
                    rep.wall_clock_seconds, cfg.out.c_str());
        return rep.passed() ? 0 : 1;
    } catch (const crt::InvalidParameter& e) {
        std::fprintf(stderr, "crt-lab: %s\n", e.what());
        return kUsageError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "crt-lab: %s\n", e.what());
        return kUsageError;
    }
}
