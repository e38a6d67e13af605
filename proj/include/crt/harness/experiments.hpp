#pragma once

// Experiment orchestration. Every replica i draws from the stream (seed, i), results land in
// slot i, and reductions run in index order, so reports are identical for any thread count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "crt/discrete_tree.hpp"
#include "crt/excursion.hpp"
#include "crt/harness/config.hpp"
#include "crt/harness/report.hpp"
#include "crt/network.hpp"
#include "crt/parallel.hpp"
#include "crt/realtree.hpp"
#include "crt/stats.hpp"
#include "crt/walk.hpp"

namespace crt::harness {

namespace detail {

inline std::string fmt(const char* pattern, double x) {
    char buf[96];
    std::snprintf(buf, sizeof buf, pattern, x);
    return buf;
}

inline std::string list_to_string(const std::vector<double>& xs) {
    std::string s;
    for (double x : xs) s += (s.empty() ? "" : ",") + csv_number(x);
    return s;
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    std::vector<double> g(points);
    for (std::size_t k = 0; k < points; ++k)
        g[k] = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * static_cast<double>(k) /
                                           static_cast<double>(points - 1));
    return g;
}

inline void echo(ExperimentReport& rep, const ExperimentConfig& cfg, std::size_t n, std::size_t replicas,
                 std::size_t marks, const std::vector<double>& radii, const std::vector<double>& times) {
    rep.config = {{"experiment", cfg.experiment},        {"n", std::to_string(n)},
                  {"replicas", std::to_string(replicas)}, {"marks", std::to_string(marks)},
                  {"seed", std::to_string(cfg.seed)},     {"radii", list_to_string(radii)},
                  {"times", list_to_string(times)}};
}

inline void assign_streams(ExperimentReport& rep, std::uint64_t seed, std::size_t count) {
    rep.streams.resize(count);
    for (std::size_t i = 0; i < count; ++i) rep.streams[i] = {seed, i};
}

// Sampled tree i of an experiment: excursion at resolution n plus k uniform marks.
struct SampledTree {
    RealTreeIndex index;
    std::vector<double> marks;
    DiscreteTree tree;
};

inline SampledTree sample_tree(std::uint64_t seed, std::size_t i, std::size_t n, std::size_t k) {
    Rng rng(seed, i);
    auto index = build_index(sample_excursion(n, rng));
    auto marks = uniform_marks(k, rng);
    auto tree = extract_tree(index, marks);
    return {std::move(index), std::move(marks), std::move(tree)};
}

inline double root_volume_target(double r) { return 1.0 - std::exp(-2.0 * r * r); }

}  // namespace detail

// Mean of mu(B(rho, r)) = time below r against 1 - exp(-2 r^2).
inline void run_root_volume(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t n = cfg.grid.value_or(std::size_t{1} << 14);
    const std::size_t m = cfg.replicas.value_or(10000);
    const auto radii = cfg.radii.value_or(std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5});
    detail::echo(rep, cfg, n, m, 0, radii, {});
    detail::assign_streams(rep, cfg.seed, m);
    std::vector<std::vector<double>> vol(radii.size(), std::vector<double>(m));
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const auto f = sample_excursion(n, rng);
        for (std::size_t k = 0; k < radii.size(); ++k) vol[k][i] = occupation_below(f, radii[k]);
    });
    const double bias = 4.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < radii.size(); ++k) {
        const auto e = stats::mean_stderr(vol[k]);
        rep.check_close(detail::fmt("root_ball_volume[r=%g]", radii[k]), e.mean, e.stderr_,
                        detail::root_volume_target(radii[k]), 3.0 * e.stderr_ + bias, Basis::published);
    }
}

// Moments E[(time below r)^k] against (k+1)! r^{2k}.
inline void run_volume_moments(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t n = cfg.grid.value_or(std::size_t{1} << 14);
    const std::size_t m = cfg.replicas.value_or(10000);
    const auto radii = cfg.radii.value_or(std::vector<double>{0.1, 0.2, 0.3});
    detail::echo(rep, cfg, n, m, 0, radii, {});
    detail::assign_streams(rep, cfg.seed, m);
    std::vector<std::vector<double>> vol(radii.size(), std::vector<double>(m));
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const auto f = sample_excursion(n, rng);
        for (std::size_t k = 0; k < radii.size(); ++k) vol[k][i] = occupation_below(f, radii[k]);
    });
    std::vector<double> powk(m);
    for (std::size_t j = 0; j < radii.size(); ++j) {
        const double r = radii[j];
        double factorial = 1.0;
        for (int k = 1; k <= 3; ++k) {
            factorial *= (k + 1);
            for (std::size_t i = 0; i < m; ++i) powk[i] = std::pow(vol[j][i], k);
            const auto e = stats::mean_stderr(powk);
            char name[64];
            std::snprintf(name, sizeof name, "occupation_moment[k=%d,r=%g]", k, r);
            rep.check_at_most(name, e.mean, e.stderr_, factorial * std::pow(r, 2 * k), 3.0 * e.stderr_,
                              Basis::published);
        }
    }
}

// Upcrossings of [delta, 2 delta] by killed Brownian motion against Geometric(1/2).
inline void run_upcrossing_law(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t m = cfg.replicas.value_or(100000);
    detail::echo(rep, cfg, 0, m, 0, {}, {});
    detail::assign_streams(rep, cfg.seed, m);
    std::vector<std::size_t> counts(m);
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        counts[i] = sample_bm_upcrossings(1.0, rng);
    });
    std::vector<std::size_t> bins(6, 0);
    std::vector<double> zero(m), value(m), pgf(m);
    for (std::size_t i = 0; i < m; ++i) {
        ++bins[std::min<std::size_t>(counts[i], 5)];
        zero[i] = counts[i] == 0 ? 1.0 : 0.0;
        value[i] = static_cast<double>(counts[i]);
        pgf[i] = std::pow(1.5, static_cast<double>(counts[i]));
    }
    const double probs[] = {0.5, 0.25, 0.125, 0.0625, 0.03125, 0.03125};
    const auto chi = stats::chi_square_gof(bins, probs);
    rep.check_at_least("chi_square_p_value[bins=0..4,>=5]", chi.p_value, 0.01, Basis::published);
    rep.record("chi_square_statistic", chi.statistic);
    const auto p0 = stats::mean_stderr(zero);
    rep.check_close("P(N=0)", p0.mean, p0.stderr_, 0.5, 3.0 * p0.stderr_, Basis::published);
    const auto mean = stats::mean_stderr(value);
    rep.check_close("E[N]", mean.mean, mean.stderr_, 1.0, 3.0 * mean.stderr_, Basis::identity);
    // 1.5^N has infinite variance (2.25 > 2), so this row is informational.
    const auto g = stats::mean_stderr(pgf);
    rep.record("E[1.5^N]", g.mean, g.stderr_, 2.0);
}

// Two-sample KS tests between W and an independent re-rooted W^(U).
inline void run_reroot_ks(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t n = cfg.grid.value_or(std::size_t{1} << 14);
    const std::size_t m = cfg.replicas.value_or(10000);
    const double level = 0.2;
    detail::echo(rep, cfg, n, m, 0, {level}, {});
    detail::assign_streams(rep, cfg.seed, 2 * m);
    std::vector<double> h0(m), h1(m), o0(m), o1(m);
    parallel_for(2 * m, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        auto f = sample_excursion(n, rng);
        if (i >= m) {
            const double u = static_cast<double>(rng.below(n)) / static_cast<double>(n);
            f = reroot_shift(f, u);
        }
        auto& h = i < m ? h0[i] : h1[i - m];
        auto& o = i < m ? o0[i] : o1[i - m];
        h = height(f);
        o = occupation_below(f, level);
    });
    const auto kh = stats::ks_two_sample(h0, h1);
    const auto ko = stats::ks_two_sample(o0, o1);
    rep.check_at_least("ks_p_value[height]", kh.p_value, 0.01, Basis::published);
    rep.record("ks_statistic[height]", kh.statistic);
    rep.check_at_least("ks_p_value[occupation_below_0.2]", ko.p_value, 0.01, Basis::published);
    rep.record("ks_statistic[occupation_below_0.2]", ko.statistic);
}

inline bool close_rel(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// Exact resistance identities on extracted trees.
inline void run_resistance_suite(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t n = cfg.grid.value_or(std::size_t{1} << 14);
    const std::size_t m = cfg.replicas.value_or(100);
    const std::size_t k = cfg.marks.value_or(64);
    const auto radii = cfg.radii.value_or(std::vector<double>{0.05, 0.1, 0.2, 0.4});
    detail::echo(rep, cfg, n, m, k, radii, {});
    detail::assign_streams(rep, cfg.seed, m);

    struct TreeResult {
        double resistance_gap = 0, tower_gap = 0, hitting_gap = 0, green_gap = 0, green_sink = 0;
        double ball_excess = -1e300, cut_excess = -1e300;
        std::size_t cut_over_upcross = 0, ball_checks = 0;
    };
    std::vector<TreeResult> res(m);
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        auto sampled = detail::sample_tree(cfg.seed, i, n, k);
        const auto& tree = sampled.tree;
        auto& out = res[i];
        const std::size_t v = tree.size();

        for (std::size_t a = 0; a < v; ++a) {
            const auto d = tree.distances_from(a);
            for (std::size_t b = a + 1; b < v; ++b)
                out.resistance_gap = std::max(out.resistance_gap, std::abs(effective_resistance(tree, a, b) - d[b]));
        }

        Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull, i);
        std::vector<std::size_t> perm(v);
        for (std::size_t j = 0; j < v; ++j) perm[j] = j;
        for (std::size_t j = v; j > 1; --j) std::swap(perm[j - 1], perm[rng.below(j)]);
        const std::size_t s1 = std::min<std::size_t>(v, 16), s0 = std::min<std::size_t>(v, 6);
        const std::vector<std::size_t> big(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s1));
        const std::vector<std::size_t> small(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(s0));
        const auto tower = trace_form(tree, big).restrict_to(small);
        const auto direct = trace_form(tree, small);
        for (Eigen::Index a = 0; a < tower.conductance.rows(); ++a)
            for (Eigen::Index b = 0; b < tower.conductance.cols(); ++b) {
                const double x = tower.conductance(a, b), y = direct.conductance(a, b);
                out.tower_gap = std::max(out.tower_gap, std::abs(x - y) / std::max({1.0, std::abs(x), std::abs(y)}));
            }

        for (int trial = 0; trial < 64 && v >= 2; ++trial) {
            const std::size_t s = rng.below(v), a = rng.below(v);
            std::size_t b = rng.below(v - 1);
            if (b >= a) ++b;
            const auto hp = hitting_probability(tree, s, a, b);
            out.hitting_gap = std::max(out.hitting_gap, std::abs(hp.closed_form - hp.harmonic));
            if (trial < 8) {
                // Green kernel by unit current injected at a, potential pinned to 0 at b.
                DirichletProblem problem(v);
                problem.fixed[b] = 0.0;
                problem.source[a] = 1.0;
                const auto solved = solve_dirichlet(tree, problem);
                const auto g = green_kernel(tree, a, b);
                const double dab = tree.distances_from(a)[b];
                out.green_gap = std::max(out.green_gap, std::abs(solved[a] - dab));
                out.green_sink = std::max(out.green_sink, std::abs(g[b]) + std::abs(g[a] - dab));
            }
        }

        std::vector<std::size_t> centers{tree.root()};
        for (std::size_t j = 0; j < 4 && j < tree.mark_vertices().size(); ++j)
            centers.push_back(tree.mark_vertices()[j]);
        for (std::size_t c : centers) {
            const double ecc = tree.eccentricity(c);
            for (double r : radii) {
                if (r > ecc) continue;
                const double big_r = resistance_to_ball_complement(tree, c, r);
                const std::size_t cuts = cut_count(tree, c, r);
                out.ball_excess = std::max(out.ball_excess, big_r - r);
                out.cut_excess = std::max(out.cut_excess, 1.0 / big_r - 8.0 * static_cast<double>(cuts) / r);
                ++out.ball_checks;
                if (c == tree.root() && cuts > upcrossings(sampled.index.path(), r / 4.0, r)) ++out.cut_over_upcross;
            }
        }
    });

    TreeResult worst;
    std::size_t checks = 0, over = 0;
    for (const auto& r : res) {
        worst.resistance_gap = std::max(worst.resistance_gap, r.resistance_gap);
        worst.tower_gap = std::max(worst.tower_gap, r.tower_gap);
        worst.hitting_gap = std::max(worst.hitting_gap, r.hitting_gap);
        worst.green_gap = std::max(worst.green_gap, r.green_gap);
        worst.green_sink = std::max(worst.green_sink, r.green_sink);
        worst.ball_excess = std::max(worst.ball_excess, r.ball_excess);
        worst.cut_excess = std::max(worst.cut_excess, r.cut_excess);
        checks += r.ball_checks;
        over += r.cut_over_upcross;
    }
    rep.check_at_most("max|R(u,v)-d(u,v)|", worst.resistance_gap, NAN, 0.0, 1e-10, Basis::published);
    rep.check_at_most("max_rel|trace tower - direct trace|", worst.tower_gap, NAN, 0.0, 1e-10, Basis::published);
    rep.check_at_most("max|hitting closed form - harmonic|", worst.hitting_gap, NAN, 0.0, 1e-10, Basis::published);
    rep.check_at_most("max|g(s1,s1) solved - d(s1,s2)|", worst.green_gap, NAN, 0.0, 1e-10, Basis::published);
    rep.check_at_most("max|green endpoints - (d(s1,s2), 0)|", worst.green_sink, NAN, 0.0, 0.0, Basis::published);
    rep.check_at_most("max(R(v,B(v,r)^c) - r)", worst.ball_excess, NAN, 0.0, 1e-12, Basis::published);
    rep.check_at_most("max(1/R - 8 M(v,r)/r)", worst.cut_excess, NAN, 0.0, 1e-9, Basis::published);
    rep.check_at_most("count(M(rho,r) > N_{r/4}^r)", static_cast<double>(over), NAN, 0.0, 0.0, Basis::published);
    rep.record("ball_checks", static_cast<double>(checks));
}

// Heat-kernel upper bound audit, exact exit times, and Monte-Carlo checks of hitting
// probabilities and Green-kernel occupation.
inline void run_hitting_green(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t n = cfg.grid.value_or(std::size_t{1} << 14);
    const std::size_t m = cfg.replicas.value_or(50);
    const std::size_t k = cfg.marks.value_or(256);
    const auto radii = cfg.radii.value_or(std::vector<double>{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0});
    const std::size_t mc_trees = std::min<std::size_t>(m, 4);
    const std::size_t walks = 4000;
    detail::echo(rep, cfg, n, m, k, radii, {});
    detail::assign_streams(rep, cfg.seed, m);

    struct TreeResult {
        std::size_t audits = 0, violations = 0, exit_violations = 0;
        double worst_ratio = 0;
        std::vector<ExitTimeEstimate> exits;
        std::vector<double> z_scores;
    };
    std::vector<TreeResult> res(m);
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        const auto sampled = detail::sample_tree(cfg.seed, i, n, k);
        const auto& tree = sampled.tree;
        auto& out = res[i];
        const SpectralHeatKernel kernel(tree);
        std::vector<std::size_t> centers{tree.root()};
        for (std::size_t j = 0; j < 4 && j < tree.mark_vertices().size(); ++j)
            centers.push_back(tree.mark_vertices()[j]);
        for (std::size_t c : centers) {
            const double ecc = tree.eccentricity(c);
            for (double r : radii) {
                const auto audit = heat_kernel_upper_check(tree, kernel, c, r);
                ++out.audits;
                if (!audit.holds) ++out.violations;
                out.worst_ratio = std::max(out.worst_ratio, audit.density / audit.bound);
                if (r <= ecc) {
                    const auto exit = exit_time_mean(tree, c, r);
                    if (exit.mean > r * ball_mass(tree, c, r) * (1 + 1e-12)) ++out.exit_violations;
                    out.exits.push_back(exit);
                }
            }
        }
        if (i < mc_trees) {
            // Walks run on the tree spanned by the first few marks, where hitting times are short.
            const std::size_t few = std::min<std::size_t>(sampled.marks.size(), 16);
            const auto tree = extract_tree(sampled.index, std::span<const double>(sampled.marks).first(few));
            const ChainGenerator chain(tree);
            Rng rng(cfg.seed ^ 0xd1b54a32d192ed03ull, i);
            const std::size_t v = tree.size();
            const std::size_t s = rng.below(v), a = rng.below(v);
            std::size_t b = rng.below(v - 1);
            if (b >= a) ++b;
            const auto hp = hitting_probability(tree, s, a, b);
            std::size_t hits = 0;
            for (std::size_t w = 0; w < walks; ++w) hits += hits_before(chain, s, a, b, rng) ? 1 : 0;
            const double p = static_cast<double>(hits) / static_cast<double>(walks);
            const double se = std::sqrt(std::max(hp.closed_form * (1 - hp.closed_form), 1e-12) / walks);
            out.z_scores.push_back((p - hp.closed_form) / se);

            const auto g = green_kernel(tree, a, b);
            std::vector<double> sum(v, 0.0), sumsq(v, 0.0), one(v);
            for (std::size_t w = 0; w < walks; ++w) {
                std::fill(one.begin(), one.end(), 0.0);
                occupation_until(chain, a, b, rng, one);
                for (std::size_t x = 0; x < v; ++x) {
                    sum[x] += one[x];
                    sumsq[x] += one[x] * one[x];
                }
            }
            for (std::size_t x : {a, s}) {
                if (x == b) continue;
                const double mean = sum[x] / walks;
                const double var = std::max(sumsq[x] / walks - mean * mean, 0.0);
                const double sem = std::sqrt(var / walks);
                const double expect = g[x] * tree.mass(x);
                if (sem > 0) out.z_scores.push_back((mean - expect) / sem);
            }
        }
    });

    std::size_t audits = 0, violations = 0, exit_violations = 0, z_count = 0;
    double worst = 0, worst_z = 0, z_square = 0;
    std::vector<ExitTimeEstimate> exits;
    for (const auto& r : res) {
        audits += r.audits;
        violations += r.violations;
        exit_violations += r.exit_violations;
        worst = std::max(worst, r.worst_ratio);
        exits.insert(exits.end(), r.exits.begin(), r.exits.end());
        for (double z : r.z_scores) {
            ++z_count;
            worst_z = std::max(worst_z, std::abs(z));
            z_square += z * z;
        }
    }
    rep.check_at_most("heat_kernel_bound_violations", static_cast<double>(violations), NAN, 0.0, 0.0,
                      Basis::published);
    rep.record("heat_kernel_audits", static_cast<double>(audits));
    rep.record("max p_{2rV}/(2/V)", worst);
    rep.check_at_most("exit_time_above_r_times_ball_mass", static_cast<double>(exit_violations), NAN, 0.0, 0.0,
                      Basis::published);
    // The Monte-Carlo z-scores are pooled: sum z^2 is chi-square with one degree per check.
    if (z_count > 0) {
        const double p = boost::math::gamma_q(0.5 * static_cast<double>(z_count), 0.5 * z_square);
        rep.check_at_least("mc_walks_vs_exact_chi_square_p", p, 0.01, Basis::computed);
    }
    rep.record("mc_checks", static_cast<double>(z_count));
    rep.record("mc_max_abs_z", worst_z);
    std::ostringstream csv;
    write_exit_time_csv(csv, exits);
    rep.attachments.emplace_back("exit_times.csv", csv.str());
}

// Annealed on-diagonal heat kernel at the root and its log-log slope.
inline void run_annealed_hk(const ExperimentConfig& cfg, ExperimentReport& rep) {
    AnnealedConfig a;
    a.grid = cfg.grid.value_or(std::size_t{1} << 14);
    a.trees = cfg.replicas.value_or(200);
    a.marks = cfg.marks.value_or(512);
    a.times = cfg.times.value_or(detail::log_grid(1e-3, std::pow(10.0, -1.5), 13));
    a.seed = cfg.seed;
    a.threads = cfg.threads;
    detail::echo(rep, cfg, a.grid, a.trees, a.marks, {}, a.times);
    detail::assign_streams(rep, cfg.seed, a.trees);
    const auto result = annealed_heat_kernel(a);
    rep.check_close("loglog_slope[E p_t(rho,rho)]", result.slope, NAN, -2.0 / 3.0, 0.07, Basis::published);
    // The smallest time must sit two decades above the discretization scale.
    rep.check_at_least("t_min / resolution_time", a.times.front() / result.resolution_time, 100.0,
                       Basis::identity);
    double lo = 1e300, hi = 0;
    for (std::size_t k = 0; k < a.times.size(); ++k) {
        const double c = result.curve.values[k] * std::pow(a.times[k], 2.0 / 3.0);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
        rep.record(detail::fmt("E p_t(rho,rho)[t=%.4g]", a.times[k]), result.curve.values[k],
                   result.curve.stderr_[k]);
    }
    rep.record("envelope t^{2/3} E p_t: min", lo);
    rep.record("envelope t^{2/3} E p_t: max", hi);
    std::ostringstream csv;
    write_heat_kernel_csv(csv, result.curve);
    rep.attachments.emplace_back("heat_kernel.csv", csv.str());
}

// Sup/inf ball volumes against r^2 ln(1/r) and r^2 / ln(1/r): the ratios must stay within a
// fixed two-decade band across the radius range on every tree.
inline void run_fluctuation_bands(const ExperimentConfig& cfg, ExperimentReport& rep) {
    const std::size_t n = cfg.grid.value_or(std::size_t{1} << 16);
    const std::size_t m = cfg.replicas.value_or(6);
    const std::size_t stride = cfg.center_stride.value_or(32);
    const auto radii = cfg.radii.value_or(detail::log_grid(std::pow(2.0, -8), std::pow(2.0, -4), 9));
    detail::echo(rep, cfg, n, m, 0, radii, {});
    rep.config.emplace_back("center_stride", std::to_string(stride));
    detail::assign_streams(rep, cfg.seed, m);
    std::vector<ExtremalProfiles> prof(m);
    parallel_for(m, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const auto idx = build_index(sample_excursion(n, rng));
        prof[i] = extremal_volume_profiles(idx, radii, stride);
    });
    std::ostringstream csv;
    csv << "tree,radius,sup_volume,inf_volume,sup_ratio,inf_ratio\n";
    for (std::size_t i = 0; i < m; ++i) {
        double sup_lo = 1e300, sup_hi = 0, inf_lo = 1e300, inf_hi = 0;
        for (std::size_t k = 0; k < radii.size(); ++k) {
            const double r = radii[k];
            const double log_r = std::max(std::log(1.0 / r), 1.0);
            const double sup_ratio = prof[i].supremum.volumes[k] / (r * r * log_r);
            const double inf_ratio = prof[i].infimum.volumes[k] / (r * r / log_r);
            sup_lo = std::min(sup_lo, sup_ratio);
            sup_hi = std::max(sup_hi, sup_ratio);
            inf_lo = std::min(inf_lo, inf_ratio);
            inf_hi = std::max(inf_hi, inf_ratio);
            char line[256];
            std::snprintf(line, sizeof line, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", i, r,
                          prof[i].supremum.volumes[k], prof[i].infimum.volumes[k], sup_ratio, inf_ratio);
            csv << line;
        }
        char name[64];
        std::snprintf(name, sizeof name, "sup_band_width[tree=%zu]", i);
        rep.check_at_most(name, sup_hi / sup_lo, NAN, 100.0, 0.0, Basis::published);
        std::snprintf(name, sizeof name, "inf_band_width[tree=%zu]", i);
        rep.check_at_most(name, inf_hi / std::max(inf_lo, 1e-300), NAN, 100.0, 0.0, Basis::published);
    }
    rep.attachments.emplace_back("volume_bands.csv", csv.str());
}

inline void write_outputs(const ExperimentReport& rep, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir.string() + "': " + ec.message());
    emit_csv(rep, dir / "report.csv");
    auto write = [&](const std::string& name, const std::string& text) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open '" + (dir / name).string() + "' for writing");
        out << text;
        if (!out) throw std::runtime_error("failed writing '" + (dir / name).string() + "'");
    };
    std::string config;
    for (const auto& [k, v] : rep.config) config += k + " = " + v + "\n";
    write("config.txt", config);
    std::string seeds = "replica,seed,stream_id\n";
    for (std::size_t i = 0; i < rep.streams.size(); ++i)
        seeds += std::to_string(i) + "," + std::to_string(rep.streams[i].seed) + "," +
                 std::to_string(rep.streams[i].stream_id) + "\n";
    write("seeds.csv", seeds);
    for (const auto& [name, text] : rep.attachments) write(name, text);
}

// Runs one experiment; writes report.csv (and friends) into cfg.out when it is set.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentReport rep;
    rep.experiment = cfg.experiment;
    const auto start = std::chrono::steady_clock::now();
    if (cfg.experiment == "root-volume") run_root_volume(cfg, rep);
    else if (cfg.experiment == "upcrossing-law") run_upcrossing_law(cfg, rep);
    else if (cfg.experiment == "volume-moments") run_volume_moments(cfg, rep);
    else if (cfg.experiment == "reroot-ks") run_reroot_ks(cfg, rep);
    else if (cfg.experiment == "resistance-suite") run_resistance_suite(cfg, rep);
    else if (cfg.experiment == "hitting-green") run_hitting_green(cfg, rep);
    else if (cfg.experiment == "annealed-hk") run_annealed_hk(cfg, rep);
    else if (cfg.experiment == "fluctuation-bands") run_fluctuation_bands(cfg, rep);
    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!cfg.out.empty()) write_outputs(rep, cfg.out);
    return rep;
}

}  // namespace crt::harness
