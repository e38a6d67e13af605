#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "crt/walk.hpp"
#include "oracles.hpp"

using crt::DiscreteTree;

namespace {

DiscreteTree two_vertex(double length) { return DiscreteTree({DiscreteTree::npos, 0}, {0, length}, {0.5, 0.5}); }

DiscreteTree sampled_tree(std::uint64_t seed, std::size_t k, std::size_t n = 4096) {
    crt::Rng rng(seed, 0);
    const auto idx = crt::build_index(crt::sample_excursion(n, rng));
    return crt::extract_tree(idx, crt::uniform_marks(k, rng));
}

}  // namespace

TEST(Spectral, TwoVertexClosedForm) {
    const double l = 0.8;
    const auto t = two_vertex(l);
    const crt::SpectralHeatKernel k(t);
    for (double time : {0.0, 0.01, 0.2, 1.0, 5.0}) {
        EXPECT_NEAR(k.density(0, 0, time), 1 + std::exp(-4 * time / l), 1e-12);
        EXPECT_NEAR(k.density(0, 1, time), 1 - std::exp(-4 * time / l), 1e-12);
    }
    const double times[] = {0.1, 0.2};
    const auto c = crt::spectral_heat_kernel(t, 1, times);
    EXPECT_NEAR(c.values[1], 1 + std::exp(-0.8 / l), 1e-12);
}

TEST(Spectral, MatchesMatrixExponential) {
    crt::Rng rng(2, 0);
    const auto t = oracle::random_tree(25, rng);
    const crt::SpectralHeatKernel k(t);
    for (double time : {0.05, 0.5, 3.0}) {
        const auto p = oracle::dense_heat_kernel(t, time);
        for (std::size_t u = 0; u < t.size(); ++u)
            for (std::size_t v = 0; v < t.size(); ++v) ASSERT_NEAR(k.density(u, v, time), p(u, v), 1e-8);
    }
}

TEST(Spectral, TraceSymmetryAndLongTimeLimit) {
    const auto t = sampled_tree(3, 60);
    const crt::SpectralHeatKernel k(t);
    for (double time : {1e-3, 1e-2, 0.1, 1.0}) {
        double tr = 0;
        for (std::size_t v = 0; v < t.size(); ++v)
            if (t.mass(v) > 0) tr += t.mass(v) * k.density(v, v, time);
        EXPECT_NEAR(tr, k.trace(time), 1e-10 * k.trace(time));
    }
    std::vector<std::size_t> pos;
    for (std::size_t v = 0; v < t.size(); ++v)
        if (t.mass(v) > 0) pos.push_back(v);
    for (std::size_t a : pos)
        for (std::size_t b : pos) ASSERT_NEAR(k.density(a, b, 0.01), k.density(b, a, 0.01), 1e-10);
    EXPECT_NEAR(k.density(pos[0], pos[0], 1e4), 1.0, 1e-10);
    EXPECT_NEAR(k.density(pos[0], pos.back(), 1e4), 1.0, 1e-10);
    EXPECT_THROW(crt::spectral_heat_kernel(DiscreteTree({DiscreteTree::npos}, {0}, {1}), 0, std::vector<double>{1}),
                 crt::InvalidParameter);
}

TEST(Spectral, OnDiagonalIsNonIncreasing) {
    const auto t = sampled_tree(4, 100);
    std::vector<double> times;
    for (double x = 1e-5; x < 10; x *= 1.3) times.push_back(x);
    const auto c = crt::spectral_heat_kernel(t, t.root(), times);
    for (std::size_t i = 0; i < times.size(); ++i) {
        ASSERT_GT(c.values[i], 0.0);
        if (i > 0) ASSERT_LE(c.values[i], c.values[i - 1] * (1 + 1e-12));
    }
}

TEST(Spectral, ChapmanKolmogorov) {
    crt::Rng rng(5, 0);
    for (int trial = 0; trial < 3; ++trial) {
        const auto t = oracle::random_tree(40 + 30 * trial, rng);
        const crt::SpectralHeatKernel k(t);
        for (double s : {0.01, 0.3})
            for (double u : {0.02, 1.0})
                for (std::size_t v0 : {0u, 7u}) {
                    double sum = 0;
                    for (std::size_t v = 0; v < t.size(); ++v)
                        sum += t.mass(v) * k.density(v0, v, s) * k.density(v, v0, u);
                    const double direct = k.density(v0, v0, s + u);
                    ASSERT_NEAR(sum, direct, 1e-8 * direct);
                }
    }
}

TEST(Spectral, ZeroMassVerticesAreTracedOut) {
    // Path 0 - 1 - 2 with no mass at 1 behaves like the single edge 0 - 2 of length 0.3 + 0.5.
    const DiscreteTree t({DiscreteTree::npos, 0, 1}, {0, 0.3, 0.5}, {0.5, 0.0, 0.5});
    const crt::SpectralHeatKernel k(t);
    EXPECT_NEAR(k.density(0, 0, 0.1), 1 + std::exp(-0.4 / 0.8), 1e-12);
    EXPECT_THROW(k.density(1, 1, 0.1), crt::InvalidParameter);
}

TEST(Chain, ReversibleOnExtractedTrees) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto t = sampled_tree(10 + seed, 128);
        const crt::ChainGenerator chain(t);
        EXPECT_TRUE(chain.reversible());
        for (std::size_t u = 0; u < t.size(); ++u)
            for (std::size_t w : chain.neighbors(u))
                if (t.mass(u) > 0 && t.mass(w) > 0)
                    ASSERT_NEAR(t.mass(u) * chain.rate(u, w), t.mass(w) * chain.rate(w, u),
                                1e-12 * t.mass(u) * chain.rate(u, w));
    }
}

TEST(MonteCarlo, TimeZero) {
    const auto t = two_vertex(1.0);
    const auto e = crt::mc_return_probability(t, 0, 0.0, 100, {1, 0});
    EXPECT_EQ(e.value, 2.0);
    EXPECT_EQ(e.stderr_, 0.0);
}

TEST(MonteCarlo, TwoVertexClosedForm) {
    const double l = 0.6;
    const auto e = crt::mc_return_probability(two_vertex(l), 0, l / 4, 40000, {2, 0});
    EXPECT_NEAR(e.value, 1 + std::exp(-1.0), 3 * e.stderr_);
}

TEST(MonteCarlo, AgreesWithSpectral) {
    crt::Rng rng(7, 0);
    int agree = 0, total = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const auto t = oracle::random_tree(50, rng, trial % 2 == 0);
        const crt::SpectralHeatKernel k(t);
        std::size_t v = rng.below(50);
        while (t.mass(v) == 0) v = (v + 1) % 50;
        for (double time : {0.05, 0.5}) {
            const auto e = crt::mc_return_probability(t, v, time, 20000, {7, std::uint64_t(100 + total)});
            agree += std::abs(e.value - k.density(v, v, time)) <= 3 * e.stderr_;
            ++total;
        }
    }
    EXPECT_GE(agree, total - 1);
}

TEST(ExitTime, Examples) {
    const double r = 0.7;
    // sigma a leaf with mass 0.6; the rest of the mass lies beyond distance r.
    const DiscreteTree leaf({DiscreteTree::npos, 0, 1}, {0, r, 0.4}, {0.6, 0.0, 0.4});
    EXPECT_NEAR(crt::exit_time_mean(leaf, 0, r).mean, r * 0.6, 1e-14);
    // sigma interior with half-edges of length r: g(sigma, sigma) = r / 2.
    const auto path = oracle::path_tree({r, r});
    EXPECT_NEAR(crt::exit_time_mean(path, 1, r).mean, (r / 2) * (1.0 / 3), 1e-14);
    EXPECT_THROW(crt::exit_time_mean(path, 1, 2 * r), crt::EmptyComplement);
}

// Direct simulation of the walk until it first reaches distance r.
TEST(ExitTime, AgreesWithSimulation) {
    crt::Rng rng(8, 0);
    for (int trial = 0; trial < 3; ++trial) {
        const auto t = oracle::random_tree(30, rng);
        const std::size_t sigma = rng.below(30);
        const double r = 0.5 * t.eccentricity(sigma);
        const auto split = crt::split_at_distance(t, sigma, r);
        const crt::ChainGenerator chain(split.tree);
        std::vector<bool> stop(split.tree.size(), false);
        for (auto v : split.boundary) stop[v] = true;
        crt::Rng walk(8, 1 + trial);
        std::vector<double> times(20000);
        for (double& x : times) {
            std::size_t u = sigma;
            double clock = 0;
            while (!stop[u]) {
                clock += chain.holding_time(u, walk);
                u = chain.jump(u, walk);
            }
            x = clock;
        }
        const auto mc = crt::stats::mean_stderr(times);
        EXPECT_NEAR(crt::exit_time_mean(t, sigma, r).mean, mc.mean, 3 * mc.stderr_);
    }
}

TEST(ExitTime, BoundedByRadiusTimesBallMass) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto t = sampled_tree(20 + seed, 128);
        for (std::size_t v = 0; v < t.size(); v += 5)
            for (double r : {0.01, 0.05, 0.2, 0.5}) {
                if (t.eccentricity(v) < r) continue;
                const auto e = crt::exit_time_mean(t, v, r);
                ASSERT_GT(e.mean, 0.0);
                ASSERT_LE(e.mean, r * crt::ball_mass(t, v, r) + 1e-15);
            }
    }
}

TEST(HeatKernelAudit, TwoVertexAndWholeTree) {
    const auto t = two_vertex(0.5);
    for (double r : {0.1, 0.4, 0.6, 5.0}) EXPECT_TRUE(crt::heat_kernel_upper_check(t, 0, r).holds);
    const auto s = sampled_tree(30, 64);
    const crt::SpectralHeatKernel k(s);
    std::size_t v = 0;
    while (s.mass(v) == 0) ++v;
    const double big = 2 * s.eccentricity(v) + 1;
    const auto a = crt::heat_kernel_upper_check(s, k, v, big);
    EXPECT_NEAR(a.ball_mass, 1.0, 1e-12);
    EXPECT_NEAR(a.time, 2 * big, 1e-12);
    EXPECT_TRUE(a.holds);
    EXPECT_LE(a.density, 2.0);
}

TEST(HeatKernelAudit, HoldsOnSampledTrees) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto t = sampled_tree(40 + seed, 128);
        const crt::SpectralHeatKernel k(t);
        for (std::size_t v = 0; v < t.size(); ++v) {
            if (t.mass(v) == 0) continue;
            for (double r : {0.01, 0.03, 0.1, 0.3, 1.0}) ASSERT_TRUE(crt::heat_kernel_upper_check(t, k, v, r).holds);
        }
    }
}

TEST(NestedMarks, SharedResistancesAgree) {
    crt::Rng rng(50, 0);
    const auto idx = crt::build_index(crt::sample_excursion(4096, rng));
    const auto big = crt::uniform_marks(100, rng);
    const std::vector<double> small(big.begin(), big.begin() + 20);
    const auto tb = crt::extract_tree(idx, big), ts = crt::extract_tree(idx, small);
    for (std::size_t a = 0; a < 20; ++a)
        for (std::size_t b = a + 1; b < 20; ++b) {
            const auto sa = ts.mark_vertices()[a], sb = ts.mark_vertices()[b];
            const auto ba = tb.mark_vertices()[a], bb = tb.mark_vertices()[b];
            if (sa == sb) continue;
            ASSERT_NEAR(crt::effective_resistance(ts, sa, sb), crt::effective_resistance(tb, ba, bb), 1e-10);
        }
}

TEST(Annealed, AveragesPerTreeCurves) {
    crt::AnnealedConfig cfg;
    cfg.trees = 6;
    cfg.marks = 32;
    cfg.grid = 1024;
    cfg.times = {0.01, 0.02, 0.05};
    cfg.seed = 3;
    const auto a = crt::annealed_heat_kernel(cfg);
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
        double sum = 0;
        for (const auto& row : a.per_tree) sum += row[k];
        EXPECT_NEAR(a.curve.values[k], sum / 6, 1e-12);
    }
    EXPECT_EQ(a.curve.tree_count, 6u);
    EXPECT_GT(a.resolution_time, 0.0);
    EXPECT_LT(a.slope, 0.0);
    cfg.threads = 3;
    const auto b = crt::annealed_heat_kernel(cfg);
    EXPECT_EQ(a.curve.values, b.curve.values);
    EXPECT_EQ(a.curve.stderr_, b.curve.stderr_);
    cfg.times = {0.02, 0.01};
    EXPECT_THROW(crt::annealed_heat_kernel(cfg), crt::InvalidParameter);
}

TEST(Annealed, DoublingTreesShrinksStderr) {
    crt::AnnealedConfig cfg;
    cfg.marks = 16;
    cfg.grid = 512;
    cfg.times = {0.01};
    cfg.seed = 4;
    cfg.trees = 200;
    const double se1 = crt::annealed_heat_kernel(cfg).curve.stderr_[0];
    cfg.trees = 400;
    const double se2 = crt::annealed_heat_kernel(cfg).curve.stderr_[0];
    EXPECT_NEAR(se1 / se2, std::sqrt(2.0), 0.3);
}

TEST(Csv, Headers) {
    std::ostringstream hk, ex;
    crt::HeatKernelCurve c{{0.5}, {1.25}, {0.125}, 3};
    crt::write_heat_kernel_csv(hk, c);
    EXPECT_EQ(hk.str(), "t,estimate,stderr,tree_count\n0.5,1.25,0.125,3\n");
    const crt::ExitTimeEstimate rows[] = {{4, 0.25, 0.0625, 0.0}};
    crt::write_exit_time_csv(ex, rows);
    EXPECT_EQ(ex.str(), "center,radius,mean,stderr\n4,0.25,0.0625,0\n");
}
