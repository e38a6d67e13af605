#pragma once

// Continuous-time random walk on a DiscreteTree: jump rate conductance/mass along each edge,
// the finite stand-in for Brownian motion on the tree. Heat kernels are densities with
// respect to vertex mass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "crt/discrete_tree.hpp"
#include "crt/error.hpp"
#include "crt/network.hpp"
#include "crt/parallel.hpp"
#include "crt/rng.hpp"
#include "crt/stats.hpp"

namespace crt {

class ChainGenerator {
public:
    explicit ChainGenerator(const DiscreteTree& tree) : mass_(tree.masses().begin(), tree.masses().end()) {
        const std::size_t n = tree.size();
        std::vector<std::size_t> degree(n, 0);
        for (std::size_t v = 0; v < n; ++v)
            if (tree.parent(v) != DiscreteTree::npos) {
                ++degree[v];
                ++degree[tree.parent(v)];
            }
        offset_.assign(n + 1, 0);
        for (std::size_t v = 0; v < n; ++v) offset_[v + 1] = offset_[v] + degree[v];
        neighbor_.resize(offset_[n]);
        conductance_.resize(offset_[n]);
        std::vector<std::size_t> fill(offset_.begin(), offset_.end() - 1);
        for (std::size_t v = 0; v < n; ++v) {
            const std::size_t p = tree.parent(v);
            if (p == DiscreteTree::npos) continue;
            const double g = 1.0 / tree.edge_length(v);
            neighbor_[fill[v]] = p;
            conductance_[fill[v]++] = g;
            neighbor_[fill[p]] = v;
            conductance_[fill[p]++] = g;
        }
        total_conductance_.assign(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t e = offset_[v]; e < offset_[v + 1]; ++e) total_conductance_[v] += conductance_[e];
    }

    std::size_t size() const { return mass_.size(); }
    double mass(std::size_t v) const { return mass_[v]; }
    std::span<const std::size_t> neighbors(std::size_t v) const {
        return {neighbor_.data() + offset_[v], offset_[v + 1] - offset_[v]};
    }
    std::span<const double> conductances(std::size_t v) const {
        return {conductance_.data() + offset_[v], offset_[v + 1] - offset_[v]};
    }
    // q(u, w) = c(u, w) / mass(u); infinite at zero-mass vertices.
    double rate(std::size_t u, std::size_t w) const {
        for (std::size_t e = offset_[u]; e < offset_[u + 1]; ++e)
            if (neighbor_[e] == w) return conductance_[e] / mass_[u];
        return 0.0;
    }
    double total_rate(std::size_t u) const { return total_conductance_[u] / mass_[u]; }

    // mass(u) q(u, w) == mass(w) q(w, u) on every edge, to relative tolerance.
    bool reversible(double tol = 1e-12) const {
        for (std::size_t u = 0; u < size(); ++u)
            for (std::size_t w : neighbors(u)) {
                if (mass_[u] == 0 || mass_[w] == 0) continue;
                const double a = mass_[u] * rate(u, w);
                const double b = mass_[w] * rate(w, u);
                if (std::abs(a - b) > tol * std::max(std::abs(a), std::abs(b))) return false;
            }
        return true;
    }

    // Next state of the embedded jump chain.
    std::size_t jump(std::size_t u, Rng& rng) const {
        const auto nb = neighbors(u);
        const auto g = conductances(u);
        double x = rng.uniform() * total_conductance_[u];
        for (std::size_t e = 0; e + 1 < nb.size(); ++e) {
            if (x < g[e]) return nb[e];
            x -= g[e];
        }
        return nb.back();
    }

    // Holding time at u; zero-mass vertices are left instantly.
    double holding_time(std::size_t u, Rng& rng) const {
        return mass_[u] == 0 ? 0.0 : rng.exponential(total_rate(u));
    }

private:
    std::vector<double> mass_;
    std::vector<std::size_t> offset_;
    std::vector<std::size_t> neighbor_;
    std::vector<double> conductance_;
    std::vector<double> total_conductance_;
};

// Event-driven simulation: the state occupied at time t.
inline std::size_t position_at(const ChainGenerator& chain, std::size_t start, double t, Rng& rng) {
    std::size_t u = start;
    double clock = chain.holding_time(u, rng);
    while (clock <= t) {
        u = chain.jump(u, rng);
        clock += chain.holding_time(u, rng);
    }
    return u;
}

// Whether the walk from `start` reaches `first` before `second`.
inline bool hits_before(const ChainGenerator& chain, std::size_t start, std::size_t first, std::size_t second,
                        Rng& rng) {
    std::size_t u = start;
    while (u != first && u != second) u = chain.jump(u, rng);
    return u == first;
}

// Time spent at each vertex before hitting `target`, added into `occupation`.
inline void occupation_until(const ChainGenerator& chain, std::size_t start, std::size_t target, Rng& rng,
                             std::span<double> occupation) {
    std::size_t u = start;
    while (u != target) {
        occupation[u] += chain.holding_time(u, rng);
        u = chain.jump(u, rng);
    }
}

struct HeatKernelCurve {
    std::vector<double> times;
    std::vector<double> values;
    std::vector<double> stderr_;
    std::size_t tree_count = 1;
};

// Eigen-decomposition of the mass-symmetrized Laplacian M^{-1/2} L M^{-1/2}. Zero-mass vertices
// are traced out first: the walk spends no time there.
class SpectralHeatKernel {
public:
    explicit SpectralHeatKernel(const DiscreteTree& tree) : slot_(tree.size(), npos) {
        detail::require(tree.size() >= 2, "spectral heat kernel needs at least two vertices");
        std::vector<std::size_t> keep;
        for (std::size_t v = 0; v < tree.size(); ++v)
            if (tree.mass(v) > 0) {
                slot_[v] = keep.size();
                keep.push_back(v);
            }
        detail::require(keep.size() >= 1, "tree has no positive-mass vertex");
        const Eigen::MatrixXd full = laplacian_matrix(tree);
        const Eigen::MatrixXd lap = keep.size() == tree.size() ? full : schur_complement(full, keep);
        const auto k = static_cast<Eigen::Index>(keep.size());
        inv_sqrt_mass_.resize(k);
        for (Eigen::Index i = 0; i < k; ++i) inv_sqrt_mass_(i) = 1.0 / std::sqrt(tree.mass(keep[i]));
        const Eigen::MatrixXd sym = inv_sqrt_mass_.asDiagonal() * lap * inv_sqrt_mass_.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (sym + sym.transpose()));
        if (solver.info() != Eigen::Success) throw std::runtime_error("eigen-decomposition failed");
        eigenvalues_ = solver.eigenvalues().cwiseMax(0.0);
        eigenvectors_ = solver.eigenvectors();
        // The tree is connected, so the bottom mode is exactly sqrt(mass) with eigenvalue 0.
        eigenvalues_(0) = 0.0;
        eigenvectors_.col(0) = inv_sqrt_mass_.cwiseInverse().normalized();
    }

    const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

    // p_t(u, v) = sum_i exp(-lambda_i t) phi_i(u) phi_i(v), phi_i orthonormal in L^2(mass).
    double density(std::size_t u, std::size_t v, double t) const {
        const auto i = index(u), j = index(v);
        double sum = 0.0;
        for (Eigen::Index k = 0; k < eigenvalues_.size(); ++k)
            sum += std::exp(-eigenvalues_(k) * t) * eigenvectors_(i, k) * eigenvectors_(j, k);
        return sum * inv_sqrt_mass_(i) * inv_sqrt_mass_(j);
    }

    // sum_i exp(-lambda_i t) = sum_v mass(v) p_t(v, v).
    double trace(double t) const { return (-eigenvalues_ * t).array().exp().sum(); }

    HeatKernelCurve on_diagonal(std::size_t v, std::span<const double> times) const {
        HeatKernelCurve c{{times.begin(), times.end()}, std::vector<double>(times.size()),
                          std::vector<double>(times.size(), 0.0), 1};
        for (std::size_t k = 0; k < times.size(); ++k) c.values[k] = density(v, v, times[k]);
        return c;
    }

private:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    Eigen::Index index(std::size_t v) const {
        detail::require(v < slot_.size(), "vertex out of range");
        if (slot_[v] == npos) throw InvalidParameter("heat kernel queried at a zero-mass vertex");
        return static_cast<Eigen::Index>(slot_[v]);
    }

    std::vector<std::size_t> slot_;
    Eigen::VectorXd inv_sqrt_mass_;
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
};

inline HeatKernelCurve spectral_heat_kernel(const DiscreteTree& tree, std::size_t sigma,
                                            std::span<const double> times) {
    detail::require(sigma < tree.size(), "vertex out of range");
    if (tree.mass(sigma) == 0) throw InvalidParameter("heat kernel queried at a zero-mass vertex");
    return SpectralHeatKernel(tree).on_diagonal(sigma, times);
}

struct McEstimate {
    double value = 0.0;
    double stderr_ = 0.0;
};

// P_sigma(X_t = sigma) / mass(sigma) by exact event-driven simulation.
inline McEstimate mc_return_probability(const DiscreteTree& tree, std::size_t sigma, double t,
                                        std::size_t replicas, RngStream stream) {
    detail::require(replicas >= 1, "need at least one replica");
    detail::require(sigma < tree.size() && tree.mass(sigma) > 0, "return probability needs a positive-mass vertex");
    detail::require(t >= 0, "time must be non-negative");
    const ChainGenerator chain(tree);
    Rng rng(stream);
    std::size_t home = 0;
    for (std::size_t r = 0; r < replicas; ++r)
        if (position_at(chain, sigma, t, rng) == sigma) ++home;
    const double p = static_cast<double>(home) / static_cast<double>(replicas);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(replicas));
    return {p / tree.mass(sigma), se / tree.mass(sigma)};
}

struct ExitTimeEstimate {
    std::size_t center = 0;
    double radius = 0.0;
    double mean = 0.0;
    double stderr_ = 0.0;
};

// E_sigma T_{B(sigma, r)} exactly: solve L m = mass inside the ball with m = 0 from distance r on.
inline ExitTimeEstimate exit_time_mean(const DiscreteTree& tree, std::size_t sigma, double r) {
    detail::require(sigma < tree.size(), "vertex out of range");
    detail::require(r > 0, "radius must be positive");
    if (tree.eccentricity(sigma) < r) throw EmptyComplement("ball B(sigma, r) covers the whole tree");
    const auto split = split_at_distance(tree, sigma, r);
    DirichletProblem problem(split.tree.size());
    for (std::size_t v : split.boundary) problem.fixed[v] = 0.0;
    for (std::size_t v = 0; v < split.tree.size(); ++v) problem.source[v] = split.tree.mass(v);
    const auto m = solve_dirichlet(split.tree, problem);
    return {sigma, r, m[sigma], 0.0};
}

// Mass of the open ball {v : d(sigma, v) < r}.
inline double ball_mass(const DiscreteTree& tree, std::size_t sigma, double r) {
    const auto d = tree.distances_from(sigma);
    double m = 0.0;
    for (std::size_t v = 0; v < tree.size(); ++v)
        if (d[v] < r) m += tree.mass(v);
    return m;
}

struct HeatKernelAudit {
    double ball_mass = 0.0;
    double time = 0.0;     // 2 r mu(B(sigma, r))
    double density = 0.0;  // p_time(sigma, sigma)
    double bound = 0.0;    // 2 / mu(B(sigma, r))
    bool holds = false;
};

// On-diagonal upper bound p_{2 r V}(sigma, sigma) <= 2 / V with V = mu(B(sigma, r)).
inline HeatKernelAudit heat_kernel_upper_check(const DiscreteTree& tree, const SpectralHeatKernel& kernel,
                                               std::size_t sigma, double r) {
    detail::require(r > 0, "radius must be positive");
    HeatKernelAudit a;
    a.ball_mass = ball_mass(tree, sigma, r);
    a.time = 2.0 * r * a.ball_mass;
    a.density = kernel.density(sigma, sigma, a.time);
    a.bound = 2.0 / a.ball_mass;
    a.holds = a.density <= a.bound;
    return a;
}

inline HeatKernelAudit heat_kernel_upper_check(const DiscreteTree& tree, std::size_t sigma, double r) {
    return heat_kernel_upper_check(tree, SpectralHeatKernel(tree), sigma, r);
}

struct AnnealedConfig {
    std::size_t trees = 200;
    std::size_t marks = 512;
    std::size_t grid = std::size_t{1} << 14;
    std::vector<double> times;
    std::uint64_t seed = 1;
    std::size_t threads = 0;
};

struct AnnealedHeatKernel {
    HeatKernelCurve curve;
    std::vector<std::vector<double>> per_tree;  // p_t(rho, rho) per tree, per time
    double slope = 0.0;                         // least-squares slope of log mean vs log t
    // Largest over trees of (smallest positive vertex mass) x (shortest edge): times should sit well above it.
    double resolution_time = 0.0;
};

// E p_t(rho, rho) averaged over independent trees; tree i draws from stream (seed, i).
inline AnnealedHeatKernel annealed_heat_kernel(const AnnealedConfig& cfg) {
    detail::require(cfg.trees >= 2, "annealed heat kernel needs at least two trees");
    detail::require(!cfg.times.empty(), "time grid must be non-empty");
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
        detail::require(cfg.times[k] > 0, "times must be positive");
        if (k > 0) detail::require(cfg.times[k] > cfg.times[k - 1], "times must be strictly increasing");
    }
    AnnealedHeatKernel out;
    out.per_tree.resize(cfg.trees);
    std::vector<double> resolution(cfg.trees);
    parallel_for(cfg.trees, cfg.threads, [&](std::size_t i) {
        Rng rng(cfg.seed, i);
        const auto idx = build_index(sample_excursion(cfg.grid, rng));
        const auto marks = uniform_marks(cfg.marks, rng);
        const auto tree = extract_tree(idx, marks);
        out.per_tree[i] = spectral_heat_kernel(tree, tree.root(), cfg.times).values;
        double min_mass = 1.0, min_edge = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < tree.size(); ++v) {
            if (tree.mass(v) > 0) min_mass = std::min(min_mass, tree.mass(v));
            if (tree.parent(v) != DiscreteTree::npos) min_edge = std::min(min_edge, tree.edge_length(v));
        }
        resolution[i] = min_mass * min_edge;
    });
    out.curve.times = cfg.times;
    out.curve.tree_count = cfg.trees;
    std::vector<double> column(cfg.trees), logt, logp;
    for (std::size_t k = 0; k < cfg.times.size(); ++k) {
        for (std::size_t i = 0; i < cfg.trees; ++i) column[i] = out.per_tree[i][k];
        const auto est = stats::mean_stderr(column);
        out.curve.values.push_back(est.mean);
        out.curve.stderr_.push_back(est.stderr_);
        logt.push_back(std::log(cfg.times[k]));
        logp.push_back(std::log(est.mean));
    }
    out.slope = cfg.times.size() >= 2 ? stats::least_squares(logt, logp).slope : 0.0;
    out.resolution_time = *std::max_element(resolution.begin(), resolution.end());
    return out;
}

// CSV with header `t,estimate,stderr,tree_count`.
inline void write_heat_kernel_csv(std::ostream& out, const HeatKernelCurve& curve) {
    out << "t,estimate,stderr,tree_count\n";
    char buf[128];
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%zu\n", curve.times[k], curve.values[k],
                      curve.stderr_[k], curve.tree_count);
        out << buf;
    }
}

// CSV with header `center,radius,mean,stderr`.
inline void write_exit_time_csv(std::ostream& out, std::span<const ExitTimeEstimate> rows) {
    out << "center,radius,mean,stderr\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", r.center, r.radius, r.mean, r.stderr_);
        out << buf;
    }
}

}  // namespace crt
