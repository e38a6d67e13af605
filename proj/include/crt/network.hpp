#pragma once

// Electrical-network quantities on a DiscreteTree: edges carry conductance 1/length.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "crt/discrete_tree.hpp"
#include "crt/error.hpp"

namespace crt {

// Boundary data for a Dirichlet problem: fixed potentials on some vertices, net current
// injected at the free ones.
struct DirichletProblem {
    std::vector<std::optional<double>> fixed;
    std::vector<double> source;

    explicit DirichletProblem(std::size_t n) : fixed(n), source(n, 0.0) {}
};

// Solves sum_w c(v,w) (u(v) - u(w)) = source(v) at free vertices by leaf-peeling
// elimination in O(#vertices). Each free vertex is written as u(v) = alpha u(parent) + beta
// on the way up; the root is then solved and values pushed back down.
inline std::vector<double> solve_dirichlet(const DiscreteTree& tree, const DirichletProblem& problem) {
    const std::size_t n = tree.size();
    detail::require(problem.fixed.size() == n && problem.source.size() == n, "problem size must match tree");
    std::vector<double> alpha(n, 0.0), beta(n, 0.0), u(n, 0.0);
    const auto order = tree.order();
    for (std::size_t k = n; k-- > 0;) {
        const std::size_t v = order[k];
        if (problem.fixed[v]) {
            beta[v] = *problem.fixed[v];
            continue;
        }
        double diag = 0.0;
        double rhs = problem.source[v];
        for (std::size_t c : tree.children(v)) {
            const double g = 1.0 / tree.edge_length(c);
            diag += g * (1.0 - alpha[c]);
            rhs += g * beta[c];
        }
        if (v == tree.root()) {
            if (!(diag > 0)) throw InvalidParameter("Dirichlet problem has no boundary vertex");
            beta[v] = rhs / diag;
        } else {
            const double g = 1.0 / tree.edge_length(v);
            diag += g;
            alpha[v] = g / diag;
            beta[v] = rhs / diag;
        }
    }
    for (std::size_t v : order) {
        const std::size_t p = tree.parent(v);
        u[v] = (p == DiscreteTree::npos || problem.fixed[v]) ? beta[v] : alpha[v] * u[p] + beta[v];
    }
    return u;
}

// Dirichlet energy sum over edges of (u(v) - u(parent))^2 / length.
inline double dirichlet_energy(const DiscreteTree& tree, std::span<const double> u) {
    double e = 0.0;
    for (std::size_t v = 0; v < tree.size(); ++v) {
        const std::size_t p = tree.parent(v);
        if (p == DiscreteTree::npos) continue;
        const double du = u[v] - u[p];
        e += du * du / tree.edge_length(v);
    }
    return e;
}

namespace detail {

inline void require_vertices(const DiscreteTree& tree, std::span<const std::size_t> set, const char* what) {
    require(!set.empty(), std::string(what) + " must be non-empty");
    for (std::size_t v : set) require(v < tree.size(), std::string(what) + " contains an invalid vertex");
}

}  // namespace detail

// R(A, B): reciprocal of the minimal energy of potentials equal to 1 on A and 0 on B.
inline double effective_resistance(const DiscreteTree& tree, std::span<const std::size_t> a,
                                   std::span<const std::size_t> b) {
    detail::require_vertices(tree, a, "source set");
    detail::require_vertices(tree, b, "sink set");
    DirichletProblem problem(tree.size());
    for (std::size_t v : a) problem.fixed[v] = 1.0;
    for (std::size_t v : b) {
        if (problem.fixed[v]) throw InvalidParameter("effective_resistance needs disjoint vertex sets");
        problem.fixed[v] = 0.0;
    }
    const auto u = solve_dirichlet(tree, problem);
    return 1.0 / dirichlet_energy(tree, u);
}

inline double effective_resistance(const DiscreteTree& tree, std::size_t a, std::size_t b) {
    const std::size_t sa[] = {a};
    const std::size_t sb[] = {b};
    return effective_resistance(tree, sa, sb);
}

// A tree with a zero-mass vertex inserted wherever an edge crosses distance r from the centre.
struct SplitTree {
    DiscreteTree tree;
    std::vector<double> distance;        // distance from the centre, per vertex of `tree`
    std::vector<std::size_t> boundary;   // vertices at distance >= r (inserted ones included)
};

inline SplitTree split_at_distance(const DiscreteTree& tree, std::size_t center, double r) {
    detail::require(center < tree.size(), "centre vertex out of range");
    detail::require(r > 0, "radius must be positive");
    const auto d = tree.distances_from(center);
    std::vector<std::size_t> parent(tree.parents().begin(), tree.parents().end());
    std::vector<double> length(tree.edge_lengths().begin(), tree.edge_lengths().end());
    std::vector<double> mass(tree.masses().begin(), tree.masses().end());
    std::vector<double> source(tree.source_times().begin(), tree.source_times().end());
    std::vector<double> dist(d);
    std::vector<bool> inserted(tree.size(), false);
    for (std::size_t v = 0; v < tree.size(); ++v) {
        const std::size_t p = tree.parent(v);
        if (p == DiscreteTree::npos) continue;
        const double lo = std::min(d[v], d[p]);
        const double hi = std::max(d[v], d[p]);
        if (!(lo < r && r < hi)) continue;
        // Offset of the crossing point from p along the edge.
        const double from_p = d[p] < d[v] ? r - d[p] : tree.edge_length(v) - (r - d[v]);
        if (!(from_p > 0 && from_p < tree.edge_length(v))) continue;
        const std::size_t x = parent.size();
        parent.push_back(p);
        length.push_back(from_p);
        mass.push_back(0.0);
        source.push_back(std::numeric_limits<double>::quiet_NaN());
        dist.push_back(r);
        inserted.push_back(true);
        parent[v] = x;
        length[v] = tree.edge_length(v) - from_p;
    }
    SplitTree out{DiscreteTree(std::move(parent), std::move(length), std::move(mass), std::move(source)),
                  std::move(dist), {}};
    for (std::size_t v = 0; v < out.tree.size(); ++v)
        if (inserted[v] || out.distance[v] >= r) out.boundary.push_back(v);
    return out;
}

// R({v}, B(v, r)^c). Never exceeds r: v is joined to the sphere of radius r by paths of length r.
inline double resistance_to_ball_complement(const DiscreteTree& tree, std::size_t v, double r) {
    detail::require(v < tree.size(), "vertex out of range");
    detail::require(r > 0, "radius must be positive");
    if (tree.eccentricity(v) < r) throw EmptyComplement("ball B(v, r) covers the whole tree");
    const auto split = split_at_distance(tree, v, r);
    const std::size_t a[] = {v};
    return effective_resistance(split.tree, a, split.boundary);
}

// M(v, r): the fewest points at distance exactly r/4 from v that every path from v to
// B(v, r)^c must cross. On a tree these are the crossings of the r/4 sphere whose far side
// still reaches distance r.
inline std::size_t cut_count(const DiscreteTree& tree, std::size_t v, double r) {
    detail::require(v < tree.size(), "vertex out of range");
    detail::require(r > 0, "radius must be positive");
    const auto d = tree.distances_from(v);
    const double quarter = r / 4.0;
    if (*std::max_element(d.begin(), d.end()) <= quarter)
        throw EmptyComplement("sphere of radius r/4 around v is empty");

    // Orient edges away from v; reach[w] = farthest distance in w's far side.
    const std::size_t n = tree.size();
    std::vector<std::size_t> up(n, DiscreteTree::npos), order{v};
    std::vector<bool> seen(n, false);
    seen[v] = true;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const std::size_t u = order[k];
        auto visit = [&](std::size_t w) {
            if (!seen[w]) {
                seen[w] = true;
                up[w] = u;
                order.push_back(w);
            }
        };
        if (tree.parent(u) != DiscreteTree::npos) visit(tree.parent(u));
        for (std::size_t c : tree.children(u)) visit(c);
    }
    std::vector<double> reach(d);
    for (std::size_t k = n; k-- > 1;) {
        const std::size_t w = order[k];
        reach[up[w]] = std::max(reach[up[w]], reach[w]);
    }
    std::size_t count = 0;
    for (std::size_t k = 1; k < n; ++k) {
        const std::size_t w = order[k];
        if (d[up[w]] < quarter && quarter <= d[w] && reach[w] >= r) ++count;
    }
    return count;
}

struct HittingProbability {
    double closed_form;  // d(b, sigma2) / d(sigma1, sigma2), b the branch point
    double harmonic;     // u(sigma) with u harmonic off {sigma1, sigma2}, u(sigma1) = 1, u(sigma2) = 0
};

// P_sigma(hit sigma1 before sigma2), by the branch-point formula and by a harmonic solve.
inline HittingProbability hitting_probability(const DiscreteTree& tree, std::size_t sigma, std::size_t sigma1,
                                              std::size_t sigma2) {
    detail::require(sigma < tree.size() && sigma1 < tree.size() && sigma2 < tree.size(), "vertex out of range");
    if (sigma1 == sigma2) throw InvalidParameter("hitting_probability needs distinct targets");
    const double d12 = tree.distance(sigma1, sigma2);
    // d(b, sigma2) as a Gromov product: (d(s, s2) + d(s1, s2) - d(s, s1)) / 2.
    const double db2 = 0.5 * (tree.distance(sigma, sigma2) + d12 - tree.distance(sigma, sigma1));
    DirichletProblem problem(tree.size());
    problem.fixed[sigma1] = 1.0;
    problem.fixed[sigma2] = 0.0;
    const auto u = solve_dirichlet(tree, problem);
    return {std::clamp(db2 / d12, 0.0, 1.0), u[sigma]};
}

// Green kernel of the walk started at sigma1 and killed at sigma2, as a density against mass:
// g(sigma) = d(b(sigma, sigma1, sigma2), sigma2).
inline std::vector<double> green_kernel(const DiscreteTree& tree, std::size_t sigma1, std::size_t sigma2) {
    detail::require(sigma1 < tree.size() && sigma2 < tree.size(), "vertex out of range");
    if (sigma1 == sigma2) throw InvalidParameter("green_kernel needs distinct vertices");
    const auto d1 = tree.distances_from(sigma1);
    const auto d2 = tree.distances_from(sigma2);
    const double d12 = d1[sigma2];
    std::vector<double> g(tree.size());
    for (std::size_t v = 0; v < tree.size(); ++v) g[v] = std::max(0.0, 0.5 * (d2[v] + d12 - d1[v]));
    g[sigma1] = d12;
    g[sigma2] = 0.0;
    return g;
}

// Weighted graph Laplacian with conductances 1/length.
inline Eigen::MatrixXd laplacian_matrix(const DiscreteTree& tree) {
    const auto n = static_cast<Eigen::Index>(tree.size());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t v = 0; v < tree.size(); ++v) {
        const std::size_t p = tree.parent(v);
        if (p == DiscreteTree::npos) continue;
        const double g = 1.0 / tree.edge_length(v);
        const auto i = static_cast<Eigen::Index>(v), j = static_cast<Eigen::Index>(p);
        lap(i, i) += g;
        lap(j, j) += g;
        lap(i, j) -= g;
        lap(j, i) -= g;
    }
    return lap;
}

// Schur complement of a Laplacian onto the index set `keep` (in the given order).
inline Eigen::MatrixXd schur_complement(const Eigen::MatrixXd& lap, std::span<const std::size_t> keep) {
    const auto n = static_cast<std::size_t>(lap.rows());
    std::vector<bool> kept(n, false);
    for (std::size_t v : keep) {
        detail::require(v < n, "trace vertex out of range");
        detail::require(!kept[v], "trace vertex set has duplicates");
        kept[v] = true;
    }
    std::vector<std::size_t> drop;
    for (std::size_t v = 0; v < n; ++v)
        if (!kept[v]) drop.push_back(v);
    const auto k = static_cast<Eigen::Index>(keep.size());
    const auto m = static_cast<Eigen::Index>(drop.size());
    Eigen::MatrixXd kk(k, k), kd(k, m), dd(m, m);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) kk(i, j) = lap(keep[i], keep[j]);
        for (Eigen::Index j = 0; j < m; ++j) kd(i, j) = lap(keep[i], drop[j]);
    }
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = 0; j < m; ++j) dd(i, j) = lap(drop[i], drop[j]);
    if (m == 0) return kk;
    Eigen::LLT<Eigen::MatrixXd> llt(dd);
    if (llt.info() != Eigen::Success) throw InvalidParameter("trace: eliminated block is singular");
    return kk - kd * llt.solve(kd.transpose());
}

// Trace of the network's Dirichlet form on a vertex subset, as a conductance matrix.
struct ReducedForm {
    std::vector<std::size_t> vertex_set;
    Eigen::MatrixXd conductance;  // symmetric, zero diagonal

    Eigen::MatrixXd laplacian() const {
        Eigen::MatrixXd lap = -conductance;
        for (Eigen::Index i = 0; i < lap.rows(); ++i) lap(i, i) = conductance.row(i).sum();
        return lap;
    }

    std::size_t position(std::size_t vertex) const {
        const auto it = std::find(vertex_set.begin(), vertex_set.end(), vertex);
        detail::require(it != vertex_set.end(), "vertex not in reduced form");
        return static_cast<std::size_t>(it - vertex_set.begin());
    }

    // E(u, u) = sum over pairs of c_ij (u_i - u_j)^2.
    double energy(std::span<const double> u) const {
        double e = 0.0;
        for (Eigen::Index i = 0; i < conductance.rows(); ++i)
            for (Eigen::Index j = i + 1; j < conductance.cols(); ++j) {
                const double du = u[i] - u[j];
                e += conductance(i, j) * du * du;
            }
        return e;
    }

    // Point-to-point resistance within the reduced network.
    double effective_resistance(std::size_t a, std::size_t b) const {
        const std::size_t i = position(a), j = position(b);
        if (i == j) return 0.0;
        const std::size_t pair[] = {i, j};
        const Eigen::MatrixXd two = schur_complement(laplacian(), pair);
        return 1.0 / two(0, 0);
    }

    // Trace onto a subset of this form's vertices.
    ReducedForm restrict_to(std::span<const std::size_t> subset) const {
        std::vector<std::size_t> pos;
        for (std::size_t v : subset) pos.push_back(position(v));
        return from_laplacian({subset.begin(), subset.end()}, schur_complement(laplacian(), pos));
    }

    static ReducedForm from_laplacian(std::vector<std::size_t> vertices, const Eigen::MatrixXd& lap) {
        Eigen::MatrixXd c = -lap;
        c.diagonal().setZero();
        // Symmetrize away round-off.
        c = 0.5 * (c + c.transpose()).eval();
        return {std::move(vertices), std::move(c)};
    }
};

inline ReducedForm trace_form(const DiscreteTree& tree, std::span<const std::size_t> vertices) {
    detail::require_vertices(tree, vertices, "trace vertex set");
    return ReducedForm::from_laplacian({vertices.begin(), vertices.end()},
                                       schur_complement(laplacian_matrix(tree), vertices));
}

}  // namespace crt
