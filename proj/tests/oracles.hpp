#pragma once

// Reference implementations used only by the tests: fixture paths, random trees and
// dense linear algebra computed independently of the library's tree solvers.

#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "crt/discrete_tree.hpp"
#include "crt/excursion.hpp"
#include "crt/rng.hpp"

namespace oracle {

// f(t) = min(t, 1 - t) on the grid i/n.
inline crt::ExcursionPath tent(std::size_t n = 10) {
    std::vector<double> v(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n);
        v[i] = std::min(t, 1.0 - t);
    }
    return crt::ExcursionPath(std::move(v));
}

// Peaks of height 1 at t = 0.25 and 0.75, valley 0.3 at t = 0.5 (grid of 8 intervals).
inline crt::ExcursionPath two_peak() { return crt::ExcursionPath({0, 0.5, 1, 0.65, 0.3, 0.65, 1, 0.5, 0}); }

// A tree with `size` vertices: vertex v > 0 hangs off a uniform earlier vertex.
inline crt::DiscreteTree random_tree(std::size_t size, crt::Rng& rng, bool positive_mass = true) {
    std::vector<std::size_t> parent(size, crt::DiscreteTree::npos);
    std::vector<double> length(size, 0.0), mass(size);
    double total = 0.0;
    for (std::size_t v = 0; v < size; ++v) {
        if (v > 0) {
            parent[v] = static_cast<std::size_t>(rng.below(v));
            length[v] = 0.05 + rng.uniform();
        }
        mass[v] = positive_mass || rng.coin() ? 0.1 + rng.uniform() : 0.0;
        total += mass[v];
    }
    if (total == 0.0) {
        mass[0] = 1.0;
        total = 1.0;
    }
    double sum = 0.0;
    for (std::size_t v = 0; v + 1 < size; ++v) sum += (mass[v] /= total);
    mass[size - 1] = 1.0 - sum;
    if (mass[size - 1] < 0) mass[size - 1] = 0.0;
    return crt::DiscreteTree(std::move(parent), std::move(length), std::move(mass));
}

// Path 0 - 1 - ... with the given edge lengths; mass split evenly.
inline crt::DiscreteTree path_tree(const std::vector<double>& lengths) {
    const std::size_t n = lengths.size() + 1;
    std::vector<std::size_t> parent(n, crt::DiscreteTree::npos);
    std::vector<double> len(n, 0.0), mass(n, 1.0 / static_cast<double>(n));
    for (std::size_t v = 1; v < n; ++v) {
        parent[v] = v - 1;
        len[v] = lengths[v - 1];
    }
    return crt::DiscreteTree(std::move(parent), std::move(len), std::move(mass));
}

// Centre 0 with arms 1..k.
inline crt::DiscreteTree star_tree(const std::vector<double>& arms) {
    const std::size_t n = arms.size() + 1;
    std::vector<std::size_t> parent(n, 0);
    parent[0] = crt::DiscreteTree::npos;
    std::vector<double> len(n, 0.0), mass(n, 1.0 / static_cast<double>(n));
    for (std::size_t v = 1; v < n; ++v) len[v] = arms[v - 1];
    return crt::DiscreteTree(std::move(parent), std::move(len), std::move(mass));
}

// Laplacian assembled from an explicit edge list.
inline Eigen::MatrixXd dense_laplacian(const crt::DiscreteTree& t) {
    const auto n = static_cast<Eigen::Index>(t.size());
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
    for (std::size_t v = 0; v < t.size(); ++v) {
        if (t.parent(v) == crt::DiscreteTree::npos) continue;
        const auto a = static_cast<Eigen::Index>(v), b = static_cast<Eigen::Index>(t.parent(v));
        const double g = 1.0 / t.edge_length(v);
        lap(a, a) += g;
        lap(b, b) += g;
        lap(a, b) -= g;
        lap(b, a) -= g;
    }
    return lap;
}

// R(a, b) = (e_a - e_b)^T L^+ (e_a - e_b) with the Moore-Penrose pseudo-inverse.
inline double dense_resistance(const crt::DiscreteTree& t, std::size_t a, std::size_t b) {
    const Eigen::MatrixXd lap = dense_laplacian(t);
    const auto n = lap.rows();
    const Eigen::MatrixXd pinv = (lap + Eigen::MatrixXd::Constant(n, n, 1.0 / n)).inverse() -
                                 Eigen::MatrixXd::Constant(n, n, 1.0 / n);
    const auto i = static_cast<Eigen::Index>(a), j = static_cast<Eigen::Index>(b);
    return pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j);
}

// Potential 1 on A, 0 on B, harmonic elsewhere, by a dense solve of the free block.
inline std::vector<double> dense_harmonic(const crt::DiscreteTree& t, const std::vector<std::size_t>& ones,
                                          const std::vector<std::size_t>& zeros) {
    const Eigen::MatrixXd lap = dense_laplacian(t);
    std::vector<int> state(t.size(), -1);
    for (auto v : ones) state[v] = 1;
    for (auto v : zeros) state[v] = 0;
    std::vector<std::size_t> free;
    for (std::size_t v = 0; v < t.size(); ++v)
        if (state[v] < 0) free.push_back(v);
    const auto m = static_cast<Eigen::Index>(free.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        for (Eigen::Index j = 0; j < m; ++j) a(i, j) = lap(free[i], free[j]);
        for (auto v : ones) rhs(i) -= lap(free[i], v);
    }
    const Eigen::VectorXd x = a.ldlt().solve(rhs);
    std::vector<double> u(t.size());
    for (std::size_t v = 0; v < t.size(); ++v) u[v] = state[v] >= 0 ? state[v] : 0.0;
    for (Eigen::Index i = 0; i < m; ++i) u[free[i]] = x(i);
    return u;
}

// Matrix exponential heat kernel p_t(u, v) = exp(-t M^{-1} L)(u, v) / mass(v).
inline Eigen::MatrixXd dense_heat_kernel(const crt::DiscreteTree& t, double time) {
    const Eigen::MatrixXd lap = dense_laplacian(t);
    const auto n = lap.rows();
    Eigen::VectorXd m(n);
    for (Eigen::Index i = 0; i < n; ++i) m(i) = t.mass(static_cast<std::size_t>(i));
    const Eigen::MatrixXd gen = -(m.cwiseInverse().asDiagonal() * lap);
    // Scaling and squaring with a Taylor series.
    int squarings = 0;
    double norm = gen.cwiseAbs().rowwise().sum().maxCoeff() * time;
    while (norm > 0.5) {
        norm *= 0.5;
        ++squarings;
    }
    const Eigen::MatrixXd a = gen * (time / std::ldexp(1.0, squarings));
    Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n), sum = term;
    for (int k = 1; k < 30; ++k) {
        term = term * a / k;
        sum += term;
    }
    for (int k = 0; k < squarings; ++k) sum = sum * sum;
    return sum * m.cwiseInverse().asDiagonal();
}

}  // namespace oracle
