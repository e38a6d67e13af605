#pragma once

// Finite weighted trees spanned by the root and a set of marked points of the real tree.
// Edge lengths double as resistances; vertex masses partition the mass measure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "crt/error.hpp"
#include "crt/realtree.hpp"

namespace crt {

class DiscreteTree {
public:
    static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

    DiscreteTree(std::vector<std::size_t> parent, std::vector<double> edge_length, std::vector<double> mass,
                 std::vector<double> source_time = {})
        : parent_(std::move(parent)),
          edge_length_(std::move(edge_length)),
          mass_(std::move(mass)),
          source_time_(std::move(source_time)) {
        const std::size_t n = parent_.size();
        detail::require(n >= 1, "tree needs at least one vertex");
        detail::require(edge_length_.size() == n && mass_.size() == n, "tree arrays must have equal length");
        if (source_time_.empty()) source_time_.assign(n, std::numeric_limits<double>::quiet_NaN());
        detail::require(source_time_.size() == n, "tree arrays must have equal length");

        double total = 0.0;
        children_.resize(n);
        for (std::size_t v = 0; v < n; ++v) {
            detail::require(mass_[v] >= 0 && std::isfinite(mass_[v]), "vertex masses must be non-negative");
            total += mass_[v];
            if (parent_[v] == npos) {
                detail::require(root_ == npos, "tree must have exactly one root");
                root_ = v;
                edge_length_[v] = 0.0;
            } else {
                detail::require(parent_[v] < n && parent_[v] != v, "parent index out of range");
                detail::require(edge_length_[v] > 0 && std::isfinite(edge_length_[v]),
                                "edge lengths must be positive");
                children_[parent_[v]].push_back(v);
            }
        }
        detail::require(root_ != npos, "tree must have a root");
        detail::require(std::abs(total - 1.0) <= 1e-12, "vertex masses must sum to 1");

        order_.reserve(n);
        order_.push_back(root_);
        depth_.assign(n, 0.0);
        level_.assign(n, 0);
        for (std::size_t k = 0; k < order_.size(); ++k) {
            const std::size_t v = order_[k];
            for (std::size_t c : children_[v]) {
                depth_[c] = depth_[v] + edge_length_[c];
                level_[c] = level_[v] + 1;
                order_.push_back(c);
            }
        }
        detail::require(order_.size() == n, "parent array must form a single connected tree");
    }

    std::size_t size() const { return parent_.size(); }
    std::size_t root() const { return root_; }
    std::size_t parent(std::size_t v) const { return parent_[v]; }
    double edge_length(std::size_t v) const { return edge_length_[v]; }
    double mass(std::size_t v) const { return mass_[v]; }
    double source_time(std::size_t v) const { return source_time_[v]; }
    std::span<const std::size_t> parents() const { return parent_; }
    std::span<const double> edge_lengths() const { return edge_length_; }
    std::span<const double> masses() const { return mass_; }
    std::span<const double> source_times() const { return source_time_; }
    std::span<const std::size_t> children(std::size_t v) const { return children_[v]; }
    // Root first, every parent before its children.
    std::span<const std::size_t> order() const { return order_; }
    // Distance from the root.
    double depth(std::size_t v) const { return depth_[v]; }

    // Vertex representing each requested mark, when built by extract_tree.
    std::span<const std::size_t> mark_vertices() const { return marks_; }
    void set_mark_vertices(std::vector<std::size_t> marks) { marks_ = std::move(marks); }

    std::size_t lca(std::size_t u, std::size_t v) const {
        while (level_[u] > level_[v]) u = parent_[u];
        while (level_[v] > level_[u]) v = parent_[v];
        while (u != v) {
            u = parent_[u];
            v = parent_[v];
        }
        return u;
    }

    double distance(std::size_t u, std::size_t v) const {
        if (u == v) return 0.0;
        return depth_[u] + depth_[v] - 2.0 * depth_[lca(u, v)];
    }

    // Path-length distances from v to every vertex, accumulated along edges.
    std::vector<double> distances_from(std::size_t v) const {
        std::vector<double> d(size(), -1.0);
        std::vector<std::size_t> stack{v};
        d[v] = 0.0;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            auto visit = [&](std::size_t w, double len) {
                if (d[w] < 0) {
                    d[w] = d[u] + len;
                    stack.push_back(w);
                }
            };
            if (parent_[u] != npos) visit(parent_[u], edge_length_[u]);
            for (std::size_t c : children_[u]) visit(c, edge_length_[c]);
        }
        return d;
    }

    double eccentricity(std::size_t v) const {
        const auto d = distances_from(v);
        return *std::max_element(d.begin(), d.end());
    }

    bool operator==(const DiscreteTree& o) const {
        auto same_times = [](std::span<const double> a, std::span<const double> b) {
            return std::equal(a.begin(), a.end(), b.begin(), b.end(), [](double x, double y) {
                return x == y || (std::isnan(x) && std::isnan(y));
            });
        };
        return parent_ == o.parent_ && edge_length_ == o.edge_length_ && mass_ == o.mass_ &&
               same_times(source_time_, o.source_time_);
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<double> edge_length_;
    std::vector<double> mass_;
    std::vector<double> source_time_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::size_t> order_;
    std::vector<double> depth_;
    std::vector<std::size_t> level_;
    std::vector<std::size_t> marks_;
    std::size_t root_ = npos;
};

// Tree spanned by the root and sigma_t for each mark time t (snapped to the nearest grid point).
// Vertices are the root (index 0), the distinct marked points and their branch points. Each grid
// point's mass 1/n goes to the vertex nearest in tree distance, ties to the smaller index.
inline DiscreteTree extract_tree(const RealTreeIndex& idx, std::span<const double> marks) {
    detail::require(!marks.empty(), "extract_tree needs at least one mark");
    const auto& f = idx.path();
    const std::size_t n = f.intervals();
    for (double t : marks)
        detail::require(t >= 0 && t <= f.duration(), "mark times must lie in [0, duration]");

    // Grid point n codes the root as well.
    std::vector<std::size_t> grid_marks;
    grid_marks.reserve(marks.size());
    for (double t : marks) grid_marks.push_back(f.index_of(t) % n);
    std::vector<std::size_t> sorted(grid_marks);
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    if (!sorted.empty() && sorted.front() == 0) sorted.erase(sorted.begin());

    // src is a half-grid position: grid point i sits at 2i, branch points may fall on midpoints.
    struct Node {
        std::size_t src;
        std::size_t parent;
    };
    const auto half = idx.half_grid();
    std::vector<Node> nodes{{0, DiscreteTree::npos}};
    auto height = [&](std::size_t v) { return half[nodes[v].src]; };

    // Contour-order stack construction; the stack holds the ancestral line of the last leaf.
    std::vector<std::size_t> stack{0};
    std::vector<std::size_t> leaf_of(sorted.size());
    std::size_t prev = 0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        const std::size_t t = sorted[j];
        const std::size_t u = idx.argmin(prev, t);
        const double m = half[u];
        std::size_t popped = DiscreteTree::npos;
        while (height(stack.back()) > m) {
            popped = stack.back();
            stack.pop_back();
        }
        if (height(stack.back()) < m) {
            const std::size_t b = nodes.size();
            nodes.push_back({u, stack.back()});
            nodes[popped].parent = b;
            stack.push_back(b);
        }
        if (f[t] == height(stack.back())) {
            leaf_of[j] = stack.back();
        } else {
            leaf_of[j] = nodes.size();
            nodes.push_back({2 * t, stack.back()});
            stack.push_back(leaf_of[j]);
        }
        prev = t;
    }

    const std::size_t count = nodes.size();
    std::vector<std::size_t> parent(count);
    std::vector<double> length(count, 0.0), mass(count, 0.0), source(count);
    for (std::size_t v = 0; v < count; ++v) {
        parent[v] = nodes[v].parent;
        source[v] = idx.half_time(nodes[v].src);
        if (parent[v] != DiscreteTree::npos) length[v] = height(v) - height(parent[v]);
    }

    // Mass assignment. Grid point i between consecutive marks L <= i < R projects onto the
    // spanned tree at height max(m(L, i), m(i, R)) on the ancestral line of L or R.
    const double unit = 1.0 / static_cast<double>(n);
    std::size_t j = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (j < sorted.size() && sorted[j] <= i) ++j;
        const std::size_t left = j == 0 ? 0 : sorted[j - 1];
        const std::size_t right = j < sorted.size() ? sorted[j] : n;
        const std::size_t left_vertex = j == 0 ? 0 : leaf_of[j - 1];
        const std::size_t right_vertex = j < sorted.size() ? leaf_of[j] : 0;
        const double a = idx.min_between(left, i);
        const double b = idx.min_between(i, right);
        const double attach = std::max(a, b);
        std::size_t v = a >= b ? left_vertex : right_vertex;
        while (parent[v] != DiscreteTree::npos && height(parent[v]) >= attach) v = parent[v];
        std::size_t nearest = v;
        if (height(v) != attach && parent[v] != DiscreteTree::npos) {
            const std::size_t p = parent[v];
            const double up = attach - height(p);
            const double down = height(v) - attach;
            if (up < down || (up == down && p < v)) nearest = p;
        }
        mass[nearest] += unit;
    }

    DiscreteTree tree(std::move(parent), std::move(length), std::move(mass), std::move(source));
    std::vector<std::size_t> mark_vertex(grid_marks.size());
    for (std::size_t k = 0; k < grid_marks.size(); ++k) {
        if (grid_marks[k] == 0) {
            mark_vertex[k] = 0;
        } else {
            const auto pos = std::lower_bound(sorted.begin(), sorted.end(), grid_marks[k]) - sorted.begin();
            mark_vertex[k] = leaf_of[static_cast<std::size_t>(pos)];
        }
    }
    tree.set_mark_vertices(std::move(mark_vertex));
    return tree;
}

// Uniform i.i.d. mark times.
inline std::vector<double> uniform_marks(std::size_t k, Rng& rng) {
    std::vector<double> marks(k);
    for (double& t : marks) t = rng.uniform();
    return marks;
}

// Text format, one vertex per line after a two-line header:
//
//   crt-tree v1
//   vertices <N>
//   <vertex> <parent> <edge_length> <mass> <source_time>
//
// The root's parent is -1 and its edge_length 0. Vertices without a source time carry nan.
// Lines starting with '#' are ignored. Reals are written with 17 significant digits.
inline void write_tree(std::ostream& out, const DiscreteTree& tree) {
    out << "crt-tree v1\n" << "vertices " << tree.size() << '\n';
    char buf[160];
    for (std::size_t v = 0; v < tree.size(); ++v) {
        const long long p = tree.parent(v) == DiscreteTree::npos ? -1 : static_cast<long long>(tree.parent(v));
        const double st = tree.source_time(v);
        if (std::isnan(st))
            std::snprintf(buf, sizeof buf, "%zu %lld %.17g %.17g nan\n", v, p, tree.edge_length(v), tree.mass(v));
        else
            std::snprintf(buf, sizeof buf, "%zu %lld %.17g %.17g %.17g\n", v, p, tree.edge_length(v),
                          tree.mass(v), st);
        out << buf;
    }
}

inline DiscreteTree read_tree(std::istream& in) {
    std::string line;
    auto next = [&]() {
        while (std::getline(in, line))
            if (!line.empty() && line[0] != '#') return true;
        return false;
    };
    if (!next() || line != "crt-tree v1") throw InvalidParameter("tree file: missing 'crt-tree v1' header");
    std::size_t count = 0;
    {
        if (!next()) throw InvalidParameter("tree file: missing vertex count");
        std::istringstream ls(line);
        std::string key;
        if (!(ls >> key >> count) || key != "vertices") throw InvalidParameter("tree file: bad vertex count line");
    }
    std::vector<std::size_t> parent(count, DiscreteTree::npos);
    std::vector<double> length(count), mass(count), source(count);
    std::vector<bool> seen(count, false);
    for (std::size_t k = 0; k < count; ++k) {
        if (!next()) throw InvalidParameter("tree file: truncated vertex list");
        std::istringstream ls(line);
        std::size_t v;
        long long p;
        std::string len, m, st;
        if (!(ls >> v >> p >> len >> m >> st) || v >= count || seen[v])
            throw InvalidParameter("tree file: malformed vertex line '" + line + "'");
        seen[v] = true;
        parent[v] = p < 0 ? DiscreteTree::npos : static_cast<std::size_t>(p);
        length[v] = std::strtod(len.c_str(), nullptr);
        mass[v] = std::strtod(m.c_str(), nullptr);
        source[v] = std::strtod(st.c_str(), nullptr);
    }
    return DiscreteTree(std::move(parent), std::move(length), std::move(mass), std::move(source));
}

}  // namespace crt
