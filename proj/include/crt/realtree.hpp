#pragma once

// The random real tree coded by an excursion: sigma_s is the class of time s under
// d_f(s, t) = f(s) + f(t) - 2 min_{[s, t]} f, and mu is the image of Lebesgue measure.
// Volumes integrate grid values of d_f(s, .) with linear interpolation between grid points.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "crt/error.hpp"
#include "crt/excursion.hpp"
#include "crt/sparse_table.hpp"

namespace crt {

// Range-minimum index over the excursion's half-grid values (grid points and interval
// midpoints), so minima between grid points include the interval floors. Immutable after
// construction; concurrent read-only queries are safe.
class RealTreeIndex {
public:
    explicit RealTreeIndex(ExcursionPath path)
        : path_(std::make_shared<const ExcursionPath>(std::move(path))),
          half_(std::make_shared<const std::vector<double>>(path_->half_grid())),
          rmq_(std::span<const double>(*half_)) {}

    RealTreeIndex(std::shared_ptr<const ExcursionPath> path, SparseTable<double> rmq)
        : path_(std::move(path)),
          half_(std::make_shared<const std::vector<double>>(path_->half_grid())),
          rmq_(std::move(rmq)) {
        detail::require(rmq_.levels().empty() || rmq_.levels()[0].size() == half_->size(),
                        "range-minimum table does not match the path");
        rmq_.rebind(*half_);
    }

    const ExcursionPath& path() const { return *path_; }
    std::shared_ptr<const ExcursionPath> shared_path() const { return path_; }
    const SparseTable<double>& rmq() const { return rmq_; }

    // Half-grid values: entry k is the path at time k * step / 2.
    std::span<const double> half_grid() const { return *half_; }
    double half_time(std::size_t k) const { return 0.5 * static_cast<double>(k) * path_->grid_step(); }

    // Half-grid position of the leftmost minimum between grid points i and j.
    std::size_t argmin(std::size_t i, std::size_t j) const { return rmq_.argmin(2 * i, 2 * j); }
    // m_f between grid points i and j.
    double min_between(std::size_t i, std::size_t j) const { return rmq_.min(2 * i, 2 * j); }

    // m_f(s, t) for arbitrary times.
    double min_between_times(double s, double t) const {
        if (t < s) std::swap(s, t);
        const auto& f = *path_;
        const double h = 0.5 * f.grid_step();
        double m = std::min(f.at(s), f.at(t));
        const auto lo = static_cast<std::size_t>(std::ceil(s / h - 1e-9));
        const auto hi = std::min(half_->size() - 1, static_cast<std::size_t>(std::floor(t / h + 1e-9)));
        if (lo <= hi) m = std::min(m, rmq_.min(lo, hi));
        return m;
    }

    // d_f between two grid points.
    double grid_distance(std::size_t i, std::size_t j) const {
        const auto& f = *path_;
        return f[i] + f[j] - 2.0 * min_between(i, j);
    }

private:
    std::shared_ptr<const ExcursionPath> path_;
    std::shared_ptr<const std::vector<double>> half_;
    SparseTable<double> rmq_;
};

inline RealTreeIndex build_index(ExcursionPath f) { return RealTreeIndex(std::move(f)); }

inline double tree_distance(const RealTreeIndex& idx, double s, double t) {
    const double tau = idx.path().duration();
    detail::require(s >= 0 && s <= tau && t >= 0 && t <= tau, "tree_distance times must lie in [0, duration]");
    const auto& f = idx.path();
    const double d = f.at(s) + f.at(t) - 2.0 * idx.min_between_times(s, t);
    return std::max(d, 0.0);
}

// mu(B(sigma_s, r)): grid-Lebesgue measure of {t : d_f(s, t) < r}, with linear interpolation
// inside grid intervals. At s = 0 the distance profile is the path itself, so this reduces
// to occupation_below bit for bit.
inline double ball_volume(const RealTreeIndex& idx, double s, double r) {
    detail::require(r > 0, "ball radius must be positive");
    const auto& f = idx.path();
    detail::require(s >= 0 && s <= f.duration(), "ball centre must lie in [0, duration]");
    const auto d = distances_from_time(f, s);
    return measure_below(d, f.grid_step(), r);
}

enum class VolumeKind { at_root, at_point, supremum, infimum };

struct VolumeProfile {
    std::vector<double> radii;
    std::vector<double> volumes;
    VolumeKind kind = VolumeKind::at_root;
    double center = 0.0;  // meaningful for at_point
};

namespace detail {

// measure_below for several ascending levels at once.
inline void measure_below_many(std::span<const double> g, double step, std::span<const double> levels,
                               std::span<double> out) {
    std::fill(out.begin(), out.end(), 0.0);
    const double top = levels.empty() ? 0.0 : levels.back();
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double lo = std::min(g[i], g[i + 1]);
        if (lo >= top) continue;
        const double hi = std::max(g[i], g[i + 1]);
        for (std::size_t k = 0; k < levels.size(); ++k) {
            const double level = levels[k];
            if (level <= lo) continue;
            out[k] += level > hi ? step : step * (level - lo) / (hi - lo);
        }
    }
}

inline void require_radii(std::span<const double> radii) {
    require(!radii.empty(), "radius grid must be non-empty");
    for (std::size_t i = 0; i < radii.size(); ++i) {
        require(radii[i] > 0, "radii must be positive");
        if (i > 0) require(radii[i] > radii[i - 1], "radii must be strictly increasing");
    }
}

}  // namespace detail

inline VolumeProfile volume_profile(const RealTreeIndex& idx, double s, std::span<const double> radii) {
    detail::require_radii(radii);
    const auto& f = idx.path();
    VolumeProfile p{{radii.begin(), radii.end()}, std::vector<double>(radii.size()),
                    s == 0.0 ? VolumeKind::at_root : VolumeKind::at_point, s};
    const auto d = distances_from_time(f, s);
    for (std::size_t k = 0; k < radii.size(); ++k) p.volumes[k] = measure_below(d, f.grid_step(), radii[k]);
    return p;
}

struct ExtremalProfiles {
    VolumeProfile supremum;
    VolumeProfile infimum;
};

// Sup and inf of ball volumes over grid centres i = 0, stride, 2 stride, ... < n.
// stride = 1 visits every grid point; O(n^2 / stride) work.
inline ExtremalProfiles extremal_volume_profiles(const RealTreeIndex& idx, std::span<const double> radii,
                                                 std::size_t stride = 1) {
    detail::require_radii(radii);
    detail::require(stride >= 1, "centre stride must be positive");
    const auto& f = idx.path();
    const std::size_t n = f.intervals();
    ExtremalProfiles out{
        {{radii.begin(), radii.end()}, std::vector<double>(radii.size(), 0.0), VolumeKind::supremum, 0.0},
        {{radii.begin(), radii.end()}, std::vector<double>(radii.size(), 1.0e300), VolumeKind::infimum, 0.0}};
    std::vector<double> vol(radii.size());
    for (std::size_t c = 0; c < n; c += stride) {
        const auto d = distances_from_grid_point(f, c);
        detail::measure_below_many(d, f.grid_step(), radii, vol);
        for (std::size_t k = 0; k < radii.size(); ++k) {
            out.supremum.volumes[k] = std::max(out.supremum.volumes[k], vol[k]);
            out.infimum.volumes[k] = std::min(out.infimum.volumes[k], vol[k]);
        }
    }
    return out;
}

inline double sup_ball_volume(const RealTreeIndex& idx, double r, std::size_t stride = 1) {
    detail::require(r > 0, "ball radius must be positive");
    const double radii[] = {r};
    return extremal_volume_profiles(idx, radii, stride).supremum.volumes[0];
}

inline double inf_ball_volume(const RealTreeIndex& idx, double r, std::size_t stride = 1) {
    detail::require(r > 0, "ball radius must be positive");
    const double radii[] = {r};
    return extremal_volume_profiles(idx, radii, stride).infimum.volumes[0];
}

// Double sweep: the farthest grid point from the root is an end of a longest geodesic,
// and the farthest point from it realizes the diameter.
inline double diameter(const RealTreeIndex& idx) {
    const auto values = idx.path().values();
    const auto far = static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin());
    const auto d = distances_from_grid_point(idx.path(), far);
    return *std::max_element(d.begin(), d.end());
}

// Time u with sigma_u the branch point of sigma_s, sigma_s1, sigma_s2, on the half grid.
// Inputs snap to the nearest grid point. Sorting them a <= b <= c, the branch point is the
// ancestor of sigma_b at height max(m(a,b), m(b,c)). Coincident tree points resolve to the
// smaller index.
inline double branch_point(const RealTreeIndex& idx, double s, double s1, double s2) {
    const auto& f = idx.path();
    const double tau = f.duration();
    for (double t : {s, s1, s2})
        detail::require(t >= 0 && t <= tau, "branch_point times must lie in [0, duration]");
    std::size_t p[3] = {f.index_of(s), f.index_of(s1), f.index_of(s2)};
    // Two equal inputs: that point lies on all three arcs.
    if (p[0] == p[1] || p[0] == p[2]) return f.time_of(p[0]);
    if (p[1] == p[2]) return f.time_of(p[1]);
    std::sort(std::begin(p), std::end(p));
    const std::size_t left = idx.argmin(p[0], p[1]);
    const std::size_t right = idx.argmin(p[1], p[2]);
    const auto h = idx.half_grid();
    std::size_t u;
    if (h[left] > h[right]) u = left;
    else if (h[right] > h[left]) u = right;
    else u = std::min(left, right);
    return idx.half_time(u);
}

}  // namespace crt
