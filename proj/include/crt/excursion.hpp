#pragma once

// Normalized Brownian excursions on a uniform grid and the path functionals used
// to read volumes, heights and upcrossings off the coded tree.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "crt/error.hpp"
#include "crt/rng.hpp"

namespace crt {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

// Non-negative path on the grid t_i = i * duration / n, pinned to zero at both ends.
//
// Besides the grid values the path keeps, for each grid interval, its minimum ("floor").
// When the floor lies below both endpoint values the path is taken to dip linearly to the
// floor at the interval midpoint; otherwise it is linear across the interval. Floors enter
// path minima and hence tree distances; measures of level sets use the grid values alone.
class ExcursionPath {
public:
    explicit ExcursionPath(std::vector<double> values, double duration = 1.0, std::vector<double> floors = {})
        : values_(std::move(values)), floors_(std::move(floors)), duration_(duration) {
        detail::require(values_.size() >= 3, "excursion needs at least 3 grid points (n >= 2)");
        detail::require(duration_ > 0 && std::isfinite(duration_), "excursion duration must be positive");
        detail::require(values_.front() == 0.0 && values_.back() == 0.0,
                        "excursion must be pinned to zero at both ends");
        for (double v : values_)
            detail::require(v >= 0.0 && std::isfinite(v), "excursion values must be finite and non-negative");
        const std::size_t n = intervals();
        if (floors_.empty()) {
            floors_.resize(n);
            for (std::size_t i = 0; i < n; ++i) floors_[i] = std::min(values_[i], values_[i + 1]);
        }
        detail::require(floors_.size() == n, "excursion needs one floor per grid interval");
        for (std::size_t i = 0; i < n; ++i)
            detail::require(floors_[i] >= 0.0 && floors_[i] <= std::min(values_[i], values_[i + 1]),
                            "interval floors must lie in [0, min of the interval's endpoint values]");
    }

    std::span<const double> values() const { return values_; }
    std::span<const double> floors() const { return floors_; }
    double operator[](std::size_t i) const { return values_[i]; }
    // Number of grid intervals.
    std::size_t intervals() const { return values_.size() - 1; }
    std::size_t size() const { return values_.size(); }
    double duration() const { return duration_; }
    double grid_step() const { return duration_ / static_cast<double>(intervals()); }
    double time_of(std::size_t i) const { return static_cast<double>(i) * grid_step(); }

    // Nearest grid index to time t (t is clamped into [0, duration]).
    std::size_t index_of(double t) const {
        const double x = std::clamp(t / grid_step(), 0.0, static_cast<double>(intervals()));
        return static_cast<std::size_t>(std::lround(x));
    }

    bool dips(std::size_t i) const { return floors_[i] < std::min(values_[i], values_[i + 1]); }

    // Path value at the midpoint of interval i.
    double midpoint(std::size_t i) const {
        return dips(i) ? floors_[i] : 0.5 * (values_[i] + values_[i + 1]);
    }

    // Values at the half-grid t = k * step / 2, k = 0..2n; the path is linear between them.
    std::vector<double> half_grid() const {
        const std::size_t n = intervals();
        std::vector<double> h(2 * n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            h[2 * i] = values_[i];
            h[2 * i + 1] = midpoint(i);
        }
        h[2 * n] = values_[n];
        return h;
    }

    double at(double t) const {
        const double x = std::clamp(t / grid_step(), 0.0, static_cast<double>(intervals()));
        const auto i = std::min(static_cast<std::size_t>(x), intervals() - 1);
        return within(i, x - static_cast<double>(i));
    }

    // Path value at fraction w in [0, 1] of interval i.
    double within(std::size_t i, double w) const {
        if (w == 0.0) return values_[i];
        if (!dips(i)) return (1.0 - w) * values_[i] + w * values_[i + 1];
        return w <= 0.5 ? values_[i] + 2.0 * w * (floors_[i] - values_[i])
                        : floors_[i] + (2.0 * w - 1.0) * (values_[i + 1] - floors_[i]);
    }

    // Minimum over fractions [w0, w1] of interval i.
    double min_within(std::size_t i, double w0, double w1) const {
        double m = std::min(within(i, w0), within(i, w1));
        if (dips(i) && w0 <= 0.5 && 0.5 <= w1) m = std::min(m, floors_[i]);
        return m;
    }

    friend bool operator==(const ExcursionPath&, const ExcursionPath&) = default;

private:
    std::vector<double> values_;
    std::vector<double> floors_;
    double duration_;
};

// Brownian bridge on the grid i/n of [0, 1], optionally with the minimum of each interval.
struct BridgePath {
    std::vector<double> values;
    std::vector<double> floors;  // empty: minima taken at the grid points

    std::size_t intervals() const { return values.size() - 1; }
};

// Minimum of a Brownian bridge of duration h between a and b:
// P(min <= m) = exp(-2 (a - m)(b - m) / h) for m <= min(a, b), inverted at u in (0, 1].
inline double bridge_minimum(double a, double b, double h, double u) {
    return 0.5 * (a + b - std::sqrt((a - b) * (a - b) - 2.0 * h * std::log(u)));
}

// Standard Brownian bridge at t_i = i/n, built as B_t - t B_1 from Gaussian increments,
// together with the exact minimum of the bridge inside each grid interval.
inline BridgePath sample_bridge(std::size_t n, Rng& rng) {
    detail::require(n >= 2 && is_power_of_two(n), "grid resolution must be a power of two >= 2");
    const double h = 1.0 / static_cast<double>(n);
    const double sd = std::sqrt(h);
    std::vector<double> walk(n + 1, 0.0);
    for (std::size_t i = 1; i <= n; ++i) walk[i] = walk[i - 1] + sd * rng.normal();
    const double end = walk[n];
    BridgePath bridge{std::vector<double>(n + 1), std::vector<double>(n)};
    for (std::size_t i = 0; i <= n; ++i) bridge.values[i] = walk[i] - static_cast<double>(i) * h * end;
    bridge.values[0] = 0.0;
    bridge.values[n] = 0.0;
    // Given the grid values the intervals are independent Brownian bridges.
    for (std::size_t i = 0; i < n; ++i)
        bridge.floors[i] = bridge_minimum(bridge.values[i], bridge.values[i + 1], h, 1.0 - rng.uniform());
    return bridge;
}

// Vervaat transform: rotate the bridge so its minimum sits at time 0, then lift by that minimum.
// The rotation starts at the grid point nearest after the minimum (the minimum itself when it
// is a grid point); a minimum strictly inside an interval moves to time 0 by less than one
// grid step. Ties go to the smallest index.
inline ExcursionPath vervaat(const BridgePath& bridge) {
    const std::size_t n = bridge.intervals();
    detail::require(n >= 2 && bridge.values.size() == n + 1, "bridge needs at least 3 grid points");
    detail::require(bridge.floors.empty() || bridge.floors.size() == n, "bridge needs one floor per interval");
    const auto& b = bridge.values;
    std::vector<double> floors(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double grid_min = std::min(b[i], b[i + 1]);
        floors[i] = bridge.floors.empty() ? grid_min : std::min(bridge.floors[i], grid_min);
    }
    std::size_t k = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (floors[i] < floors[k]) k = i;
    const double low = floors[k];
    const std::size_t start = b[k] == low ? k : k + 1;
    std::vector<double> out(n + 1), lifted(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = b[(start + i) % n] - low;
        lifted[i] = floors[(start + i) % n] - low;
    }
    out[0] = 0.0;
    out[n] = 0.0;
    lifted[0] = 0.0;
    lifted[n - 1] = 0.0;
    for (std::size_t i = 0; i < n; ++i) lifted[i] = std::min(lifted[i], std::min(out[i], out[i + 1]));
    return ExcursionPath(std::move(out), 1.0, std::move(lifted));
}

inline ExcursionPath sample_excursion(std::size_t n, Rng& rng) { return vervaat(sample_bridge(n, rng)); }

// Lambda_c(f)(t) = c^{-1/2} f(ct). The new grid maps onto the old one point for point,
// so only heights and duration change.
inline ExcursionPath rescale(const ExcursionPath& f, double c) {
    detail::require(c > 0 && std::isfinite(c), "rescale factor must be positive");
    const double k = 1.0 / std::sqrt(c);
    std::vector<double> out(f.values().begin(), f.values().end());
    std::vector<double> floors(f.floors().begin(), f.floors().end());
    for (double& v : out) v *= k;
    for (double& v : floors) v *= k;
    return ExcursionPath(std::move(out), f.duration() / c, std::move(floors));
}

inline double height(const ExcursionPath& f) {
    return *std::max_element(f.values().begin(), f.values().end());
}

// Sliding-window oscillation: the largest |g(r) - g(r')| over grid points r, r' in [s, t]
// with |r - r'| <= window.
inline double oscillation(std::span<const double> g, double step, double s, double t, double window) {
    detail::require(step > 0, "grid step must be positive");
    const double span_end = step * static_cast<double>(g.size() - 1);
    detail::require(0 <= s && s < t && t <= span_end * (1 + 1e-12), "oscillation needs 0 <= s < t <= duration");
    detail::require(window > 0 && window <= (t - s) * (1 + 1e-12), "oscillation window must lie in (0, t - s]");
    constexpr double eps = 1e-9;
    const auto first = static_cast<std::size_t>(std::ceil(s / step - eps));
    const auto last = std::min(g.size() - 1, static_cast<std::size_t>(std::floor(t / step + eps)));
    const auto width = static_cast<std::size_t>(std::floor(window / step + eps));
    if (last <= first) return 0.0;

    std::deque<std::size_t> maxq, minq;
    double best = 0.0;
    for (std::size_t i = first; i <= last; ++i) {
        while (!maxq.empty() && g[maxq.back()] <= g[i]) maxq.pop_back();
        while (!minq.empty() && g[minq.back()] >= g[i]) minq.pop_back();
        maxq.push_back(i);
        minq.push_back(i);
        while (maxq.front() + width < i) maxq.pop_front();
        while (minq.front() + width < i) minq.pop_front();
        best = std::max(best, g[maxq.front()] - g[minq.front()]);
    }
    return best;
}

inline double oscillation(const ExcursionPath& f, double s, double t, double window) {
    return oscillation(f.values(), f.grid_step(), s, t, window);
}

// Lebesgue measure of {x : g(x) < level} for the piecewise-linear interpolant of grid values g.
// Each interval contributes the fraction of its length lying below the level.
inline double measure_below(std::span<const double> g, double step, double level) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < g.size(); ++i) {
        const double a = g[i];
        const double b = g[i + 1];
        const bool a_in = a < level;
        const bool b_in = b < level;
        if (a_in && b_in) {
            total += step;
        } else if (a_in != b_in) {
            const double lo = std::min(a, b);
            const double hi = std::max(a, b);
            total += step * (level - lo) / (hi - lo);
        }
    }
    return total;
}

// Time spent below a level; at the root this is the mass of the ball B(rho, level).
inline double occupation_below(const ExcursionPath& f, double level) {
    detail::require(level >= 0, "occupation level must be non-negative");
    return measure_below(f.values(), f.grid_step(), level);
}

// Number of passages from <= a to >= b (alternating crossing scan over grid values).
inline std::size_t upcrossings(std::span<const double> g, double a, double b) {
    detail::require(a > 0 && a < b, "upcrossings need 0 < a < b");
    std::size_t count = 0;
    bool below = true;
    for (double v : g) {
        if (below && v >= b) {
            ++count;
            below = false;
        } else if (!below && v <= a) {
            below = true;
        }
    }
    return count;
}

// Counted along the half grid, so dips to an interval floor are seen.
inline std::size_t upcrossings(const ExcursionPath& f, double a, double b) {
    const auto h = f.half_grid();
    return upcrossings(std::span<const double>(h), a, b);
}

// Tree distances d_f(s, t_i) from the grid point s to every grid point, in O(n) by running
// minima outward from s; floors[i] is the path minimum over interval i.
inline std::vector<double> distances_from_grid_point(std::span<const double> g, std::span<const double> floors,
                                                     std::size_t s) {
    std::vector<double> d(g.size());
    const double fs = g[s];
    double run = fs;
    for (std::size_t i = s; i-- > 0;) {
        run = std::min(run, floors[i]);
        d[i] = fs + g[i] - 2.0 * run;
    }
    run = fs;
    for (std::size_t i = s + 1; i < g.size(); ++i) {
        run = std::min(run, floors[i - 1]);
        d[i] = fs + g[i] - 2.0 * run;
    }
    d[s] = 0.0;
    return d;
}

inline std::vector<double> distances_from_grid_point(const ExcursionPath& f, std::size_t s) {
    return distances_from_grid_point(f.values(), f.floors(), s);
}

// Tree distances d_f(s, t_i) from an arbitrary time s to every grid point.
inline std::vector<double> distances_from_time(const ExcursionPath& f, double s) {
    const std::size_t n = f.intervals();
    const double x = std::clamp(s / f.grid_step(), 0.0, static_cast<double>(n));
    const auto k = static_cast<std::size_t>(std::llround(x));
    if (std::abs(x - static_cast<double>(k)) < 1e-9) return distances_from_grid_point(f, k);

    const auto lo = std::min(static_cast<std::size_t>(x), n - 1);
    const double w = x - static_cast<double>(lo);
    const double fs = f.within(lo, w);
    const auto floors = f.floors();
    std::vector<double> d(n + 1);
    double run = f.min_within(lo, 0.0, w);
    d[lo] = fs + f[lo] - 2.0 * run;
    for (std::size_t i = lo; i-- > 0;) {
        run = std::min(run, floors[i]);
        d[i] = fs + f[i] - 2.0 * run;
    }
    run = f.min_within(lo, w, 1.0);
    d[lo + 1] = fs + f[lo + 1] - 2.0 * run;
    for (std::size_t i = lo + 2; i <= n; ++i) {
        run = std::min(run, floors[i - 1]);
        d[i] = fs + f[i] - 2.0 * run;
    }
    return d;
}

// Re-rooted excursion W^(s): the coding function of the same tree seen from sigma_s.
//   W^(s)_t = W_s + W_{s+t}   - 2 m(s, s+t)     for t <= 1 - s
//   W^(s)_t = W_s + W_{s+t-1} - 2 m(s+t-1, s)   for t >= 1 - s
// which is the tree distance from sigma_s to sigma_{s+t mod 1}. At a grid time s this is a
// cyclic rotation of the distance profile and the floors carry over exactly: on an interval
// whose running minimum from s is M on entry, the least distance is W_s + max(floor, M) - 2M.
// Off the grid the profile is interpolated and carries no dips.
inline ExcursionPath reroot_shift(const ExcursionPath& f, double s) {
    detail::require(std::abs(f.duration() - 1.0) < 1e-12, "re-rooting needs a normalized excursion");
    detail::require(s >= 0 && s <= 1, "re-rooting time must lie in [0, 1]");
    const std::size_t n = f.intervals();
    const double x = s * static_cast<double>(n);
    const auto k = static_cast<std::size_t>(std::llround(x));
    const auto d = distances_from_time(f, s);
    std::vector<double> out(n + 1);
    if (std::abs(x - static_cast<double>(k)) < 1e-9) {
        // Grid points n and 0 coincide in the tree.
        const std::size_t c = k % n;
        const double fs = f[c];
        const auto floors = f.floors();
        std::vector<double> low(n);
        double run = fs;
        for (std::size_t j = c; j < n; ++j) {
            low[j] = fs + std::max(floors[j], run) - 2.0 * run;
            run = std::min(run, floors[j]);
        }
        run = fs;
        for (std::size_t j = c; j-- > 0;) {
            low[j] = fs + std::max(floors[j], run) - 2.0 * run;
            run = std::min(run, floors[j]);
        }
        std::vector<double> rotated(n);
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = d[(c + i) % n];
            rotated[i] = low[(c + i) % n];
        }
        out[n] = 0.0;
        for (std::size_t i = 0; i < n; ++i) rotated[i] = std::clamp(rotated[i], 0.0, std::min(out[i], out[i + 1]));
        return ExcursionPath(std::move(out), 1.0, std::move(rotated));
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double u = s + static_cast<double>(i) / static_cast<double>(n);
        const double v = u <= 1.0 ? u : u - 1.0;
        const double pos = v * static_cast<double>(n);
        const auto j = std::min(static_cast<std::size_t>(pos), n - 1);
        const double w = pos - static_cast<double>(j);
        out[i] = w == 0.0 ? d[j] : (1.0 - w) * d[j] + w * d[j + 1];
    }
    out[0] = 0.0;
    out[n] = 0.0;
    return ExcursionPath(std::move(out), 1.0);
}

// Upcrossings of [delta, 2 delta] by Brownian motion started at delta and killed at 0.
// Each attempt from delta reaches 2 delta before 0 with probability 1/2, so the count is
// the number of heads before the first tail of a fair coin.
inline std::size_t sample_bm_upcrossings(double delta, Rng& rng) {
    detail::require(delta > 0, "upcrossing level must be positive");
    std::size_t count = 0;
    while (rng.coin()) ++count;
    return count;
}

}  // namespace crt
