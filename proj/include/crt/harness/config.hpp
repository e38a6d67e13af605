#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "crt/error.hpp"
#include "crt/excursion.hpp"

namespace crt::harness {

inline const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"root-volume",      "upcrossing-law", "volume-moments",
                                                "reroot-ks",        "resistance-suite", "hitting-green",
                                                "annealed-hk",      "fluctuation-bands"};
    return names;
}

inline std::string experiment_list() {
    std::string s;
    for (const auto& n : experiment_names()) s += (s.empty() ? "" : ", ") + n;
    return s;
}

// Unset optional fields fall back to per-experiment defaults.
struct ExperimentConfig {
    std::string experiment;
    std::optional<std::size_t> grid;      // n, a power of two
    std::optional<std::size_t> replicas;  // M
    std::optional<std::size_t> marks;     // k
    std::optional<std::vector<double>> radii;
    std::optional<std::vector<double>> times;
    std::optional<std::size_t> center_stride;
    std::uint64_t seed = 20240917;
    std::string out;       // output directory; empty = do not write files
    std::size_t threads = 0;

    void validate() const {
        if (std::find(experiment_names().begin(), experiment_names().end(), experiment) ==
            experiment_names().end())
            throw InvalidParameter("unknown experiment '" + experiment + "'; valid: " + experiment_list());
        if (grid) detail::require(*grid >= 2 && is_power_of_two(*grid), "n must be a power of two >= 2");
        if (replicas) detail::require(*replicas >= 1, "replicas must be >= 1");
        if (marks) detail::require(*marks >= 1, "marks must be >= 1");
        if (center_stride) detail::require(*center_stride >= 1, "center_stride must be >= 1");
        for (const auto* grid_values : {radii ? &*radii : nullptr, times ? &*times : nullptr}) {
            if (!grid_values) continue;
            detail::require(!grid_values->empty(), "radius/time grids must be non-empty");
            for (std::size_t i = 0; i < grid_values->size(); ++i) {
                detail::require((*grid_values)[i] > 0, "radius/time grids must be positive");
                if (i > 0)
                    detail::require((*grid_values)[i] > (*grid_values)[i - 1],
                                    "radius/time grids must be strictly increasing");
            }
        }
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    if (v.empty() || !std::all_of(v.begin(), v.end(), [](unsigned char c) { return std::isdigit(c); }))
        throw InvalidParameter("config: '" + key + "' expects a non-negative integer, got '" + v + "'");
    return std::strtoull(v.c_str(), nullptr, 10);
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        char* end = nullptr;
        const double x = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size())
            throw InvalidParameter("config: '" + key + "' expects comma-separated numbers, got '" + v + "'");
        out.push_back(x);
    }
    return out;
}

}  // namespace detail

// Flat `key = value` file; '#' starts a comment. Keys: experiment, n, replicas, marks, seed, out,
// threads, radii, times, center_stride. Values already present in `cfg` are overwritten.
inline void apply_config_stream(std::istream& in, ExperimentConfig& cfg) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidParameter("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(std::string_view(line).substr(0, eq));
        const std::string val = detail::trim(std::string_view(line).substr(eq + 1));
        if (key == "experiment") cfg.experiment = val;
        else if (key == "n") cfg.grid = detail::parse_uint(key, val);
        else if (key == "replicas") cfg.replicas = detail::parse_uint(key, val);
        else if (key == "marks") cfg.marks = detail::parse_uint(key, val);
        else if (key == "seed") cfg.seed = detail::parse_uint(key, val);
        else if (key == "threads") cfg.threads = detail::parse_uint(key, val);
        else if (key == "center_stride") cfg.center_stride = detail::parse_uint(key, val);
        else if (key == "out") cfg.out = val;
        else if (key == "radii") cfg.radii = detail::parse_list(key, val);
        else if (key == "times") cfg.times = detail::parse_list(key, val);
        else throw InvalidParameter("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
}

inline void apply_config_file(const std::string& path, ExperimentConfig& cfg) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot read config file '" + path + "'");
    apply_config_stream(in, cfg);
}

}  // namespace crt::harness
