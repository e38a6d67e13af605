#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crt/rng.hpp"

namespace crt::harness {

// Where an asserted target comes from.
enum class Basis {
    published,  // a law stated for the continuum tree
    identity,   // an exact algebraic or structural identity
    computed,   // an independently computed oracle value
    recorded,   // logged for inspection, not asserted
};

inline const char* to_string(Basis b) {
    switch (b) {
        case Basis::published: return "published";
        case Basis::identity: return "identity";
        case Basis::computed: return "computed";
        case Basis::recorded: return "recorded";
    }
    return "?";
}

inline Basis basis_from_string(const std::string& s) {
    if (s == "published") return Basis::published;
    if (s == "identity") return Basis::identity;
    if (s == "computed") return Basis::computed;
    if (s == "recorded") return Basis::recorded;
    throw std::runtime_error("unknown basis '" + s + "'");
}

struct StatRow {
    std::string name;
    double value = NAN;
    double stderr_ = NAN;
    double target = NAN;
    double tolerance = NAN;
    bool asserted = true;
    bool pass = true;
    Basis basis = Basis::recorded;

    bool operator==(const StatRow& o) const {
        auto same = [](double a, double b) { return a == b || (std::isnan(a) && std::isnan(b)); };
        return name == o.name && same(value, o.value) && same(stderr_, o.stderr_) && same(target, o.target) &&
               same(tolerance, o.tolerance) && asserted == o.asserted && pass == o.pass && basis == o.basis;
    }
};

struct ExperimentReport {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> config;  // echoed settings
    std::vector<RngStream> streams;                            // one per replica
    std::vector<StatRow> rows;
    // Extra CSV files written next to report.csv: (file name, contents).
    std::vector<std::pair<std::string, std::string>> attachments;
    double wall_clock_seconds = 0.0;

    bool passed() const {
        for (const auto& r : rows)
            if (r.asserted && !r.pass) return false;
        return true;
    }

    // |value - target| <= tolerance
    StatRow& check_close(std::string name, double value, double stderr_, double target, double tolerance,
                         Basis basis) {
        rows.push_back({std::move(name), value, stderr_, target, tolerance, true,
                        std::abs(value - target) <= tolerance, basis});
        return rows.back();
    }
    // value <= target + tolerance
    StatRow& check_at_most(std::string name, double value, double stderr_, double target, double tolerance,
                           Basis basis) {
        rows.push_back({std::move(name), value, stderr_, target, tolerance, true, value <= target + tolerance, basis});
        return rows.back();
    }
    // value >= target
    StatRow& check_at_least(std::string name, double value, double target, Basis basis) {
        rows.push_back({std::move(name), value, NAN, target, NAN, true, value >= target, basis});
        return rows.back();
    }
    StatRow& record(std::string name, double value, double stderr_ = NAN, double target = NAN) {
        rows.push_back({std::move(name), value, stderr_, target, NAN, false, true, Basis::recorded});
        return rows.back();
    }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + '"';
}

inline std::string csv_number(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// Splits one RFC 4180 record; quoted fields may contain commas, quotes and newlines.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields) {
    fields.clear();
    std::string field;
    bool quoted = false, any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    field += '"';
                    in.get();
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(field);
            field.clear();
        } else if (c == '\n') {
            fields.push_back(field);
            return true;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (any) fields.push_back(field);
    return any;
}

}  // namespace detail

inline constexpr const char* kReportHeader = "name,value,stderr,target,tolerance,status,basis";

inline void write_report_csv(std::ostream& out, const ExperimentReport& report) {
    out << kReportHeader << '\n';
    for (const auto& r : report.rows) {
        const char* status = !r.asserted ? "recorded" : (r.pass ? "pass" : "fail");
        out << detail::csv_field(r.name) << ',' << detail::csv_number(r.value) << ','
            << detail::csv_number(r.stderr_) << ',' << detail::csv_number(r.target) << ','
            << detail::csv_number(r.tolerance) << ',' << status << ',' << to_string(r.basis) << '\n';
    }
}

inline std::vector<StatRow> read_report_csv(std::istream& in) {
    std::vector<std::string> f;
    if (!detail::read_csv_record(in, f)) throw std::runtime_error("report CSV is empty");
    std::vector<StatRow> rows;
    while (detail::read_csv_record(in, f)) {
        if (f.size() != 7) throw std::runtime_error("report CSV row has " + std::to_string(f.size()) + " fields");
        StatRow r;
        r.name = f[0];
        r.value = std::strtod(f[1].c_str(), nullptr);
        r.stderr_ = std::strtod(f[2].c_str(), nullptr);
        r.target = std::strtod(f[3].c_str(), nullptr);
        r.tolerance = std::strtod(f[4].c_str(), nullptr);
        r.asserted = f[5] != "recorded";
        r.pass = f[5] != "fail";
        r.basis = basis_from_string(f[6]);
        rows.push_back(std::move(r));
    }
    return rows;
}

// Writes the report rows as CSV (header row, LF line endings).
inline void emit_csv(const ExperimentReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_report_csv(out, report);
    out.flush();
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

}  // namespace crt::harness
