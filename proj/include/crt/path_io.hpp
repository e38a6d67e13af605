#pragma once

// Binary dump of an excursion and its range-minimum table, for resuming experiments.
//
// Layout (all integers and floats little-endian, no padding):
//
//   bytes 0..7   magic "CRTPATH\0"
//   u32          format version (1)
//   u32          flags; bit 0 set when the sparse table follows
//   u64          number of grid values (n + 1)
//   f64          duration
//   f64 x (n+1)  grid values
//   f64 x n      interval floors
//   if flag bit 0 (table over the 2n + 1 half-grid values):
//     u32        number of levels L
//     L times:   u64 length, then u32 x length argmin entries
//
// A reader rebuilding the table from the values must obtain the same levels; load_index
// checks the stored table shape and entry ranges, not its contents.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "crt/excursion.hpp"
#include "crt/realtree.hpp"

namespace crt {

inline constexpr std::array<char, 8> kPathMagic{'C', 'R', 'T', 'P', 'A', 'T', 'H', '\0'};
inline constexpr std::uint32_t kPathFormatVersion = 1;

namespace detail {

template <class U>
void put_le(std::ostream& out, U x) {
    unsigned char buf[sizeof(U)];
    for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>(x >> (8 * i));
    out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <class U>
U get_le(std::istream& in) {
    unsigned char buf[sizeof(U)];
    if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw std::runtime_error("path dump truncated");
    U x = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) x |= static_cast<U>(buf[i]) << (8 * i);
    return x;
}

inline void put_f64(std::ostream& out, double x) { put_le(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }

}  // namespace detail

inline void save_index(std::ostream& out, const RealTreeIndex& idx, bool with_table = true) {
    const auto& f = idx.path();
    out.write(kPathMagic.data(), kPathMagic.size());
    detail::put_le<std::uint32_t>(out, kPathFormatVersion);
    detail::put_le<std::uint32_t>(out, with_table ? 1u : 0u);
    detail::put_le<std::uint64_t>(out, f.size());
    detail::put_f64(out, f.duration());
    for (double v : f.values()) detail::put_f64(out, v);
    for (double v : f.floors()) detail::put_f64(out, v);
    if (with_table) {
        const auto& levels = idx.rmq().levels();
        detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(levels.size()));
        for (const auto& row : levels) {
            detail::put_le<std::uint64_t>(out, row.size());
            for (std::uint32_t e : row) detail::put_le<std::uint32_t>(out, e);
        }
    }
    if (!out) throw std::runtime_error("failed writing path dump");
}

// Reads a dump; the table is rebuilt from the values when the file carries none.
inline RealTreeIndex load_index(std::istream& in) {
    std::array<char, 8> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kPathMagic)
        throw std::runtime_error("not a crt path dump (bad magic)");
    const auto version = detail::get_le<std::uint32_t>(in);
    if (version != kPathFormatVersion)
        throw std::runtime_error("unsupported path dump version " + std::to_string(version));
    const auto flags = detail::get_le<std::uint32_t>(in);
    const auto count = detail::get_le<std::uint64_t>(in);
    if (count < 3 || count > (std::uint64_t{1} << 40)) throw std::runtime_error("path dump has bad grid size");
    const double duration = detail::get_f64(in);
    std::vector<double> values(count);
    for (auto& v : values) v = detail::get_f64(in);
    std::vector<double> floors(count - 1);
    for (auto& v : floors) v = detail::get_f64(in);
    auto path = std::make_shared<const ExcursionPath>(std::move(values), duration, std::move(floors));
    if (!(flags & 1u)) return RealTreeIndex(ExcursionPath(*path));

    const std::uint64_t half = 2 * count - 1;
    const auto levels = detail::get_le<std::uint32_t>(in);
    if (levels != std::bit_width(half)) throw std::runtime_error("path dump table has wrong level count");
    std::vector<std::vector<std::uint32_t>> table(levels);
    for (std::uint32_t k = 0; k < levels; ++k) {
        const auto len = detail::get_le<std::uint64_t>(in);
        if (len != half - (std::uint64_t{1} << k) + 1) throw std::runtime_error("path dump table row has wrong length");
        table[k].resize(len);
        for (auto& e : table[k]) {
            e = detail::get_le<std::uint32_t>(in);
            if (e >= half) throw std::runtime_error("path dump table entry out of range");
        }
    }
    return RealTreeIndex(path, SparseTable<double>::from_levels({}, std::move(table)));
}

}  // namespace crt
