#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace crt {

// Sparse-table range-minimum index: O(n log n) build, O(1) argmin queries.
// Ties resolve to the leftmost position.
template <class T, class Index = std::uint32_t>
class SparseTable {
public:
    SparseTable() = default;

    explicit SparseTable(std::span<const T> data) : data_(data) {
        const std::size_t n = data.size();
        if (n == 0) return;
        const std::size_t levels = std::bit_width(n);
        table_.resize(levels);
        table_[0].resize(n);
        for (std::size_t i = 0; i < n; ++i) table_[0][i] = static_cast<Index>(i);
        for (std::size_t k = 1; k < levels; ++k) {
            const std::size_t half = std::size_t{1} << (k - 1);
            const std::size_t len = n - (std::size_t{1} << k) + 1;
            auto& row = table_[k];
            const auto& prev = table_[k - 1];
            row.resize(len);
            for (std::size_t i = 0; i < len; ++i) row[i] = better(prev[i], prev[i + half]);
        }
    }

    // Leftmost position of the minimum over the closed range [lo, hi] (either order).
    std::size_t argmin(std::size_t lo, std::size_t hi) const {
        if (hi < lo) std::swap(lo, hi);
        const std::size_t k = std::bit_width(hi - lo + 1) - 1;
        return better(table_[k][lo], table_[k][hi + 1 - (std::size_t{1} << k)]);
    }

    T min(std::size_t lo, std::size_t hi) const { return data_[argmin(lo, hi)]; }

    std::size_t size() const { return data_.size(); }
    const std::vector<std::vector<Index>>& levels() const { return table_; }

    // Rebinds to a data span after the owner of the data moved it.
    void rebind(std::span<const T> data) { data_ = data; }

    static SparseTable from_levels(std::span<const T> data, std::vector<std::vector<Index>> levels) {
        SparseTable t;
        t.data_ = data;
        t.table_ = std::move(levels);
        return t;
    }

private:
    Index better(Index a, Index b) const {
        if (data_[b] < data_[a]) return b;
        if (data_[a] < data_[b]) return a;
        return a < b ? a : b;
    }

    std::span<const T> data_;
    std::vector<std::vector<Index>> table_;
};

}  // namespace crt
