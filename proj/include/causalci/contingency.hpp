#pragma once

#include <initializer_list>
#include <span>
#include <vector>

#include "causalci/numstat.hpp"

namespace causalci {

/// Joint counts n_ij of two discrete variables with cached margins.
class ContingencyTable {
public:
    ContingencyTable() = default;
    ContingencyTable(std::size_t rows, std::size_t cols);
    ContingencyTable(std::initializer_list<std::initializer_list<Count>> rows);
    explicit ContingencyTable(const std::vector<std::vector<Count>>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Count operator()(std::size_t i, std::size_t j) const { return cells_[i * cols_ + j]; }
    void add(std::size_t i, std::size_t j, Count c = 1);

    Count row_margin(std::size_t i) const { return row_margins_[i]; }
    Count col_margin(std::size_t j) const { return col_margins_[j]; }
    Count total() const { return total_; }

    /// Row-major joint counts (the flattened Kx*Ky count sequence).
    std::span<const Count> cells() const { return cells_; }
    std::span<const Count> row_margins() const { return row_margins_; }
    std::span<const Count> col_margins() const { return col_margins_; }

    ContingencyTable transposed() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Count> cells_;
    std::vector<Count> row_margins_;
    std::vector<Count> col_margins_;
    Count total_ = 0;
};

}  // namespace causalci
