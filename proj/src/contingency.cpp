#include "causalci/contingency.hpp"

#include <stdexcept>

namespace causalci {

ContingencyTable::ContingencyTable(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), cells_(rows * cols, 0), row_margins_(rows, 0), col_margins_(cols, 0) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("ContingencyTable: dimensions must be >= 1");
}

ContingencyTable::ContingencyTable(const std::vector<std::vector<Count>>& rows)
    : ContingencyTable(rows.size(), rows.empty() ? 0 : rows.front().size()) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != cols_) throw std::invalid_argument("ContingencyTable: ragged rows");
        for (std::size_t j = 0; j < cols_; ++j) add(i, j, rows[i][j]);
    }
}

ContingencyTable::ContingencyTable(std::initializer_list<std::initializer_list<Count>> rows)
    : ContingencyTable(std::vector<std::vector<Count>>(rows.begin(), rows.end())) {}

void ContingencyTable::add(std::size_t i, std::size_t j, Count c) {
    if (i >= rows_ || j >= cols_) throw std::out_of_range("ContingencyTable::add: cell out of range");
    if (c < 0 && cells_[i * cols_ + j] + c < 0) throw std::invalid_argument("ContingencyTable: negative count");
    cells_[i * cols_ + j] += c;
    row_margins_[i] += c;
    col_margins_[j] += c;
    total_ += c;
}

ContingencyTable ContingencyTable::transposed() const {
    ContingencyTable t(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) t.add(j, i, (*this)(i, j));
    }
    return t;
}

}  // namespace causalci
