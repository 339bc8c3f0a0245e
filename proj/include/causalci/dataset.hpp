#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace causalci {

/// Discrete data set stored column-major: one column of 0-based state
/// indices per variable.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::vector<std::string> names, std::vector<int> cardinalities);

    std::size_t num_variables() const { return names_.size(); }
    std::size_t num_rows() const { return rows_; }

    const std::string& name(std::size_t var) const { return names_.at(var); }
    const std::vector<std::string>& names() const { return names_; }
    int cardinality(std::size_t var) const { return cards_.at(var); }
    const std::vector<int>& cardinalities() const { return cards_; }
    std::span<const int> column(std::size_t var) const { return columns_.at(var); }
    int at(std::size_t row, std::size_t var) const { return columns_[var][row]; }

    std::optional<std::size_t> find(std::string_view name) const;

    /// Appends one record; throws std::out_of_range on a state index outside
    /// its variable's cardinality.
    void add_row(std::span<const int> states);
    void reserve(std::size_t rows);

    /// Keeps only the listed variables, in the listed order.
    Dataset select(std::span<const std::size_t> vars) const;

    std::uint64_t seed = 0;  ///< provenance of sampled data

private:
    std::vector<std::string> names_;
    std::vector<int> cards_;
    std::vector<std::vector<int>> columns_;
    std::size_t rows_ = 0;
};

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// CSV layout: header of variable names, then comma-separated 0-based state
/// indices, one record per line, newline-terminated.
void write_csv(const Dataset& data, std::ostream& out);

/// Reads the CSV layout above. Cardinalities are taken from `cardinalities`
/// when given, otherwise inferred as (max observed index + 1).
Dataset read_csv(std::istream& in, std::optional<std::vector<int>> cardinalities = std::nullopt);

}  // namespace causalci
