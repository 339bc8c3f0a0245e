#include "causalci/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>

namespace causalci {

Dataset::Dataset(std::vector<std::string> names, std::vector<int> cardinalities)
    : names_(std::move(names)), cards_(std::move(cardinalities)), columns_(names_.size()) {
    if (names_.size() != cards_.size()) throw std::invalid_argument("Dataset: names and cardinalities differ in length");
    for (int c : cards_) {
        if (c < 1) throw std::invalid_argument("Dataset: cardinality must be >= 1");
    }
}

std::optional<std::size_t> Dataset::find(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - names_.begin());
}

void Dataset::add_row(std::span<const int> states) {
    if (states.size() != names_.size()) throw std::invalid_argument("Dataset::add_row: wrong record width");
    for (std::size_t v = 0; v < states.size(); ++v) {
        if (states[v] < 0 || states[v] >= cards_[v]) {
            throw std::out_of_range("Dataset::add_row: state index out of range for variable " + names_[v]);
        }
    }
    for (std::size_t v = 0; v < states.size(); ++v) columns_[v].push_back(states[v]);
    ++rows_;
}

void Dataset::reserve(std::size_t rows) {
    for (auto& col : columns_) col.reserve(rows);
}

Dataset Dataset::select(std::span<const std::size_t> vars) const {
    Dataset out;
    for (std::size_t v : vars) {
        out.names_.push_back(names_.at(v));
        out.cards_.push_back(cards_.at(v));
        out.columns_.push_back(columns_.at(v));
    }
    out.rows_ = rows_;
    out.seed = seed;
    return out;
}

void write_csv(const Dataset& data, std::ostream& out) {
    const std::size_t nv = data.num_variables();
    for (std::size_t v = 0; v < nv; ++v) {
        if (v) out << ',';
        out << data.name(v);
    }
    out << '\n';
    std::string line;
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
        line.clear();
        for (std::size_t v = 0; v < nv; ++v) {
            if (v) line.push_back(',');
            line += std::to_string(data.at(r, v));
        }
        line.push_back('\n');
        out << line;
    }
}

namespace {

std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

Dataset read_csv(std::istream& in, std::optional<std::vector<int>> cardinalities) {
    std::string line;
    if (!std::getline(in, line)) throw CsvError("CSV: missing header line");
    std::vector<std::string> names;
    for (auto f : split(line)) {
        auto name = trim(f);
        if (name.empty()) throw CsvError("CSV: empty variable name in header");
        names.emplace_back(name);
    }

    std::vector<std::vector<int>> rows;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line);
        if (fields.size() != names.size()) {
            throw CsvError("CSV line " + std::to_string(line_no) + ": expected " + std::to_string(names.size()) +
                           " fields, got " + std::to_string(fields.size()));
        }
        std::vector<int> rec(fields.size());
        for (std::size_t i = 0; i < fields.size(); ++i) {
            auto f = trim(fields[i]);
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), rec[i]);
            if (ec != std::errc{} || ptr != f.data() + f.size() || rec[i] < 0) {
                throw CsvError("CSV line " + std::to_string(line_no) + ": invalid state index '" + std::string(f) + "'");
            }
        }
        rows.push_back(std::move(rec));
    }

    std::vector<int> cards;
    if (cardinalities) {
        if (cardinalities->size() != names.size()) throw CsvError("CSV: cardinality list does not match header");
        cards = *cardinalities;
    } else {
        cards.assign(names.size(), 1);
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) cards[i] = std::max(cards[i], r[i] + 1);
        }
    }

    Dataset data(std::move(names), std::move(cards));
    data.reserve(rows.size());
    for (const auto& r : rows) {
        try {
            data.add_row(r);
        } catch (const std::out_of_range& e) {
            throw CsvError(e.what());
        }
    }
    return data;
}

}  // namespace causalci
