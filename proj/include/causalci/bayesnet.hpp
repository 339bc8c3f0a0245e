#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "causalci/dataset.hpp"
#include "causalci/graph.hpp"

namespace causalci {

struct BnNode {
    std::string name;
    std::vector<std::string> states;
    std::vector<std::size_t> parents;  ///< in declaration order of the probability block
    /// Row-major CPT: one row of |states| probabilities per parent
    /// configuration; configurations are indexed with the last parent
    /// varying fastest.
    std::vector<double> cpt;
};

/// Discrete Bayesian network with acyclic parents and normalized CPTs.
class DiscreteBayesNet {
public:
    DiscreteBayesNet() = default;
    /// Validates acyclicity, CPT shape and row sums (tolerance `row_tol`).
    explicit DiscreteBayesNet(std::string name, std::vector<BnNode> nodes, double row_tol = 1e-6);

    const std::string& name() const { return name_; }
    std::size_t size() const { return nodes_.size(); }
    const BnNode& node(std::size_t i) const { return nodes_.at(i); }
    const std::vector<BnNode>& nodes() const { return nodes_; }
    std::size_t cardinality(std::size_t i) const { return nodes_.at(i).states.size(); }

    std::size_t parent_configurations(std::size_t i) const;
    /// Probability row for a parent configuration index.
    std::span<const double> cpt_row(std::size_t node, std::size_t config) const;

    const Dag& dag() const { return dag_; }
    std::vector<std::string> names() const;
    std::vector<int> cardinalities() const;

private:
    std::string name_;
    std::vector<BnNode> nodes_;
    Dag dag_;
};

/// Malformed BIF text; carries 1-based line and column.
class BifParseError : public std::runtime_error {
public:
    BifParseError(const std::string& what, int line, int column);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Well-formed BIF describing an invalid network (cycle, bad CPT).
class BifValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parses the discrete BIF subset: `network`, `variable` and `probability`
/// blocks; `property` entries are ignored. Variable order is the order of
/// the variable blocks.
DiscreteBayesNet parse_bif(std::string_view text);
std::string write_bif(const DiscreteBayesNet& net);

/// n ancestral samples; row r uses its own random stream derived from (seed, r).
Dataset forward_sample(const DiscreteBayesNet& net, std::size_t n, std::uint64_t seed);

/// `copies` disjoint copies of `net` (names suffixed "_<copy>"), linked by
/// `links_per_tile` edges from each copy to the next. A node receiving a link
/// keeps its original CPT for state 0 of the new parent and a perturbed CPT
/// for the other states.
DiscreteBayesNet tile_network(const DiscreteBayesNet& net, int copies, int links_per_tile, std::uint64_t seed,
                              std::string name);

}  // namespace causalci
