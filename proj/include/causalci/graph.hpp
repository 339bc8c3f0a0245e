#pragma once

// DAGs, partially directed graphs and the graph operations shared by ground
// truth construction and structure learning.

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace causalci {

class Dag {
public:
    Dag() = default;
    explicit Dag(std::size_t n) : parents_(n), children_(n) {}

    std::size_t size() const { return parents_.size(); }

    /// Throws std::invalid_argument on self-loops and on edges that would
    /// close a directed cycle.
    void add_edge(std::size_t from, std::size_t to);
    bool has_edge(std::size_t from, std::size_t to) const;
    std::size_t num_edges() const;

    const std::vector<std::size_t>& parents(std::size_t v) const { return parents_.at(v); }
    const std::vector<std::size_t>& children(std::size_t v) const { return children_.at(v); }

    std::vector<std::pair<std::size_t, std::size_t>> edges() const;
    std::vector<std::size_t> topological_order() const;
    bool reaches(std::size_t from, std::size_t to) const;

private:
    std::vector<std::vector<std::size_t>> parents_;
    std::vector<std::vector<std::size_t>> children_;
};

/// Partially directed graph. Each unordered pair is absent, undirected, or
/// directed one way.
class Pdag {
public:
    Pdag() = default;
    explicit Pdag(std::size_t n) : n_(n), mark_(n * n, 0) {}

    std::size_t size() const { return n_; }

    bool adjacent(std::size_t a, std::size_t b) const { return mark_[a * n_ + b] != 0 || mark_[b * n_ + a] != 0; }
    bool has_directed(std::size_t from, std::size_t to) const { return mark_[from * n_ + to] == kArrow; }
    bool has_undirected(std::size_t a, std::size_t b) const { return mark_[a * n_ + b] == kLine; }

    void add_undirected(std::size_t a, std::size_t b);
    /// Sets the pair to from -> to, replacing any previous mark.
    void orient(std::size_t from, std::size_t to);
    void remove_edge(std::size_t a, std::size_t b);

    std::vector<std::size_t> neighbors(std::size_t v) const;  ///< any adjacency, sorted
    std::size_t num_edges() const;

    /// True if a directed path from -> ... -> to exists using directed edges only.
    bool directed_path(std::size_t from, std::size_t to) const;
    bool has_directed_cycle() const;

    bool operator==(const Pdag& other) const = default;

private:
    static constexpr std::uint8_t kLine = 1;
    static constexpr std::uint8_t kArrow = 2;
    static constexpr std::uint8_t kTail = 3;

    std::size_t n_ = 0;
    // mark_[a*n+b]: kLine both ways for a - b; kArrow at [from,to] and kTail at [to,from].
    std::vector<std::uint8_t> mark_;
};

/// Completed PDAG; the type produced by structure learning and dag_to_cpdag.
using Cpdag = Pdag;

/// Applies Meek's orientation rules R1-R4 until no rule fires. A rule is
/// skipped if its orientation would close a directed cycle. Returns the
/// number of edges oriented.
int apply_meek_closure(Pdag& g);

/// Standard d-separation via reachability (Bayes ball). Throws
/// std::out_of_range on unknown nodes and std::invalid_argument when
/// x == y or x, y are in z.
bool d_separated(const Dag& dag, std::size_t x, std::size_t y, const std::vector<std::size_t>& z);

/// CPDAG of the Markov equivalence class of `dag`: skeleton with the
/// v-structures oriented, closed under Meek's rules.
Cpdag dag_to_cpdag(const Dag& dag);

/// Plain edge list: one "A -> B" or "A -- B" line per edge, pairs in
/// increasing (first, second) index order.
std::string to_edge_list(const Pdag& g, const std::vector<std::string>& names);

}  // namespace causalci
