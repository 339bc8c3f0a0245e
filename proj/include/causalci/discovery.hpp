#pragma once

// PC-stable structure learning over a pluggable independence test.

#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "causalci/citest.hpp"
#include "causalci/graph.hpp"

namespace causalci {

/// Conditioning sets that separated removed pairs, keyed by (min, max).
class SepsetMap {
public:
    void set(std::size_t a, std::size_t b, std::vector<std::size_t> z);
    const std::vector<std::size_t>* find(std::size_t a, std::size_t b) const;
    bool contains(std::size_t a, std::size_t b) const { return find(a, b) != nullptr; }
    std::size_t size() const { return sets_.size(); }
    const auto& entries() const { return sets_; }

private:
    std::map<std::pair<std::size_t, std::size_t>, std::vector<std::size_t>> sets_;
};

struct DiscoveryStats {
    std::int64_t ci_test_count = 0;
    std::map<int, std::int64_t> tests_by_order;  ///< |z| -> number of tests
    std::chrono::duration<double> elapsed{0.0};
    int orientation_conflicts = 0;
};

struct DiscoveryConfig {
    int max_cond_set = 4;
};

struct Skeleton {
    Pdag graph;  ///< undirected edges only
    SepsetMap sepsets;
    DiscoveryStats stats;
};

/// Level-wise PC-stable edge removal. Adjacencies are frozen at the start of
/// each level; for each edge conditioning sets of the level's size are drawn
/// in lexicographic order from frozen adj(x)\{y}, then from adj(y)\{x}.
Skeleton learn_skeleton(CiTest& test, const DiscoveryConfig& config = {});

struct OrientationResult {
    Pdag graph;
    int conflicts = 0;  ///< edges left undirected because two triples disagreed
};

/// Orients x -> z <- y for every unshielded triple with z not in sepset(x, y).
/// An edge claimed in both directions stays undirected.
OrientationResult orient_v_structures(const Pdag& skeleton, const SepsetMap& sepsets);

/// Meek's rules R1-R4 to a fixed point.
Cpdag apply_meek_rules(Pdag pdag);

struct DiscoveryResult {
    Cpdag cpdag;
    DiscoveryStats stats;
    SepsetMap sepsets;
};

DiscoveryResult learn_cpdag(CiTest& test, const DiscoveryConfig& config = {});

/// Runs learning with a data-driven method. `truth` is required for
/// Method::DsepOracle and ignored otherwise.
DiscoveryResult learn_cpdag(const Dataset& data, Method method, const TestConfig& config, const Dag* truth = nullptr,
                            MiThresholdCache* cache = nullptr);

/// Perfect independence oracle: d-separation in a known DAG.
class DSeparationTest final : public CiTest {
public:
    explicit DSeparationTest(const Dag& dag) : dag_(&dag) {}
    std::size_t num_variables() const override { return dag_->size(); }
    CiDecision test(std::size_t x, std::size_t y, std::span<const std::size_t> z) override;

private:
    const Dag* dag_;
};

}  // namespace causalci
