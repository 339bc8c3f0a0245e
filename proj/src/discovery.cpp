#include "causalci/discovery.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace causalci {

void SepsetMap::set(std::size_t a, std::size_t b, std::vector<std::size_t> z) {
    std::sort(z.begin(), z.end());
    sets_[std::minmax(a, b)] = std::move(z);
}

const std::vector<std::size_t>* SepsetMap::find(std::size_t a, std::size_t b) const {
    auto it = sets_.find(std::minmax(a, b));
    return it == sets_.end() ? nullptr : &it->second;
}

namespace {

// Calls fn(subset) for every size-k subset of `pool` in lexicographic order
// until fn returns true. Returns whether it stopped early.
template <class Fn>
bool for_each_subset(const std::vector<std::size_t>& pool, std::size_t k, Fn&& fn) {
    if (k > pool.size()) return false;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    std::vector<std::size_t> subset(k);
    while (true) {
        for (std::size_t i = 0; i < k; ++i) subset[i] = pool[idx[i]];
        if (fn(subset)) return true;
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == pool.size() - k + (i - 1)) --i;
        if (i == 0) return false;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

std::vector<std::size_t> without(const std::vector<std::size_t>& v, std::size_t drop) {
    std::vector<std::size_t> out;
    for (std::size_t x : v) {
        if (x != drop) out.push_back(x);
    }
    return out;
}

}  // namespace

Skeleton learn_skeleton(CiTest& test, const DiscoveryConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    const std::size_t n = test.num_variables();
    if (config.max_cond_set < 0) throw std::invalid_argument("learn_skeleton: max_cond_set must be >= 0");

    Skeleton out{Pdag(n), {}, {}};
    Pdag& g = out.graph;
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) g.add_undirected(a, b);
    }

    auto run_test = [&](std::size_t x, std::size_t y, const std::vector<std::size_t>& z) {
        ++out.stats.ci_test_count;
        ++out.stats.tests_by_order[static_cast<int>(z.size())];
        return test.test(x, y, z).independent;
    };

    for (std::size_t level = 0; static_cast<int>(level) <= config.max_cond_set; ++level) {
        std::vector<std::vector<std::size_t>> frozen(n);
        for (std::size_t v = 0; v < n; ++v) frozen[v] = g.neighbors(v);

        bool any_candidate = false;
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t y : frozen[x]) {
                if (y <= x || !g.adjacent(x, y)) continue;
                const auto adj_x = without(frozen[x], y);
                const auto adj_y = without(frozen[y], x);
                if (adj_x.size() < level && adj_y.size() < level) continue;
                any_candidate = true;

                std::vector<std::size_t> found;
                bool removed = for_each_subset(adj_x, level, [&](const std::vector<std::size_t>& z) {
                    if (!run_test(x, y, z)) return false;
                    found = z;
                    return true;
                });
                if (!removed) {
                    removed = for_each_subset(adj_y, level, [&](const std::vector<std::size_t>& z) {
                        // Sets already drawn from adj(x) were tested above.
                        if (std::includes(adj_x.begin(), adj_x.end(), z.begin(), z.end())) return false;
                        if (!run_test(x, y, z)) return false;
                        found = z;
                        return true;
                    });
                }
                if (removed) {
                    g.remove_edge(x, y);
                    out.sepsets.set(x, y, found);
                }
            }
        }
        if (!any_candidate) break;
    }
    out.stats.elapsed = std::chrono::steady_clock::now() - start;
    return out;
}

OrientationResult orient_v_structures(const Pdag& skeleton, const SepsetMap& sepsets) {
    const std::size_t n = skeleton.size();
    std::set<std::pair<std::size_t, std::size_t>> claims;
    for (std::size_t z = 0; z < n; ++z) {
        const auto nb = skeleton.neighbors(z);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                const std::size_t x = nb[i];
                const std::size_t y = nb[j];
                if (skeleton.adjacent(x, y)) continue;
                const auto* sep = sepsets.find(x, y);
                if (sep == nullptr || std::binary_search(sep->begin(), sep->end(), z)) continue;
                claims.emplace(x, z);
                claims.emplace(y, z);
            }
        }
    }
    OrientationResult out{skeleton, 0};
    for (const auto& [from, to] : claims) {
        if (claims.count({to, from})) {
            if (from < to) ++out.conflicts;
            continue;
        }
        out.graph.orient(from, to);
    }
    return out;
}

Cpdag apply_meek_rules(Pdag pdag) {
    apply_meek_closure(pdag);
    return pdag;
}

DiscoveryResult learn_cpdag(CiTest& test, const DiscoveryConfig& config) {
    const auto start = std::chrono::steady_clock::now();
    Skeleton sk = learn_skeleton(test, config);
    OrientationResult oriented = orient_v_structures(sk.graph, sk.sepsets);
    DiscoveryResult out{apply_meek_rules(std::move(oriented.graph)), std::move(sk.stats), std::move(sk.sepsets)};
    out.stats.orientation_conflicts = oriented.conflicts;
    out.stats.elapsed = std::chrono::steady_clock::now() - start;
    return out;
}

DiscoveryResult learn_cpdag(const Dataset& data, Method method, const TestConfig& config, const Dag* truth,
                            MiThresholdCache* cache) {
    const DiscoveryConfig dc{config.max_cond_set};
    if (method == Method::DsepOracle) {
        if (truth == nullptr) throw std::invalid_argument("learn_cpdag: dsep_oracle needs the true DAG");
        if (truth->size() != data.num_variables()) throw std::invalid_argument("learn_cpdag: DAG and data disagree in size");
        DSeparationTest oracle(*truth);
        return learn_cpdag(oracle, dc);
    }
    DataCiTest test(data, method, config, cache);
    return learn_cpdag(test, dc);
}

CiDecision DSeparationTest::test(std::size_t x, std::size_t y, std::span<const std::size_t> z) {
    CiDecision d;
    d.method = Method::DsepOracle;
    d.independent = d_separated(*dag_, x, y, std::vector<std::size_t>(z.begin(), z.end()));
    d.statistic = d.independent ? 0.0 : 1.0;
    return d;
}

}  // namespace causalci
