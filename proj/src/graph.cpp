#include "causalci/graph.hpp"

#include <algorithm>
#include <deque>
#include <sstream>
#include <stdexcept>

namespace causalci {

// --- Dag ------------------------------------------------------------------

void Dag::add_edge(std::size_t from, std::size_t to) {
    if (from >= size() || to >= size()) throw std::out_of_range("Dag::add_edge: unknown node");
    if (from == to) throw std::invalid_argument("Dag::add_edge: self-loop");
    if (has_edge(from, to)) return;
    if (reaches(to, from)) throw std::invalid_argument("Dag::add_edge: edge would create a cycle");
    parents_[to].push_back(from);
    std::sort(parents_[to].begin(), parents_[to].end());
    children_[from].push_back(to);
    std::sort(children_[from].begin(), children_[from].end());
}

bool Dag::has_edge(std::size_t from, std::size_t to) const {
    const auto& ch = children_.at(from);
    return std::binary_search(ch.begin(), ch.end(), to);
}

std::size_t Dag::num_edges() const {
    std::size_t n = 0;
    for (const auto& p : parents_) n += p.size();
    return n;
}

std::vector<std::pair<std::size_t, std::size_t>> Dag::edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t v = 0; v < size(); ++v) {
        for (std::size_t c : children_[v]) out.emplace_back(v, c);
    }
    return out;
}

std::vector<std::size_t> Dag::topological_order() const {
    std::vector<std::size_t> indegree(size());
    for (std::size_t v = 0; v < size(); ++v) indegree[v] = parents_[v].size();
    std::vector<std::size_t> order;
    std::vector<std::size_t> ready;
    for (std::size_t v = size(); v-- > 0;) {
        if (indegree[v] == 0) ready.push_back(v);
    }
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        order.push_back(v);
        for (auto it = children_[v].rbegin(); it != children_[v].rend(); ++it) {
            if (--indegree[*it] == 0) ready.push_back(*it);
        }
    }
    return order;
}

bool Dag::reaches(std::size_t from, std::size_t to) const {
    std::vector<bool> seen(size(), false);
    std::vector<std::size_t> stack{from};
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        if (seen[v]) continue;
        seen[v] = true;
        for (std::size_t c : children_[v]) stack.push_back(c);
    }
    return false;
}

// --- Pdag -----------------------------------------------------------------

void Pdag::add_undirected(std::size_t a, std::size_t b) {
    if (a >= n_ || b >= n_) throw std::out_of_range("Pdag: unknown node");
    if (a == b) throw std::invalid_argument("Pdag: self-loop");
    mark_[a * n_ + b] = kLine;
    mark_[b * n_ + a] = kLine;
}

void Pdag::orient(std::size_t from, std::size_t to) {
    if (from >= n_ || to >= n_) throw std::out_of_range("Pdag: unknown node");
    if (from == to) throw std::invalid_argument("Pdag: self-loop");
    mark_[from * n_ + to] = kArrow;
    mark_[to * n_ + from] = kTail;
}

void Pdag::remove_edge(std::size_t a, std::size_t b) {
    mark_[a * n_ + b] = 0;
    mark_[b * n_ + a] = 0;
}

std::vector<std::size_t> Pdag::neighbors(std::size_t v) const {
    std::vector<std::size_t> out;
    for (std::size_t u = 0; u < n_; ++u) {
        if (u != v && adjacent(v, u)) out.push_back(u);
    }
    return out;
}

std::size_t Pdag::num_edges() const {
    std::size_t n = 0;
    for (std::size_t a = 0; a < n_; ++a) {
        for (std::size_t b = a + 1; b < n_; ++b) n += adjacent(a, b) ? 1 : 0;
    }
    return n;
}

bool Pdag::directed_path(std::size_t from, std::size_t to) const {
    std::vector<bool> seen(n_, false);
    std::vector<std::size_t> stack{from};
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (v == to) return true;
        if (seen[v]) continue;
        seen[v] = true;
        for (std::size_t u = 0; u < n_; ++u) {
            if (has_directed(v, u) && !seen[u]) stack.push_back(u);
        }
    }
    return false;
}

bool Pdag::has_directed_cycle() const {
    // Kahn's algorithm over the directed part.
    std::vector<std::size_t> indegree(n_, 0);
    for (std::size_t a = 0; a < n_; ++a) {
        for (std::size_t b = 0; b < n_; ++b) indegree[b] += has_directed(a, b) ? 1 : 0;
    }
    std::vector<std::size_t> ready;
    for (std::size_t v = 0; v < n_; ++v) {
        if (indegree[v] == 0) ready.push_back(v);
    }
    std::size_t visited = 0;
    while (!ready.empty()) {
        const std::size_t v = ready.back();
        ready.pop_back();
        ++visited;
        for (std::size_t u = 0; u < n_; ++u) {
            if (has_directed(v, u) && --indegree[u] == 0) ready.push_back(u);
        }
    }
    return visited != n_;
}

// --- Meek rules -----------------------------------------------------------

namespace {

bool rule1(const Pdag& g, std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < g.size(); ++c) {
        if (c != b && g.has_directed(c, a) && !g.adjacent(c, b)) return true;
    }
    return false;
}

bool rule2(const Pdag& g, std::size_t a, std::size_t b) {
    for (std::size_t c = 0; c < g.size(); ++c) {
        if (g.has_directed(a, c) && g.has_directed(c, b)) return true;
    }
    return false;
}

bool rule3(const Pdag& g, std::size_t a, std::size_t b) {
    const std::size_t n = g.size();
    for (std::size_t c = 0; c < n; ++c) {
        if (!g.has_undirected(a, c) || !g.has_directed(c, b)) continue;
        for (std::size_t d = c + 1; d < n; ++d) {
            if (g.has_undirected(a, d) && g.has_directed(d, b) && !g.adjacent(c, d)) return true;
        }
    }
    return false;
}

bool rule4(const Pdag& g, std::size_t a, std::size_t b) {
    const std::size_t n = g.size();
    for (std::size_t c = 0; c < n; ++c) {
        if (c == b || !g.has_undirected(a, c) || g.adjacent(c, b)) continue;
        for (std::size_t d = 0; d < n; ++d) {
            if (d != a && g.has_directed(c, d) && g.has_directed(d, b) && g.adjacent(a, d)) return true;
        }
    }
    return false;
}

}  // namespace

int apply_meek_closure(Pdag& g) {
    const std::size_t n = g.size();
    int oriented = 0;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t a = 0; a < n; ++a) {
            for (std::size_t b = 0; b < n; ++b) {
                if (a == b || !g.has_undirected(a, b)) continue;
                if (rule1(g, a, b) || rule2(g, a, b) || rule3(g, a, b) || rule4(g, a, b)) {
                    if (g.directed_path(b, a)) continue;
                    g.orient(a, b);
                    ++oriented;
                    changed = true;
                }
            }
        }
    }
    return oriented;
}

// --- d-separation ---------------------------------------------------------

bool d_separated(const Dag& dag, std::size_t x, std::size_t y, const std::vector<std::size_t>& z) {
    const std::size_t n = dag.size();
    if (x >= n || y >= n) throw std::out_of_range("d_separated: unknown node");
    if (x == y) throw std::invalid_argument("d_separated: x and y must differ");
    std::vector<bool> in_z(n, false);
    for (std::size_t v : z) {
        if (v >= n) throw std::out_of_range("d_separated: unknown conditioning node");
        if (v == x || v == y) throw std::invalid_argument("d_separated: x and y must not be conditioned on");
        in_z[v] = true;
    }

    // Nodes that are in z or have a descendant in z.
    std::vector<bool> anc_z(n, false);
    std::vector<std::size_t> stack(z.begin(), z.end());
    while (!stack.empty()) {
        const std::size_t v = stack.back();
        stack.pop_back();
        if (anc_z[v]) continue;
        anc_z[v] = true;
        for (std::size_t p : dag.parents(v)) stack.push_back(p);
    }

    // Direction: 0 = arrived from a child (moving up), 1 = arrived from a parent.
    std::vector<bool> visited(2 * n, false);
    std::deque<std::pair<std::size_t, int>> queue{{x, 0}};
    while (!queue.empty()) {
        const auto [v, dir] = queue.front();
        queue.pop_front();
        if (visited[2 * v + dir]) continue;
        visited[2 * v + dir] = true;
        if (v == y && !in_z[v]) return false;
        if (dir == 0) {
            if (in_z[v]) continue;
            for (std::size_t p : dag.parents(v)) queue.emplace_back(p, 0);
            for (std::size_t c : dag.children(v)) queue.emplace_back(c, 1);
        } else {
            if (!in_z[v]) {
                for (std::size_t c : dag.children(v)) queue.emplace_back(c, 1);
            }
            if (anc_z[v]) {
                for (std::size_t p : dag.parents(v)) queue.emplace_back(p, 0);
            }
        }
    }
    return true;
}

// --- CPDAG ----------------------------------------------------------------

Cpdag dag_to_cpdag(const Dag& dag) {
    const std::size_t n = dag.size();
    Pdag g(n);
    for (const auto& [a, b] : dag.edges()) g.add_undirected(a, b);
    for (std::size_t v = 0; v < n; ++v) {
        const auto& pa = dag.parents(v);
        for (std::size_t i = 0; i < pa.size(); ++i) {
            for (std::size_t j = i + 1; j < pa.size(); ++j) {
                if (dag.has_edge(pa[i], pa[j]) || dag.has_edge(pa[j], pa[i])) continue;
                g.orient(pa[i], v);
                g.orient(pa[j], v);
            }
        }
    }
    apply_meek_closure(g);
    return g;
}

std::string to_edge_list(const Pdag& g, const std::vector<std::string>& names) {
    if (names.size() != g.size()) throw std::invalid_argument("to_edge_list: name count does not match graph size");
    std::ostringstream out;
    for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a + 1; b < g.size(); ++b) {
            if (g.has_undirected(a, b)) {
                out << names[a] << " -- " << names[b] << '\n';
            } else if (g.has_directed(a, b)) {
                out << names[a] << " -> " << names[b] << '\n';
            } else if (g.has_directed(b, a)) {
                out << names[b] << " -> " << names[a] << '\n';
            }
        }
    }
    return out.str();
}

}  // namespace causalci
