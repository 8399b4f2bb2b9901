// Test-only reference computations. Each one takes a deliberately different
// route from the library code it checks (dense algebra, exhaustive
// enumeration, direct counting).
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <set>
#include <utility>
#include <vector>

#include "hatescope/graph.hpp"
#include "hatescope/rng.hpp"

namespace hatescope::testing {

using EdgeList = std::vector<std::pair<std::size_t, std::size_t>>;

/// Random simple digraph on nodes 0..n-1 (ids equal indices), edge probability p.
inline RetweetGraph random_digraph(std::size_t n, double p, std::uint64_t seed, EdgeList* edges_out = nullptr) {
    Rng rng(seed);
    RetweetGraph::Builder b;
    for (std::size_t i = 0; i < n; ++i) b.add_node(UserId{i});
    EdgeList edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u != v && uniform_unit(rng) < p) {
                b.add_edge(UserId{u}, UserId{v});
                edges.emplace_back(u, v);
            }
        }
    }
    if (edges_out) *edges_out = edges;
    return std::move(b).build();
}

/// Strongly connected and aperiodic: a Hamiltonian cycle 0->1->...->0, a
/// chord 0->2 (cycle lengths n and n-1 are coprime), plus random edges.
inline RetweetGraph strongly_connected_digraph(std::size_t n, double p, std::uint64_t seed) {
    Rng rng(seed);
    RetweetGraph::Builder b;
    for (std::size_t i = 0; i < n; ++i) b.add_node(UserId{i});
    for (std::size_t i = 0; i < n; ++i) b.add_edge(UserId{i}, UserId{(i + 1) % n});
    if (n > 2) b.add_edge(UserId{0}, UserId{2});
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u != v && uniform_unit(rng) < p) b.add_edge(UserId{u}, UserId{v});
        }
    }
    return std::move(b).build();
}

/// Dense adjacency: A(u, v) = 1 iff u -> v.
inline Eigen::MatrixXd dense_adjacency(const RetweetGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (auto [u, v, m] : g.edges()) a(u, v) = 1.0;
    return a;
}

/// Dense transition matrix built straight from the definition: add self
/// loops to A, then normalize rows.
inline Eigen::MatrixXd dense_transition(const RetweetGraph& g) {
    Eigen::MatrixXd t = dense_adjacency(g) + Eigen::MatrixXd::Identity(g.node_count(), g.node_count());
    for (Eigen::Index r = 0; r < t.rows(); ++r) t.row(r) /= t.row(r).sum();
    return t;
}

/// All shortest paths between every ordered pair, enumerated explicitly;
/// betweenness of v = sum over pairs (s, t), v not in {s, t}, of the share of
/// s-t shortest paths passing through v.
inline std::vector<double> brute_force_betweenness(const RetweetGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<double> bc(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) {
        // BFS distances from s.
        std::vector<int> dist(n, -1);
        std::vector<std::size_t> q{s};
        dist[s] = 0;
        for (std::size_t h = 0; h < q.size(); ++h) {
            for (auto w : g.out_neighbors(static_cast<RetweetGraph::Index>(q[h]))) {
                if (dist[w] < 0) {
                    dist[w] = dist[q[h]] + 1;
                    q.push_back(w);
                }
            }
        }
        for (std::size_t t = 0; t < n; ++t) {
            if (t == s || dist[t] < 0) continue;
            std::vector<std::vector<std::size_t>> paths;
            std::vector<std::size_t> cur{s};
            std::function<void(std::size_t)> dfs = [&](std::size_t v) {
                if (v == t) {
                    paths.push_back(cur);
                    return;
                }
                for (auto w : g.out_neighbors(static_cast<RetweetGraph::Index>(v))) {
                    if (dist[w] == dist[v] + 1 && dist[w] <= dist[t]) {
                        cur.push_back(w);
                        dfs(w);
                        cur.pop_back();
                    }
                }
            };
            dfs(s);
            for (const auto& p : paths) {
                for (std::size_t k = 1; k + 1 < p.size(); ++k) bc[p[k]] += 1.0 / static_cast<double>(paths.size());
            }
        }
    }
    return bc;
}

/// Mann-Whitney U of `a` by direct pair counting (ties count one half).
inline double pairwise_u(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0.0;
    for (double x : a) {
        for (double y : b) u += x > y ? 1.0 : (x == y ? 0.5 : 0.0);
    }
    return u;
}

/// Two-sided exact p-value: share of all relabelings of the pooled sample
/// whose U is at least as far from na*nb/2 as the observed one.
inline double permutation_p_value(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> pooled = a;
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::size_t n = pooled.size(), na = a.size();
    const double mu = static_cast<double>(a.size() * b.size()) / 2.0;
    const double observed = std::abs(pairwise_u(a, b) - mu);
    std::uint64_t total = 0, extreme = 0;
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != na) continue;
        std::vector<double> x, y;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? x : y).push_back(pooled[i]);
        ++total;
        if (std::abs(pairwise_u(x, y) - mu) >= observed - 1e-12) ++extreme;
    }
    return static_cast<double>(extreme) / static_cast<double>(total);
}

/// Depth-1 BFS frontier of a seed set, minus the seeds, by scanning edges.
inline std::set<UserId> bfs_depth1(const RetweetGraph& g, const std::set<UserId>& seeds) {
    std::set<UserId> out;
    for (auto [u, v, m] : g.edges()) {
        if (seeds.contains(g.id_of(u)) && !seeds.contains(g.id_of(v))) out.insert(g.id_of(v));
    }
    return out;
}

}  // namespace hatescope::testing
