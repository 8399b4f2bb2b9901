#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hatescope/csv.hpp"
#include "hatescope/error.hpp"
#include "hatescope/graph.hpp"

namespace hatescope {

namespace detail {

// Brandes single-source accumulation for sources [begin, end) into `acc`.
inline void brandes_range(const RetweetGraph& g, std::size_t begin, std::size_t end, std::vector<double>& acc) {
    const std::size_t n = g.node_count();
    std::vector<std::int64_t> dist(n);
    std::vector<double> sigma(n), delta(n);
    std::vector<RetweetGraph::Index> order;
    std::vector<RetweetGraph::Index> queue;
    order.reserve(n);
    queue.reserve(n);
    for (std::size_t s = begin; s < end; ++s) {
        std::fill(dist.begin(), dist.end(), -1);
        std::fill(sigma.begin(), sigma.end(), 0.0);
        std::fill(delta.begin(), delta.end(), 0.0);
        order.clear();
        queue.clear();
        dist[s] = 0;
        sigma[s] = 1.0;
        queue.push_back(static_cast<RetweetGraph::Index>(s));
        for (std::size_t head = 0; head < queue.size(); ++head) {
            const auto v = queue[head];
            order.push_back(v);
            for (auto w : g.out_neighbors(v)) {
                if (dist[w] < 0) {
                    dist[w] = dist[v] + 1;
                    queue.push_back(w);
                }
                if (dist[w] == dist[v] + 1) sigma[w] += sigma[v];
            }
        }
        // Predecessors of w are its in-neighbors one level closer to s.
        for (auto it = order.rbegin(); it != order.rend(); ++it) {
            const auto w = *it;
            for (auto v : g.in_neighbors(w)) {
                if (dist[v] >= 0 && dist[v] + 1 == dist[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if (w != s) acc[w] += delta[w];
        }
    }
}

}  // namespace detail

/// Exact directed, unweighted betweenness (Brandes), endpoints excluded and
/// unnormalized. Sources are split into fixed chunks whose partial sums are
/// reduced in chunk order, so the result does not depend on `threads`.
inline std::vector<double> betweenness(const RetweetGraph& g, unsigned threads = 1) {
    const std::size_t n = g.node_count();
    constexpr std::size_t kChunks = 64;
    const std::size_t chunk = std::max<std::size_t>(1, (n + kChunks - 1) / kChunks);
    const std::size_t nchunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
    std::vector<std::vector<double>> partial(nchunks, std::vector<double>(n, 0.0));
    auto work = [&](std::size_t first_chunk, std::size_t stride) {
        for (std::size_t c = first_chunk; c < nchunks; c += stride) {
            detail::brandes_range(g, c * chunk, std::min(n, (c + 1) * chunk), partial[c]);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1) {
        work(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
        for (auto& th : pool) th.join();
    }
    std::vector<double> out(n, 0.0);
    for (const auto& p : partial) {
        for (std::size_t i = 0; i < n; ++i) out[i] += p[i];
    }
    return out;
}

struct EigenvectorResult {
    std::vector<double> scores;
    bool converged = false;
    std::size_t iterations = 0;
    /// Max-abs change between the last two iterates.
    double residual = 0.0;
    /// Nodes whose score is exactly zero (e.g. unreachable components).
    std::size_t zero_score_nodes = 0;
};

/// Eigenvector centrality where a node's score sums the scores of the nodes
/// pointing to it. Power iteration from the uniform unit vector on A^T + I
/// (same principal eigenvector as A^T, but periodic graphs still converge),
/// normalized to unit Euclidean norm each step. Stops when the max-abs change
/// drops below `tol`; otherwise returns the last iterate with converged=false.
/// `start` overrides the uniform start vector (nonnegative, not all zero).
inline EigenvectorResult eigenvector_centrality(const RetweetGraph& g, double tol = 1e-8,
                                                std::size_t max_iter = 1000, std::span<const double> start = {}) {
    EigenvectorResult r;
    const std::size_t n = g.node_count();
    if (n == 0) {
        r.converged = true;
        return r;
    }
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n))), y(n);
    if (!start.empty()) {
        if (start.size() != n) throw DimensionError("start vector length does not match node count");
        double norm = 0.0;
        for (double v : start) {
            if (v < 0.0) throw ConfigError("start vector must be nonnegative");
            norm += v * v;
        }
        if (norm == 0.0) throw ConfigError("start vector must not be all zero");
        for (std::size_t i = 0; i < n; ++i) x[i] = start[i] / std::sqrt(norm);
    }
    for (std::size_t it = 1; it <= max_iter; ++it) {
        for (RetweetGraph::Index v = 0; v < n; ++v) {
            double acc = x[v];
            for (auto u : g.in_neighbors(v)) acc += x[u];
            y[v] = acc;
        }
        double norm = 0.0;
        for (double v : y) norm += v * v;
        norm = std::sqrt(norm);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] /= norm;
            diff = std::max(diff, std::abs(y[i] - x[i]));
        }
        x.swap(y);
        r.iterations = it;
        r.residual = diff;
        if (diff < tol) {
            r.converged = true;
            break;
        }
    }
    r.scores = std::move(x);
    r.zero_score_nodes = static_cast<std::size_t>(std::count(r.scores.begin(), r.scores.end(), 0.0));
    return r;
}

struct CentralityScores {
    std::vector<double> betweenness;
    std::vector<double> eigenvector;
    std::vector<std::size_t> in_degree;
    std::vector<std::size_t> out_degree;
    EigenvectorResult eigen_info;
};

/// All centralities of the influence-direction graph (the retweet graph with
/// edges reversed) unless `influence_direction` is false.
inline CentralityScores compute_centrality(const RetweetGraph& retweets, bool influence_direction = true,
                                           unsigned threads = 1) {
    const RetweetGraph g = influence_direction ? invert(retweets) : retweets;
    CentralityScores s;
    s.betweenness = betweenness(g, threads);
    s.eigen_info = eigenvector_centrality(g);
    s.eigenvector = s.eigen_info.scores;
    for (RetweetGraph::Index i = 0; i < g.node_count(); ++i) {
        s.in_degree.push_back(g.in_degree(i));
        s.out_degree.push_back(g.out_degree(i));
    }
    return s;
}

/// CSV "user_id,betweenness,eigenvector,in_degree,out_degree".
inline void write_centrality_csv(const RetweetGraph& g, const CentralityScores& s, std::ostream& out) {
    out << "user_id,betweenness,eigenvector,in_degree,out_degree\n";
    for (RetweetGraph::Index i = 0; i < g.node_count(); ++i) {
        out << g.id_of(i).value << ',' << csv::format_double(s.betweenness[i]) << ','
            << csv::format_double(s.eigenvector[i]) << ',' << s.in_degree[i] << ',' << s.out_degree[i] << '\n';
    }
}

/// Exact median (midpoint of the two middle values for even counts).
inline std::optional<double> median(std::vector<double> v) {
    if (v.empty()) return std::nullopt;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2) return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return lo + (hi - lo) / 2.0;
}

inline std::optional<double> mean(std::span<const double> v) {
    if (v.empty()) return std::nullopt;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

struct GroupSummaryRow {
    std::string group;
    std::string metric;
    std::size_t n = 0;
    std::optional<double> median;
    std::optional<double> mean;
    /// Set when the group has no member with a score.
    bool empty = false;
};

/// Median and mean of each metric within each group. Metrics map a name to
/// per-node values aligned with `g`'s dense indices.
inline std::vector<GroupSummaryRow> group_centrality_summary(
    const RetweetGraph& g, const std::map<std::string, std::vector<double>>& metrics,
    const std::map<std::string, std::vector<UserId>>& groups) {
    std::vector<GroupSummaryRow> rows;
    for (const auto& [group, members] : groups) {
        for (const auto& [metric, values] : metrics) {
            std::vector<double> xs;
            for (UserId u : members) {
                if (auto i = g.find(u)) xs.push_back(values.at(*i));
            }
            GroupSummaryRow row{group, metric, xs.size(), median(xs), mean(xs), xs.empty()};
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace hatescope
