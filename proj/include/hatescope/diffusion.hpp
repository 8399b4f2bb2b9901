#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "hatescope/error.hpp"
#include "hatescope/graph.hpp"
#include "hatescope/rng.hpp"

namespace hatescope {

/// Sparse row-stochastic matrix in compressed-row form. Columns within a row
/// are sorted, so every row is summed in a fixed order.
struct TransitionMatrix {
    std::size_t n = 0;
    std::vector<std::size_t> row_offsets{0};
    std::vector<std::uint32_t> cols;
    std::vector<double> values;

    std::span<const std::uint32_t> row_cols(std::size_t r) const {
        return {cols.data() + row_offsets[r], cols.data() + row_offsets[r + 1]};
    }
    std::span<const double> row_values(std::size_t r) const {
        return {values.data() + row_offsets[r], values.data() + row_offsets[r + 1]};
    }

    double at(std::size_t r, std::size_t c) const {
        auto cs = row_cols(r);
        auto it = std::lower_bound(cs.begin(), cs.end(), static_cast<std::uint32_t>(c));
        if (it == cs.end() || *it != c) return 0.0;
        return values[row_offsets[r] + static_cast<std::size_t>(it - cs.begin())];
    }
};

enum class MatrixOrientation {
    /// Row u averages u and every account u retweeted.
    retweeter_averages_sources,
    /// Transposed reading: row v averages v and every account that retweeted v.
    transposed,
};

/// Row u puts 1 / (outdeg(u) + 1) on u itself and on each user u retweeted;
/// users who retweeted nobody get the identity row. Edge multiplicity is
/// ignored.
inline TransitionMatrix build_transition_matrix(const RetweetGraph& graph,
                                                MatrixOrientation orientation = MatrixOrientation::retweeter_averages_sources) {
    TransitionMatrix t;
    t.n = graph.node_count();
    t.row_offsets.assign(t.n + 1, 0);
    t.cols.reserve(graph.edge_count() + t.n);
    t.values.reserve(graph.edge_count() + t.n);
    for (RetweetGraph::Index u = 0; u < t.n; ++u) {
        auto nbrs = orientation == MatrixOrientation::retweeter_averages_sources ? graph.out_neighbors(u)
                                                                                  : graph.in_neighbors(u);
        const double w = 1.0 / static_cast<double>(nbrs.size() + 1);
        bool self_done = false;
        for (auto v : nbrs) {
            if (!self_done && u < v) {
                t.cols.push_back(u);
                t.values.push_back(w);
                self_done = true;
            }
            t.cols.push_back(v);
            t.values.push_back(w);
        }
        if (!self_done) {
            t.cols.push_back(u);
            t.values.push_back(w);
        }
        t.row_offsets[u + 1] = t.cols.size();
    }
    return t;
}

/// Per-user belief, indexed like the graph's dense node indices.
struct BeliefVector {
    std::vector<double> values;
    std::size_t step = 0;
};

/// p = 1 for users who used the lexicon, 0 for everyone else; t = 0.
inline BeliefVector seed_beliefs(const RetweetGraph& graph, std::span<const UserId> lexicon_hits) {
    BeliefVector p;
    p.values.assign(graph.node_count(), 0.0);
    for (UserId u : lexicon_hits) {
        auto i = graph.find(u);
        if (!i) throw NotFoundError("lexicon hit " + to_string(u) + " is not a known user");
        p.values[*i] = 1.0;
    }
    return p;
}

/// p(t) = T p(t-1), applied `steps` times from p0. Rows may be split across
/// `threads` workers; each row is summed sequentially in column order, so the
/// result is bit-identical for any thread count.
inline BeliefVector diffuse(const TransitionMatrix& t, const BeliefVector& p0, std::size_t steps = 2,
                            unsigned threads = 1) {
    if (p0.values.size() != t.n) {
        throw DimensionError("belief vector has " + std::to_string(p0.values.size()) + " entries, matrix has " +
                             std::to_string(t.n) + " rows");
    }
    BeliefVector cur = p0;
    std::vector<double> next(t.n);
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(t.n, 1))));

    auto rows = [&](std::size_t begin, std::size_t end) {
        for (std::size_t r = begin; r < end; ++r) {
            double acc = 0.0;
            for (std::size_t k = t.row_offsets[r]; k < t.row_offsets[r + 1]; ++k) {
                acc += t.values[k] * cur.values[t.cols[k]];
            }
            // Rows are convex combinations; trim rounding overshoot above 1.
            next[r] = std::min(acc, 1.0);
        }
    };

    for (std::size_t s = 0; s < steps; ++s) {
        if (threads == 1) {
            rows(0, t.n);
        } else {
            std::vector<std::thread> pool;
            const std::size_t chunk = (t.n + threads - 1) / threads;
            for (unsigned w = 0; w < threads; ++w) {
                const std::size_t b = std::min(t.n, w * chunk);
                const std::size_t e = std::min(t.n, b + chunk);
                pool.emplace_back(rows, b, e);
            }
            for (auto& th : pool) th.join();
        }
        cur.values.swap(next);
        ++cur.step;
    }
    return cur;
}

/// Stratum boundaries: stratum k holds beliefs in [b[k-2], b[k-1]) with the
/// last stratum closed at 1.
using StrataBoundaries = std::array<double, 3>;
inline constexpr StrataBoundaries kDefaultBoundaries{0.25, 0.50, 0.75};

struct StrataAssignment {
    std::vector<std::uint8_t> stratum;  // values 1..4
    StrataBoundaries boundaries = kDefaultBoundaries;
};

inline std::uint8_t stratum_of(double belief, const StrataBoundaries& b = kDefaultBoundaries) {
    if (!(belief >= 0.0 && belief <= 1.0)) {
        throw DataError("belief " + std::to_string(belief) + " outside [0, 1]");
    }
    std::uint8_t s = 1;
    for (double edge : b) {
        if (belief >= edge) ++s;
    }
    return s;
}

inline StrataAssignment stratify(const BeliefVector& p, const StrataBoundaries& boundaries = kDefaultBoundaries) {
    if (!(0.0 < boundaries[0] && boundaries[0] < boundaries[1] && boundaries[1] < boundaries[2] &&
          boundaries[2] <= 1.0)) {
        throw ConfigError("strata boundaries must be strictly increasing inside (0, 1]");
    }
    StrataAssignment a;
    a.boundaries = boundaries;
    a.stratum.reserve(p.values.size());
    for (double v : p.values) a.stratum.push_back(stratum_of(v, boundaries));
    return a;
}

inline constexpr std::size_t kDefaultStratumCap = 1500;

/// Per stratum, min(cap, size) users drawn uniformly without replacement.
/// Returns dense node indices sorted ascending.
inline std::vector<RetweetGraph::Index> stratified_sample(const StrataAssignment& a, std::size_t cap,
                                                          std::uint64_t seed) {
    if (cap == 0) throw ConfigError("stratum cap must be at least 1");
    std::vector<RetweetGraph::Index> picked;
    for (std::uint8_t s = 1; s <= 4; ++s) {
        std::vector<RetweetGraph::Index> members;
        for (std::size_t i = 0; i < a.stratum.size(); ++i) {
            if (a.stratum[i] == s) members.push_back(static_cast<RetweetGraph::Index>(i));
        }
        Rng rng = make_rng(derive_seed(seed, "stratum-" + std::to_string(s)));
        const std::size_t take = std::min(cap, members.size());
        for (std::size_t k = 0; k < take; ++k) {
            std::swap(members[k], members[k + uniform_index(rng, members.size() - k)]);
        }
        picked.insert(picked.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
    }
    std::sort(picked.begin(), picked.end());
    return picked;
}

/// CSV "user_id,belief,stratum".
inline void write_beliefs_csv(const RetweetGraph& g, const BeliefVector& p, const StrataAssignment& a,
                              std::ostream& out) {
    out << "user_id,belief,stratum\n";
    for (RetweetGraph::Index i = 0; i < g.node_count(); ++i) {
        out << g.id_of(i).value << ',' << csv::format_double(p.values[i]) << ',' << int(a.stratum[i]) << '\n';
    }
}

}  // namespace hatescope
