#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "hatescope/error.hpp"
#include "hatescope/graph.hpp"
#include "hatescope/rng.hpp"

namespace hatescope {

/// What a crawler may ask of the network: a node's out-edges (the accounts it
/// retweeted) and a uniformly random node. In-edges are not observable.
template <class O>
concept OutEdgeOracle = requires(const O& o, UserId u, Rng& rng) {
    { o.out_edges(u) } -> std::convertible_to<std::vector<UserId>>;
    { o.uniform_random_node(rng) } -> std::convertible_to<UserId>;
};

/// Ground-truth graph hidden behind the two oracle calls. Counts queries;
/// safe for concurrent use by several walkers.
class GraphOracle {
public:
    explicit GraphOracle(RetweetGraph truth) : truth_(std::move(truth)) {
        if (truth_.node_count() == 0) throw ConfigError("oracle graph must have at least one node");
    }

    GraphOracle(const GraphOracle& o) : truth_(o.truth_), queries_(o.queries_.load()) {}

    std::vector<UserId> out_edges(UserId node) const {
        queries_.fetch_add(1, std::memory_order_relaxed);
        std::vector<UserId> out;
        for (auto v : truth_.out_neighbors(truth_.index_of(node))) out.push_back(truth_.id_of(v));
        return out;
    }

    UserId uniform_random_node(Rng& rng) const {
        queries_.fetch_add(1, std::memory_order_relaxed);
        return truth_.id_of(static_cast<RetweetGraph::Index>(uniform_index(rng, truth_.node_count())));
    }

    std::uint64_t query_count() const noexcept { return queries_.load(std::memory_order_relaxed); }

    /// Scoring access only; samplers are constrained to OutEdgeOracle.
    const RetweetGraph& ground_truth() const noexcept { return truth_; }

private:
    RetweetGraph truth_;
    mutable std::atomic<std::uint64_t> queries_{0};
};

static_assert(OutEdgeOracle<GraphOracle>);

// --- synthetic ground truth -------------------------------------------------

enum class SyntheticModel { uniform, preferential, configuration };

struct SyntheticParams {
    /// uniform: independent probability of each ordered pair.
    double edge_probability = 0.0;
    /// preferential: out-edges per arriving node.
    std::size_t out_edges_per_node = 1;
    /// configuration: exact out-degree per node (length n).
    std::vector<std::size_t> out_degrees;
};

inline SyntheticModel parse_synthetic_model(const std::string& name) {
    if (name == "uniform") return SyntheticModel::uniform;
    if (name == "preferential") return SyntheticModel::preferential;
    if (name == "configuration") return SyntheticModel::configuration;
    throw ConfigError("unknown graph model '" + name + "'");
}

/// Deterministic synthetic digraph over ids 0..n-1.
///  - uniform: each ordered pair (u, v), u != v, present with probability p.
///  - preferential: node u links to min(m, u) distinct earlier nodes chosen
///    with probability proportional to in-degree + 1.
///  - configuration: node u links to exactly out_degrees[u] distinct nodes
///    chosen uniformly among the others.
inline GraphOracle generate_synthetic_graph(SyntheticModel model, std::size_t n, const SyntheticParams& params,
                                            std::uint64_t seed) {
    if (n == 0) throw ConfigError("n must be at least 1");
    Rng rng = make_rng(derive_seed(seed, "synthetic-graph"));
    RetweetGraph::Builder b;
    for (std::size_t i = 0; i < n; ++i) b.add_node(UserId{i});

    switch (model) {
        case SyntheticModel::uniform: {
            const double p = params.edge_probability;
            if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("edge probability must lie in [0, 1]");
            for (std::size_t u = 0; u < n; ++u) {
                for (std::size_t v = 0; v < n; ++v) {
                    if (u != v && uniform_unit(rng) < p) b.add_edge(UserId{u}, UserId{v});
                }
            }
            break;
        }
        case SyntheticModel::preferential: {
            const std::size_t m = params.out_edges_per_node;
            if (m == 0 || (n > 1 && m >= n)) throw ConfigError("out_edges_per_node must be in [1, n)");
            // Urn of node tickets: one per node plus one per received edge.
            std::vector<std::size_t> urn;
            for (std::size_t u = 0; u < n; ++u) {
                const std::size_t want = std::min(m, u);
                std::unordered_set<std::size_t> chosen;
                while (chosen.size() < want) {
                    const std::size_t v = urn[uniform_index(rng, urn.size())];
                    chosen.insert(v);
                }
                std::vector<std::size_t> targets(chosen.begin(), chosen.end());
                std::sort(targets.begin(), targets.end());
                for (auto v : targets) {
                    b.add_edge(UserId{u}, UserId{v});
                    urn.push_back(v);
                }
                urn.push_back(u);
            }
            break;
        }
        case SyntheticModel::configuration: {
            const auto& deg = params.out_degrees;
            if (deg.size() != n) throw ConfigError("out_degrees must have one entry per node");
            for (std::size_t u = 0; u < n; ++u) {
                if (deg[u] > n - 1) throw ConfigError("out-degree exceeds n - 1");
                std::unordered_set<std::size_t> chosen;
                if (deg[u] * 2 > n) {
                    // Dense row: partial shuffle of all candidates.
                    std::vector<std::size_t> cand;
                    for (std::size_t v = 0; v < n; ++v) {
                        if (v != u) cand.push_back(v);
                    }
                    for (std::size_t k = 0; k < deg[u]; ++k) {
                        std::swap(cand[k], cand[k + uniform_index(rng, cand.size() - k)]);
                        chosen.insert(cand[k]);
                    }
                } else {
                    while (chosen.size() < deg[u]) {
                        const std::size_t v = uniform_index(rng, n);
                        if (v != u) chosen.insert(v);
                    }
                }
                std::vector<std::size_t> targets(chosen.begin(), chosen.end());
                std::sort(targets.begin(), targets.end());
                for (auto v : targets) b.add_edge(UserId{u}, UserId{v});
            }
            break;
        }
    }
    return GraphOracle(std::move(b).build());
}

// --- the walk ---------------------------------------------------------------

struct WalkVisit {
    UserId node;
    /// Degree of the node in the discovered undirected graph at visit time.
    std::size_t degree_at_visit = 0;
    /// Out-degree observed from the node's out_edges fetch.
    std::size_t out_degree = 0;
    bool was_jump = false;
};

struct WalkTrace {
    std::vector<WalkVisit> visits;
    /// Discovered undirected edges as (min, max) pairs in discovery order.
    std::vector<std::pair<UserId, UserId>> discovered_edges;
    double jump_weight = 0.0;
    std::size_t budget = 0;
};

/// Random walk over the undirected graph discovered from out-edges, with
/// uniform jumps of weight w. At each visit the node's out-edges are fetched
/// once and merged into the discovered graph; the next step jumps to a
/// uniformly random node with probability w / (w + d(v)), else moves to a
/// uniform discovered neighbor. The first step is always a jump.
template <OutEdgeOracle Oracle>
WalkTrace durw_sample(const Oracle& oracle, double jump_weight, std::size_t budget, std::uint64_t seed) {
    if (!(jump_weight > 0.0) || !std::isfinite(jump_weight)) throw ConfigError("jump weight must be positive");
    if (budget == 0) throw ConfigError("walk budget must be at least 1 (empty trace)");

    Rng rng = make_rng(derive_seed(seed, "durw"));
    WalkTrace trace;
    trace.jump_weight = jump_weight;
    trace.budget = budget;
    trace.visits.reserve(budget);

    std::unordered_map<UserId, std::vector<UserId>> adj;
    std::unordered_map<UserId, std::size_t> out_degree;
    auto edge_key = [](UserId a, UserId b) { return std::make_pair(std::min(a, b), std::max(a, b)); };
    struct PairHash {
        std::size_t operator()(const std::pair<UserId, UserId>& p) const noexcept {
            return splitmix64(p.first.value) ^ (p.second.value * 0x9e3779b97f4a7c15ULL);
        }
    };
    std::unordered_set<std::pair<UserId, UserId>, PairHash> seen;

    UserId current = oracle.uniform_random_node(rng);
    bool jumped = true;
    for (std::size_t step = 0; step < budget; ++step) {
        auto fetched = out_degree.find(current);
        if (fetched == out_degree.end()) {
            const std::vector<UserId> outs = oracle.out_edges(current);
            fetched = out_degree.emplace(current, outs.size()).first;
            for (UserId v : outs) {
                if (v == current) continue;
                auto key = edge_key(current, v);
                if (seen.insert(key).second) {
                    adj[current].push_back(v);
                    adj[v].push_back(current);
                    trace.discovered_edges.push_back(key);
                }
            }
        }
        const auto& nbrs = adj[current];
        const std::size_t d = nbrs.size();
        trace.visits.push_back({current, d, fetched->second, jumped});

        const double p_jump = jump_weight / (jump_weight + static_cast<double>(d));
        if (d == 0 || uniform_unit(rng) < p_jump) {
            current = oracle.uniform_random_node(rng);
            jumped = true;
        } else {
            current = nbrs[uniform_index(rng, d)];
            jumped = false;
        }
    }
    return trace;
}

/// Runs independent walkers (one per seed) on parallel threads; results are in
/// seed order regardless of scheduling.
template <OutEdgeOracle Oracle>
std::vector<WalkTrace> durw_sample_parallel(const Oracle& oracle, double jump_weight, std::size_t budget,
                                            std::span<const std::uint64_t> seeds) {
    std::vector<WalkTrace> traces(seeds.size());
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        workers.emplace_back([&, i] {
            try {
                traces[i] = durw_sample(oracle, jump_weight, budget, seeds[i]);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return traces;
}

/// Concatenates traces of walkers that share a jump weight.
inline WalkTrace merge_traces(std::span<const WalkTrace> traces) {
    WalkTrace merged;
    for (const auto& t : traces) {
        if (merged.visits.empty() && merged.budget == 0) {
            merged.jump_weight = t.jump_weight;
        } else if (t.jump_weight != merged.jump_weight) {
            throw ConfigError("cannot merge traces with different jump weights");
        }
        merged.budget += t.budget;
        merged.visits.insert(merged.visits.end(), t.visits.begin(), t.visits.end());
        merged.discovered_edges.insert(merged.discovered_edges.end(), t.discovered_edges.begin(),
                                       t.discovered_edges.end());
    }
    return merged;
}

// --- estimation -------------------------------------------------------------

struct DegreeDistribution {
    std::map<std::size_t, double> mass;
    double total_mass = 0.0;
};

/// Importance-reweighted out-degree distribution: each visit carries weight
/// 1 / (d_i + w), undoing the walk's stationary bias toward d(v) + w.
inline DegreeDistribution estimate_outdegree_distribution(const WalkTrace& trace) {
    if (trace.visits.empty()) throw DataError("cannot estimate from an empty trace");
    DegreeDistribution est;
    double total = 0.0;
    for (const auto& v : trace.visits) {
        const double weight = 1.0 / (static_cast<double>(v.degree_at_visit) + trace.jump_weight);
        est.mass[v.out_degree] += weight;
        total += weight;
    }
    est.total_mass = 0.0;
    for (auto& [k, m] : est.mass) {
        m /= total;
        est.total_mass += m;
    }
    return est;
}

inline DegreeDistribution true_outdegree_distribution(const RetweetGraph& g) {
    DegreeDistribution d;
    for (RetweetGraph::Index i = 0; i < g.node_count(); ++i) d.mass[g.out_degree(i)] += 1.0;
    for (auto& [k, m] : d.mass) {
        m /= static_cast<double>(g.node_count());
        d.total_mass += m;
    }
    return d;
}

inline double l1_distance(const DegreeDistribution& a, const DegreeDistribution& b) {
    double sum = 0.0;
    auto ia = a.mass.begin();
    auto ib = b.mass.begin();
    while (ia != a.mass.end() || ib != b.mass.end()) {
        if (ib == b.mass.end() || (ia != a.mass.end() && ia->first < ib->first)) {
            sum += std::abs(ia->second);
            ++ia;
        } else if (ia == a.mass.end() || ib->first < ia->first) {
            sum += std::abs(ib->second);
            ++ib;
        } else {
            sum += std::abs(ia->second - ib->second);
            ++ia;
            ++ib;
        }
    }
    return sum;
}

/// One JSON object per visit: step, node, degree_at_visit, was_jump, out_degree.
inline void write_trace_jsonl(const WalkTrace& trace, std::ostream& out) {
    for (std::size_t i = 0; i < trace.visits.size(); ++i) {
        const auto& v = trace.visits[i];
        nlohmann::ordered_json j;
        j["step"] = i;
        j["node"] = v.node.value;
        j["degree_at_visit"] = v.degree_at_visit;
        j["was_jump"] = v.was_jump;
        j["out_degree"] = v.out_degree;
        out << j.dump() << '\n';
    }
}

}  // namespace hatescope
