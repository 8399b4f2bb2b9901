#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <optional>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hatescope/csv.hpp"
#include "hatescope/error.hpp"
#include "hatescope/types.hpp"

namespace hatescope {

enum class Direction { in, out };

/// Directed sparse graph. An edge u -> v means "u retweeted v". Node ids are
/// dense-remapped to [0, n) in registration order; adjacency is stored in
/// compressed rows for both directions, sorted by dense index. Immutable once
/// built, so it may be shared across reader threads.
class RetweetGraph {
public:
    using Index = std::uint32_t;

    class Builder;

    RetweetGraph() : out_offsets_{0}, in_offsets_{0} {}

    std::size_t node_count() const noexcept { return ids_.size(); }
    std::size_t edge_count() const noexcept { return out_targets_.size(); }

    UserId id_of(Index i) const { return ids_.at(i); }
    std::span<const UserId> ids() const noexcept { return ids_; }

    std::optional<Index> find(UserId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    Index index_of(UserId id) const {
        auto it = index_.find(id);
        if (it == index_.end()) throw NotFoundError("unknown node " + to_string(id));
        return it->second;
    }

    bool contains(UserId id) const { return index_.contains(id); }

    /// False for nodes materialized only because someone retweeted them.
    bool has_profile(Index i) const { return has_profile_.at(i) != 0; }

    std::span<const Index> out_neighbors(Index i) const {
        return {out_targets_.data() + out_offsets_[i], out_targets_.data() + out_offsets_[i + 1]};
    }
    std::span<const std::uint32_t> out_multiplicities(Index i) const {
        return {out_mult_.data() + out_offsets_[i], out_mult_.data() + out_offsets_[i + 1]};
    }
    std::span<const Index> in_neighbors(Index i) const {
        return {in_sources_.data() + in_offsets_[i], in_sources_.data() + in_offsets_[i + 1]};
    }

    std::size_t out_degree(Index i) const { return out_offsets_[i + 1] - out_offsets_[i]; }
    std::size_t in_degree(Index i) const { return in_offsets_[i + 1] - in_offsets_[i]; }

    std::size_t degree(UserId node, Direction dir) const {
        const Index i = index_of(node);
        return dir == Direction::out ? out_degree(i) : in_degree(i);
    }

    bool has_edge(Index u, Index v) const {
        auto row = out_neighbors(u);
        return std::binary_search(row.begin(), row.end(), v);
    }

    /// Edge list as (src, dst, multiplicity) in dense indices, row-major.
    std::vector<std::tuple<Index, Index, std::uint32_t>> edges() const {
        std::vector<std::tuple<Index, Index, std::uint32_t>> out;
        out.reserve(edge_count());
        for (Index u = 0; u < node_count(); ++u) {
            for (std::size_t k = out_offsets_[u]; k < out_offsets_[u + 1]; ++k) {
                out.emplace_back(u, out_targets_[k], out_mult_[k]);
            }
        }
        return out;
    }

    friend bool operator==(const RetweetGraph& a, const RetweetGraph& b) {
        return a.ids_ == b.ids_ && a.has_profile_ == b.has_profile_ && a.out_offsets_ == b.out_offsets_ &&
               a.out_targets_ == b.out_targets_ && a.out_mult_ == b.out_mult_;
    }

    friend RetweetGraph invert(const RetweetGraph& g);

private:
    void build_in_index() {
        const std::size_t n = node_count();
        in_offsets_.assign(n + 1, 0);
        for (Index t : out_targets_) ++in_offsets_[t + 1];
        for (std::size_t i = 0; i < n; ++i) in_offsets_[i + 1] += in_offsets_[i];
        in_sources_.resize(out_targets_.size());
        in_mult_.resize(out_targets_.size());
        std::vector<std::size_t> cursor(in_offsets_.begin(), in_offsets_.end() - 1);
        // Sources are visited in increasing order, so each in-row comes out sorted.
        for (Index u = 0; u < n; ++u) {
            for (std::size_t k = out_offsets_[u]; k < out_offsets_[u + 1]; ++k) {
                const std::size_t slot = cursor[out_targets_[k]]++;
                in_sources_[slot] = u;
                in_mult_[slot] = out_mult_[k];
            }
        }
    }

    std::vector<UserId> ids_;
    std::vector<char> has_profile_;
    std::unordered_map<UserId, Index> index_;
    std::vector<std::size_t> out_offsets_;
    std::vector<Index> out_targets_;
    std::vector<std::uint32_t> out_mult_;
    std::vector<std::size_t> in_offsets_;
    std::vector<Index> in_sources_;
    std::vector<std::uint32_t> in_mult_;
};

/// Single-writer construction. Duplicate (u, v) pairs collapse into one edge
/// whose multiplicity counts the repeats; self-edges are refused.
class RetweetGraph::Builder {
public:
    /// Registers a node (idempotent); returns its dense index.
    Index add_node(UserId id, bool has_profile = true) {
        auto [it, inserted] = index_.try_emplace(id, static_cast<Index>(ids_.size()));
        if (inserted) {
            ids_.push_back(id);
            has_profile_.push_back(has_profile ? 1 : 0);
            rows_.emplace_back();
        } else if (has_profile) {
            has_profile_[it->second] = 1;
        }
        return it->second;
    }

    bool contains(UserId id) const { return index_.contains(id); }

    /// Adds u -> v. Both endpoints must be registered. Returns false for a
    /// self-edge, which is not stored.
    bool add_edge(UserId src, UserId dst, std::uint32_t multiplicity = 1) {
        auto s = index_.find(src);
        auto d = index_.find(dst);
        if (s == index_.end() || d == index_.end()) {
            throw NotFoundError("edge endpoint not registered: " + to_string(src) + " -> " + to_string(dst));
        }
        if (s->second == d->second) return false;
        rows_[s->second][d->second] += multiplicity;
        return true;
    }

    RetweetGraph build() && {
        RetweetGraph g;
        g.ids_ = std::move(ids_);
        g.has_profile_ = std::move(has_profile_);
        g.index_ = std::move(index_);
        const std::size_t n = g.ids_.size();
        g.out_offsets_.assign(n + 1, 0);
        for (std::size_t u = 0; u < n; ++u) {
            std::vector<std::pair<Index, std::uint32_t>> row(rows_[u].begin(), rows_[u].end());
            std::sort(row.begin(), row.end());
            for (auto [v, m] : row) {
                g.out_targets_.push_back(v);
                g.out_mult_.push_back(m);
            }
            g.out_offsets_[u + 1] = g.out_targets_.size();
        }
        g.build_in_index();
        return g;
    }

private:
    std::vector<UserId> ids_;
    std::vector<char> has_profile_;
    std::unordered_map<UserId, Index> index_;
    std::vector<std::unordered_map<Index, std::uint32_t>> rows_;
};

/// Reverses every edge (retweet direction -> influence direction). Node
/// indices and multiplicities are preserved; invert(invert(g)) == g.
inline RetweetGraph invert(const RetweetGraph& g) {
    RetweetGraph r;
    r.ids_ = g.ids_;
    r.has_profile_ = g.has_profile_;
    r.index_ = g.index_;
    r.out_offsets_ = g.in_offsets_;
    r.out_targets_ = g.in_sources_;
    r.out_mult_ = g.in_mult_;
    r.in_offsets_ = g.out_offsets_;
    r.in_sources_ = g.out_targets_;
    r.in_mult_ = g.out_mult_;
    return r;
}

inline std::size_t degree(const RetweetGraph& g, UserId node, Direction dir) { return g.degree(node, dir); }

/// Radius-1 neighborhood: every account the seeds retweeted, minus the seeds.
/// Result is sorted by user id.
inline std::vector<UserId> neighborhood(const RetweetGraph& g, std::span<const UserId> seeds) {
    std::vector<char> is_seed(g.node_count(), 0);
    std::vector<RetweetGraph::Index> seed_idx;
    for (UserId s : seeds) {
        const auto i = g.index_of(s);
        is_seed[i] = 1;
        seed_idx.push_back(i);
    }
    std::vector<char> hit(g.node_count(), 0);
    std::vector<UserId> out;
    for (auto i : seed_idx) {
        for (auto v : g.out_neighbors(i)) {
            if (!is_seed[v] && !hit[v]) {
                hit[v] = 1;
                out.push_back(g.id_of(v));
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

// --- snapshot files --------------------------------------------------------

/// Writes "src,dst,multiplicity" with external ids.
inline void write_edge_csv(const RetweetGraph& g, std::ostream& out) {
    out << "src,dst,multiplicity\n";
    for (auto [u, v, m] : g.edges()) out << g.id_of(u).value << ',' << g.id_of(v).value << ',' << m << '\n';
}

/// Writes "index,user_id,has_profile" (the dense id map).
inline void write_id_map_csv(const RetweetGraph& g, std::ostream& out) {
    out << "index,user_id,has_profile\n";
    for (RetweetGraph::Index i = 0; i < g.node_count(); ++i) {
        out << i << ',' << g.id_of(i).value << ',' << (g.has_profile(i) ? 1 : 0) << '\n';
    }
}

inline RetweetGraph read_snapshot(std::istream& edges, std::istream& id_map) {
    const auto ids = csv::parse(id_map);
    const auto ci = ids.column("index");
    const auto cu = ids.column("user_id");
    const auto cp = ids.column("has_profile");
    std::vector<std::pair<std::uint64_t, std::pair<UserId, bool>>> nodes;
    for (const auto& row : ids.rows) {
        nodes.push_back({parse_user_id(row[ci]).value, {parse_user_id(row[cu]), row[cp] == "1"}});
    }
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    RetweetGraph::Builder b;
    for (std::size_t k = 0; k < nodes.size(); ++k) {
        if (nodes[k].first != k) throw DataError("id map indices are not dense");
        b.add_node(nodes[k].second.first, nodes[k].second.second);
    }
    const auto e = csv::parse(edges);
    const auto cs = e.column("src");
    const auto cd = e.column("dst");
    const auto cm = e.column("multiplicity");
    for (const auto& row : e.rows) {
        const auto m = parse_user_id(row[cm]).value;
        if (m == 0 || m > UINT32_MAX) throw DataError("invalid multiplicity");
        if (!b.add_edge(parse_user_id(row[cs]), parse_user_id(row[cd]), static_cast<std::uint32_t>(m))) {
            throw DataError("self-edge in snapshot");
        }
    }
    return std::move(b).build();
}

inline void save_snapshot(const RetweetGraph& g, const std::string& edges_path, const std::string& ids_path) {
    std::ofstream e(edges_path), i(ids_path);
    if (!e || !i) throw DataError("cannot write graph snapshot");
    write_edge_csv(g, e);
    write_id_map_csv(g, i);
}

inline RetweetGraph load_snapshot(const std::string& edges_path, const std::string& ids_path) {
    std::ifstream e(edges_path), i(ids_path);
    if (!e) throw DataError("cannot open '" + edges_path + "'");
    if (!i) throw DataError("cannot open '" + ids_path + "'");
    return read_snapshot(e, i);
}

}  // namespace hatescope
