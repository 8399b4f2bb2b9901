#pragma once

#include <span>
#include <unordered_set>
#include <utility>

#include "hatescope/graph.hpp"
#include "hatescope/records.hpp"

namespace hatescope {

/// Builds the retweet-induced graph. Every profile becomes a node (profile
/// order first), then retweet edges are added in tweet order. Retweeted
/// accounts without a profile are materialized as profile-less nodes.
/// Bad rows are counted in the report and skipped.
inline std::pair<RetweetGraph, IngestReport> build_retweet_graph(std::span<const TweetRecord> tweets,
                                                                 std::span<const UserRecord> users) {
    IngestReport report;
    RetweetGraph::Builder b;
    std::unordered_set<UserId> known;
    for (const auto& u : users) {
        ++report.rows_read;
        if (!known.insert(u.id).second) {
            report.reject("duplicate_user");
            continue;
        }
        b.add_node(u.id, true);
    }
    for (const auto& t : tweets) {
        ++report.rows_read;
        if (!known.contains(t.user_id)) {
            report.reject("unknown_author");
            continue;
        }
        if (!t.retweeted_user_id) continue;
        const UserId target = *t.retweeted_user_id;
        if (target == t.user_id) {
            report.reject("self_retweet");
            continue;
        }
        if (!b.contains(target)) {
            b.add_node(target, false);
            ++report.materialized_nodes;
        }
        b.add_edge(t.user_id, target);
    }
    return {std::move(b).build(), report};
}

}  // namespace hatescope
