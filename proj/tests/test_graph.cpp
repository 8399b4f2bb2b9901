#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "hatescope/graph.hpp"
#include "hatescope/ingest.hpp"
#include "oracles.hpp"

namespace hatescope {
namespace {

TweetRecord retweet(std::uint64_t id, std::uint64_t by, std::uint64_t of) {
    TweetRecord t;
    t.id = id;
    t.user_id = UserId{by};
    t.created_at = parse_timestamp("2017-01-01T00:00:00Z");
    t.retweeted_user_id = UserId{of};
    return t;
}

UserRecord user(std::uint64_t id) {
    UserRecord u;
    u.id = UserId{id};
    u.created_at = parse_timestamp("2016-01-01T00:00:00Z");
    return u;
}

TEST(BuildRetweetGraph, RepeatRetweetsCollapseWithMultiplicity) {
    std::vector<UserRecord> users{user(1), user(2)};
    std::vector<TweetRecord> tweets{retweet(10, 1, 2), retweet(11, 1, 2)};
    auto [g, report] = build_retweet_graph(tweets, users);
    ASSERT_EQ(g.edge_count(), 1u);
    const auto u1 = g.index_of(UserId{1});
    ASSERT_EQ(g.out_neighbors(u1).size(), 1u);
    EXPECT_EQ(g.id_of(g.out_neighbors(u1)[0]), UserId{2});
    EXPECT_EQ(g.out_multiplicities(u1)[0], 2u);
    EXPECT_EQ(report.rows_rejected, 0u);
}

TEST(BuildRetweetGraph, SelfRetweetIsDroppedAndCounted) {
    std::vector<UserRecord> users{user(1)};
    std::vector<TweetRecord> tweets{retweet(10, 1, 1)};
    auto [g, report] = build_retweet_graph(tweets, users);
    EXPECT_EQ(g.edge_count(), 0u);
    EXPECT_EQ(report.reject_reasons.at("self_retweet"), 1u);
    EXPECT_EQ(report.rows_read, report.rows_accepted() + report.rows_rejected);
}

TEST(BuildRetweetGraph, UnknownRetweetedUserIsMaterializedWithoutProfile) {
    std::vector<UserRecord> users{user(1)};
    std::vector<TweetRecord> tweets{retweet(10, 1, 99)};
    auto [g, report] = build_retweet_graph(tweets, users);
    ASSERT_TRUE(g.contains(UserId{99}));
    EXPECT_FALSE(g.has_profile(g.index_of(UserId{99})));
    EXPECT_TRUE(g.has_profile(g.index_of(UserId{1})));
    EXPECT_EQ(report.materialized_nodes, 1u);
}

TEST(BuildRetweetGraph, UnknownAuthorIsRejectedNotFatal) {
    std::vector<UserRecord> users{user(1), user(2)};
    std::vector<TweetRecord> tweets{retweet(10, 7, 1), retweet(11, 1, 2)};
    auto [g, report] = build_retweet_graph(tweets, users);
    EXPECT_EQ(report.reject_reasons.at("unknown_author"), 1u);
    EXPECT_EQ(g.edge_count(), 1u);
}

TEST(BuildRetweetGraph, SmallFixtureFile) {
    // Hand count: 3 users; retweets 1->2 (twice), 2->3, 3->1 => 3 distinct edges.
    std::ifstream uf(HATESCOPE_TEST_DATA "/small_users.jsonl"), tf(HATESCOPE_TEST_DATA "/small_tweets.jsonl");
    IngestReport report;
    auto users = read_users(uf, report);
    auto tweets = read_tweets(tf, report);
    auto [g, build_report] = build_retweet_graph(tweets, users);
    EXPECT_EQ(g.node_count(), 3u);
    EXPECT_EQ(g.edge_count(), 3u);
    EXPECT_EQ(report.rows_rejected, 0u);
    EXPECT_EQ(users[1].suspended, std::optional<bool>(true));
}

TEST(ReadJsonl, MalformedRowsAreRejectedAndStreamContinues) {
    std::istringstream in(
        "{\"id\": 1, \"created_at\": \"2016-01-01T00:00:00Z\", \"statuses_count\": 1, \"followers_count\": 1, "
        "\"followees_count\": 1, \"favorites_count\": 1}\n"
        "not json at all\n"
        "{\"id\": 2, \"created_at\": \"yesterday\", \"statuses_count\": 1, \"followers_count\": 1, "
        "\"followees_count\": 1, \"favorites_count\": 1}\n"
        "{\"id\": 3, \"created_at\": \"2016-01-01\", \"statuses_count\": -4, \"followers_count\": 1, "
        "\"followees_count\": 1, \"favorites_count\": 1}\n");
    IngestReport report;
    auto users = read_users(in, report);
    EXPECT_EQ(users.size(), 1u);
    EXPECT_EQ(report.rows_read, 4u);
    EXPECT_EQ(report.rows_rejected, 3u);
    EXPECT_EQ(report.reject_reasons.at("malformed_json"), 1u);
    EXPECT_EQ(report.reject_reasons.at("invalid_record"), 2u);
}

TEST(CapTimelines, KeepsNewestTwoHundred) {
    std::vector<TweetRecord> tweets;
    for (std::uint64_t i = 0; i < 250; ++i) {
        TweetRecord t;
        t.id = i;
        t.user_id = UserId{1};
        t.created_at = Timestamp{std::chrono::seconds{1000 + i}};
        tweets.push_back(t);
    }
    IngestReport report;
    auto kept = cap_timelines(tweets, kTimelineCap, &report);
    ASSERT_EQ(kept.size(), 200u);
    EXPECT_EQ(kept.front().id, 50u);
    EXPECT_EQ(report.reject_reasons.at("timeline_cap"), 50u);
}

TEST(Invert, SingleEdgeAndEmptyGraph) {
    RetweetGraph::Builder b;
    b.add_node(UserId{1});
    b.add_node(UserId{2});
    b.add_edge(UserId{1}, UserId{2});
    const auto g = std::move(b).build();
    const auto r = invert(g);
    EXPECT_TRUE(r.has_edge(r.index_of(UserId{2}), r.index_of(UserId{1})));
    EXPECT_FALSE(r.has_edge(r.index_of(UserId{1}), r.index_of(UserId{2})));

    const RetweetGraph empty;
    EXPECT_EQ(invert(empty).node_count(), 0u);
    EXPECT_EQ(invert(empty).edge_count(), 0u);
}

TEST(Invert, RandomGraphsMatchBruteForceReversal) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        testing::EdgeList edges;
        const auto g = testing::random_digraph(20, 0.15, seed, &edges);
        const auto r = invert(g);
        ASSERT_EQ(r.edge_count(), g.edge_count());
        std::set<std::pair<std::size_t, std::size_t>> expected;
        for (auto [u, v] : edges) expected.emplace(v, u);
        std::set<std::pair<std::size_t, std::size_t>> got;
        for (auto [u, v, m] : r.edges()) got.emplace(r.id_of(u).value, r.id_of(v).value);
        EXPECT_EQ(got, expected);
        EXPECT_TRUE(invert(r) == g);
    }
}

TEST(Degree, StarAndIsolatedNode) {
    RetweetGraph::Builder b;
    b.add_node(UserId{0});
    for (std::uint64_t i = 1; i <= 5; ++i) {
        b.add_node(UserId{i});
        b.add_edge(UserId{i}, UserId{0});
    }
    b.add_node(UserId{42});
    const auto g = std::move(b).build();
    EXPECT_EQ(degree(g, UserId{0}, Direction::in), 5u);
    EXPECT_EQ(degree(g, UserId{0}, Direction::out), 0u);
    EXPECT_EQ(degree(g, UserId{42}, Direction::in), 0u);
    EXPECT_EQ(degree(g, UserId{42}, Direction::out), 0u);
    EXPECT_THROW(degree(g, UserId{7}, Direction::in), NotFoundError);
}

TEST(Degree, MatchesAdjacencyScan) {
    testing::EdgeList edges;
    const auto g = testing::random_digraph(40, 0.1, 5, &edges);
    std::vector<std::size_t> in(40, 0), out(40, 0);
    for (auto [u, v] : edges) {
        ++out[u];
        ++in[v];
    }
    for (std::uint64_t i = 0; i < 40; ++i) {
        EXPECT_EQ(degree(g, UserId{i}, Direction::in), in[i]);
        EXPECT_EQ(degree(g, UserId{i}, Direction::out), out[i]);
    }
}

TEST(Neighborhood, OutNeighborsMinusSeeds) {
    RetweetGraph::Builder b;
    for (std::uint64_t i = 1; i <= 4; ++i) b.add_node(UserId{i});
    b.add_edge(UserId{1}, UserId{2});
    b.add_edge(UserId{1}, UserId{3});
    b.add_edge(UserId{2}, UserId{4});
    const auto g = std::move(b).build();
    const std::vector<UserId> s1{UserId{1}};
    EXPECT_EQ(neighborhood(g, s1), (std::vector<UserId>{UserId{2}, UserId{3}}));
    const std::vector<UserId> s12{UserId{1}, UserId{2}};
    EXPECT_EQ(neighborhood(g, s12), (std::vector<UserId>{UserId{3}, UserId{4}}));
}

TEST(Neighborhood, MatchesBfsOracleAndExcludesSeeds) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = testing::random_digraph(50, 0.06, 100 + seed);
        Rng rng(seed);
        std::set<UserId> seeds;
        while (seeds.size() < 5) seeds.insert(UserId{uniform_index(rng, 50)});
        const std::vector<UserId> sv(seeds.begin(), seeds.end());
        const auto got = neighborhood(g, sv);
        const auto want = testing::bfs_depth1(g, seeds);
        EXPECT_EQ(std::set<UserId>(got.begin(), got.end()), want);
        for (UserId u : got) EXPECT_FALSE(seeds.contains(u));
    }
}

TEST(Snapshot, RebuildFromSerializedOutputIsIdentical) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        RetweetGraph::Builder b;
        Rng rng(seed);
        for (std::uint64_t i = 0; i < 30; ++i) b.add_node(UserId{1000 + (i * 7919) % 30}, i % 4 != 0);
        for (int k = 0; k < 90; ++k) {
            b.add_edge(UserId{1000 + uniform_index(rng, 30)}, UserId{1000 + uniform_index(rng, 30)},
                       static_cast<std::uint32_t>(1 + uniform_index(rng, 3)));
        }
        const auto g = std::move(b).build();
        std::stringstream edges, ids;
        write_edge_csv(g, edges);
        write_id_map_csv(g, ids);
        const auto back = read_snapshot(edges, ids);
        EXPECT_TRUE(back == g);
    }
}

}  // namespace
}  // namespace hatescope
