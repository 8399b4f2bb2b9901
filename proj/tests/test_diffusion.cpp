#include <gtest/gtest.h>

#include <numeric>
#include <sstream>

#include "hatescope/diffusion.hpp"
#include "oracles.hpp"

namespace hatescope {
namespace {

RetweetGraph single_edge() {
    RetweetGraph::Builder b;
    b.add_node(UserId{1});
    b.add_node(UserId{2});
    b.add_edge(UserId{1}, UserId{2});
    return std::move(b).build();
}

Eigen::VectorXd as_eigen(const BeliefVector& p) {
    return Eigen::Map<const Eigen::VectorXd>(p.values.data(), static_cast<Eigen::Index>(p.values.size()));
}

TEST(SeedBeliefs, EmptyAllAndCount) {
    const auto g = testing::random_digraph(10, 0.2, 1);
    EXPECT_EQ(seed_beliefs(g, {}).values, std::vector<double>(10, 0.0));
    const auto all = g.ids();
    EXPECT_EQ(seed_beliefs(g, all).values, std::vector<double>(10, 1.0));
    const std::vector<UserId> hits{UserId{2}, UserId{5}, UserId{7}};
    const auto p = seed_beliefs(g, hits);
    EXPECT_EQ(std::count(p.values.begin(), p.values.end(), 1.0), 3);
    EXPECT_EQ(p.step, 0u);
    const std::vector<UserId> stranger{UserId{99}};
    EXPECT_THROW(seed_beliefs(g, stranger), NotFoundError);
}

TEST(TransitionMatrix, SingleEdgeHandNormalization) {
    const auto g = single_edge();
    const auto t = build_transition_matrix(g);
    const auto u1 = g.index_of(UserId{1}), u2 = g.index_of(UserId{2});
    EXPECT_EQ(t.at(u1, u1), 0.5);
    EXPECT_EQ(t.at(u1, u2), 0.5);
    EXPECT_EQ(t.at(u2, u2), 1.0);
    EXPECT_EQ(t.at(u2, u1), 0.0);
}

TEST(TransitionMatrix, EdgelessGraphIsIdentity) {
    const auto g = testing::random_digraph(6, 0.0, 1);
    const auto t = build_transition_matrix(g);
    for (std::size_t r = 0; r < 6; ++r) {
        for (std::size_t c = 0; c < 6; ++c) EXPECT_EQ(t.at(r, c), r == c ? 1.0 : 0.0);
    }
}

TEST(TransitionMatrix, OutDegreeThreeGivesQuarters) {
    RetweetGraph::Builder b;
    for (std::uint64_t i = 0; i < 4; ++i) b.add_node(UserId{i});
    for (std::uint64_t i = 1; i < 4; ++i) b.add_edge(UserId{0}, UserId{i});
    const auto t = build_transition_matrix(std::move(b).build());
    ASSERT_EQ(t.row_cols(0).size(), 4u);
    for (double v : t.row_values(0)) EXPECT_EQ(v, 0.25);
}

TEST(TransitionMatrix, MatchesDenseConstructionAndIsStochastic) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = testing::random_digraph(30, 0.1, seed);
        const auto t = build_transition_matrix(g);
        const auto dense = testing::dense_transition(g);
        for (std::size_t r = 0; r < 30; ++r) {
            double s = 0.0;
            for (double v : t.row_values(r)) {
                EXPECT_GE(v, 0.0);
                s += v;
            }
            EXPECT_NEAR(s, 1.0, 1e-12);
            EXPECT_GT(t.at(r, r), 0.0);
            for (std::size_t c = 0; c < 30; ++c) EXPECT_DOUBLE_EQ(t.at(r, c), dense(r, c));
            EXPECT_TRUE(std::is_sorted(t.row_cols(r).begin(), t.row_cols(r).end()));
        }
    }
}

TEST(TransitionMatrix, StochasticAfterSnapshotRoundTrip) {
    const auto g = testing::random_digraph(25, 0.15, 3);
    std::stringstream e, i;
    write_edge_csv(g, e);
    write_id_map_csv(g, i);
    const auto back = read_snapshot(e, i);
    const auto a = build_transition_matrix(g), b = build_transition_matrix(back);
    EXPECT_EQ(a.cols, b.cols);
    EXPECT_EQ(a.values, b.values);
    for (std::size_t r = 0; r < b.n; ++r) {
        const auto vs = b.row_values(r);
        EXPECT_NEAR(std::accumulate(vs.begin(), vs.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(TransitionMatrix, TransposedOrientationAveragesRetweeters) {
    const auto g = single_edge();
    const auto t = build_transition_matrix(g, MatrixOrientation::transposed);
    const auto u1 = g.index_of(UserId{1}), u2 = g.index_of(UserId{2});
    EXPECT_EQ(t.at(u1, u1), 1.0);
    EXPECT_EQ(t.at(u2, u2), 0.5);
    EXPECT_EQ(t.at(u2, u1), 0.5);
}

TEST(Diffuse, SingleEdgeOneAndTwoSteps) {
    const auto g = single_edge();
    const auto t = build_transition_matrix(g);
    const std::vector<UserId> hits{UserId{2}};
    const auto p0 = seed_beliefs(g, hits);
    const auto u1 = g.index_of(UserId{1}), u2 = g.index_of(UserId{2});
    const auto p1 = diffuse(t, p0, 1);
    EXPECT_EQ(p1.values[u1], 0.5);
    EXPECT_EQ(p1.values[u2], 1.0);
    const auto p2 = diffuse(t, p0);
    EXPECT_EQ(p2.step, 2u);
    EXPECT_EQ(p2.values[u1], 0.75);
    EXPECT_EQ(p2.values[u2], 1.0);
    const auto dense = testing::dense_transition(g);
    const Eigen::VectorXd want = dense * dense * as_eigen(p0);
    EXPECT_DOUBLE_EQ(p2.values[u1], want(u1));
}

TEST(Diffuse, AllOnesIsFixedPoint) {
    const auto g = testing::random_digraph(40, 0.1, 2);
    const auto t = build_transition_matrix(g);
    BeliefVector ones{std::vector<double>(40, 1.0), 0};
    for (std::size_t steps : {0u, 1u, 2u, 7u}) {
        for (double v : diffuse(t, ones, steps).values) EXPECT_NEAR(v, 1.0, 1e-15);
    }
}

TEST(Diffuse, MatchesDenseSquareOn50Nodes) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = testing::random_digraph(50, 0.08, 40 + seed);
        Rng rng(seed);
        BeliefVector p0;
        for (int i = 0; i < 50; ++i) p0.values.push_back(uniform_unit(rng) < 0.2 ? 1.0 : 0.0);
        const auto p2 = diffuse(build_transition_matrix(g), p0, 2);
        const auto dense = testing::dense_transition(g);
        const Eigen::VectorXd want = dense * (dense * as_eigen(p0));
        for (int i = 0; i < 50; ++i) EXPECT_NEAR(p2.values[i], want(i), 1e-12);
    }
}

TEST(Diffuse, DimensionMismatchThrows) {
    const auto t = build_transition_matrix(single_edge());
    EXPECT_THROW(diffuse(t, BeliefVector{{1.0, 0.0, 0.0}, 0}), DimensionError);
}

TEST(Diffuse, StaysInUnitInterval) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = testing::random_digraph(60, 0.05, seed);
        Rng rng(seed + 99);
        BeliefVector p0;
        for (int i = 0; i < 60; ++i) p0.values.push_back(uniform_unit(rng));
        for (std::size_t steps : {1u, 2u, 5u}) {
            for (double v : diffuse(build_transition_matrix(g), p0, steps).values) {
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, 1.0);
            }
        }
    }
}

TEST(Diffuse, AddingASeedNeverLowersAnyBelief) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto g = testing::random_digraph(40, 0.08, 200 + seed);
        const auto t = build_transition_matrix(g);
        std::vector<UserId> hits{UserId{seed % 40}, UserId{(seed * 7 + 3) % 40}};
        const auto before = seed_beliefs(g, hits);
        hits.push_back(UserId{(seed * 13 + 11) % 40});
        const auto after = seed_beliefs(g, hits);
        for (std::size_t steps : {1u, 2u, 4u}) {
            const auto a = diffuse(t, before, steps), b = diffuse(t, after, steps);
            for (std::size_t i = 0; i < 40; ++i) EXPECT_GE(b.values[i], a.values[i]);
        }
    }
}

TEST(Diffuse, SpreadShrinksOnStronglyConnectedGraph) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto g = testing::strongly_connected_digraph(30, 0.05, seed);
        const auto t = build_transition_matrix(g);
        const std::vector<UserId> hits{UserId{0}, UserId{1}, UserId{2}};
        const auto p0 = seed_beliefs(g, hits);
        auto spread = [&](std::size_t steps) {
            const auto p = diffuse(t, p0, steps).values;
            const auto [lo, hi] = std::minmax_element(p.begin(), p.end());
            return *hi - *lo;
        };
        const double s2 = spread(2), s8 = spread(8), s32 = spread(32);
        EXPECT_GE(s2, s8);
        EXPECT_GT(s8, s32);
        EXPECT_LT(s32, 1.0);
    }
}

TEST(Diffuse, BitIdenticalAcrossThreadCounts) {
    const auto g = testing::random_digraph(300, 0.02, 77);
    const auto t = build_transition_matrix(g);
    Rng rng(5);
    BeliefVector p0;
    for (int i = 0; i < 300; ++i) p0.values.push_back(uniform_unit(rng));
    const auto seq = diffuse(t, p0, 3, 1);
    for (unsigned threads : {2u, 3u, 8u}) EXPECT_EQ(diffuse(t, p0, 3, threads).values, seq.values);
}

TEST(Diffuse, RelabelingNodesPermutesStrata) {
    const std::size_t n = 40;
    testing::EdgeList edges;
    const auto g = testing::random_digraph(n, 0.08, 9, &edges);
    std::vector<std::uint64_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(4);
    std::shuffle(perm.begin(), perm.end(), rng);
    RetweetGraph::Builder b;
    for (std::size_t i = 0; i < n; ++i) b.add_node(UserId{1000 + perm[n - 1 - i]});
    for (auto [u, v] : edges) b.add_edge(UserId{1000 + perm[u]}, UserId{1000 + perm[v]});
    const auto h = std::move(b).build();

    const std::vector<UserId> hits_g{UserId{3}, UserId{17}, UserId{29}};
    std::vector<UserId> hits_h;
    for (UserId u : hits_g) hits_h.push_back(UserId{1000 + perm[u.value]});
    const auto sg = stratify(diffuse(build_transition_matrix(g), seed_beliefs(g, hits_g)));
    const auto sh = stratify(diffuse(build_transition_matrix(h), seed_beliefs(h, hits_h)));
    for (std::size_t i = 0; i < n; ++i) {
        EXPECT_EQ(sg.stratum[g.index_of(UserId{i})], sh.stratum[h.index_of(UserId{1000 + perm[i]})]);
    }
}

TEST(Stratify, BoundaryValues) {
    EXPECT_EQ(stratum_of(0.0), 1);
    EXPECT_EQ(stratum_of(0.2499), 1);
    EXPECT_EQ(stratum_of(0.25), 2);
    EXPECT_EQ(stratum_of(0.5), 3);
    EXPECT_EQ(stratum_of(0.75), 4);
    EXPECT_EQ(stratum_of(1.0), 4);
    EXPECT_THROW(stratum_of(1.0000001), DataError);
    EXPECT_THROW(stratum_of(-0.1), DataError);
    EXPECT_THROW(stratify(BeliefVector{{0.1}, 0}, {0.5, 0.25, 0.75}), ConfigError);
}

TEST(StratifiedSample, CapAndDeterminism) {
    StrataAssignment a;
    a.stratum.assign(10, 1);
    a.stratum.insert(a.stratum.end(), 3000, 3);
    const auto picked = stratified_sample(a, kDefaultStratumCap, 42);
    std::size_t s1 = 0, s3 = 0;
    for (auto i : picked) (a.stratum[i] == 1 ? s1 : s3)++;
    EXPECT_EQ(s1, 10u);
    EXPECT_EQ(s3, 1500u);
    EXPECT_EQ(std::set<RetweetGraph::Index>(picked.begin(), picked.end()).size(), picked.size());
    EXPECT_EQ(stratified_sample(a, kDefaultStratumCap, 42), picked);
    EXPECT_NE(stratified_sample(a, kDefaultStratumCap, 43), picked);
    EXPECT_THROW(stratified_sample(a, 0, 1), ConfigError);
}

TEST(StratifiedSample, RoughlyUniformWithinStratum) {
    StrataAssignment a;
    a.stratum.assign(20, 2);
    std::vector<int> hits(20, 0);
    for (std::uint64_t seed = 0; seed < 2000; ++seed) {
        for (auto i : stratified_sample(a, 5, seed)) ++hits[i];
    }
    // Expected 500 per user; binomial sd ~19.
    for (int h : hits) EXPECT_NEAR(h, 500, 100);
}

}  // namespace
}  // namespace hatescope
