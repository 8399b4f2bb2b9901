#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "hatescope/features.hpp"
#include "hatescope/rng.hpp"

namespace hatescope {
namespace {

UserRecord user(std::uint64_t statuses, std::uint64_t followers, std::uint64_t followees, std::uint64_t favorites,
                const char* created = "2017-01-01T00:00:00Z") {
    UserRecord u;
    u.id = UserId{1};
    u.created_at = parse_timestamp(created);
    u.statuses_count = statuses;
    u.followers_count = followers;
    u.followees_count = followees;
    u.favorites_count = favorites;
    return u;
}

TweetRecord at(std::int64_t seconds, std::uint64_t id = 0) {
    TweetRecord t;
    t.id = id;
    t.user_id = UserId{1};
    t.created_at = parse_timestamp("2017-03-01T00:00:00Z") + std::chrono::seconds{seconds};
    return t;
}

std::optional<double> fraction(const std::string& cell) {
    if (cell.empty()) return std::nullopt;
    const auto slash = cell.find('/');
    if (slash == std::string::npos) return std::stod(cell);
    return std::stod(cell.substr(0, slash)) / std::stod(cell.substr(slash + 1));
}

TEST(ComputeFeatures, PerDayRate) {
    const auto snap = parse_timestamp("2017-04-11T00:00:00Z");  // 100 days
    const auto f = compute_features(user(500, 0, 0, 7), {}, snap);
    EXPECT_DOUBLE_EQ(f.account_age_days, 100.0);
    EXPECT_DOUBLE_EQ(f.statuses_per_day, 5.0);
    EXPECT_EQ(f.favorites, 7u);
    EXPECT_FALSE(f.avg_interval_s.has_value());
    EXPECT_FALSE(f.followers_per_followee.has_value());
}

TEST(ComputeFeatures, IntervalIgnoresOrder) {
    const auto snap = parse_timestamp("2017-06-01T00:00:00Z");
    const std::vector<TweetRecord> tw{at(120), at(0), at(60)};
    EXPECT_DOUBLE_EQ(*compute_features(user(1, 1, 1, 1), tw, snap).avg_interval_s, 60.0);
    Rng rng(2);
    std::vector<TweetRecord> many;
    for (int i = 0; i < 50; ++i) many.push_back(at(static_cast<std::int64_t>(uniform_index(rng, 100000))));
    const double base = *compute_features(user(1, 1, 1, 1), many, snap).avg_interval_s;
    std::shuffle(many.begin(), many.end(), rng);
    EXPECT_EQ(*compute_features(user(1, 1, 1, 1), many, snap).avg_interval_s, base);
}

TEST(ComputeFeatures, UsesNewestTwoHundredTweets) {
    const auto snap = parse_timestamp("2017-06-01T00:00:00Z");
    std::vector<TweetRecord> tw;
    for (int i = 0; i < 50; ++i) tw.push_back(at(i * 1000));          // old, sparse
    for (int i = 0; i < 200; ++i) tw.push_back(at(100000 + i * 10));  // recent, dense
    const auto f = compute_features(user(1, 1, 1, 1), tw, snap);
    EXPECT_EQ(f.tweets_used, 200u);
    EXPECT_DOUBLE_EQ(*f.avg_interval_s, 10.0);
}

TEST(ComputeFeatures, ScalingCountsScalesRates) {
    const auto snap = parse_timestamp("2017-05-17T13:00:00Z");
    const auto a = compute_features(user(37, 11, 5, 3), {}, snap);
    const auto b = compute_features(user(37 * 8, 11 * 8, 5 * 8, 3 * 8), {}, snap);
    EXPECT_EQ(b.statuses_per_day, 8 * a.statuses_per_day);
    EXPECT_EQ(b.followers_per_day, 8 * a.followers_per_day);
    EXPECT_EQ(b.followees_per_day, 8 * a.followees_per_day);
}

TEST(ComputeFeatures, Errors) {
    const auto created = parse_timestamp("2017-01-01T00:00:00Z");
    EXPECT_THROW(compute_features(user(1, 1, 1, 1), {}, created), DataError);
    TweetRecord other = at(0);
    other.user_id = UserId{2};
    EXPECT_THROW(compute_features(user(1, 1, 1, 1), std::vector<TweetRecord>{other},
                                  parse_timestamp("2018-01-01T00:00:00Z")),
                 DataError);
}

TEST(ComputeFeatures, SmallFixtureMatchesHandSheet) {
    std::ifstream uf(HATESCOPE_TEST_DATA "/small_users.jsonl"), tf(HATESCOPE_TEST_DATA "/small_tweets.jsonl");
    IngestReport r;
    const auto users = read_users(uf, r);
    const auto tweets = read_tweets(tf, r);
    const auto snap = parse_timestamp("2017-06-01T00:00:00Z");

    std::ifstream sheet(HATESCOPE_TEST_DATA "/small_features_hand.csv");
    std::string line;
    std::getline(sheet, line);  // comment
    const auto table = csv::parse(sheet);
    ASSERT_EQ(table.rows.size(), 3u);
    for (const auto& row : table.rows) {
        const UserId id = parse_user_id(row[0]);
        const auto& u = *std::find_if(users.begin(), users.end(), [&](auto& x) { return x.id == id; });
        std::vector<TweetRecord> mine;
        for (const auto& t : tweets) {
            if (t.user_id == id) mine.push_back(t);
        }
        const auto f = compute_features(u, mine, snap);
        const std::vector<std::optional<double>> got{f.account_age_days,  f.statuses_per_day,
                                                     f.followers_per_day, f.followees_per_day,
                                                     static_cast<double>(f.favorites), f.favorites_per_day,
                                                     f.avg_interval_s,    f.followers_per_followee};
        for (std::size_t c = 0; c < got.size(); ++c) {
            const auto want = fraction(row[c + 1]);
            ASSERT_EQ(got[c].has_value(), want.has_value()) << table.header[c + 1] << " user " << row[0];
            if (want) EXPECT_NEAR(*got[c], *want, 1e-12) << table.header[c + 1] << " user " << row[0];
        }
    }
}

TEST(FeatureTable, CsvRoundTripKeepsMissingCells) {
    const auto snap = parse_timestamp("2017-06-01T00:00:00Z");
    FeatureVector a = compute_features(user(10, 5, 0, 1), {}, snap);
    a.content.category_occurrence["anger"] = 0.25;
    FeatureVector b = compute_features(user(20, 5, 5, 1), std::vector<TweetRecord>{at(0), at(30)}, snap);
    b.content.category_occurrence["anger"] = 0.0;
    const std::vector<std::pair<UserId, FeatureVector>> fv{{UserId{7}, a}, {UserId{9}, b}};
    const auto t = make_feature_table(fv);
    ASSERT_TRUE(t.column_index("cat_anger").has_value());
    std::stringstream s;
    write_feature_csv(t, s);
    const std::string text = s.str();
    const auto back = read_feature_csv(s);
    EXPECT_EQ(back.columns, t.columns);
    EXPECT_EQ(back.users, t.users);
    EXPECT_EQ(back.rows, t.rows);
    EXPECT_FALSE(back.rows[0][*back.column_index("followers_per_followee")].has_value());
    EXPECT_NE(text.find(",,"), std::string::npos);
}

TEST(FeatureTable, MergeColumnLeavesAbsentUsersMissing) {
    FeatureTable t;
    t.columns = {"x"};
    t.users = {UserId{1}, UserId{2}};
    t.rows = {{1.0}, {2.0}};
    t.merge_column("betweenness", {{UserId{2}, 0.5}});
    EXPECT_FALSE(t.rows[0][1].has_value());
    EXPECT_EQ(*t.rows[1][1], 0.5);
}

}  // namespace
}  // namespace hatescope
