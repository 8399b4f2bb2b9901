#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hatescope/content.hpp"
#include "hatescope/csv.hpp"
#include "hatescope/error.hpp"
#include "hatescope/records.hpp"

namespace hatescope {

/// Activity features normalized by account age, plus the content profile.
/// Undefined quantities stay missing (std::nullopt), never 0.
struct FeatureVector {
    double account_age_days = 0.0;
    double statuses_per_day = 0.0;
    double followers_per_day = 0.0;
    double followees_per_day = 0.0;
    std::uint64_t favorites = 0;
    double favorites_per_day = 0.0;
    std::optional<double> avg_interval_s;
    std::optional<double> followers_per_followee;
    std::size_t tweets_used = 0;
    ContentProfile content;
};

/// Age-normalized activity of one user. `tweets` must all belong to `user`;
/// only the newest 200 are used.
inline FeatureVector compute_features(const UserRecord& user, std::span<const TweetRecord> tweets,
                                      Timestamp snapshot) {
    if (snapshot <= user.created_at) {
        throw DataError("snapshot date precedes creation of user " + to_string(user.id));
    }
    std::vector<Timestamp> times;
    times.reserve(tweets.size());
    for (const auto& t : tweets) {
        if (t.user_id != user.id) {
            throw DataError("tweet " + std::to_string(t.id) + " does not belong to user " + to_string(user.id));
        }
        times.push_back(t.created_at);
    }
    std::sort(times.begin(), times.end());
    if (times.size() > kTimelineCap) times.erase(times.begin(), times.end() - kTimelineCap);

    FeatureVector f;
    f.account_age_days = days_between(user.created_at, snapshot);
    f.statuses_per_day = static_cast<double>(user.statuses_count) / f.account_age_days;
    f.followers_per_day = static_cast<double>(user.followers_count) / f.account_age_days;
    f.followees_per_day = static_cast<double>(user.followees_count) / f.account_age_days;
    f.favorites = user.favorites_count;
    f.favorites_per_day = static_cast<double>(user.favorites_count) / f.account_age_days;
    f.tweets_used = times.size();
    if (times.size() >= 2) {
        // Mean consecutive gap telescopes to (last - first) / (k - 1).
        f.avg_interval_s = static_cast<double>((times.back() - times.front()).count()) /
                           static_cast<double>(times.size() - 1);
    }
    if (user.followees_count > 0) {
        f.followers_per_followee =
            static_cast<double>(user.followers_count) / static_cast<double>(user.followees_count);
    }
    return f;
}

/// Newest 200 tweets of one user, newest last.
inline std::vector<TweetRecord> recent_timeline(std::vector<TweetRecord> tweets) {
    std::sort(tweets.begin(), tweets.end(), [](const TweetRecord& a, const TweetRecord& b) {
        if (a.created_at != b.created_at) return a.created_at < b.created_at;
        return a.id < b.id;
    });
    if (tweets.size() > kTimelineCap) {
        tweets.erase(tweets.begin(), tweets.end() - static_cast<std::ptrdiff_t>(kTimelineCap));
    }
    return tweets;
}

/// Column-oriented per-user numeric table (feature export, report input).
struct FeatureTable {
    std::vector<std::string> columns;
    std::vector<UserId> users;
    std::vector<std::vector<std::optional<double>>> rows;

    std::optional<std::size_t> column_index(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i] == name) return i;
        }
        return std::nullopt;
    }

    /// Adds (or fills) a column from a per-user map; absent users stay missing.
    void merge_column(const std::string& name, const std::unordered_map<UserId, double>& values) {
        auto idx = column_index(name);
        if (!idx) {
            columns.push_back(name);
            for (auto& r : rows) r.emplace_back();
            idx = columns.size() - 1;
        }
        for (std::size_t r = 0; r < users.size(); ++r) {
            if (auto it = values.find(users[r]); it != values.end()) rows[r][*idx] = it->second;
        }
    }
};

/// Flattens one user's features into named columns; category columns are
/// prefixed with "cat_".
inline std::vector<std::pair<std::string, std::optional<double>>> feature_columns(const FeatureVector& f) {
    std::vector<std::pair<std::string, std::optional<double>>> c{
        {"account_age_days", f.account_age_days},
        {"statuses_per_day", f.statuses_per_day},
        {"followers_per_day", f.followers_per_day},
        {"followees_per_day", f.followees_per_day},
        {"favorites", static_cast<double>(f.favorites)},
        {"favorites_per_day", f.favorites_per_day},
        {"avg_interval_s", f.avg_interval_s},
        {"followers_per_followee", f.followers_per_followee},
        {"url_per_tweet", f.content.url_per_tweet},
        {"hashtag_per_tweet", f.content.hashtag_per_tweet},
        {"profanity_per_tweet", f.content.profanity_per_tweet},
        {"sentiment", f.content.sentiment},
        {"subjectivity", f.content.subjectivity},
    };
    for (const auto& [name, v] : f.content.category_occurrence) c.emplace_back("cat_" + name, v);
    return c;
}

inline FeatureTable make_feature_table(std::span<const std::pair<UserId, FeatureVector>> features) {
    FeatureTable t;
    if (features.empty()) return t;
    for (const auto& [name, v] : feature_columns(features.front().second)) t.columns.push_back(name);
    for (const auto& [id, f] : features) {
        auto cols = feature_columns(f);
        if (cols.size() != t.columns.size()) throw DataError("inconsistent feature columns across users");
        t.users.push_back(id);
        std::vector<std::optional<double>> row;
        for (auto& [name, v] : cols) row.push_back(v);
        t.rows.push_back(std::move(row));
    }
    return t;
}

/// One row per user, missing values as empty cells.
inline void write_feature_csv(const FeatureTable& t, std::ostream& out) {
    out << "user_id";
    for (const auto& c : t.columns) out << ',' << csv::quote(c);
    out << '\n';
    for (std::size_t r = 0; r < t.users.size(); ++r) {
        out << t.users[r].value;
        for (const auto& v : t.rows[r]) out << ',' << csv::format_optional(v);
        out << '\n';
    }
}

inline FeatureTable read_feature_csv(std::istream& in) {
    const auto raw = csv::parse(in);
    FeatureTable t;
    if (raw.header.empty()) return t;
    const auto uid = raw.column("user_id");
    for (std::size_t i = 0; i < raw.header.size(); ++i) {
        if (i != uid) t.columns.push_back(raw.header[i]);
    }
    for (const auto& row : raw.rows) {
        t.users.push_back(parse_user_id(row[uid]));
        std::vector<std::optional<double>> vals;
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i != uid) vals.push_back(csv::parse_optional(row[i]));
        }
        t.rows.push_back(std::move(vals));
    }
    return t;
}

}  // namespace hatescope
