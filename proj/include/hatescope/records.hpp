#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hatescope/error.hpp"
#include "hatescope/types.hpp"

namespace hatescope {

/// Profile row from users.jsonl.
struct UserRecord {
    UserId id;
    Timestamp created_at;
    std::uint64_t statuses_count = 0;
    std::uint64_t followers_count = 0;
    std::uint64_t followees_count = 0;
    std::uint64_t favorites_count = 0;
    std::optional<bool> suspended;
};

/// Timeline row from tweets.jsonl. Quotes and replies create a retweet edge
/// only when retweeted_user_id is present.
struct TweetRecord {
    std::uint64_t id = 0;
    UserId user_id;
    Timestamp created_at;
    std::string text;
    std::optional<UserId> retweeted_user_id;
    std::vector<std::string> hashtags;
    std::vector<std::string> urls;
};

inline constexpr std::size_t kTimelineCap = 200;

/// Row accounting for an ingested stream: rows_read = accepted + rejected.
struct IngestReport {
    std::uint64_t rows_read = 0;
    std::uint64_t rows_rejected = 0;
    std::map<std::string, std::uint64_t> reject_reasons;
    std::uint64_t materialized_nodes = 0;

    std::uint64_t rows_accepted() const { return rows_read - rows_rejected; }

    void reject(const std::string& reason) {
        ++rows_rejected;
        ++reject_reasons[reason];
    }

    void merge(const IngestReport& other) {
        rows_read += other.rows_read;
        rows_rejected += other.rows_rejected;
        materialized_nodes += other.materialized_nodes;
        for (const auto& [k, v] : other.reject_reasons) reject_reasons[k] += v;
    }
};

inline void to_json(nlohmann::json& j, const IngestReport& r) {
    j = nlohmann::json{{"rows_read", r.rows_read},
                       {"rows_accepted", r.rows_accepted()},
                       {"rows_rejected", r.rows_rejected},
                       {"reject_reasons", r.reject_reasons},
                       {"materialized_nodes", r.materialized_nodes}};
}

namespace detail {

inline std::uint64_t json_count(const nlohmann::json& j, const char* key) {
    const auto& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer()) {
        const auto s = v.get<std::int64_t>();
        if (s < 0) throw DataError(std::string("negative ") + key);
        return static_cast<std::uint64_t>(s);
    }
    throw DataError(std::string("non-integer ") + key);
}

inline UserId json_user_id(const nlohmann::json& v) {
    if (v.is_string()) return parse_user_id(v.get<std::string>());
    if (v.is_number_unsigned()) return UserId{v.get<std::uint64_t>()};
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return UserId{static_cast<std::uint64_t>(v.get<std::int64_t>())};
    throw DataError("invalid user id");
}

inline std::vector<std::string> json_strings(const nlohmann::json& j, const char* key) {
    std::vector<std::string> out;
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        for (const auto& e : *it) out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace detail

inline UserRecord user_from_json(const nlohmann::json& j) {
    try {
        UserRecord u;
        u.id = detail::json_user_id(j.at("id"));
        u.created_at = parse_timestamp(j.at("created_at").get<std::string>());
        u.statuses_count = detail::json_count(j, "statuses_count");
        u.followers_count = detail::json_count(j, "followers_count");
        u.followees_count = detail::json_count(j, "followees_count");
        u.favorites_count = detail::json_count(j, "favorites_count");
        if (auto it = j.find("suspended"); it != j.end() && !it->is_null()) u.suspended = it->get<bool>();
        return u;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed user record: ") + e.what());
    }
}

inline TweetRecord tweet_from_json(const nlohmann::json& j) {
    try {
        TweetRecord t;
        t.id = detail::json_user_id(j.at("id")).value;
        t.user_id = detail::json_user_id(j.at("user_id"));
        t.created_at = parse_timestamp(j.at("created_at").get<std::string>());
        t.text = j.value("text", std::string{});
        if (auto it = j.find("retweeted_user_id"); it != j.end() && !it->is_null()) {
            t.retweeted_user_id = detail::json_user_id(*it);
        }
        t.hashtags = detail::json_strings(j, "hashtags");
        t.urls = detail::json_strings(j, "urls");
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed tweet record: ") + e.what());
    }
}

inline nlohmann::json to_json(const UserRecord& u) {
    nlohmann::json j{{"id", u.id.value},
                     {"created_at", format_timestamp(u.created_at)},
                     {"statuses_count", u.statuses_count},
                     {"followers_count", u.followers_count},
                     {"followees_count", u.followees_count},
                     {"favorites_count", u.favorites_count}};
    if (u.suspended) j["suspended"] = *u.suspended;
    return j;
}

inline nlohmann::json to_json(const TweetRecord& t) {
    nlohmann::json j{{"id", t.id},
                     {"user_id", t.user_id.value},
                     {"created_at", format_timestamp(t.created_at)},
                     {"text", t.text},
                     {"hashtags", t.hashtags},
                     {"urls", t.urls}};
    if (t.retweeted_user_id) j["retweeted_user_id"] = t.retweeted_user_id->value;
    return j;
}

/// Reads a JSONL stream; malformed lines become rejected rows, never aborts.
template <class Record, class Parse>
std::vector<Record> read_jsonl(std::istream& in, Parse parse, IngestReport& report) {
    std::vector<Record> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++report.rows_read;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            report.reject("malformed_json");
            continue;
        }
        try {
            out.push_back(parse(j));
        } catch (const Error&) {
            report.reject("invalid_record");
        } catch (const nlohmann::json::exception&) {
            report.reject("invalid_record");
        }
    }
    return out;
}

inline std::vector<UserRecord> read_users(std::istream& in, IngestReport& report) {
    return read_jsonl<UserRecord>(in, user_from_json, report);
}

inline std::vector<TweetRecord> read_tweets(std::istream& in, IngestReport& report) {
    return read_jsonl<TweetRecord>(in, tweet_from_json, report);
}

/// Keeps the newest `cap` tweets per user (ties broken by tweet id). Returns
/// the kept tweets in their original stream order.
inline std::vector<TweetRecord> cap_timelines(std::vector<TweetRecord> tweets, std::size_t cap,
                                              IngestReport* report = nullptr) {
    std::unordered_map<UserId, std::vector<std::size_t>> by_user;
    for (std::size_t i = 0; i < tweets.size(); ++i) by_user[tweets[i].user_id].push_back(i);
    std::vector<char> keep(tweets.size(), 1);
    for (auto& [user, idx] : by_user) {
        if (idx.size() <= cap) continue;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (tweets[a].created_at != tweets[b].created_at) return tweets[a].created_at > tweets[b].created_at;
            return tweets[a].id > tweets[b].id;
        });
        for (std::size_t k = cap; k < idx.size(); ++k) {
            keep[idx[k]] = 0;
            if (report) report->reject("timeline_cap");
        }
    }
    std::vector<TweetRecord> out;
    out.reserve(tweets.size());
    for (std::size_t i = 0; i < tweets.size(); ++i) {
        if (keep[i]) out.push_back(std::move(tweets[i]));
    }
    return out;
}

}  // namespace hatescope
