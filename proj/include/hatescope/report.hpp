#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "hatescope/centrality.hpp"
#include "hatescope/csv.hpp"
#include "hatescope/features.hpp"
#include "hatescope/graph.hpp"
#include "hatescope/labels.hpp"
#include "hatescope/rng.hpp"
#include "hatescope/stats.hpp"

namespace hatescope {

inline constexpr std::array<const char*, 4> kReportGroups{"hateful", "normal", "hateful_neighborhood",
                                                          "normal_neighborhood"};

struct GroupStats {
    std::size_t n = 0;
    std::optional<double> mean;
    std::optional<double> ci_lo;
    std::optional<double> ci_hi;
    std::optional<double> median;
};

struct FeatureComparison {
    std::string feature;
    std::map<std::string, GroupStats> groups;
    std::optional<double> p_hateful_vs_normal;
    std::optional<double> p_neighborhoods;
};

struct ReportOptions {
    std::uint64_t seed = 0;
    double level = 0.95;
    std::size_t resamples = 2000;
    unsigned threads = 1;
};

struct GroupReport {
    std::map<std::string, std::vector<UserId>> members;
    std::map<std::string, bool> empty;
    std::vector<FeatureComparison> features;
    ReportOptions options;
};

namespace detail {

inline GroupStats summarize_group(std::span<const double> xs, const ReportOptions& opt, std::uint64_t seed) {
    GroupStats s;
    s.n = xs.size();
    if (xs.empty()) return s;
    const auto ci = stats::mean_ci(xs, opt.level, opt.resamples, seed);
    s.mean = ci.mean;
    s.ci_lo = ci.lo;
    s.ci_hi = ci.hi;
    s.median = median(std::vector<double>(xs.begin(), xs.end()));
    return s;
}

}  // namespace detail

/// Summarizes every feature column for four groups: hateful and normal
/// (from labels), and the 1-neighborhoods of each in the retweet graph, which
/// exclude every labeled user. Missing values are excluded from n. Each
/// (feature, group) bootstrap draws from its own derived seed, so the output
/// does not depend on thread scheduling.
inline GroupReport build_group_report(const FeatureTable& features, const LabelTable& labels,
                                      const RetweetGraph& graph, const ReportOptions& opt = {}) {
    GroupReport rep;
    rep.options = opt;
    std::vector<UserId> hateful, normal;
    for (const auto& [id, row] : labels) (row.label == Label::hateful ? hateful : normal).push_back(id);
    auto outside_labels = [&](std::vector<UserId> ids) {
        std::erase_if(ids, [&](UserId u) { return labels.contains(u); });
        return ids;
    };
    auto graph_members = [&](const std::vector<UserId>& ids) {
        std::vector<UserId> out;
        for (UserId u : ids) {
            if (graph.contains(u)) out.push_back(u);
        }
        return out;
    };
    rep.members["hateful"] = hateful;
    rep.members["normal"] = normal;
    rep.members["hateful_neighborhood"] = outside_labels(neighborhood(graph, graph_members(hateful)));
    rep.members["normal_neighborhood"] = outside_labels(neighborhood(graph, graph_members(normal)));
    for (const auto& [g, m] : rep.members) rep.empty[g] = m.empty();

    std::unordered_map<UserId, std::size_t> row_of;
    for (std::size_t r = 0; r < features.users.size(); ++r) row_of.emplace(features.users[r], r);

    rep.features.resize(features.columns.size());
    auto one_feature = [&](std::size_t c) {
        FeatureComparison fc;
        fc.feature = features.columns[c];
        std::map<std::string, std::vector<double>> values;
        for (const char* g : kReportGroups) {
            auto& xs = values[g];
            for (UserId u : rep.members.at(g)) {
                auto it = row_of.find(u);
                if (it == row_of.end()) continue;
                if (const auto& v = features.rows[it->second][c]) xs.push_back(*v);
            }
            fc.groups[g] = detail::summarize_group(xs, opt, derive_seed(opt.seed, fc.feature + "/" + g));
        }
        if (!values["hateful"].empty() && !values["normal"].empty()) {
            fc.p_hateful_vs_normal = stats::mann_whitney_u(values["hateful"], values["normal"]).p_value;
        }
        if (!values["hateful_neighborhood"].empty() && !values["normal_neighborhood"].empty()) {
            fc.p_neighborhoods =
                stats::mann_whitney_u(values["hateful_neighborhood"], values["normal_neighborhood"]).p_value;
        }
        rep.features[c] = std::move(fc);
    };
    const unsigned threads = std::max(1u, opt.threads);
    if (threads == 1) {
        for (std::size_t c = 0; c < features.columns.size(); ++c) one_feature(c);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t c = t; c < features.columns.size(); c += threads) one_feature(c);
            });
        }
        for (auto& th : pool) th.join();
    }
    return rep;
}

// --- suspensions ------------------------------------------------------------

struct SuspensionRow {
    std::string group;
    std::size_t suspended = 0;
    std::size_t size = 0;
    /// Percentage times 100, rounded half-up (e.g. 32 for 0.32%).
    std::optional<std::uint64_t> hundredths_of_percent;

    std::string percentage() const {
        if (!hundredths_of_percent) return "n/a";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%llu.%02llu%%", static_cast<unsigned long long>(*hundredths_of_percent / 100),
                      static_cast<unsigned long long>(*hundredths_of_percent % 100));
        return buf;
    }

    /// "0.32% (14)".
    std::string cell() const { return percentage() + " (" + std::to_string(suspended) + ")"; }
};

/// 100 * count / size rounded half-up to two decimals, in exact integer
/// arithmetic.
inline std::optional<std::uint64_t> percentage_hundredths(std::uint64_t count, std::uint64_t size) {
    if (size == 0) return std::nullopt;
    return (20000 * count + size) / (2 * size);
}

using SuspensionTable = std::vector<SuspensionRow>;

/// Rows for hateful, normal, and others (every user without a label).
inline SuspensionTable suspension_table(const LabelTable& labels, std::span<const UserId> all_users,
                                        const std::set<UserId>& suspended) {
    const std::set<UserId> everyone(all_users.begin(), all_users.end());
    for (UserId u : suspended) {
        if (!everyone.contains(u)) throw DataError("suspended user " + to_string(u) + " is not in the user set");
    }
    SuspensionRow hateful, normal, others;
    hateful.group = "hateful";
    normal.group = "normal";
    others.group = "others";
    for (UserId u : everyone) {
        auto it = labels.find(u);
        SuspensionRow& row = it == labels.end() ? others : (it->second.label == Label::hateful ? hateful : normal);
        ++row.size;
        if (suspended.contains(u)) ++row.suspended;
    }
    SuspensionTable t{hateful, normal, others};
    for (auto& r : t) r.hundredths_of_percent = percentage_hundredths(r.suspended, r.size);
    return t;
}

// --- serialization ----------------------------------------------------------

namespace detail {

inline nlohmann::ordered_json opt_json(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace detail

inline nlohmann::ordered_json report_json(const GroupReport& rep) {
    nlohmann::ordered_json j;
    j["metadata"] = {{"test", "two-sided Mann-Whitney U (exact for n<=8, normal approximation otherwise)"},
                     {"interval", "bootstrap percentile"},
                     {"level", rep.options.level},
                     {"resamples", rep.options.resamples},
                     {"seed", rep.options.seed}};
    auto& groups = j["groups"];
    for (const char* g : kReportGroups) {
        groups[g] = {{"size", rep.members.at(g).size()}, {"empty", rep.empty.at(g)}};
    }
    auto& feats = j["features"];
    feats = nlohmann::ordered_json::array();
    for (const auto& fc : rep.features) {
        nlohmann::ordered_json f;
        f["name"] = fc.feature;
        for (const char* g : kReportGroups) {
            const auto& s = fc.groups.at(g);
            f["groups"][g] = {{"n", s.n},
                              {"mean", detail::opt_json(s.mean)},
                              {"ci_lo", detail::opt_json(s.ci_lo)},
                              {"ci_hi", detail::opt_json(s.ci_hi)},
                              {"median", detail::opt_json(s.median)}};
        }
        f["p_value"] = {{"hateful_vs_normal", detail::opt_json(fc.p_hateful_vs_normal)},
                        {"hateful_neighborhood_vs_normal_neighborhood", detail::opt_json(fc.p_neighborhoods)}};
        feats.push_back(std::move(f));
    }
    return j;
}

inline nlohmann::ordered_json suspension_json(const SuspensionTable& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : t) {
        arr.push_back({{"group", r.group},
                       {"suspended", r.suspended},
                       {"size", r.size},
                       {"percentage", r.percentage()},
                       {"cell", r.cell()}});
    }
    return arr;
}

namespace detail {

inline std::string md_num(const std::optional<double>& v) {
    if (!v) return "–";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", *v);
    return buf;
}

inline std::string md_p(const std::optional<double>& p) {
    if (!p) return "–";
    if (*p < 0.001) return "<0.001";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *p);
    return buf;
}

}  // namespace detail

inline void write_report_markdown(const GroupReport& rep, const SuspensionTable& sus, std::ostream& out) {
    out << "# Group report\n\n";
    out << "Intervals: " << rep.options.level * 100 << "% bootstrap percentile (" << rep.options.resamples
        << " resamples). p-values: two-sided Mann-Whitney U.\n\n";
    out << "| group | size |\n|---|---|\n";
    for (const char* g : kReportGroups) {
        out << "| " << g << " | " << rep.members.at(g).size() << (rep.empty.at(g) ? " (empty)" : "") << " |\n";
    }
    out << "\n| feature | group | n | mean | CI | median |\n|---|---|---|---|---|---|\n";
    for (const auto& fc : rep.features) {
        for (const char* g : kReportGroups) {
            const auto& s = fc.groups.at(g);
            out << "| " << fc.feature << " | " << g << " | " << s.n << " | " << detail::md_num(s.mean) << " | ["
                << detail::md_num(s.ci_lo) << ", " << detail::md_num(s.ci_hi) << "] | " << detail::md_num(s.median)
                << " |\n";
        }
    }
    out << "\n| feature | p (hateful vs normal) | p (neighborhoods) |\n|---|---|---|\n";
    for (const auto& fc : rep.features) {
        out << "| " << fc.feature << " | " << detail::md_p(fc.p_hateful_vs_normal) << " | "
            << detail::md_p(fc.p_neighborhoods) << " |\n";
    }
    if (!sus.empty()) {
        out << "\n## Suspended accounts\n\n|";
        for (const auto& r : sus) out << ' ' << r.group << " |";
        out << "\n|";
        for (std::size_t i = 0; i < sus.size(); ++i) out << "---|";
        out << "\n|";
        for (const auto& r : sus) out << ' ' << r.cell() << " |";
        out << '\n';
    }
}

/// Long-form series for external plotting: feature,group,n,mean,ci_lo,ci_hi,median.
inline void write_report_series_csv(const GroupReport& rep, std::ostream& out) {
    out << "feature,group,n,mean,ci_lo,ci_hi,median\n";
    for (const auto& fc : rep.features) {
        for (const char* g : kReportGroups) {
            const auto& s = fc.groups.at(g);
            out << csv::quote(fc.feature) << ',' << g << ',' << s.n << ',' << csv::format_optional(s.mean) << ','
                << csv::format_optional(s.ci_lo) << ',' << csv::format_optional(s.ci_hi) << ','
                << csv::format_optional(s.median) << '\n';
        }
    }
}

}  // namespace hatescope
