#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>

#include "hatescope/csv.hpp"
#include "hatescope/error.hpp"
#include "hatescope/types.hpp"

namespace hatescope {

enum class Label { hateful, not_hateful };

inline std::string_view to_string(Label l) { return l == Label::hateful ? "hateful" : "not_hateful"; }

inline Label parse_label(std::string_view s) {
    if (s == "hateful") return Label::hateful;
    if (s == "not_hateful") return Label::not_hateful;
    throw DataError("unknown label '" + std::string(s) + "'");
}

/// One adjudicated user: the final label, votes agreeing with it, votes
/// against it, and how many annotators took part.
struct LabelRow {
    Label label = Label::not_hateful;
    unsigned votes_for = 0;
    unsigned votes_against = 0;
    unsigned n_annotators = 0;
};

using LabelTable = std::map<UserId, LabelRow>;

inline constexpr std::string_view kLabelsHeader = "user_id,label,votes_for,votes_against,n_annotators";

inline void write_labels_csv(const LabelTable& labels, std::ostream& out) {
    out << kLabelsHeader << '\n';
    for (const auto& [id, row] : labels) {
        out << id.value << ',' << to_string(row.label) << ',' << row.votes_for << ',' << row.votes_against << ','
            << row.n_annotators << '\n';
    }
}

inline LabelTable read_labels_csv(std::istream& in) {
    const auto t = csv::parse(in);
    LabelTable labels;
    if (t.header.empty()) return labels;
    const auto cu = t.column("user_id"), cl = t.column("label"), cf = t.column("votes_for"),
               ca = t.column("votes_against"), cn = t.column("n_annotators");
    for (const auto& r : t.rows) {
        LabelRow row{parse_label(r[cl]), static_cast<unsigned>(parse_user_id(r[cf]).value),
                     static_cast<unsigned>(parse_user_id(r[ca]).value),
                     static_cast<unsigned>(parse_user_id(r[cn]).value)};
        if (!labels.emplace(parse_user_id(r[cu]), row).second) throw DataError("duplicate user in labels file");
    }
    return labels;
}

}  // namespace hatescope
