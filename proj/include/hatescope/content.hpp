#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hatescope/csv.hpp"
#include "hatescope/error.hpp"
#include "hatescope/records.hpp"

namespace hatescope {

/// Token emitted in place of every URL.
inline constexpr std::string_view kUrlToken = "<url>";

namespace detail {

// UTF-8 continuation and lead bytes count as word characters, so non-ASCII
// letters stay inside their token.
inline bool is_word_byte(unsigned char c) { return std::isalnum(c) || c == '_' || c >= 0x80; }

inline bool starts_url(std::string_view s, std::size_t i) {
    auto rest = s.substr(i);
    auto ieq = [&](std::string_view p) {
        if (rest.size() < p.size()) return false;
        for (std::size_t k = 0; k < p.size(); ++k) {
            if (std::tolower(static_cast<unsigned char>(rest[k])) != p[k]) return false;
        }
        return true;
    };
    return ieq("http://") || ieq("https://") || ieq("www.");
}

inline bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

inline std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace detail

/// Lowercases and splits on non-word characters. A '#' or '@' directly before
/// a word stays attached; URLs collapse into a single <url> token.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(text[i]);
        if ((i == 0 || !detail::is_word_byte(static_cast<unsigned char>(text[i - 1]))) && detail::starts_url(text, i)) {
            while (i < n && !detail::is_space(static_cast<unsigned char>(text[i]))) ++i;
            tokens.emplace_back(kUrlToken);
            continue;
        }
        const bool prefixed =
            (c == '#' || c == '@') && i + 1 < n && detail::is_word_byte(static_cast<unsigned char>(text[i + 1]));
        if (prefixed || detail::is_word_byte(c)) {
            const std::size_t start = i;
            if (prefixed) ++i;
            while (i < n && detail::is_word_byte(static_cast<unsigned char>(text[i]))) ++i;
            tokens.push_back(detail::lower_ascii(text.substr(start, i - start)));
            continue;
        }
        ++i;
    }
    return tokens;
}

/// Splits on '.', '!', '?' and newlines. URLs are kept whole.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        const auto b = cur.find_first_not_of(" \t\r");
        if (b != std::string::npos) out.push_back(cur.substr(b, cur.find_last_not_of(" \t\r") - b + 1));
        cur.clear();
    };
    std::size_t i = 0;
    while (i < text.size()) {
        if ((i == 0 || detail::is_space(static_cast<unsigned char>(text[i - 1]))) && detail::starts_url(text, i)) {
            while (i < text.size() && !detail::is_space(static_cast<unsigned char>(text[i]))) cur += text[i++];
            continue;
        }
        const char c = text[i++];
        if (c == '.' || c == '!' || c == '?' || c == '\n') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    return out;
}

/// Named list of lowercase words or phrases (up to 5 tokens each).
class Lexicon {
public:
    static constexpr std::size_t kMaxPhraseTokens = 5;

    Lexicon() = default;

    Lexicon(std::string name, std::span<const std::string> entries) : name_(std::move(name)) {
        for (const auto& raw : entries) {
            auto toks = tokenize(raw);
            if (toks.empty()) throw DataError("empty entry in lexicon '" + name_ + "'");
            if (toks.size() > kMaxPhraseTokens) {
                throw DataError("entry '" + raw + "' in lexicon '" + name_ + "' exceeds 5 tokens");
            }
            std::string norm;
            for (const auto& t : toks) {
                if (!norm.empty()) norm += ' ';
                norm += t;
            }
            if (std::find(entries_.begin(), entries_.end(), norm) != entries_.end()) {
                throw DataError("duplicate entry '" + norm + "' in lexicon '" + name_ + "'");
            }
            by_first_[toks.front()].push_back(entries_.size());
            entries_.push_back(std::move(norm));
            phrases_.push_back(std::move(toks));
        }
    }

    Lexicon(std::string name, std::initializer_list<std::string> entries)
        : Lexicon(std::move(name), std::span<const std::string>(entries.begin(), entries.size())) {}

    const std::string& name() const noexcept { return name_; }
    std::span<const std::string> entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    struct Match {
        std::size_t entry;
        std::size_t position;
        std::size_t length;
    };

    /// Every occurrence of every entry as a whole-token run.
    std::vector<Match> find_all(std::span<const std::string> tokens) const {
        std::vector<Match> out;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            auto it = by_first_.find(tokens[i]);
            if (it == by_first_.end()) continue;
            for (std::size_t e : it->second) {
                const auto& ph = phrases_[e];
                if (i + ph.size() > tokens.size()) continue;
                if (std::equal(ph.begin(), ph.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
                    out.push_back({e, i, ph.size()});
                }
            }
        }
        return out;
    }

    const std::string& entry(std::size_t i) const { return entries_.at(i); }

private:
    std::string name_;
    std::vector<std::string> entries_;
    std::vector<std::vector<std::string>> phrases_;
    std::unordered_map<std::string, std::vector<std::size_t>> by_first_;
};

/// Matched entries, one per occurrence, in token order.
inline std::vector<std::string> match_lexicon(std::span<const std::string> tokens, const Lexicon& lexicon) {
    std::vector<std::string> out;
    for (const auto& m : lexicon.find_all(tokens)) out.push_back(lexicon.entry(m.entry));
    return out;
}

/// One entry per line, UTF-8, '#' starts a comment line.
inline Lexicon load_lexicon(const std::filesystem::path& path, std::string name = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open lexicon '" + path.string() + "'");
    std::vector<std::string> entries;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;
        entries.push_back(line.substr(first));
    }
    if (name.empty()) name = path.stem().string();
    return Lexicon(std::move(name), entries);
}

using CategoryLexiconSet = std::map<std::string, Lexicon>;

/// Loads categories/<name>.txt files from a directory.
inline CategoryLexiconSet load_categories(const std::filesystem::path& dir) {
    CategoryLexiconSet set;
    if (!std::filesystem::is_directory(dir)) throw DataError("no category directory '" + dir.string() + "'");
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        auto lex = load_lexicon(f);
        if (lex.empty()) throw DataError("category '" + lex.name() + "' has no entries");
        set.emplace(lex.name(), std::move(lex));
    }
    return set;
}

/// Token valences in [-1, 1] with optional subjectivity weights in [0, 1].
struct ValenceLexicon {
    struct Entry {
        double valence = 0.0;
        double subjectivity = 0.0;
    };
    std::unordered_map<std::string, Entry> entries;
    std::unordered_set<std::string> negations{"not", "no", "never", "nor", "none", "cannot", "dont", "isnt", "wasnt", "without"};
    std::size_t negation_window = 3;

    void add(const std::string& token, double valence, double subjectivity = 0.0) {
        if (!(valence >= -1.0 && valence <= 1.0)) throw DataError("valence of '" + token + "' outside [-1, 1]");
        if (!(subjectivity >= 0.0 && subjectivity <= 1.0)) {
            throw DataError("subjectivity of '" + token + "' outside [0, 1]");
        }
        entries[detail::lower_ascii(token)] = {valence, subjectivity};
    }
};

/// "token<TAB>valence[<TAB>subjectivity]" per line; '#' comments. A line
/// "!negation<TAB>word" adds a negation token.
inline ValenceLexicon load_valence_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open valence lexicon '" + path.string() + "'");
    ValenceLexicon vl;
    std::string line;
    bool custom_negations = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> parts;
        std::size_t start = 0;
        while (true) {
            auto tab = line.find('\t', start);
            parts.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        if (parts[0] == "!negation") {
            if (parts.size() < 2) throw DataError("negation line without a token");
            if (!custom_negations) vl.negations.clear();
            custom_negations = true;
            vl.negations.insert(detail::lower_ascii(parts[1]));
            continue;
        }
        if (parts.size() < 2) throw DataError("valence line without a value: '" + line + "'");
        vl.add(parts[0], csv::parse_double(parts[1]), parts.size() > 2 ? csv::parse_double(parts[2]) : 0.0);
    }
    return vl;
}

struct SentenceScore {
    double sentiment = 0.0;
    double subjectivity = 0.0;
    std::size_t matched = 0;
};

/// Mean valence over lexicon tokens, sign-flipped when a negation token
/// appears within the preceding window; mean subjectivity over the same
/// tokens. No matched token -> (0, 0).
inline SentenceScore sentence_sentiment(std::string_view sentence, const ValenceLexicon& vl) {
    const auto toks = tokenize(sentence);
    SentenceScore s;
    double val = 0.0, subj = 0.0;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        auto it = vl.entries.find(toks[i]);
        if (it == vl.entries.end()) continue;
        bool negated = false;
        for (std::size_t back = 1; back <= vl.negation_window && back <= i; ++back) {
            if (vl.negations.contains(toks[i - back])) {
                negated = true;
                break;
            }
        }
        val += negated ? -it->second.valence : it->second.valence;
        subj += it->second.subjectivity;
        ++s.matched;
    }
    if (s.matched) {
        s.sentiment = val / static_cast<double>(s.matched);
        s.subjectivity = subj / static_cast<double>(s.matched);
    }
    return s;
}

/// Per category: token positions covered by any category entry divided by
/// the number of word tokens (URL tokens excluded). No tokens -> zeros.
inline std::map<std::string, double> category_scores(std::span<const TweetRecord> tweets,
                                                     const CategoryLexiconSet& categories) {
    std::map<std::string, std::size_t> covered;
    for (const auto& [name, lex] : categories) covered[name] = 0;
    std::size_t total = 0;
    for (const auto& t : tweets) {
        auto toks = tokenize(t.text);
        std::erase(toks, std::string(kUrlToken));
        total += toks.size();
        for (const auto& [name, lex] : categories) {
            std::vector<char> hit(toks.size(), 0);
            for (const auto& m : lex.find_all(toks)) {
                for (std::size_t k = 0; k < m.length; ++k) hit[m.position + k] = 1;
            }
            covered[name] += static_cast<std::size_t>(std::count(hit.begin(), hit.end(), 1));
        }
    }
    std::map<std::string, double> out;
    for (const auto& [name, c] : covered) {
        out[name] = total ? static_cast<double>(c) / static_cast<double>(total) : 0.0;
    }
    return out;
}

enum class ProfanityMode {
    /// Matched profane tokens divided by tweet count.
    tokens_per_tweet,
    /// Share of tweets containing at least one profane token.
    share_of_tweets,
};

inline double profanity_rate(std::span<const TweetRecord> tweets, const Lexicon& badwords,
                             ProfanityMode mode = ProfanityMode::tokens_per_tweet) {
    if (tweets.empty()) throw DataError("profanity rate needs at least one tweet");
    std::size_t hits = 0;
    for (const auto& t : tweets) {
        const auto toks = tokenize(t.text);
        const auto m = badwords.find_all(toks).size();
        hits += mode == ProfanityMode::tokens_per_tweet ? m : (m > 0 ? 1 : 0);
    }
    return static_cast<double>(hits) / static_cast<double>(tweets.size());
}

inline std::string normalize_hashtag(std::string_view tag) {
    while (!tag.empty() && tag.front() == '#') tag.remove_prefix(1);
    return detail::lower_ascii(tag);
}

/// Case-folded hashtag counts, descending by count then lexicographic.
inline std::vector<std::pair<std::string, std::size_t>> hashtag_frequencies(std::span<const TweetRecord> tweets,
                                                                            std::size_t top_k) {
    if (top_k == 0) throw ConfigError("top_k must be at least 1");
    std::map<std::string, std::size_t> counts;
    for (const auto& t : tweets) {
        for (const auto& h : t.hashtags) {
            auto tag = normalize_hashtag(h);
            if (!tag.empty()) ++counts[tag];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> out(counts.begin(), counts.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    if (out.size() > top_k) out.resize(top_k);
    return out;
}

/// Lexical resources shared (read-only) by every per-user computation.
struct ContentResources {
    CategoryLexiconSet categories;
    ValenceLexicon valence;
    Lexicon badwords;
    ProfanityMode profanity_mode = ProfanityMode::tokens_per_tweet;
};

struct ContentProfile {
    std::map<std::string, double> category_occurrence;
    std::optional<double> sentiment;
    std::optional<double> subjectivity;
    std::optional<double> profanity_per_tweet;
    std::map<std::string, std::size_t> hashtag_counts;
    std::optional<double> url_per_tweet;
    std::optional<double> hashtag_per_tweet;
};

/// Content features of one timeline. Rates are missing for an empty timeline.
inline ContentProfile profile_content(std::span<const TweetRecord> tweets, const ContentResources& res) {
    ContentProfile p;
    p.category_occurrence = category_scores(tweets, res.categories);
    if (tweets.empty()) return p;

    double sent = 0.0, subj = 0.0;
    std::size_t sentences = 0, urls = 0, tags = 0;
    for (const auto& t : tweets) {
        for (const auto& s : split_sentences(t.text)) {
            if (tokenize(s).empty()) continue;
            const auto score = sentence_sentiment(s, res.valence);
            sent += score.sentiment;
            subj += score.subjectivity;
            ++sentences;
        }
        urls += t.urls.size();
        tags += t.hashtags.size();
        for (const auto& h : t.hashtags) {
            auto tag = normalize_hashtag(h);
            if (!tag.empty()) ++p.hashtag_counts[tag];
        }
    }
    const double n = static_cast<double>(tweets.size());
    if (sentences) {
        p.sentiment = sent / static_cast<double>(sentences);
        p.subjectivity = subj / static_cast<double>(sentences);
    }
    p.profanity_per_tweet = profanity_rate(tweets, res.badwords, res.profanity_mode);
    p.url_per_tweet = static_cast<double>(urls) / n;
    p.hashtag_per_tweet = static_cast<double>(tags) / n;
    return p;
}

}  // namespace hatescope
