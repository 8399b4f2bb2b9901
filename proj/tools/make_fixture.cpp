// Writes the bundled 300-user synthetic fixture.
//
//   make_fixture <out-dir> [seed]
//
// Users 1001..1030 are the planted hateful group: several times the posting
// rate of everyone else, a densely inter-retweeting core that the other
// users also retweet, and tweets drawing on the hate lexicon. Users
// 1031..1120 are labeled normal; the rest are unlabeled.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hatescope/rng.hpp"
#include "hatescope/types.hpp"

namespace fs = std::filesystem;
using namespace hatescope;

namespace {

constexpr std::uint64_t kFirst = 1001;
constexpr std::size_t kUsers = 300;
constexpr std::size_t kHateful = 30;
constexpr std::size_t kNormalLabeled = 90;

const std::vector<std::string> kHate{"invaders", "vermin", "parasites", "subhumans", "go back home",
                                     "degenerates", "infestation"};
const std::vector<std::string> kProfanity{"damn", "crap", "bloody", "hell", "bastards", "screw"};

const std::vector<std::pair<std::string, std::vector<std::string>>> kCategories{
    {"hate", {"hate", "despise", "loathe", "detest", "bigot"}},
    {"anger", {"angry", "furious", "rage", "outraged", "mad"}},
    {"shame", {"shame", "disgrace", "humiliated", "ashamed", "embarrassing"}},
    {"terrorism", {"terror", "terrorist", "bomb", "jihad", "attack"}},
    {"violence", {"kill", "fight", "destroy", "shoot", "beat"}},
    {"sadness", {"sad", "cry", "grief", "lonely", "miss"}},
    {"positive_emotion", {"happy", "great", "wonderful", "joy", "glad"}},
    {"negative_emotion", {"awful", "terrible", "horrible", "upset", "miserable"}},
    {"suffering", {"pain", "suffer", "hurt", "agony", "struggle"}},
    {"work", {"work", "office", "job", "meeting", "project"}},
    {"love", {"love", "adore", "darling", "sweetheart", "cherish"}},
    {"swearing", {"damn", "crap", "hell", "bloody", "freaking"}},
};

const std::vector<std::tuple<std::string, double, double>> kValence{
    {"good", 0.6, 0.6},     {"great", 0.8, 0.75},   {"happy", 0.8, 1.0},     {"wonderful", 1.0, 1.0},
    {"love", 0.5, 0.6},     {"glad", 0.5, 1.0},     {"nice", 0.6, 1.0},      {"bad", -0.7, 0.67},
    {"awful", -1.0, 1.0},   {"terrible", -1.0, 1.0}, {"horrible", -1.0, 1.0}, {"hate", -0.8, 0.9},
    {"sad", -0.5, 1.0},     {"angry", -0.5, 1.0},   {"disgusting", -1.0, 1.0}, {"vermin", -0.9, 0.8},
    {"parasites", -0.9, 0.8}, {"degenerates", -0.9, 0.9}, {"furious", -0.8, 1.0}, {"fine", 0.4, 0.5},
};

const std::vector<std::string> kNeutral{"the",   "today", "news",  "people", "city",   "time",  "game",
                                        "watch", "read",  "this",  "new",    "week",   "vote",  "world",
                                        "just",  "think", "about", "going",  "really", "state", "school"};
const std::vector<std::string> kPositive{"good", "great", "happy", "wonderful", "nice", "glad", "fine"};
const std::vector<std::string> kNegative{"bad", "awful", "terrible", "horrible", "disgusting", "angry", "sad"};

const std::vector<std::string> kHatefulTags{"MAGA", "BuildTheWall", "WhiteGenocide", "Invasion", "NoMoreRefugees"};
const std::vector<std::string> kNormalTags{"NBA", "Music", "Travel", "Foodie", "Photography", "Coffee", "Weekend"};
const std::vector<std::string> kSharedTags{"News", "Politics", "Election2016"};

template <class T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[uniform_index(rng, v.size())];
}

bool coin(Rng& rng, double p) { return uniform_unit(rng) < p; }

std::string day_time(std::int64_t epoch_seconds) {
    return format_timestamp(Timestamp{std::chrono::seconds{epoch_seconds}});
}

std::ofstream open(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_fixture <out-dir> [seed]\n";
        return 2;
    }
    const fs::path dir = argv[1];
    const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 20170601;
    Rng rng = make_rng(seed);

    const std::int64_t snapshot = parse_timestamp("2017-10-01T00:00:00Z").time_since_epoch().count();
    const std::int64_t created_lo = parse_timestamp("2008-01-01T00:00:00Z").time_since_epoch().count();
    const std::int64_t created_hi = parse_timestamp("2017-01-01T00:00:00Z").time_since_epoch().count();
    const std::int64_t tweets_lo = parse_timestamp("2017-03-01T00:00:00Z").time_since_epoch().count();
    const std::int64_t tweets_span = 180LL * 86400;

    auto hateful = [](std::size_t i) { return i < kHateful; };
    auto id_of = [](std::size_t i) { return kFirst + i; };

    {
        auto out = open(dir / "users.jsonl");
        for (std::size_t i = 0; i < kUsers; ++i) {
            // Planted users skew toward newer accounts.
            const double u = uniform_unit(rng);
            const double shaped = hateful(i) ? 1.0 - (1.0 - u) * (1.0 - u) : u;
            const std::int64_t created = created_lo + static_cast<std::int64_t>(shaped * (created_hi - created_lo));
            const double age_days = static_cast<double>(snapshot - created) / 86400.0;
            const double rate = hateful(i) ? 40.0 + 40.0 * uniform_unit(rng) : 2.0 + 12.0 * uniform_unit(rng);
            const double followers = hateful(i) ? 0.5 + uniform_unit(rng) : 0.2 + 0.8 * uniform_unit(rng);
            nlohmann::json j{{"id", id_of(i)},
                             {"created_at", day_time(created)},
                             {"statuses_count", static_cast<std::uint64_t>(rate * age_days)},
                             {"followers_count", static_cast<std::uint64_t>(followers * age_days)},
                             {"followees_count", static_cast<std::uint64_t>((0.3 + uniform_unit(rng)) * age_days)},
                             {"favorites_count", static_cast<std::uint64_t>((1.0 + 5.0 * uniform_unit(rng)) * age_days)},
                             {"suspended", coin(rng, hateful(i) ? 0.1 : 0.01)}};
            out << j.dump() << '\n';
        }
    }

    {
        auto out = open(dir / "tweets.jsonl");
        std::uint64_t next_tweet = 900000000;
        for (std::size_t i = 0; i < kUsers; ++i) {
            const bool h = hateful(i);
            const std::size_t count = h ? 30 + uniform_index(rng, 20) : 8 + uniform_index(rng, 12);
            for (std::size_t k = 0; k < count; ++k) {
                nlohmann::json t{{"id", next_tweet++},
                                 {"user_id", id_of(i)},
                                 {"created_at", day_time(tweets_lo + static_cast<std::int64_t>(
                                                                         uniform_index(rng, tweets_span)))}};
                std::vector<std::string> words;
                const std::size_t len = 6 + uniform_index(rng, 8);
                for (std::size_t w = 0; w < len; ++w) {
                    const double r = uniform_unit(rng);
                    if (r < 0.12) {
                        words.push_back(pick(rng, kCategories).second[uniform_index(rng, 5)]);
                    } else if (r < 0.22) {
                        words.push_back(pick(rng, h ? kNegative : (coin(rng, 0.7) ? kPositive : kNegative)));
                    } else {
                        words.push_back(pick(rng, kNeutral));
                    }
                }
                if (h && coin(rng, 0.45)) words.insert(words.begin() + 1, pick(rng, kHate));
                if (coin(rng, h ? 0.35 : 0.05)) words.push_back(pick(rng, kProfanity));
                if (coin(rng, 0.3)) words.insert(words.begin(), "not");

                // Retweets: the planted core retweets itself; everyone else
                // mostly retweets the core plus some ordinary accounts.
                std::optional<std::uint64_t> target;
                if (coin(rng, h ? 0.5 : 0.4)) {
                    std::size_t j;
                    if (h) {
                        // Mostly each other, sometimes unlabeled accounts 1121..1160.
                        j = coin(rng, 0.75) ? uniform_index(rng, kHateful)
                                            : kHateful + kNormalLabeled + uniform_index(rng, 40);
                    } else if (coin(rng, 0.5)) {
                        j = uniform_index(rng, kHateful);
                    } else {
                        j = kHateful + uniform_index(rng, kUsers - kHateful);
                    }
                    if (j != i) target = id_of(j);
                }
                std::string text;
                if (target) text = "RT @user" + std::to_string(*target) + ": ";
                for (std::size_t w = 0; w < words.size(); ++w) text += (w ? " " : "") + words[w];

                std::vector<std::string> tags;
                if (coin(rng, 0.6)) tags.push_back(pick(rng, h ? kHatefulTags : kNormalTags));
                if (coin(rng, 0.2)) tags.push_back(pick(rng, kSharedTags));
                for (const auto& tag : tags) text += " #" + tag;
                std::vector<std::string> urls;
                if (coin(rng, h ? 0.15 : 0.3)) {
                    urls.push_back("https://example.org/a/" + std::to_string(uniform_index(rng, 100000)));
                    text += " " + urls.back();
                }
                t["text"] = text;
                if (target) t["retweeted_user_id"] = *target;
                t["hashtags"] = tags;
                t["urls"] = urls;
                out << t.dump() << '\n';
            }
        }
    }

    {
        auto out = open(dir / "labels.csv");
        out << "user_id,label,votes_for,votes_against,n_annotators\n";
        for (std::size_t i = 0; i < kHateful + kNormalLabeled; ++i) {
            const bool split = coin(rng, 0.15);
            out << id_of(i) << ',' << (hateful(i) ? "hateful" : "not_hateful") << ','
                << (split ? "3,2,5" : "3,0,3") << '\n';
        }
    }

    {
        auto out = open(dir / "lexicons/hate.txt");
        out << "# synthetic hate lexicon for the fixture\n";
        for (const auto& w : kHate) out << w << '\n';
    }
    {
        auto out = open(dir / "lexicons/profanity.txt");
        out << "# synthetic profanity list\n";
        for (const auto& w : kProfanity) out << w << '\n';
    }
    for (const auto& [name, words] : kCategories) {
        auto out = open(dir / "lexicons/categories" / (name + ".txt"));
        for (const auto& w : words) out << w << '\n';
    }
    {
        auto out = open(dir / "lexicons/valence.tsv");
        out << "# token\tvalence\tsubjectivity\n";
        for (const auto& [w, v, s] : kValence) out << w << '\t' << v << '\t' << s << '\n';
        for (const char* n : {"not", "no", "never", "nothing"}) out << "!negation\t" << n << '\n';
    }
    {
        auto out = open(dir / "config.toml");
        out << "# fixture run; paths are relative to the repository root\n"
               "seed = 20170601\n"
               "work = \"work\"\n\n"
               "[ingest]\n"
               "users = \"data/fixture/users.jsonl\"\n"
               "tweets = \"data/fixture/tweets.jsonl\"\n\n"
               "[mark]\n"
               "lexicon = \"data/fixture/lexicons/hate.txt\"\n\n"
               "[diffuse]\n"
               "t = 2\n"
               "boundaries = \"0.25,0.5,0.75\"\n"
               "cap = 1500\n\n"
               "[import-labels]\n"
               "from = \"data/fixture/labels.csv\"\n\n"
               "[features]\n"
               "snapshot-date = \"2017-10-01T00:00:00Z\"\n"
               "categories = \"data/fixture/lexicons/categories\"\n"
               "valence = \"data/fixture/lexicons/valence.tsv\"\n"
               "profanity = \"data/fixture/lexicons/profanity.txt\"\n"
               "profanity-mode = \"tokens_per_tweet\"\n\n"
               "[report]\n"
               "resamples = 2000\n"
               "top-k = 20\n";
    }
    std::cout << "fixture written to " << dir.string() << '\n';
    return 0;
}
