#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "hatescope/annotation.hpp"
#include "hatescope/centrality.hpp"
#include "hatescope/content.hpp"
#include "hatescope/crawler.hpp"
#include "hatescope/csv.hpp"
#include "hatescope/diffusion.hpp"
#include "hatescope/error.hpp"
#include "hatescope/features.hpp"
#include "hatescope/graph.hpp"
#include "hatescope/ingest.hpp"
#include "hatescope/labels.hpp"
#include "hatescope/plots.hpp"
#include "hatescope/records.hpp"
#include "hatescope/report.hpp"
#include "hatescope/rng.hpp"
#include "hatescope/stats.hpp"

#ifndef HATESCOPE_VERSION
#define HATESCOPE_VERSION "0.0.0"
#endif

namespace hatescope::pipeline {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

// --- hashing ----------------------------------------------------------------

inline std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw Error("SHA-256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), md, &len);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

// --- artifacts and manifest ------------------------------------------------

struct Artifact {
    const char* path;   // relative to the work directory
    const char* stage;  // stage that writes it
};

inline constexpr Artifact kUsers{"ingest/users.jsonl", "ingest"};
inline constexpr Artifact kTweets{"ingest/tweets.jsonl", "ingest"};
inline constexpr Artifact kEdges{"ingest/graph_edges.csv", "ingest"};
inline constexpr Artifact kIdMap{"ingest/graph_ids.csv", "ingest"};
inline constexpr Artifact kIngestReport{"ingest/ingest_report.json", "ingest"};
inline constexpr Artifact kHits{"mark/lexicon_hits.csv", "mark"};
inline constexpr Artifact kBeliefs{"diffuse/beliefs.csv", "diffuse"};
inline constexpr Artifact kSample{"diffuse/sample.csv", "diffuse"};
inline constexpr Artifact kTasks{"sample/tasks.json", "sample"};
inline constexpr Artifact kJournal{"annotation/journal.jsonl", "serve"};
inline constexpr Artifact kLabels{"labels/labels.csv", "import-labels"};
inline constexpr Artifact kFeatures{"features/features.csv", "features"};
inline constexpr Artifact kCentrality{"centrality/centrality.csv", "centrality"};
inline constexpr Artifact kTrace{"crawl/trace.jsonl", "crawl"};

/// Per-stage record of inputs, outputs (with SHA-256), config and seed,
/// kept in <work>/manifest.json.
class Manifest {
public:
    explicit Manifest(fs::path work) : path_(std::move(work) / "manifest.json") {
        if (fs::exists(path_)) {
            std::ifstream in(path_);
            data_ = ojson::parse(in, nullptr, false);
            if (data_.is_discarded() || !data_.is_object()) throw DataError("corrupt manifest '" + path_.string() + "'");
        }
        data_["version"] = HATESCOPE_VERSION;
        if (!data_.contains("stages")) data_["stages"] = ojson::object();
    }

    const ojson& stage(const std::string& name) const {
        static const ojson none;
        auto& s = data_.at("stages");
        return s.contains(name) ? s.at(name) : none;
    }

    /// Warnings for a rerun whose config or seed differs from the recorded run.
    std::vector<std::string> compare(const std::string& name, const ojson& config, std::uint64_t seed) const {
        std::vector<std::string> w;
        const auto& prev = stage(name);
        if (prev.is_null()) return w;
        if (prev.value("seed", seed) != seed) {
            w.push_back("stage '" + name + "' was previously run with seed " + std::to_string(prev.value("seed", 0ULL)) +
                        ", now " + std::to_string(seed));
        }
        if (prev.contains("config") && prev.at("config") != config) {
            w.push_back("stage '" + name + "' config differs from the previous run");
        }
        return w;
    }

    /// The recorded hash of an artifact, if the producing stage ran.
    std::optional<std::string> recorded_hash(const Artifact& a) const {
        const auto& s = stage(a.stage);
        if (s.is_null() || !s.contains("outputs") || !s.at("outputs").contains(a.path)) return std::nullopt;
        return s.at("outputs").at(a.path).get<std::string>();
    }

    void record(const std::string& name, const ojson& config, std::uint64_t seed, const ojson& inputs,
                const ojson& outputs) {
        data_["stages"][name] = {{"version", HATESCOPE_VERSION},
                                 {"seed", seed},
                                 {"config", config},
                                 {"inputs", inputs},
                                 {"outputs", outputs}};
    }

    void save() const {
        fs::create_directories(path_.parent_path());
        const auto tmp = fs::path(path_.string() + ".tmp");
        {
            std::ofstream out(tmp);
            out << data_.dump(2) << '\n';
            if (!out) throw Error("cannot write manifest");
        }
        fs::rename(tmp, path_);
    }

    const ojson& data() const noexcept { return data_; }

private:
    fs::path path_;
    ojson data_ = ojson::object();
};

/// Shared state of one CLI invocation.
struct Context {
    fs::path work = "work";
    std::uint64_t root_seed = 0;
    std::ostream* log = &std::cerr;

    fs::path at(const Artifact& a) const { return work / a.path; }

    std::uint64_t stage_seed(const std::string& stage, std::optional<std::uint64_t> override_seed) const {
        return override_seed ? *override_seed : derive_seed(root_seed, stage);
    }

    void warn(const std::string& msg) const {
        if (log) *log << "warning: " << msg << '\n';
    }
};

/// Throws MissingArtifactError naming the producing stage; warns when the
/// file no longer matches the hash its stage recorded.
inline fs::path require(const Context& ctx, const Manifest& m, const Artifact& a) {
    const auto p = ctx.at(a);
    if (!fs::exists(p)) throw MissingArtifactError(a.path, a.stage);
    if (auto h = m.recorded_hash(a); h && *h != sha256_file(p)) {
        ctx.warn(std::string(a.path) + " changed since the '" + a.stage + "' stage wrote it");
    }
    return p;
}

inline fs::path require_input(const fs::path& p, const std::string& what) {
    if (p.empty()) throw ConfigError("no " + what + " given");
    if (!fs::exists(p)) throw ConfigError(what + " '" + p.string() + "' does not exist");
    return p;
}

namespace detail {

inline ojson hashes(const Context& ctx, const std::vector<fs::path>& paths) {
    ojson j = ojson::object();
    for (const auto& p : paths) {
        const auto rel = p.lexically_relative(ctx.work);
        const std::string key = !rel.empty() && *rel.begin() != ".." ? rel.generic_string() : p.generic_string();
        j[key] = sha256_file(p);
    }
    return j;
}

inline void finish(const Context& ctx, Manifest& m, const std::string& stage, const ojson& config, std::uint64_t seed,
                   const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
    for (const auto& w : m.compare(stage, config, seed)) ctx.warn(w);
    m.record(stage, config, seed, hashes(ctx, inputs), hashes(ctx, outputs));
    m.save();
}

inline std::ofstream open_out(const fs::path& p) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error("cannot write '" + p.string() + "'");
    return out;
}

inline std::vector<UserRecord> load_users(const fs::path& p) {
    std::ifstream in(p);
    IngestReport r;
    auto users = read_users(in, r);
    if (r.rows_rejected) throw DataError("'" + p.string() + "' has " + std::to_string(r.rows_rejected) + " bad rows");
    return users;
}

inline std::vector<TweetRecord> load_tweets(const fs::path& p) {
    std::ifstream in(p);
    IngestReport r;
    auto tweets = read_tweets(in, r);
    if (r.rows_rejected) throw DataError("'" + p.string() + "' has " + std::to_string(r.rows_rejected) + " bad rows");
    return tweets;
}

inline RetweetGraph load_graph(const Context& ctx, const Manifest& m) {
    return load_snapshot(require(ctx, m, kEdges).string(), require(ctx, m, kIdMap).string());
}

inline std::unordered_map<UserId, std::vector<TweetRecord>> by_user(std::vector<TweetRecord> tweets) {
    std::unordered_map<UserId, std::vector<TweetRecord>> out;
    for (auto& t : tweets) out[t.user_id].push_back(std::move(t));
    return out;
}

inline std::vector<UserId> read_id_column(const fs::path& p) {
    const auto t = csv::read_file(p.string());
    std::vector<UserId> ids;
    for (const auto& row : t.rows) ids.push_back(parse_user_id(row.at(0)));
    return ids;
}

/// Runs f(i) for i in [0, n) on up to `threads` workers.
template <class F>
void parallel_for(std::size_t n, unsigned threads, F&& f) {
    threads = std::max(1u, threads);
    if (threads == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += threads) f(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace detail

// --- ingest -----------------------------------------------------------------

struct IngestOptions {
    fs::path users;
    fs::path tweets;
};

inline IngestReport run_ingest(const Context& ctx, const IngestOptions& opt) {
    Manifest m(ctx.work);
    require_input(opt.users, "users file");
    require_input(opt.tweets, "tweets file");
    IngestReport report;
    std::vector<UserRecord> users;
    std::vector<TweetRecord> tweets;
    {
        std::ifstream in(opt.users);
        users = read_users(in, report);
    }
    {
        std::ifstream in(opt.tweets);
        tweets = read_tweets(in, report);
    }
    tweets = cap_timelines(std::move(tweets), kTimelineCap, &report);
    auto [graph, build] = build_retweet_graph(tweets, users);

    // First record wins for duplicate users; tweets by unknown authors are dropped.
    std::set<UserId> seen;
    std::vector<UserRecord> kept_users;
    for (auto& u : users) {
        if (seen.insert(u.id).second) kept_users.push_back(std::move(u));
    }
    std::erase_if(tweets, [&](const TweetRecord& t) { return !seen.contains(t.user_id); });

    {
        auto out = detail::open_out(ctx.at(kUsers));
        for (const auto& u : kept_users) out << to_json(u).dump() << '\n';
    }
    {
        auto out = detail::open_out(ctx.at(kTweets));
        for (const auto& t : tweets) out << to_json(t).dump() << '\n';
    }
    fs::create_directories(ctx.at(kEdges).parent_path());
    save_snapshot(graph, ctx.at(kEdges).string(), ctx.at(kIdMap).string());
    {
        auto out = detail::open_out(ctx.at(kIngestReport));
        nlohmann::json j{{"parse", report}, {"graph", build}};
        j["nodes"] = graph.node_count();
        j["edges"] = graph.edge_count();
        out << j.dump(2) << '\n';
    }
    detail::finish(ctx, m, "ingest", {{"users", opt.users.string()}, {"tweets", opt.tweets.string()}}, ctx.root_seed,
                   {opt.users, opt.tweets},
                   {ctx.at(kUsers), ctx.at(kTweets), ctx.at(kEdges), ctx.at(kIdMap), ctx.at(kIngestReport)});
    return report;
}

/// Numeric option value; malformed text is a configuration error.
inline double option_number(std::string_view text, std::string_view option) {
    try {
        return csv::parse_double(text);
    } catch (const DataError&) {
        throw ConfigError(std::string(option) + ": '" + std::string(text) + "' is not a number");
    }
}

// --- crawl ------------------------------------------------------------------

struct CrawlOptions {
    std::string model = "configuration";
    std::size_t n = 2000;
    double w = 10.0;
    /// 0 means n / 5.
    std::size_t budget = 0;
    std::size_t walkers = 1;
    double edge_probability = 0.01;
    std::size_t out_edges_per_node = 2;
    /// Out-degree law for the configuration model, "k:p,k:p,...".
    std::string degree_law = "2:0.9,3:0.1";
    /// Use the ingested retweet graph as the hidden network instead.
    bool from_graph = false;
    std::optional<std::uint64_t> seed;
};

/// Deterministic out-degree sequence realizing a "k:p,..." law over n nodes
/// (largest-remainder rounding of the counts).
inline std::vector<std::size_t> degree_sequence(const std::string& law, std::size_t n) {
    std::vector<std::pair<std::size_t, double>> parts;
    std::stringstream ss(law);
    std::string item;
    double total = 0.0;
    while (std::getline(ss, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ConfigError("degree law entry '" + item + "' is not k:p");
        const double k = option_number(item.substr(0, colon), "degree law");
        const double p = option_number(item.substr(colon + 1), "degree law");
        if (k < 0 || k != std::floor(k) || !(p >= 0.0)) throw ConfigError("bad degree law entry '" + item + "'");
        parts.emplace_back(static_cast<std::size_t>(k), p);
        total += p;
    }
    if (parts.empty() || !(total > 0.0)) throw ConfigError("empty degree law");
    std::vector<std::size_t> counts(parts.size());
    std::vector<std::pair<double, std::size_t>> rem;
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        const double exact = parts[i].second / total * static_cast<double>(n);
        counts[i] = static_cast<std::size_t>(std::floor(exact));
        assigned += counts[i];
        rem.emplace_back(-(exact - std::floor(exact)), i);
    }
    std::sort(rem.begin(), rem.end());
    for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[rem[k % rem.size()].second];
    std::vector<std::size_t> seq;
    for (std::size_t i = 0; i < parts.size(); ++i) seq.insert(seq.end(), counts[i], parts[i].first);
    return seq;
}

struct CrawlResult {
    DegreeDistribution estimate;
    DegreeDistribution truth;
    double l1 = 0.0;
    std::uint64_t queries = 0;
    std::size_t visits = 0;
};

inline CrawlResult run_crawl(const Context& ctx, const CrawlOptions& opt) {
    Manifest m(ctx.work);
    const std::uint64_t seed = ctx.stage_seed("crawl", opt.seed);
    std::vector<fs::path> inputs;
    std::optional<GraphOracle> oracle;
    if (opt.from_graph) {
        oracle.emplace(detail::load_graph(ctx, m));
        inputs = {ctx.at(kEdges), ctx.at(kIdMap)};
    } else {
        SyntheticParams p;
        p.edge_probability = opt.edge_probability;
        p.out_edges_per_node = opt.out_edges_per_node;
        const auto model = parse_synthetic_model(opt.model);
        if (model == SyntheticModel::configuration) p.out_degrees = degree_sequence(opt.degree_law, opt.n);
        oracle.emplace(generate_synthetic_graph(model, opt.n, p, derive_seed(seed, "graph")));
    }
    const std::size_t n = oracle->ground_truth().node_count();
    const std::size_t budget = opt.budget ? opt.budget : std::max<std::size_t>(1, n / 5);
    if (opt.walkers == 0) throw ConfigError("walkers must be at least 1");
    std::vector<std::uint64_t> seeds;
    for (std::size_t i = 0; i < opt.walkers; ++i) seeds.push_back(derive_seed(seed, "walker-" + std::to_string(i)));
    const auto traces = durw_sample_parallel(*oracle, opt.w, budget, seeds);
    const auto merged = merge_traces(traces);

    CrawlResult r;
    r.estimate = estimate_outdegree_distribution(merged);
    r.truth = true_outdegree_distribution(oracle->ground_truth());
    r.l1 = l1_distance(r.estimate, r.truth);
    r.queries = oracle->query_count();
    r.visits = merged.visits.size();

    {
        auto out = detail::open_out(ctx.at(kTrace));
        write_trace_jsonl(merged, out);
    }
    const auto est_path = ctx.work / "crawl/estimate.csv";
    {
        auto out = detail::open_out(est_path);
        out << "out_degree,estimated,true\n";
        std::set<std::size_t> ks;
        for (auto [k, v] : r.estimate.mass) ks.insert(k);
        for (auto [k, v] : r.truth.mass) ks.insert(k);
        for (auto k : ks) {
            auto e = r.estimate.mass.find(k);
            auto t = r.truth.mass.find(k);
            out << k << ',' << csv::format_double(e == r.estimate.mass.end() ? 0.0 : e->second) << ','
                << csv::format_double(t == r.truth.mass.end() ? 0.0 : t->second) << '\n';
        }
    }
    const auto summary_path = ctx.work / "crawl/summary.json";
    const ojson config{{"model", opt.from_graph ? std::string("ingested-graph") : opt.model},
                       {"n", n},
                       {"w", opt.w},
                       {"budget", budget},
                       {"walkers", opt.walkers},
                       {"edge_probability", opt.edge_probability},
                       {"out_edges_per_node", opt.out_edges_per_node},
                       {"degree_law", opt.degree_law}};
    {
        auto out = detail::open_out(summary_path);
        out << ojson{{"config", config}, {"seed", seed}, {"visits", r.visits}, {"oracle_queries", r.queries},
                     {"l1_distance", r.l1}}
                   .dump(2)
            << '\n';
    }
    detail::finish(ctx, m, "crawl", config, seed, inputs, {ctx.at(kTrace), est_path, summary_path});
    return r;
}

// --- mark -------------------------------------------------------------------

struct MarkOptions {
    fs::path lexicon;
};

/// Users whose tweets contain any lexicon entry; returns the hit count.
inline std::size_t run_mark(const Context& ctx, const MarkOptions& opt) {
    Manifest m(ctx.work);
    require_input(opt.lexicon, "hate lexicon");
    const auto users_path = require(ctx, m, kUsers);
    const auto tweets_path = require(ctx, m, kTweets);
    const auto lex = load_lexicon(opt.lexicon);
    std::map<UserId, std::size_t> hits;
    for (const auto& t : detail::load_tweets(tweets_path)) {
        const auto n = lex.find_all(tokenize(t.text)).size();
        if (n) hits[t.user_id] += n;
    }
    {
        auto out = detail::open_out(ctx.at(kHits));
        out << "user_id,matches\n";
        for (auto [u, n] : hits) out << u.value << ',' << n << '\n';
    }
    detail::finish(ctx, m, "mark", {{"lexicon", opt.lexicon.string()}, {"entries", lex.entries().size()}},
                   ctx.root_seed, {opt.lexicon, users_path, tweets_path}, {ctx.at(kHits)});
    return hits.size();
}

// --- diffuse ----------------------------------------------------------------

struct DiffuseOptions {
    std::size_t t = 2;
    std::string boundaries = "0.25,0.5,0.75";
    std::size_t cap = kDefaultStratumCap;
    bool transpose = false;
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
};

inline StrataBoundaries parse_boundaries(const std::string& text) {
    StrataBoundaries b{};
    std::stringstream ss(text);
    std::string item;
    std::size_t i = 0;
    while (std::getline(ss, item, ',')) {
        if (i == 3) throw ConfigError("boundaries need exactly three values");
        b[i++] = option_number(item, "boundaries");
    }
    if (i != 3) throw ConfigError("boundaries need exactly three values");
    if (!(0.0 < b[0] && b[0] < b[1] && b[1] < b[2] && b[2] <= 1.0)) {
        throw ConfigError("boundaries must increase strictly within (0, 1]");
    }
    return b;
}

struct DiffuseResult {
    std::array<std::size_t, 4> stratum_sizes{};
    std::array<std::size_t, 4> sampled{};
};

/// Beliefs for every node, then the stratified sample over users with a
/// profile (materialized nodes cannot be annotated).
inline DiffuseResult run_diffuse(const Context& ctx, const DiffuseOptions& opt) {
    const auto bounds = parse_boundaries(opt.boundaries);
    Manifest m(ctx.work);
    const auto hits_path = require(ctx, m, kHits);
    const auto graph = detail::load_graph(ctx, m);
    const std::uint64_t seed = ctx.stage_seed("diffuse", opt.seed);
    const auto hits = detail::read_id_column(hits_path);
    const auto T = build_transition_matrix(
        graph, opt.transpose ? MatrixOrientation::transposed : MatrixOrientation::retweeter_averages_sources);
    const auto p = diffuse(T, seed_beliefs(graph, hits), opt.t, opt.threads);
    const auto strata = stratify(p, bounds);

    StrataAssignment profiled;
    profiled.boundaries = bounds;
    std::vector<RetweetGraph::Index> back;
    for (RetweetGraph::Index i = 0; i < graph.node_count(); ++i) {
        if (!graph.has_profile(i)) continue;
        profiled.stratum.push_back(strata.stratum[i]);
        back.push_back(i);
    }
    std::vector<RetweetGraph::Index> picked;
    for (auto k : stratified_sample(profiled, opt.cap, seed)) picked.push_back(back[k]);
    std::sort(picked.begin(), picked.end(), [&](auto a, auto b) { return graph.id_of(a) < graph.id_of(b); });

    DiffuseResult r;
    for (auto s : profiled.stratum) ++r.stratum_sizes[s - 1];
    {
        auto out = detail::open_out(ctx.at(kBeliefs));
        write_beliefs_csv(graph, p, strata, out);
    }
    {
        auto out = detail::open_out(ctx.at(kSample));
        out << "user_id,belief,stratum\n";
        for (auto i : picked) {
            ++r.sampled[strata.stratum[i] - 1];
            out << graph.id_of(i).value << ',' << csv::format_double(p.values[i]) << ','
                << static_cast<int>(strata.stratum[i]) << '\n';
        }
    }
    const ojson config{{"t", opt.t},
                       {"boundaries", opt.boundaries},
                       {"cap", opt.cap},
                       {"orientation", opt.transpose ? "transposed" : "retweeter_averages_sources"}};
    detail::finish(ctx, m, "diffuse", config, seed, {hits_path, ctx.at(kEdges), ctx.at(kIdMap)},
                   {ctx.at(kBeliefs), ctx.at(kSample)});
    return r;
}

// --- sample (task cards) ----------------------------------------------------

struct SampleOptions {
    std::size_t top_hashtags = 10;
};

inline nlohmann::json user_card(const UserRecord* u, const std::vector<TweetRecord>& timeline, std::size_t top_k) {
    nlohmann::json card;
    card["profile"] = u ? to_json(*u) : nlohmann::json(nullptr);
    auto recent = recent_timeline(timeline);
    std::reverse(recent.begin(), recent.end());  // newest first for reading
    nlohmann::json tweets = nlohmann::json::array();
    for (const auto& t : recent) {
        tweets.push_back({{"created_at", format_timestamp(t.created_at)},
                          {"text", t.text},
                          {"hashtags", t.hashtags},
                          {"urls", t.urls}});
    }
    card["tweets"] = tweets;
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& [tag, n] : hashtag_frequencies(recent, std::max<std::size_t>(top_k, 1))) {
        tags.push_back({{"tag", tag}, {"count", n}});
    }
    card["hashtags"] = tags;
    return card;
}

inline std::size_t run_sample(const Context& ctx, const SampleOptions& opt) {
    Manifest m(ctx.work);
    const auto sample_path = require(ctx, m, kSample);
    const auto users_path = require(ctx, m, kUsers);
    const auto tweets_path = require(ctx, m, kTweets);
    const auto users = detail::load_users(users_path);
    std::unordered_map<UserId, const UserRecord*> profile;
    for (const auto& u : users) profile[u.id] = &u;
    auto timelines = detail::by_user(detail::load_tweets(tweets_path));
    nlohmann::json tasks = nlohmann::json::array();
    for (UserId id : detail::read_id_column(sample_path)) {
        auto it = profile.find(id);
        tasks.push_back({{"user_id", id.value},
                         {"card", user_card(it == profile.end() ? nullptr : it->second, timelines[id], opt.top_hashtags)}});
    }
    {
        auto out = detail::open_out(ctx.at(kTasks));
        out << nlohmann::json{{"tasks", tasks}}.dump() << '\n';
    }
    detail::finish(ctx, m, "sample", {{"top_hashtags", opt.top_hashtags}}, ctx.root_seed,
                   {sample_path, users_path, tweets_path}, {ctx.at(kTasks)});
    return tasks.size();
}

/// Loads the task file into a service, skipping users that already have a
/// task (recovered from the journal).
inline std::size_t load_tasks_into(annotation::AnnotationService& service, const fs::path& tasks_path) {
    std::ifstream in(tasks_path);
    const auto j = nlohmann::json::parse(in);
    const auto existing = service.state();
    std::set<std::uint64_t> have;
    for (const auto& t : existing.at("tasks")) have.insert(t.at("user_id").get<std::uint64_t>());
    std::vector<annotation::TaskSpec> specs;
    for (const auto& t : j.at("tasks")) {
        const auto id = t.at("user_id").get<std::uint64_t>();
        if (!have.contains(id)) specs.push_back({UserId{id}, t.at("card")});
    }
    service.create_tasks(specs);
    return specs.size();
}

// --- import-labels ----------------------------------------------------------

struct ImportLabelsOptions {
    /// A labels CSV; when empty (or `replay` is set) the journal is replayed.
    fs::path from;
    fs::path journal;
    bool replay = false;
};

inline LabelTable run_import_labels(const Context& ctx, const ImportLabelsOptions& opt) {
    Manifest m(ctx.work);
    const auto users_path = require(ctx, m, kUsers);
    LabelTable labels;
    fs::path source;
    if (!opt.from.empty() && !opt.replay) {
        source = require_input(opt.from, "labels file");
        std::ifstream in(source);
        labels = read_labels_csv(in);
    } else {
        source = opt.journal.empty() ? ctx.at(kJournal) : opt.journal;
        if (!fs::exists(source)) throw MissingArtifactError(source.string(), kJournal.stage);
        const auto state = annotation::AnnotationService::replay_state(source);
        for (const auto& t : state.at("tasks")) {
            if (t.at("status") != "resolved") continue;
            unsigned h = 0, n = 0;
            for (const auto& l : t.at("labels")) ++(l.at("label") == "hateful" ? h : n);
            const Label final = h > n ? Label::hateful : Label::not_hateful;
            const unsigned agree = final == Label::hateful ? h : n;
            labels[UserId{t.at("user_id").get<std::uint64_t>()}] = {final, agree, h + n - agree, h + n};
        }
    }
    std::set<UserId> known;
    for (const auto& u : detail::load_users(users_path)) known.insert(u.id);
    for (const auto& [u, row] : labels) {
        if (!known.contains(u)) throw DataError("labeled user " + to_string(u) + " is not in the ingested users");
    }
    {
        auto out = detail::open_out(ctx.at(kLabels));
        write_labels_csv(labels, out);
    }
    detail::finish(ctx, m, "import-labels", {{"source", source.string()}}, ctx.root_seed, {source, users_path},
                   {ctx.at(kLabels)});
    return labels;
}

// --- features ---------------------------------------------------------------

struct FeaturesOptions {
    std::string snapshot_date;
    fs::path categories;
    fs::path valence;
    fs::path profanity;
    std::string profanity_mode = "tokens_per_tweet";
    std::size_t negation_window = 3;
    unsigned threads = 1;
};

inline ContentResources load_resources(const FeaturesOptions& opt) {
    ContentResources res;
    res.categories = load_categories(require_input(opt.categories, "category lexicon directory"));
    res.valence = load_valence_lexicon(require_input(opt.valence, "valence lexicon"));
    res.valence.negation_window = opt.negation_window;
    res.badwords = load_lexicon(require_input(opt.profanity, "profanity lexicon"), "profanity");
    if (opt.profanity_mode == "tokens_per_tweet") {
        res.profanity_mode = ProfanityMode::tokens_per_tweet;
    } else if (opt.profanity_mode == "share_of_tweets") {
        res.profanity_mode = ProfanityMode::share_of_tweets;
    } else {
        throw ConfigError("unknown profanity mode '" + opt.profanity_mode + "'");
    }
    return res;
}

inline FeatureTable run_features(const Context& ctx, const FeaturesOptions& opt) {
    Manifest m(ctx.work);
    if (opt.snapshot_date.empty()) throw ConfigError("snapshot_date is required for features");
    Timestamp snapshot;
    try {
        snapshot = parse_timestamp(opt.snapshot_date);
    } catch (const DataError& e) {
        throw ConfigError(std::string("snapshot_date: ") + e.what());
    }
    const auto users_path = require(ctx, m, kUsers);
    const auto tweets_path = require(ctx, m, kTweets);
    const auto res = load_resources(opt);
    const auto users = detail::load_users(users_path);
    const auto timelines = detail::by_user(detail::load_tweets(tweets_path));
    std::vector<std::pair<UserId, FeatureVector>> fv(users.size());
    static const std::vector<TweetRecord> none;
    detail::parallel_for(users.size(), opt.threads, [&](std::size_t i) {
        auto it = timelines.find(users[i].id);
        const auto& tl = it == timelines.end() ? none : it->second;
        const auto recent = recent_timeline(tl);
        auto f = compute_features(users[i], recent, snapshot);
        f.content = profile_content(recent, res);
        fv[i] = {users[i].id, std::move(f)};
    });
    const auto table = make_feature_table(fv);
    {
        auto out = detail::open_out(ctx.at(kFeatures));
        write_feature_csv(table, out);
    }
    const ojson config{{"snapshot_date", opt.snapshot_date},
                       {"categories", opt.categories.string()},
                       {"valence", opt.valence.string()},
                       {"profanity", opt.profanity.string()},
                       {"profanity_mode", opt.profanity_mode},
                       {"negation_window", opt.negation_window}};
    std::vector<fs::path> inputs{users_path, tweets_path, opt.valence, opt.profanity};
    for (const auto& e : fs::directory_iterator(opt.categories)) {
        if (e.path().extension() == ".txt") inputs.push_back(e.path());
    }
    std::sort(inputs.begin() + 4, inputs.end());
    detail::finish(ctx, m, "features", config, ctx.root_seed, inputs, {ctx.at(kFeatures)});
    return table;
}

// --- centrality -------------------------------------------------------------

struct CentralityOptions {
    /// Compute on the raw retweet direction instead of the influence direction.
    bool raw_direction = false;
    unsigned threads = 1;
};

inline CentralityScores run_centrality(const Context& ctx, const CentralityOptions& opt) {
    Manifest m(ctx.work);
    const auto graph = detail::load_graph(ctx, m);
    auto s = compute_centrality(graph, !opt.raw_direction, opt.threads);
    if (!s.eigen_info.converged) {
        ctx.warn("eigenvector centrality did not converge in " + std::to_string(s.eigen_info.iterations) +
                 " iterations (residual " + csv::format_double(s.eigen_info.residual) + ")");
    }
    {
        auto out = detail::open_out(ctx.at(kCentrality));
        write_centrality_csv(graph, s, out);
    }
    const auto info_path = ctx.work / "centrality/eigenvector.json";
    {
        auto out = detail::open_out(info_path);
        out << ojson{{"converged", s.eigen_info.converged},
                     {"iterations", s.eigen_info.iterations},
                     {"residual", s.eigen_info.residual},
                     {"zero_score_nodes", s.eigen_info.zero_score_nodes}}
                   .dump(2)
            << '\n';
    }
    detail::finish(ctx, m, "centrality", {{"direction", opt.raw_direction ? "retweet" : "influence"}}, ctx.root_seed,
                   {ctx.at(kEdges), ctx.at(kIdMap)}, {ctx.at(kCentrality), info_path});
    return s;
}

// --- report -----------------------------------------------------------------

struct ReportStageOptions {
    double level = 0.95;
    std::size_t resamples = 2000;
    std::size_t top_k = 20;
    /// "none" or "svg".
    std::string plots = "none";
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
};

struct ReportOutputs {
    GroupReport groups;
    SuspensionTable suspensions;
    ojson json;
};

inline ReportOutputs run_report(const Context& ctx, const ReportStageOptions& opt) {
    Manifest m(ctx.work);
    if (opt.plots != "none" && opt.plots != "svg") throw ConfigError("plots must be 'none' or 'svg'");
    const auto features_path = require(ctx, m, kFeatures);
    const auto centrality_path = require(ctx, m, kCentrality);
    const auto labels_path = require(ctx, m, kLabels);
    const auto users_path = require(ctx, m, kUsers);
    const auto tweets_path = require(ctx, m, kTweets);
    const auto graph = detail::load_graph(ctx, m);
    const std::uint64_t seed = ctx.stage_seed("report", opt.seed);

    FeatureTable table;
    {
        std::ifstream in(features_path);
        table = read_feature_csv(in);
    }
    {
        const auto c = csv::read_file(centrality_path.string());
        for (std::size_t col = 1; col < c.header.size(); ++col) {
            std::unordered_map<UserId, double> values;
            for (const auto& row : c.rows) values[parse_user_id(row.at(0))] = csv::parse_double(row.at(col));
            table.merge_column(c.header[col], values);
        }
    }
    LabelTable labels;
    {
        std::ifstream in(labels_path);
        labels = read_labels_csv(in);
    }
    const auto users = detail::load_users(users_path);

    ReportOutputs r;
    r.groups = build_group_report(table, labels, graph,
                                  {.seed = seed, .level = opt.level, .resamples = opt.resamples, .threads = opt.threads});
    std::vector<UserId> all;
    std::set<UserId> suspended;
    for (const auto& u : users) {
        all.push_back(u.id);
        if (u.suspended.value_or(false)) suspended.insert(u.id);
    }
    r.suspensions = suspension_table(labels, all, suspended);

    // Creation-date KDE per group (profiles only), as fractional days since epoch.
    std::unordered_map<UserId, const UserRecord*> profile;
    for (const auto& u : users) profile[u.id] = &u;
    std::vector<plots::Series> kde_series;
    ojson kde_meta = ojson::object();
    const auto kde_path = ctx.work / "report/kde_creation.csv";
    {
        auto out = detail::open_out(kde_path);
        out << "group,days_since_epoch,density\n";
        for (const char* g : kReportGroups) {
            std::vector<double> days;
            for (UserId u : r.groups.members.at(g)) {
                if (auto it = profile.find(u); it != profile.end()) days.push_back(days_since_epoch(it->second->created_at));
            }
            if (days.empty()) continue;
            const auto curve = stats::kde(days);
            kde_meta[g] = {{"n", days.size()}, {"bandwidth_days", curve.bandwidth}};
            for (std::size_t i = 0; i < curve.grid.size(); ++i) {
                out << g << ',' << csv::format_double(curve.grid[i]) << ',' << csv::format_double(curve.density[i])
                    << '\n';
            }
            kde_series.push_back({g, curve.grid, curve.density});
        }
    }

    // Hashtag top-k per group.
    const auto timelines = detail::by_user(detail::load_tweets(tweets_path));
    ojson tags_json = ojson::object();
    const auto tags_path = ctx.work / "report/hashtags.csv";
    {
        auto out = detail::open_out(tags_path);
        out << "group,rank,hashtag,count\n";
        for (const char* g : {"hateful", "normal"}) {
            std::vector<TweetRecord> pooled;
            for (UserId u : r.groups.members.at(g)) {
                if (auto it = timelines.find(u); it != timelines.end()) {
                    pooled.insert(pooled.end(), it->second.begin(), it->second.end());
                }
            }
            auto& arr = tags_json[g] = ojson::array();
            std::size_t rank = 0;
            for (const auto& [tag, n] : hashtag_frequencies(pooled, std::max<std::size_t>(opt.top_k, 1))) {
                out << g << ',' << ++rank << ',' << csv::quote(tag) << ',' << n << '\n';
                arr.push_back({{"hashtag", tag}, {"count", n}});
            }
        }
    }

    r.json = report_json(r.groups);
    r.json["suspensions"] = suspension_json(r.suspensions);
    r.json["hashtags_top_k"] = tags_json;
    r.json["creation_kde"] = kde_meta;

    const auto json_path = ctx.work / "report/report.json";
    const auto md_path = ctx.work / "report/report.md";
    const auto series_path = ctx.work / "report/series.csv";
    const auto sus_path = ctx.work / "report/suspensions.csv";
    {
        auto out = detail::open_out(json_path);
        out << r.json.dump(2) << '\n';
    }
    {
        auto out = detail::open_out(md_path);
        write_report_markdown(r.groups, r.suspensions, out);
    }
    {
        auto out = detail::open_out(series_path);
        write_report_series_csv(r.groups, out);
    }
    {
        auto out = detail::open_out(sus_path);
        out << "group,suspended,size,percentage,cell\n";
        for (const auto& s : r.suspensions) {
            out << s.group << ',' << s.suspended << ',' << s.size << ',' << s.percentage() << ',' << csv::quote(s.cell())
                << '\n';
        }
    }
    std::vector<fs::path> outputs{json_path, md_path, series_path, sus_path, kde_path, tags_path};
    if (opt.plots == "svg") {
        const auto dir = ctx.work / "report/plots";
        auto write = [&](const std::string& name, const std::string& svg) {
            const auto p = dir / name;
            auto out = detail::open_out(p);
            out << svg;
            outputs.push_back(p);
        };
        write("creation_kde.svg", plots::line_plot("Account creation dates", kde_series, "days since 1970-01-01",
                                                   "density"));
        std::unordered_map<UserId, std::size_t> row_of;
        for (std::size_t i = 0; i < table.users.size(); ++i) row_of[table.users[i]] = i;
        for (std::size_t c = 0; c < table.columns.size(); ++c) {
            std::vector<plots::BoxGroup> groups;
            for (const char* g : kReportGroups) {
                plots::BoxGroup bg{g, {}};
                for (UserId u : r.groups.members.at(g)) {
                    if (auto it = row_of.find(u); it != row_of.end()) {
                        if (const auto& v = table.rows[it->second][c]) bg.values.push_back(*v);
                    }
                }
                groups.push_back(std::move(bg));
            }
            write(table.columns[c] + ".svg", plots::box_plot(table.columns[c], groups, table.columns[c]));
        }
    }
    const ojson config{{"level", opt.level}, {"resamples", opt.resamples}, {"top_k", opt.top_k}, {"plots", opt.plots}};
    detail::finish(ctx, m, "report", config, seed,
                   {features_path, centrality_path, labels_path, users_path, tweets_path, ctx.at(kEdges),
                    ctx.at(kIdMap)},
                   outputs);
    return r;
}

// --- exit codes -------------------------------------------------------------

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kMissingArtifact = 3, kData = 4 };

inline int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const MissingArtifactError*>(&e)) return kMissingArtifact;
    if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
    if (dynamic_cast<const DataError*>(&e) || dynamic_cast<const NotFoundError*>(&e) ||
        dynamic_cast<const DimensionError*>(&e) || dynamic_cast<const nlohmann::json::exception*>(&e)) {
        return kData;
    }
    return kFailure;
}

}  // namespace hatescope::pipeline
