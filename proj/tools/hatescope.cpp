// hatescope: pipeline driver (ingest -> ... -> report).

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hatescope/annotation_http.hpp"
#include "hatescope/pipeline.hpp"

namespace hs = hatescope;
namespace pl = hatescope::pipeline;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop = true; }

struct EnvBinding {
    const char* env;
    const char* subcommand;  // nullptr: global option
    const char* flag;
};

constexpr EnvBinding kEnv[] = {
    {"HATESCOPE_SEED", nullptr, "--seed"},
    {"HATESCOPE_WORK", nullptr, "--work"},
    {"HATESCOPE_THREADS", nullptr, "--threads"},
    {"HATESCOPE_HOST", "serve", "--host"},
    {"HATESCOPE_PORT", "serve", "--port"},
    {"HATESCOPE_UI_DIR", "serve", "--ui-dir"},
    {"HATESCOPE_JOURNAL", "serve", "--journal"},
    {"HATESCOPE_SNAPSHOT_DATE", "features", "--snapshot-date"},
};

bool mentions(const std::vector<std::string>& args, const std::string& flag) {
    for (const auto& a : args) {
        if (a == flag || a.rfind(flag + "=", 0) == 0) return true;
    }
    return false;
}

// Environment values become command-line flags unless the flag is already
// given, so the precedence is flag > env > config file > default.
std::vector<std::string> with_env(std::vector<std::string> args) {
    for (const auto& b : kEnv) {
        const char* v = std::getenv(b.env);
        if (!v || !*v || mentions(args, b.flag)) continue;
        std::size_t at = 1;
        if (b.subcommand) {
            auto it = std::find(args.begin() + 1, args.end(), b.subcommand);
            if (it == args.end()) continue;
            at = static_cast<std::size_t>(it - args.begin()) + 1;
        }
        args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), {b.flag, v});
    }
    return args;
}

void seed_option(CLI::App* sub, std::optional<std::uint64_t>& seed) {
    sub->add_option("--seed", seed, "Stage seed (default: derived from the root seed)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hateful-user characterization pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML configuration file");
    app.allow_config_extras(false);

    pl::Context ctx;
    std::string work = "work";
    unsigned threads = 1;
    app.add_option("--seed", ctx.root_seed, "Root seed for every stage")->capture_default_str();
    app.add_option("--work", work, "Work directory for artifacts")->capture_default_str();
    app.add_option("--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();

    pl::IngestOptions ingest;
    auto* s_ingest = app.add_subcommand("ingest", "Load users and tweets, build the retweet graph");
    s_ingest->add_option("--users", ingest.users, "users.jsonl");
    s_ingest->add_option("--tweets", ingest.tweets, "tweets.jsonl");

    pl::CrawlOptions crawl;
    auto* s_crawl = app.add_subcommand("crawl", "Random-walk sampling against a synthetic or ingested graph");
    s_crawl->add_option("--model", crawl.model, "uniform|preferential|configuration")->capture_default_str();
    s_crawl->add_option("--n", crawl.n, "Nodes")->capture_default_str();
    s_crawl->add_option("--w", crawl.w, "Jump weight")->capture_default_str();
    s_crawl->add_option("--budget", crawl.budget, "Walk length in visits (0: n/5)")->capture_default_str();
    s_crawl->add_option("--walkers", crawl.walkers, "Independent walkers")->capture_default_str();
    s_crawl->add_option("--edge-probability", crawl.edge_probability)->capture_default_str();
    s_crawl->add_option("--m", crawl.out_edges_per_node, "Out-edges per node (preferential)")->capture_default_str();
    s_crawl->add_option("--degree-law", crawl.degree_law, "k:p,... (configuration)")->capture_default_str();
    s_crawl->add_flag("--from-graph", crawl.from_graph, "Crawl the ingested graph");
    seed_option(s_crawl, crawl.seed);

    pl::MarkOptions mark;
    auto* s_mark = app.add_subcommand("mark", "Find users whose tweets use the hate lexicon");
    s_mark->add_option("--lexicon", mark.lexicon, "One entry per line");

    pl::DiffuseOptions diffuse;
    auto* s_diffuse = app.add_subcommand("diffuse", "Propagate beliefs and draw the stratified sample");
    s_diffuse->add_option("--t", diffuse.t, "Steps")->capture_default_str();
    s_diffuse->add_option("--boundaries", diffuse.boundaries)->capture_default_str();
    s_diffuse->add_option("--cap", diffuse.cap, "Per-stratum sample cap")->capture_default_str();
    s_diffuse->add_flag("--transpose", diffuse.transpose, "Use the transposed transition matrix");
    seed_option(s_diffuse, diffuse.seed);

    pl::SampleOptions sample;
    auto* s_sample = app.add_subcommand("sample", "Build annotation task cards for the sample");
    s_sample->add_option("--top-hashtags", sample.top_hashtags)->capture_default_str();

    hs::annotation::AnnotationServer::Config serve;
    std::string journal;
    std::size_t snapshot_every = 100;
    auto* s_serve = app.add_subcommand("serve", "Run the annotation service");
    s_serve->add_option("--host", serve.host)->capture_default_str();
    s_serve->add_option("--port", serve.port)->capture_default_str();
    s_serve->add_option("--ui-dir", serve.ui_dir, "Static UI files");
    s_serve->add_option("--journal", journal, "Journal path (default: <work>/annotation/journal.jsonl)");
    s_serve->add_option("--snapshot-every", snapshot_every)->capture_default_str();

    pl::ImportLabelsOptions import;
    auto* s_import = app.add_subcommand("import-labels", "Import labels from a CSV or the annotation journal");
    s_import->add_option("--from", import.from, "labels CSV");
    s_import->add_option("--journal", import.journal, "Journal to replay");
    s_import->add_flag("--replay", import.replay, "Replay the annotation journal even if --from is configured");

    pl::FeaturesOptions features;
    auto* s_features = app.add_subcommand("features", "Per-user activity and content features");
    s_features->add_option("--snapshot-date", features.snapshot_date, "ISO-8601 reference date (required)");
    s_features->add_option("--categories", features.categories, "Directory of category lexicons");
    s_features->add_option("--valence", features.valence, "Valence lexicon TSV");
    s_features->add_option("--profanity", features.profanity, "Profanity lexicon");
    s_features->add_option("--profanity-mode", features.profanity_mode, "tokens_per_tweet|share_of_tweets")
        ->capture_default_str();
    s_features->add_option("--negation-window", features.negation_window)->capture_default_str();

    pl::CentralityOptions centrality;
    auto* s_centrality = app.add_subcommand("centrality", "Betweenness and eigenvector centrality");
    s_centrality->add_flag("--raw-direction", centrality.raw_direction, "Use retweet direction, not influence");

    pl::ReportStageOptions report;
    auto* s_report = app.add_subcommand("report", "Group comparison, suspensions, KDE and hashtags");
    s_report->add_option("--level", report.level)->capture_default_str();
    s_report->add_option("--resamples", report.resamples)->capture_default_str();
    s_report->add_option("--top-k", report.top_k)->capture_default_str();
    s_report->add_option("--plots", report.plots, "none|svg")->capture_default_str();
    seed_option(s_report, report.seed);

    std::vector<std::string> args(argv, argv + argc);
    args = with_env(std::move(args));
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return pl::kConfig;
    }

    ctx.work = work;
    diffuse.threads = features.threads = centrality.threads = report.threads = threads;

    try {
        if (*s_ingest) {
            const auto r = pl::run_ingest(ctx, ingest);
            std::cout << "ingested " << r.rows_accepted() << " rows (" << r.rows_rejected << " rejected)\n";
        } else if (*s_crawl) {
            const auto r = pl::run_crawl(ctx, crawl);
            std::cout << "visits " << r.visits << ", oracle queries " << r.queries << ", L1 " << r.l1 << '\n';
        } else if (*s_mark) {
            std::cout << pl::run_mark(ctx, mark) << " users matched the lexicon\n";
        } else if (*s_diffuse) {
            const auto r = pl::run_diffuse(ctx, diffuse);
            for (std::size_t s = 0; s < 4; ++s) {
                std::cout << "stratum " << s + 1 << ": " << r.stratum_sizes[s] << " users, " << r.sampled[s]
                          << " sampled\n";
            }
        } else if (*s_sample) {
            std::cout << pl::run_sample(ctx, sample) << " task cards\n";
        } else if (*s_serve) {
            pl::Manifest m(ctx.work);
            const auto tasks = pl::require(ctx, m, pl::kTasks);
            hs::annotation::AnnotationService::Options o;
            o.journal = journal.empty() ? ctx.at(pl::kJournal) : pl::fs::path(journal);
            o.snapshot_every = snapshot_every;
            pl::fs::create_directories(o.journal.parent_path());
            hs::annotation::AnnotationService service(o);
            const auto added = pl::load_tasks_into(service, tasks);
            hs::annotation::AnnotationServer server(service, serve);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const int port = server.start();
            std::cout << "serving " << service.task_count() << " tasks (" << added << " new) on " << serve.host << ':'
                      << port << std::endl;
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
            service.write_snapshot();
            std::cout << service.unresolved_count() << " tasks unresolved\n";
        } else if (*s_import) {
            std::cout << pl::run_import_labels(ctx, import).size() << " labels imported\n";
        } else if (*s_features) {
            std::cout << pl::run_features(ctx, features).users.size() << " users featurized\n";
        } else if (*s_centrality) {
            const auto s = pl::run_centrality(ctx, centrality);
            std::cout << s.betweenness.size() << " nodes scored\n";
        } else if (*s_report) {
            const auto r = pl::run_report(ctx, report);
            std::cout << "report written to " << (ctx.work / "report").string() << '\n';
            for (const auto& row : r.suspensions) std::cout << "  " << row.group << ": " << row.cell() << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return pl::exit_code_for(e);
    }
    return pl::kOk;
}
