#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "hatescope/annotation.hpp"
#include "hatescope/rng.hpp"

namespace hatescope::annotation {
namespace {

constexpr Label H = Label::hateful;
constexpr Label N = Label::not_hateful;

std::vector<TaskSpec> specs(std::uint64_t count, std::uint64_t first = 1) {
    std::vector<TaskSpec> v;
    for (std::uint64_t i = 0; i < count; ++i) v.push_back({UserId{first + i}, {{"screen", "u" + std::to_string(first + i)}}});
    return v;
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("hatescope_ann_" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id())) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

AnnotationService::Options fixed_clock(std::filesystem::path journal = {}) {
    AnnotationService::Options o;
    o.journal = std::move(journal);
    o.clock = [] { return std::string("2017-10-01T00:00:00Z"); };
    return o;
}

// Feeds `stream` to a single task, one fresh annotator per label.
TaskStatus run_stream(AnnotationService& s, const std::vector<Label>& stream, TaskId* id_out = nullptr) {
    TaskStatus st = TaskStatus::open;
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const std::string a = "ann" + std::to_string(i);
        s.register_annotator(a);
        auto t = s.next_task(a);
        EXPECT_TRUE(t.has_value());
        if (!t) break;
        if (id_out) *id_out = t->id;
        st = s.submit_label({t->id, a, stream[i], {}});
    }
    return st;
}

TEST(CreateTasks, OnePerUserAndDuplicatesRejected) {
    AnnotationService s;
    const auto ids = s.create_tasks(specs(10));
    EXPECT_EQ(ids.size(), 10u);
    EXPECT_EQ(s.task_count(), 10u);
    EXPECT_EQ(s.unresolved_count(), 10u);
    for (auto id : ids) EXPECT_EQ(s.task(id)->required, 3u);
    EXPECT_THROW(s.create_tasks(specs(1, 5)), ConflictError);
    EXPECT_EQ(s.task_count(), 10u);
    auto dup = specs(2, 100);
    dup.push_back(dup.front());
    EXPECT_THROW(s.create_tasks(dup), ConflictError);
    EXPECT_EQ(s.task_count(), 10u);
}

TEST(CreateTasks, FullScaleBatch) {
    AnnotationService s;
    EXPECT_EQ(s.create_tasks(specs(4972)).size(), 4972u);
    EXPECT_EQ(s.task_count(), 4972u);
}

TEST(NextTask, Basics) {
    AnnotationService s;
    EXPECT_THROW(s.next_task("ghost"), NotFoundError);
    s.register_annotator("a");
    EXPECT_FALSE(s.next_task("a").has_value());
    s.create_tasks(specs(1));
    const auto t = s.next_task("a");
    ASSERT_TRUE(t.has_value());
    // Outstanding assignment comes back until labeled.
    EXPECT_EQ(s.next_task("a")->id, t->id);
    s.submit_label({t->id, "a", H, {}});
    EXPECT_FALSE(s.next_task("a").has_value());
}

TEST(NextTask, PrefersTasksClosestToResolution) {
    AnnotationService s;
    s.create_tasks(specs(3));
    for (const char* a : {"a", "b", "c"}) s.register_annotator(a);
    auto ta = s.next_task("a");
    s.submit_label({ta->id, "a", H, {}});
    auto tb = s.next_task("b");
    EXPECT_EQ(tb->id, ta->id);
}

TEST(Adjudication, UnanimousThreeResolves) {
    AnnotationService s;
    s.create_tasks(specs(1));
    TaskId id = 0;
    EXPECT_EQ(run_stream(s, {H, H, H}, &id), TaskStatus::resolved);
    const auto r = s.resolutions();
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].label, H);
    EXPECT_EQ(r[0].annotators, 3u);
    EXPECT_EQ(s.task(id)->required, 3u);
}

TEST(Adjudication, DisagreementEscalatesToFive) {
    AnnotationService s;
    s.create_tasks(specs(1));
    TaskId id = 0;
    EXPECT_EQ(run_stream(s, {H, H, N}, &id), TaskStatus::open);
    EXPECT_EQ(s.task(id)->required, 5u);
    EXPECT_TRUE(s.resolutions().empty());
    s.register_annotator("x");
    s.register_annotator("y");
    s.submit_label({s.next_task("x")->id, "x", N, {}});
    EXPECT_EQ(s.submit_label({s.next_task("y")->id, "y", H, {}}), TaskStatus::resolved);
    EXPECT_EQ(s.resolutions()[0].label, H);
    EXPECT_EQ(s.resolutions()[0].votes_hateful, 3u);
}

TEST(Adjudication, ThreeOfFiveMajority) {
    AnnotationService s;
    s.create_tasks(specs(1));
    EXPECT_EQ(run_stream(s, {H, N, H, N, H}), TaskStatus::resolved);
    const auto r = s.resolutions().at(0);
    EXPECT_EQ(r.label, H);
    EXPECT_EQ(r.votes_hateful, 3u);
    EXPECT_EQ(r.votes_not_hateful, 2u);
    EXPECT_EQ(r.annotators, 5u);
    AnnotationService t;
    t.create_tasks(specs(1));
    EXPECT_EQ(run_stream(t, {N, H, N, H, N}), TaskStatus::resolved);
    EXPECT_EQ(t.resolutions().at(0).label, N);
}

TEST(Adjudication, EveryStreamResolvesWithStrictMajority) {
    for (unsigned mask = 0; mask < 32; ++mask) {
        AnnotationService s;
        s.create_tasks(specs(1));
        std::vector<Label> stream;
        for (int i = 0; i < 5; ++i) stream.push_back((mask >> i) & 1u ? H : N);
        const bool unanimous3 = stream[0] == stream[1] && stream[1] == stream[2];
        if (unanimous3) stream.resize(3);
        EXPECT_EQ(run_stream(s, stream), TaskStatus::resolved);
        const auto r = s.resolutions().at(0);
        EXPECT_NE(r.votes_hateful, r.votes_not_hateful);
        EXPECT_EQ(r.label == H, r.votes_hateful > r.votes_not_hateful);
        EXPECT_EQ(r.annotators, unanimous3 ? 3u : 5u);
    }
}

TEST(SubmitLabel, Rejections) {
    AnnotationService s;
    s.create_tasks(specs(2));
    s.register_annotator("a");
    s.register_annotator("b");
    const auto t = s.next_task("a");
    EXPECT_THROW(s.submit_label({t->id, "b", H, {}}), ConflictError);  // not assigned
    s.submit_label({t->id, "a", H, {}});
    EXPECT_THROW(s.submit_label({t->id, "a", N, {}}), ConflictError);  // duplicate
    EXPECT_THROW(s.submit_label({999, "a", N, {}}), NotFoundError);
    EXPECT_THROW(s.submit_label({t->id, "ghost", N, {}}), NotFoundError);

    AnnotationService r;
    r.create_tasks(specs(1));
    TaskId id = 0;
    run_stream(r, {N, N, N}, &id);
    r.register_annotator("late");
    EXPECT_FALSE(r.next_task("late").has_value());
    EXPECT_THROW(r.submit_label({id, "late", H, {}}), ConflictError);
}

TEST(Export, HeaderOnlyThenRowsAndRoundTrip) {
    AnnotationService s;
    EXPECT_EQ(s.export_labels_csv(), "user_id,label,votes_for,votes_against,n_annotators\n");
    s.create_tasks(specs(6));
    const std::vector<std::vector<Label>> streams{{H, H, H}, {N, N, N}, {H, N, H, N, H},
                                                  {N, N, H, N, H}, {H, H, N, H, N}};
    for (std::size_t k = 0; k < streams.size(); ++k) {
        for (std::size_t i = 0; i < streams[k].size(); ++i) {
            const std::string a = "t" + std::to_string(k) + "_" + std::to_string(i);
            s.register_annotator(a);
            const auto t = s.next_task(a);
            ASSERT_TRUE(t);
            s.submit_label({t->id, a, streams[k][i], {}});
        }
    }
    EXPECT_EQ(s.unresolved_count(), 1u);
    const auto csv = s.export_labels_csv();
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
    std::istringstream in(csv);
    const auto back = read_labels_csv(in);
    const auto mem = s.export_labels();
    ASSERT_EQ(back.size(), mem.size());
    for (const auto& [u, row] : mem) {
        const auto& b = back.at(u);
        EXPECT_EQ(b.label, row.label);
        EXPECT_EQ(b.votes_for, row.votes_for);
        EXPECT_EQ(b.votes_against, row.votes_against);
        EXPECT_EQ(b.n_annotators, row.n_annotators);
    }
}

TEST(Journal, ReplayAndRecoveryReproduceState) {
    TempDir dir;
    const auto journal = dir.path / "journal.jsonl";
    nlohmann::json live;
    {
        AnnotationService s(fixed_clock(journal));
        s.create_tasks(specs(4));
        run_stream(s, {H, H, N, N, N});
        run_stream(s, {H, H, H});
        s.register_annotator("idle");
        s.next_task("idle");
        live = s.state();
    }
    EXPECT_EQ(AnnotationService::replay_state(journal).dump(), live.dump());
    AnnotationService recovered(fixed_clock(journal));
    EXPECT_EQ(recovered.state().dump(), live.dump());
    // Recovered service keeps appending with consistent sequence numbers.
    recovered.register_annotator("new");
    EXPECT_EQ(AnnotationService::replay_state(journal).dump(), recovered.state().dump());
}

TEST(Journal, SnapshotPlusTailEqualsFullReplay) {
    TempDir dir;
    const auto journal = dir.path / "j.jsonl";
    nlohmann::json live;
    {
        auto opts = fixed_clock(journal);
        opts.snapshot_every = 4;
        AnnotationService s(opts);
        s.create_tasks(specs(3));
        run_stream(s, {H, N, H, N, H});
        run_stream(s, {N, N, N});
        live = s.state();
    }
    ASSERT_TRUE(std::filesystem::exists(dir.path / "j.jsonl.snapshot"));
    AnnotationService recovered(fixed_clock(journal));
    EXPECT_EQ(recovered.state().dump(), live.dump());
    EXPECT_EQ(AnnotationService::replay_state(journal).dump(), live.dump());
}

TEST(Concurrency, ThreeAnnotatorsOneTaskEachGetItOnce) {
    for (int round = 0; round < 50; ++round) {
        AnnotationService s;
        s.create_tasks(specs(1));
        for (const char* a : {"a", "b", "c"}) s.register_annotator(a);
        std::vector<std::optional<AnnotationTask>> got(3);
        std::vector<std::thread> th;
        for (int i = 0; i < 3; ++i) {
            th.emplace_back([&, i] { got[i] = s.next_task(std::string(1, static_cast<char>('a' + i))); });
        }
        for (auto& t : th) t.join();
        for (const auto& g : got) ASSERT_TRUE(g.has_value());
        EXPECT_EQ(s.task(got[0]->id)->assigned.size(), 3u);
        s.register_annotator("d");
        EXPECT_FALSE(s.next_task("d").has_value());
    }
}

TEST(Concurrency, RandomizedSessionsNeverRepeatAUser) {
    AnnotationService s;
    s.create_tasks(specs(40));
    const int annotators = 6;
    std::mutex mu;
    std::map<std::string, std::vector<UserId>> seen;
    std::vector<std::thread> th;
    for (int i = 0; i < annotators; ++i) {
        th.emplace_back([&, i] {
            const std::string a = "w" + std::to_string(i);
            s.register_annotator(a);
            Rng rng(static_cast<std::uint64_t>(i));
            while (auto t = s.next_task(a)) {
                {
                    std::lock_guard lock(mu);
                    seen[a].push_back(t->user);
                }
                s.submit_label({t->id, a, uniform_index(rng, 2) ? H : N, {}});
            }
        });
    }
    for (auto& t : th) t.join();
    for (const auto& [a, users] : seen) {
        EXPECT_EQ(std::set<UserId>(users.begin(), users.end()).size(), users.size()) << a;
    }
    EXPECT_EQ(s.unresolved_count(), 0u);
    for (const auto& r : s.resolutions()) EXPECT_TRUE(r.annotators == 3 || r.annotators == 5);
}

TEST(Guidelines, CarryQuestionAndDefinition) {
    const auto g = guidelines_json();
    EXPECT_NE(g.at("question").get<std::string>().find("humiliating, derogatory or insulting"), std::string::npos);
    EXPECT_NE(g.at("definition").get<std::string>().find("may not promote violence against or directly attack or threaten other people"),
              std::string::npos);
}

}  // namespace
}  // namespace hatescope::annotation
