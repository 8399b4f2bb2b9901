#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hatescope/error.hpp"
#include "hatescope/labels.hpp"
#include "hatescope/types.hpp"

namespace hatescope::annotation {

/// Request conflicts with current state (duplicate task or label, resolved task).
class ConflictError : public Error {
public:
    using Error::Error;
};

/// Text shown to annotators with every task.
struct Guidelines {
    static constexpr std::string_view question =
        "Does this account endorse content that is humiliating, derogatory or insulting towards some group of "
        "individuals (gender, religion, race, nationality) or support narratives associated with hate groups "
        "(white genocide, holocaust denial, jewish conspiracy, racial superiority)?";
    static constexpr std::string_view definition =
        "Hateful conduct: users may not promote violence against or directly attack or threaten other people on "
        "the basis of race, ethnicity, national origin, sexual orientation, gender, gender identity, religious "
        "affiliation, age, disability, or disease. Accounts whose primary purpose is inciting harm towards others "
        "on the basis of these categories are not allowed.";
    static constexpr std::string_view instructions =
        "Consider the whole profile (profile fields, up to 200 tweets and the hashtag summary), not individual "
        "tweets or isolated words.";
};

inline nlohmann::json guidelines_json() {
    return {{"question", Guidelines::question},
            {"definition", Guidelines::definition},
            {"instructions", Guidelines::instructions}};
}

using TaskId = std::uint64_t;

enum class TaskStatus { open, resolved };

inline std::string_view to_string(TaskStatus s) { return s == TaskStatus::open ? "open" : "resolved"; }

inline constexpr unsigned kInitialAnnotations = 3;
inline constexpr unsigned kEscalatedAnnotations = 5;

struct LabelEvent {
    TaskId task = 0;
    std::string annotator;
    Label label = Label::not_hateful;
    /// ISO-8601; the service stamps it when empty.
    std::string timestamp;
};

struct AnnotationTask {
    TaskId id = 0;
    UserId user;
    /// Profile fields, up to 200 tweets and a hashtag summary.
    nlohmann::json card;
    unsigned required = kInitialAnnotations;
    TaskStatus status = TaskStatus::open;
    std::vector<LabelEvent> labels;
    /// Every annotator the task was ever handed to (labeled or not).
    std::set<std::string> assigned;
};

struct TaskSpec {
    UserId user;
    nlohmann::json card;
};

struct Resolution {
    UserId user;
    Label label = Label::not_hateful;
    unsigned votes_hateful = 0;
    unsigned votes_not_hateful = 0;
    unsigned annotators = 0;
};

inline nlohmann::json to_json(const AnnotationTask& t, bool with_card = true) {
    nlohmann::json labels = nlohmann::json::array();
    for (const auto& l : t.labels) {
        labels.push_back({{"annotator", l.annotator}, {"label", hatescope::to_string(l.label)}, {"timestamp", l.timestamp}});
    }
    nlohmann::json j{{"id", t.id},
                     {"user_id", t.user.value},
                     {"required_annotations", t.required},
                     {"status", to_string(t.status)},
                     {"labels", labels},
                     {"assigned", t.assigned}};
    if (with_card) j["card"] = t.card;
    return j;
}

inline nlohmann::json to_json(const Resolution& r) {
    return {{"user_id", r.user.value},
            {"label", hatescope::to_string(r.label)},
            {"votes_hateful", r.votes_hateful},
            {"votes_not_hateful", r.votes_not_hateful},
            {"n_annotators", r.annotators}};
}

inline std::string utc_now_iso() {
    return format_timestamp(std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now()));
}

/// Task distribution and adjudication. Each task starts needing 3 labels;
/// unanimity at 3 resolves it, any disagreement raises the requirement to 5
/// and the 3-of-5 majority decides. Every state change is an event appended
/// to an optional JSONL journal before it is applied, so replaying the
/// journal rebuilds the exact state. Writers are serialized; readers share.
class AnnotationService {
public:
    struct Options {
        /// Empty path: in-memory only.
        std::filesystem::path journal;
        /// Write a snapshot every N events (0 disables).
        std::size_t snapshot_every = 0;
        std::function<std::string()> clock = utc_now_iso;
    };

    AnnotationService() : AnnotationService(Options{}) {}

    /// Recovers from the snapshot and journal when they exist.
    explicit AnnotationService(Options opts) : opts_(std::move(opts)) {
        if (opts_.journal.empty()) return;
        const auto snap = snapshot_path();
        if (std::filesystem::exists(snap)) {
            std::ifstream in(snap);
            const auto j = nlohmann::json::parse(in);
            load_state(j.at("state"));
        }
        if (std::filesystem::exists(opts_.journal)) {
            std::ifstream in(opts_.journal);
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty()) continue;
                const auto ev = nlohmann::json::parse(line);
                if (ev.at("seq").get<std::uint64_t>() <= seq_) continue;
                apply(ev);
            }
        }
        journal_.open(opts_.journal, std::ios::app);
        if (!journal_) throw ConfigError("cannot open journal '" + opts_.journal.string() + "'");
    }

    AnnotationService(const AnnotationService&) = delete;
    AnnotationService& operator=(const AnnotationService&) = delete;

    /// Rebuilds service state from a journal alone (no snapshot, read-only).
    static nlohmann::json replay_state(const std::filesystem::path& journal) {
        AnnotationService s;
        std::ifstream in(journal);
        if (!in) throw DataError("cannot open journal '" + journal.string() + "'");
        std::string line;
        while (std::getline(in, line)) {
            if (!line.empty()) s.apply(nlohmann::json::parse(line));
        }
        return s.state();
    }

    void register_annotator(const std::string& annotator) {
        std::unique_lock lock(mu_);
        if (annotator.empty()) throw DataError("annotator id must not be empty");
        if (annotators_.contains(annotator)) return;
        commit({{"type", "register"}, {"annotator", annotator}});
    }

    bool has_annotator(const std::string& annotator) const {
        std::shared_lock lock(mu_);
        return annotators_.contains(annotator);
    }

    /// One open task per user. A batch containing any already-tasked (or
    /// repeated) user is rejected as a whole.
    std::vector<TaskId> create_tasks(std::span<const TaskSpec> specs) {
        std::unique_lock lock(mu_);
        std::set<UserId> batch;
        for (const auto& s : specs) {
            if (by_user_.contains(s.user) || !batch.insert(s.user).second) {
                throw ConflictError("a task for user " + hatescope::to_string(s.user) + " already exists");
            }
        }
        nlohmann::json tasks = nlohmann::json::array();
        std::vector<TaskId> ids;
        TaskId next = next_id_;
        for (const auto& s : specs) {
            tasks.push_back({{"id", next}, {"user_id", s.user.value}, {"card", s.card}});
            ids.push_back(next++);
        }
        if (!specs.empty()) commit({{"type", "tasks"}, {"tasks", tasks}});
        return ids;
    }

    /// An open task this annotator has not been handed before and that still
    /// has room for another label, preferring tasks needing the fewest more
    /// labels (then lowest id). A task already handed out but not yet labeled
    /// by this annotator is returned again rather than a new one.
    std::optional<AnnotationTask> next_task(const std::string& annotator) {
        std::unique_lock lock(mu_);
        if (!annotators_.contains(annotator)) throw NotFoundError("unknown annotator '" + annotator + "'");
        if (auto it = pending_.find(annotator); it != pending_.end()) return tasks_.at(it->second);

        const AnnotationTask* best = nullptr;
        unsigned best_need = 0;
        for (const auto& [id, t] : tasks_) {
            if (t.status != TaskStatus::open || t.assigned.contains(annotator)) continue;
            if (t.assigned.size() >= t.required) continue;  // labels + outstanding fill the quota
            const unsigned need = t.required - static_cast<unsigned>(t.labels.size());
            if (!best || need < best_need) {
                best = &t;
                best_need = need;
            }
        }
        if (!best) return std::nullopt;
        const TaskId id = best->id;
        commit({{"type", "assign"}, {"task", id}, {"annotator", annotator}});
        return tasks_.at(id);
    }

    TaskStatus submit_label(LabelEvent ev) {
        std::unique_lock lock(mu_);
        if (!annotators_.contains(ev.annotator)) throw NotFoundError("unknown annotator '" + ev.annotator + "'");
        auto it = tasks_.find(ev.task);
        if (it == tasks_.end()) throw NotFoundError("unknown task " + std::to_string(ev.task));
        const auto& t = it->second;
        for (const auto& l : t.labels) {
            if (l.annotator == ev.annotator) {
                throw ConflictError("annotator '" + ev.annotator + "' already labeled task " + std::to_string(ev.task));
            }
        }
        if (t.status == TaskStatus::resolved) throw ConflictError("task " + std::to_string(ev.task) + " is resolved");
        if (!t.assigned.contains(ev.annotator)) {
            throw ConflictError("task " + std::to_string(ev.task) + " was not assigned to '" + ev.annotator + "'");
        }
        if (ev.timestamp.empty()) ev.timestamp = opts_.clock();
        commit({{"type", "label"},
                {"task", ev.task},
                {"annotator", ev.annotator},
                {"label", hatescope::to_string(ev.label)},
                {"timestamp", ev.timestamp}});
        return tasks_.at(ev.task).status;
    }

    std::optional<AnnotationTask> task(TaskId id) const {
        std::shared_lock lock(mu_);
        auto it = tasks_.find(id);
        if (it == tasks_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t task_count() const {
        std::shared_lock lock(mu_);
        return tasks_.size();
    }

    std::size_t unresolved_count() const {
        std::shared_lock lock(mu_);
        return static_cast<std::size_t>(std::count_if(tasks_.begin(), tasks_.end(), [](const auto& kv) {
            return kv.second.status == TaskStatus::open;
        }));
    }

    std::vector<Resolution> resolutions() const {
        std::shared_lock lock(mu_);
        std::vector<Resolution> out;
        for (const auto& [id, t] : tasks_) {
            if (t.status != TaskStatus::resolved) continue;
            Resolution r;
            r.user = t.user;
            for (const auto& l : t.labels) ++(l.label == Label::hateful ? r.votes_hateful : r.votes_not_hateful);
            r.annotators = static_cast<unsigned>(t.labels.size());
            r.label = r.votes_hateful > r.votes_not_hateful ? Label::hateful : Label::not_hateful;
            out.push_back(r);
        }
        return out;
    }

    /// Resolved tasks only; unresolved ones are counted by unresolved_count().
    LabelTable export_labels() const {
        LabelTable t;
        for (const auto& r : resolutions()) {
            const unsigned agree = r.label == Label::hateful ? r.votes_hateful : r.votes_not_hateful;
            t[r.user] = {r.label, agree, r.annotators - agree, r.annotators};
        }
        return t;
    }

    std::string export_labels_csv() const {
        std::ostringstream out;
        write_labels_csv(export_labels(), out);
        return out.str();
    }

    /// Canonical serialization of the full state.
    nlohmann::json state() const {
        std::shared_lock lock(mu_);
        return state_unlocked();
    }

    std::uint64_t sequence() const {
        std::shared_lock lock(mu_);
        return seq_;
    }

    void write_snapshot() {
        std::unique_lock lock(mu_);
        write_snapshot_unlocked();
    }

private:
    std::filesystem::path snapshot_path() const {
        auto p = opts_.journal;
        p += ".snapshot";
        return p;
    }

    // Caller holds the writer lock.
    void commit(nlohmann::json ev) {
        ev["seq"] = seq_ + 1;
        if (journal_.is_open()) {
            journal_ << ev.dump() << '\n';
            journal_.flush();
            if (!journal_) throw Error("journal write failed");
        }
        apply(ev);
        if (opts_.snapshot_every && seq_ % opts_.snapshot_every == 0 && !opts_.journal.empty()) {
            write_snapshot_unlocked();
        }
    }

    void apply(const nlohmann::json& ev) {
        const auto seq = ev.at("seq").get<std::uint64_t>();
        if (seq != seq_ + 1) throw DataError("journal sequence gap at " + std::to_string(seq));
        const auto type = ev.at("type").get<std::string>();
        if (type == "register") {
            annotators_.insert(ev.at("annotator").get<std::string>());
        } else if (type == "tasks") {
            for (const auto& tj : ev.at("tasks")) {
                AnnotationTask t;
                t.id = tj.at("id").get<TaskId>();
                t.user = UserId{tj.at("user_id").get<std::uint64_t>()};
                t.card = tj.at("card");
                by_user_[t.user] = t.id;
                next_id_ = std::max(next_id_, t.id + 1);
                tasks_.emplace(t.id, std::move(t));
            }
        } else if (type == "assign") {
            const auto id = ev.at("task").get<TaskId>();
            const auto who = ev.at("annotator").get<std::string>();
            tasks_.at(id).assigned.insert(who);
            pending_[who] = id;
        } else if (type == "label") {
            auto& t = tasks_.at(ev.at("task").get<TaskId>());
            LabelEvent l{t.id, ev.at("annotator").get<std::string>(), parse_label(ev.at("label").get<std::string>()),
                         ev.at("timestamp").get<std::string>()};
            if (auto p = pending_.find(l.annotator); p != pending_.end() && p->second == t.id) pending_.erase(p);
            t.labels.push_back(std::move(l));
            adjudicate(t);
        } else {
            throw DataError("unknown journal event '" + type + "'");
        }
        seq_ = seq;
    }

    static void adjudicate(AnnotationTask& t) {
        const auto hateful = static_cast<unsigned>(std::count_if(
            t.labels.begin(), t.labels.end(), [](const LabelEvent& l) { return l.label == Label::hateful; }));
        const auto n = static_cast<unsigned>(t.labels.size());
        if (n == kInitialAnnotations && t.required == kInitialAnnotations) {
            if (hateful == 0 || hateful == n) {
                t.status = TaskStatus::resolved;
            } else {
                t.required = kEscalatedAnnotations;
            }
        } else if (n >= kEscalatedAnnotations) {
            t.status = TaskStatus::resolved;
        }
    }

    nlohmann::json state_unlocked() const {
        nlohmann::json tasks = nlohmann::json::array();
        for (const auto& [id, t] : tasks_) tasks.push_back(to_json(t));
        nlohmann::json pending = nlohmann::json::object();
        for (const auto& [who, id] : pending_) pending[who] = id;
        return {{"seq", seq_},
                {"next_id", next_id_},
                {"annotators", annotators_},
                {"tasks", tasks},
                {"pending", pending}};
    }

    void load_state(const nlohmann::json& s) {
        seq_ = s.at("seq").get<std::uint64_t>();
        next_id_ = s.at("next_id").get<TaskId>();
        annotators_ = s.at("annotators").get<std::set<std::string>>();
        for (const auto& tj : s.at("tasks")) {
            AnnotationTask t;
            t.id = tj.at("id").get<TaskId>();
            t.user = UserId{tj.at("user_id").get<std::uint64_t>()};
            t.card = tj.at("card");
            t.required = tj.at("required_annotations").get<unsigned>();
            t.status = tj.at("status").get<std::string>() == "open" ? TaskStatus::open : TaskStatus::resolved;
            for (const auto& lj : tj.at("labels")) {
                t.labels.push_back({t.id, lj.at("annotator").get<std::string>(),
                                    parse_label(lj.at("label").get<std::string>()),
                                    lj.at("timestamp").get<std::string>()});
            }
            t.assigned = tj.at("assigned").get<std::set<std::string>>();
            by_user_[t.user] = t.id;
            tasks_.emplace(t.id, std::move(t));
        }
        for (const auto& [who, id] : s.at("pending").items()) pending_[who] = id.get<TaskId>();
    }

    void write_snapshot_unlocked() {
        if (opts_.journal.empty()) return;
        const auto path = snapshot_path();
        auto tmp = path;
        tmp += ".tmp";
        {
            std::ofstream out(tmp, std::ios::trunc);
            out << nlohmann::json{{"seq", seq_}, {"state", state_unlocked()}}.dump() << '\n';
            if (!out) throw Error("snapshot write failed");
        }
        std::filesystem::rename(tmp, path);
    }

    Options opts_;
    mutable std::shared_mutex mu_;
    std::ofstream journal_;
    std::uint64_t seq_ = 0;
    TaskId next_id_ = 1;
    std::set<std::string> annotators_;
    std::map<TaskId, AnnotationTask> tasks_;
    std::map<UserId, TaskId> by_user_;
    std::map<std::string, TaskId> pending_;
};

}  // namespace hatescope::annotation
