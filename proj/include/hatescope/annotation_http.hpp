#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "hatescope/annotation.hpp"
#include "hatescope/records.hpp"

namespace hatescope::annotation {

/// JSON-over-HTTP front end for AnnotationService:
///   POST /annotators          {"annotator":ID} -> 201 new, 200 already known
///   POST /tasks               {"tasks":[{"user_id":..,"card":{..}}, ..]}
///   GET  /tasks/next?annotator=ID   -> task JSON, or 204 when none remain
///   POST /labels              {"task":..,"annotator":..,"label":..,"timestamp"?:..}
///   GET  /resolutions
///   GET  /export              labels CSV (X-Unresolved-Tasks header)
/// Errors come back as {"error": message} with 400/404/409.
class AnnotationServer {
public:
    struct Config {
        std::string host = "127.0.0.1";
        /// 0 picks a free port.
        int port = 8080;
        /// Optional directory of static UI files served at "/".
        std::filesystem::path ui_dir;
    };

    AnnotationServer(AnnotationService& service, Config cfg) : service_(service), cfg_(std::move(cfg)) { routes(); }

    ~AnnotationServer() { stop(); }

    AnnotationServer(const AnnotationServer&) = delete;
    AnnotationServer& operator=(const AnnotationServer&) = delete;

    /// Binds and serves on a background thread; returns the bound port.
    int start() {
        if (cfg_.port == 0) {
            port_ = server_.bind_to_any_port(cfg_.host);
        } else {
            port_ = server_.bind_to_port(cfg_.host, cfg_.port) ? cfg_.port : -1;
        }
        if (port_ < 0) throw ConfigError("cannot bind " + cfg_.host + ":" + std::to_string(cfg_.port));
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
        return port_;
    }

    /// Serves on the calling thread until stop() is called from elsewhere.
    void run() {
        if (!server_.listen(cfg_.host, cfg_.port)) throw ConfigError("cannot listen on " + cfg_.host);
    }

    void stop() {
        server_.stop();
        if (thread_.joinable()) thread_.join();
    }

    int port() const noexcept { return port_; }

private:
    static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json; charset=utf-8");
    }

    template <class F>
    static void guarded(httplib::Response& res, F&& f) {
        try {
            f();
        } catch (const NotFoundError& e) {
            send_json(res, 404, {{"error", e.what()}});
        } catch (const ConflictError& e) {
            send_json(res, 409, {{"error", e.what()}});
        } catch (const nlohmann::json::exception& e) {
            send_json(res, 400, {{"error", std::string("bad request: ") + e.what()}});
        } catch (const Error& e) {
            send_json(res, 400, {{"error", e.what()}});
        }
    }

    void routes() {
        if (!cfg_.ui_dir.empty()) server_.set_mount_point("/", cfg_.ui_dir.string());

        server_.Post("/tasks", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = nlohmann::json::parse(req.body);
                std::vector<TaskSpec> specs;
                for (const auto& t : body.at("tasks")) {
                    specs.push_back({detail::json_user_id(t.at("user_id")), t.value("card", nlohmann::json::object())});
                }
                const auto ids = service_.create_tasks(specs);
                send_json(res, 201, {{"created", ids.size()}, {"task_ids", ids}});
            });
        });

        server_.Post("/annotators", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto who = nlohmann::json::parse(req.body).at("annotator").get<std::string>();
                const bool known = service_.has_annotator(who);
                service_.register_annotator(who);
                send_json(res, known ? 200 : 201, {{"annotator", who}, {"guidelines", guidelines_json()}});
            });
        });

        server_.Get("/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                if (!req.has_param("annotator")) throw DataError("missing annotator parameter");
                const auto task = service_.next_task(req.get_param_value("annotator"));
                if (!task) {
                    res.status = 204;
                    return;
                }
                auto j = to_json(*task);
                j.erase("assigned");
                j["guidelines"] = guidelines_json();
                send_json(res, 200, j);
            });
        });

        server_.Post("/labels", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto body = nlohmann::json::parse(req.body);
                LabelEvent ev{body.at("task").get<TaskId>(), body.at("annotator").get<std::string>(),
                              parse_label(body.at("label").get<std::string>()), body.value("timestamp", std::string{})};
                const auto status = service_.submit_label(ev);
                const auto t = service_.task(ev.task);
                send_json(res, 200,
                          {{"task", ev.task}, {"status", to_string(status)}, {"required_annotations", t->required}});
            });
        });

        server_.Get("/resolutions", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& r : service_.resolutions()) arr.push_back(to_json(r));
                send_json(res, 200, {{"resolutions", arr}, {"unresolved", service_.unresolved_count()}});
            });
        });

        server_.Get("/export", [this](const httplib::Request&, httplib::Response& res) {
            guarded(res, [&] {
                res.set_header("X-Unresolved-Tasks", std::to_string(service_.unresolved_count()));
                res.set_content(service_.export_labels_csv(), "text/csv; charset=utf-8");
            });
        });
    }

    AnnotationService& service_;
    Config cfg_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = -1;
};

}  // namespace hatescope::annotation
