#pragma once

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include "quantenv/config.hpp"
#include "quantenv/env.hpp"
#include "quantenv/reward.hpp"

namespace quantenv {

struct Reply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

inline int http_status(Errc code) {
    switch (code) {
        case Errc::UnknownSymbol:
        case Errc::NotATradingDay: return 404;
        case Errc::EpisodeTerminated: return 409;
        case Errc::ToolBudgetExhausted: return 429;
        case Errc::Io: return 500;
        default: return 400;
    }
}

inline Reply json_reply(int status, const nlohmann::json& j) { return {status, j.dump() + "\n", "application/json"}; }

inline Reply error_reply(int status, std::string_view code, const std::string& message) {
    return json_reply(status, {{"error", code}, {"message", message}});
}

/// Writes via a sibling temp file and rename so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::Io, "cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw Error(Errc::Io, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

/// Session table over a shared read-only corpus. Requests on one episode are serialized;
/// different episodes proceed in parallel.
class EpisodeService {
public:
    using Clock = std::function<std::chrono::steady_clock::time_point()>;

    EpisodeService(std::shared_ptr<const Corpus> corpus, Settings settings,
                   std::optional<std::filesystem::path> trajectory_dir = std::nullopt, Clock clock = {})
        : corpus_(std::move(corpus)),
          settings_(std::move(settings)),
          trajectory_dir_(std::move(trajectory_dir)),
          clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })),
          rng_(std::random_device{}()) {
        settings_.validate();
        if (trajectory_dir_) std::filesystem::create_directories(*trajectory_dir_);
    }

    [[nodiscard]] const Settings& settings() const noexcept { return settings_; }

    Reply health() const {
        std::shared_lock lock(table_mutex_);
        return json_reply(200, {{"status", "ok"}, {"sessions", sessions_.size()}, {"symbols", corpus_->symbols()}});
    }

    Reply open(const std::string& body) {
        auto req = parse_body(body);
        if (!req) return error_reply(400, "InvalidJson", "request body must be a JSON object");
        if (!req->contains("symbol") || !(*req)["symbol"].is_string())
            return error_reply(400, "InvalidArgument", "'symbol' must be a string");
        if (!req->contains("date") || !(*req)["date"].is_string())
            return error_reply(400, "InvalidArgument", "'date' must be a string");
        auto date = Date::parse((*req)["date"].get<std::string>());
        if (!date) return error_reply(400, "InvalidArgument", "'date' must be YYYY-MM-DD");
        int max_calls = settings_.max_tool_calls;
        if (req->contains("max_tool_calls")) {
            const auto& v = (*req)["max_tool_calls"];
            if (!v.is_number_integer() || v.get<long long>() < 1 || v.get<long long>() > 1000)
                return error_reply(400, "InvalidArgument", "'max_tool_calls' must be an integer in [1, 1000]");
            max_calls = v.get<int>();
        }

        std::shared_ptr<Session> session;
        try {
            session = std::make_shared<Session>(
                Episode(corpus_, EpisodeConfig{(*req)["symbol"].get<std::string>(), *date, max_calls,
                                               settings_.price_basis}));
        } catch (const Error& e) {
            return error_reply(http_status(e.code()), to_string(e.code()), e.what());
        }
        session->last_used = clock_();

        std::unique_lock lock(table_mutex_);
        expire_locked();
        std::string id;
        do {
            id = fmt::format("{:016x}{:016x}", rng_(), rng_());
        } while (issued_.count(id));
        issued_.insert(id);
        sessions_.emplace(id, session);
        return json_reply(201, {{"episode_id", id}, {"max_tool_calls", max_calls}});
    }

    Reply tool(const std::string& id, const std::string& body) {
        auto session = find(id);
        if (!session) return unknown(id);
        std::lock_guard guard(session->mutex);
        if (session->expired) return unknown(id);
        session->last_used = clock_();

        auto req = parse_body(body);
        if (!req) return error_reply(400, "InvalidJson", "request body must be a JSON object");
        if (!req->contains("name") || !(*req)["name"].is_string())
            return error_reply(400, "InvalidArgument", "'name' must be a string");
        if (req->contains("reasoning") && !(*req)["reasoning"].is_string())
            return error_reply(400, "InvalidArgument", "'reasoning' must be a string");
        const auto arguments = req->contains("arguments") ? (*req)["arguments"] : nlohmann::json::object();

        auto& ep = session->episode;
        if (ep.terminated()) return error_reply(409, "EpisodeTerminated", "a decision was already submitted");
        if (ep.calls_used() >= ep.config().max_tool_calls)
            return error_reply(429, "ToolBudgetExhausted",
                               fmt::format("at most {} tool calls per episode", ep.config().max_tool_calls));
        if (req->contains("reasoning")) ep.append_reasoning((*req)["reasoning"].get<std::string>());

        std::string text;
        bool malformed = false;
        try {
            text = ep.execute_query((*req)["name"].get<std::string>(), arguments);
        } catch (const MalformedArgumentsError&) {
            text = ep.trajectory().steps.back().response;
            malformed = true;
        } catch (const Error& e) {
            return error_reply(http_status(e.code()), to_string(e.code()), e.what());
        }
        return json_reply(200, {{"response_text", text},
                                {"malformed", malformed},
                                {"calls_used", ep.calls_used()},
                                {"calls_remaining", ep.config().max_tool_calls - ep.calls_used()}});
    }

    Reply decision(const std::string& id, const std::string& body) {
        auto session = find(id);
        if (!session) return unknown(id);
        std::lock_guard guard(session->mutex);
        if (session->expired) return unknown(id);
        session->last_used = clock_();

        auto req = parse_body(body);
        if (!req) return error_reply(400, "InvalidJson", "request body must be a JSON object");
        if (!req->contains("action") || !(*req)["action"].is_string())
            return error_reply(400, "InvalidArgument", "'action' must be a string");
        auto action = parse_action((*req)["action"].get<std::string>());
        if (!action) return error_reply(400, "InvalidArgument", "'action' must be one of BUY, SELL, HOLD");
        if (req->contains("reasoning") && !(*req)["reasoning"].is_string())
            return error_reply(400, "InvalidArgument", "'reasoning' must be a string");

        auto& ep = session->episode;
        if (ep.terminated()) return error_reply(409, "EpisodeTerminated", "a decision was already submitted");
        if (req->contains("reasoning")) ep.append_reasoning((*req)["reasoning"].get<std::string>());
        const auto& traj = ep.submit_decision(*action);
        session->jsonl = trajectory_jsonl(traj);

        nlohmann::json out = {{"episode_id", id}, {"trajectory_ref", "/episodes/" + id + "/trajectory"}};
        if (trajectory_dir_) {
            const auto path = *trajectory_dir_ / (id + ".jsonl");
            try {
                write_file_atomic(path, session->jsonl);
            } catch (const std::exception& e) {
                return error_reply(500, "Io", e.what());
            }
            out["trajectory_path"] = path.string();
        }
        try {
            out["reward"] = to_json(score_trajectory(traj, corpus_->series(traj.symbol), settings_.reward,
                                                     settings_.price_basis));
        } catch (const InsufficientFutureError&) {
            out["reward_omitted"] = "insufficient_future";
        }
        return json_reply(200, out);
    }

    Reply trajectory(const std::string& id) {
        auto session = find(id);
        if (!session) {
            if (trajectory_dir_ && valid_id(id)) {
                std::ifstream in(*trajectory_dir_ / (id + ".jsonl"), std::ios::binary);
                if (in) return {200, std::string(std::istreambuf_iterator<char>(in), {}), "application/x-ndjson"};
            }
            return unknown(id);
        }
        std::lock_guard guard(session->mutex);
        if (!session->episode.terminated())
            return error_reply(409, "NotTerminated", "the trajectory is available once a decision is submitted");
        return {200, session->jsonl, "application/x-ndjson"};
    }

    /// Drops sessions idle longer than the configured limit. Returns how many were removed.
    std::size_t expire_idle() {
        std::unique_lock lock(table_mutex_);
        return expire_locked();
    }

    /// Decision of a live episode, if one was submitted.
    std::optional<Action> final_action(const std::string& id) {
        auto session = find(id);
        if (!session) return std::nullopt;
        std::lock_guard guard(session->mutex);
        return session->episode.final_action();
    }

    [[nodiscard]] std::size_t session_count() const {
        std::shared_lock lock(table_mutex_);
        return sessions_.size();
    }

private:
    struct Session {
        explicit Session(Episode ep) : episode(std::move(ep)) {}
        std::mutex mutex;
        Episode episode;
        std::chrono::steady_clock::time_point last_used{};
        std::string jsonl;
        bool expired = false;
    };

    static std::optional<nlohmann::json> parse_body(const std::string& body) {
        auto j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object()) return std::nullopt;
        return j;
    }

    static bool valid_id(const std::string& id) {
        return id.size() == 32 && id.find_first_not_of("0123456789abcdef") == std::string::npos;
    }

    static Reply unknown(const std::string& id) {
        return error_reply(404, "UnknownEpisode", "no live episode '" + id + "'");
    }

    std::chrono::minutes idle_limit() const { return std::chrono::minutes(settings_.session_idle_minutes); }

    std::shared_ptr<Session> find(const std::string& id) {
        std::shared_ptr<Session> s;
        {
            std::shared_lock lock(table_mutex_);
            auto it = sessions_.find(id);
            if (it == sessions_.end()) return nullptr;
            s = it->second;
        }
        bool stale = false;
        {
            std::lock_guard guard(s->mutex);
            stale = s->expired || clock_() - s->last_used > idle_limit();
            if (stale) s->expired = true;
        }
        if (stale) {
            std::unique_lock lock(table_mutex_);
            sessions_.erase(id);
            return nullptr;
        }
        return s;
    }

    std::size_t expire_locked() {
        const auto now = clock_();
        std::size_t removed = 0;
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            std::unique_lock guard(it->second->mutex, std::try_to_lock);
            if (guard.owns_lock() && now - it->second->last_used > idle_limit()) {
                it->second->expired = true;
                guard.unlock();
                it = sessions_.erase(it);
                ++removed;
            } else {
                ++it;
            }
        }
        return removed;
    }

    std::shared_ptr<const Corpus> corpus_;
    Settings settings_;
    std::optional<std::filesystem::path> trajectory_dir_;
    Clock clock_;
    mutable std::shared_mutex table_mutex_;
    std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
    std::unordered_set<std::string> issued_;
    std::mt19937_64 rng_;
};

inline void bind_routes(httplib::Server& server, EpisodeService& service) {
    auto send = [](httplib::Response& res, const Reply& r) {
        res.status = r.status;
        res.set_content(r.body, r.content_type);
    };
    server.Get("/health", [&service, send](const httplib::Request&, httplib::Response& res) {
        send(res, service.health());
    });
    server.Post("/episodes", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.open(req.body));
    });
    server.Post(R"(/episodes/([^/]+)/tool)", [&service, send](const httplib::Request& req, httplib::Response& res) {
        send(res, service.tool(req.matches[1], req.body));
    });
    server.Post(R"(/episodes/([^/]+)/decision)",
                [&service, send](const httplib::Request& req, httplib::Response& res) {
                    send(res, service.decision(req.matches[1], req.body));
                });
    server.Get(R"(/episodes/([^/]+)/trajectory)",
               [&service, send](const httplib::Request& req, httplib::Response& res) {
                   send(res, service.trajectory(req.matches[1]));
               });
}

}  // namespace quantenv
