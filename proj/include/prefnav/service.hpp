#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "prefnav/experiments.hpp"

namespace httplib {
class Server;
}

namespace prefnav {

using Json = nlohmann::json;

enum class SessionStatus { running, succeeded, failed };
std::string_view to_string(SessionStatus status);

/// Geometry payload for one map: obstacles, polytope outlines and defaults.
Json map_summary(const World& world);

/// Goal marginal, preference posterior over the current vertex's exits,
/// the joint and its entropy.
Json belief_summary(const Belief& belief, const World& world);

struct SessionOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<GridCell> start;
    std::optional<std::vector<GridCell>> goals;
    std::optional<int> true_goal;
    std::optional<int> t_max;
    std::optional<double> gamma_h;
    std::optional<int> iterations;
    std::optional<double> entropy_threshold;
    std::optional<int> auto_step_ms;

    /// Throws invalid_input on unknown keys or bad types.
    static SessionOverrides from_json(const Json& doc);
    Json to_json() const;
};

class Session;

/// Owns live sessions. Every operation on a session runs under that
/// session's lock; reads return copies.
class SessionManager {
public:
    explicit SessionManager(std::map<std::string, std::shared_ptr<const World>> worlds);
    ~SessionManager();
    SessionManager(const SessionManager&) = delete;
    SessionManager& operator=(const SessionManager&) = delete;

    /// Loads every *.json map in a directory, keyed by file stem.
    static std::map<std::string, std::shared_ptr<const World>> load_directory(const std::string& dir);

    Json list_maps() const;

    /// Returns {session, map}. Throws not_found for an unknown map.
    Json create(const std::string& map_id, const std::string& method, const Json& overrides);
    Json get_state(const std::string& id) const;
    /// Belief summary after the update. Throws inadmissible_heading (belief
    /// untouched) or conflict on a terminal session.
    Json post_heading(const std::string& id, double angle);
    Json step(const std::string& id);
    void remove(const std::string& id);

    /// Events with sequence number >= from, waiting up to `timeout_ms` for
    /// at least one when none is pending. `closed` is set once the session is
    /// terminal or deleted and everything has been handed out.
    std::vector<Json> events(const std::string& id, std::size_t from, int timeout_ms, bool* closed) const;

    /// Creates a fresh session with the same map, method and overrides and
    /// re-applies the logged inputs. Returns its id.
    std::string replay(const std::string& id);

    std::size_t session_count() const;

private:
    std::shared_ptr<Session> find(const std::string& id) const;
    std::string next_id();
    void auto_step_loop();

    std::map<std::string, std::shared_ptr<const World>> worlds_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
    std::uint64_t counter_ = 0;
    std::uint64_t id_salt_;

    std::atomic<bool> stop_{false};
    std::condition_variable ticker_cv_;
    std::thread ticker_;
};

/// Folds an event log into the fields of a snapshot it determines:
/// location, step, status, trajectory, violations and belief.
Json fold_events(const Json& created, const std::vector<Json>& events);

/// Registers the /api routes on an existing server.
void configure_routes(httplib::Server& server, SessionManager& manager);

/// Blocks serving HTTP until the process is stopped.
void run_server(SessionManager& manager, const std::string& host, int port);

}  // namespace prefnav
