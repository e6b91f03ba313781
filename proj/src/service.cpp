#include "prefnav/service.hpp"

#include <chrono>
#include <filesystem>
#include <random>
#include <set>
#include <sstream>

#include "prefnav/errors.hpp"

namespace prefnav {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

Json cell_json(GridCell c) { return Json::array({c.x, c.y}); }

Json loop_json(std::span<const Vec2> loop) {
    Json out = Json::array();
    for (const Vec2& p : loop) out.push_back(Json::array({p.x, p.y}));
    return out;
}

GridCell parse_cell(const Json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw Error(ErrorKind::invalid_input, field + " must be an [x, y] integer pair");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

Json edge_json(const World& world, EdgeRef e) {
    return {{"key", edge_key(world.arrangement(), e)},
            {"from", world.arrangement().key(e.from)},
            {"to", world.arrangement().key(e.to)}};
}

}  // namespace

std::string_view to_string(SessionStatus status) {
    switch (status) {
        case SessionStatus::running: return "running";
        case SessionStatus::succeeded: return "succeeded";
        case SessionStatus::failed: return "failed";
    }
    return "unknown";
}

Json map_summary(const World& world) {
    const GridMap& map = world.map();
    const Arrangement& arr = world.arrangement();
    Json obstacles = Json::array();
    Json polytopes = Json::array();
    for (const Cell& c : arr.cells()) {
        if (c.is_obstacle) {
            obstacles.push_back({{"key", arr.key(c.id)}, {"outline", loop_json(c.outline)}});
            continue;
        }
        Json neighbors = Json::array();
        for (const EdgeRef& e : world.graph().neighbors(c.id)) neighbors.push_back(arr.key(e.to));
        Json entry = {{"key", arr.key(c.id)},
                      {"outline", loop_json(c.outline)},
                      {"centroid", Json::array({c.interior.x, c.interior.y})},
                      {"neighbors", neighbors}};
        if (auto e = world.preference().exit(c.id)) entry["preferred_exit"] = arr.key(e->to);
        polytopes.push_back(std::move(entry));
    }
    Json goals = Json::array();
    for (GridCell g : map.goal_candidates) goals.push_back(cell_json(g));
    Json blocked = Json::array();
    for (int i = 0; i < map.cell_count(); ++i) {
        if (map.blocked[static_cast<std::size_t>(i)]) blocked.push_back(cell_json(map.cell_at(i)));
    }
    return {{"id", map.id},
            {"width", map.width},
            {"height", map.height},
            {"cell_size", map.cell_size},
            {"obstacles", obstacles},
            {"polytopes", polytopes},
            {"blocked_cells", blocked},
            {"start", cell_json(map.start)},
            {"goal_candidates", goals},
            {"true_goal_index", map.true_goal_index},
            {"t_max", map.t_max},
            {"delta_t", map.delta_t},
            {"gamma_h", map.gamma_h}};
}

Json belief_summary(const Belief& belief, const World& world) {
    const auto marginal = belief.goal_marginal();
    Json goals = Json::array();
    for (std::size_t g = 0; g < marginal.size(); ++g) {
        goals.push_back({{"cell", cell_json(belief.goals()[g])}, {"prob", marginal[g]}});
    }
    Json pref = Json::array();
    const auto exit_marginal = belief.exit_marginal();
    for (std::size_t j = 0; j < belief.exits().size(); ++j) {
        Json e = edge_json(world, belief.exits()[j]);
        e["prob"] = exit_marginal[j];
        pref.push_back(std::move(e));
    }
    Json joint = Json::array();
    for (int g = 0; g < belief.goal_count(); ++g) {
        Json row = Json::array();
        for (int c = 0; c < belief.columns(); ++c) row.push_back(belief.prob(g, c));
        joint.push_back(std::move(row));
    }
    return {{"model", belief.model() == InferenceModel::goal_only ? "goal_only" : "path_preference"},
            {"vertex", world.arrangement().key(belief.vertex())},
            {"goal_marginal", goals},
            {"preference", pref},
            {"joint", joint},
            {"entropy", entropy(belief)}};
}

SessionOverrides SessionOverrides::from_json(const Json& doc) {
    SessionOverrides o;
    if (doc.is_null()) return o;
    if (!doc.is_object()) throw Error(ErrorKind::invalid_input, "overrides must be an object");
    static const std::set<std::string> known{"seed",    "start",      "goal_candidates",   "true_goal_index",
                                             "t_max",   "gamma_h",    "iterations",        "entropy_threshold",
                                             "auto_step_ms"};
    for (const auto& [key, _] : doc.items()) {
        if (!known.count(key)) throw Error(ErrorKind::invalid_input, "unknown override '" + key + "'");
    }
    auto integer = [&](const char* key) -> std::optional<long long> {
        if (!doc.contains(key)) return std::nullopt;
        if (!doc[key].is_number_integer()) throw Error(ErrorKind::invalid_input, std::string(key) + " must be an integer");
        return doc[key].get<long long>();
    };
    auto number = [&](const char* key) -> std::optional<double> {
        if (!doc.contains(key)) return std::nullopt;
        if (!doc[key].is_number()) throw Error(ErrorKind::invalid_input, std::string(key) + " must be a number");
        return doc[key].get<double>();
    };
    if (doc.contains("seed")) {
        if (!doc["seed"].is_number_unsigned() && !(doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)) {
            throw Error(ErrorKind::invalid_input, "seed must be a nonnegative integer");
        }
        o.seed = doc["seed"].get<std::uint64_t>();
    }
    if (doc.contains("start")) o.start = parse_cell(doc["start"], "start");
    if (doc.contains("goal_candidates")) {
        if (!doc["goal_candidates"].is_array()) throw Error(ErrorKind::invalid_input, "goal_candidates must be an array");
        std::vector<GridCell> goals;
        for (const auto& g : doc["goal_candidates"]) goals.push_back(parse_cell(g, "goal_candidates"));
        o.goals = std::move(goals);
    }
    if (auto v = integer("true_goal_index")) o.true_goal = static_cast<int>(*v);
    if (auto v = integer("t_max")) {
        if (*v < 1) throw Error(ErrorKind::invalid_input, "t_max must be >= 1");
        o.t_max = static_cast<int>(*v);
    }
    if (auto v = number("gamma_h")) {
        if (*v < 0) throw Error(ErrorKind::invalid_input, "gamma_h must be >= 0");
        o.gamma_h = *v;
    }
    if (auto v = integer("iterations")) {
        if (*v < 1) throw Error(ErrorKind::invalid_input, "iterations must be >= 1");
        o.iterations = static_cast<int>(*v);
    }
    if (auto v = number("entropy_threshold")) o.entropy_threshold = *v;
    if (auto v = integer("auto_step_ms")) {
        if (*v < 0) throw Error(ErrorKind::invalid_input, "auto_step_ms must be >= 0");
        o.auto_step_ms = static_cast<int>(*v);
    }
    return o;
}

Json SessionOverrides::to_json() const {
    Json doc = Json::object();
    if (seed) doc["seed"] = *seed;
    if (start) doc["start"] = cell_json(*start);
    if (goals) {
        Json g = Json::array();
        for (GridCell c : *goals) g.push_back(cell_json(c));
        doc["goal_candidates"] = g;
    }
    if (true_goal) doc["true_goal_index"] = *true_goal;
    if (t_max) doc["t_max"] = *t_max;
    if (gamma_h) doc["gamma_h"] = *gamma_h;
    if (iterations) doc["iterations"] = *iterations;
    if (entropy_threshold) doc["entropy_threshold"] = *entropy_threshold;
    if (auto_step_ms) doc["auto_step_ms"] = *auto_step_ms;
    return doc;
}

class Session {
public:
    Session(std::string id_, std::string map_id_, std::shared_ptr<const World> world_, Method method_,
            SessionOverrides overrides_)
        : id(std::move(id_)), map_id(std::move(map_id_)), world(std::move(world_)), method(method_),
          overrides(std::move(overrides_)), instance(map_instance(*world)),
          belief(Belief::uniform(*world, instance.goals, world->polytope_of(instance.start),
                                 InferenceModel::path_preference)) {
        if (overrides.start) instance.start = *overrides.start;
        if (overrides.goals) {
            instance.goals = *overrides.goals;
            if (!overrides.true_goal) instance.true_goal = 0;
        }
        if (overrides.true_goal) instance.true_goal = *overrides.true_goal;
        if (overrides.t_max) instance.t_max = *overrides.t_max;
        if (overrides.gamma_h) instance.gamma_h = *overrides.gamma_h;
        instance.seed = *overrides.seed;
        instance.validate(*world);
        if (overrides.iterations) options.planner.iterations = *overrides.iterations;
        if (overrides.entropy_threshold) options.entropy_threshold = *overrides.entropy_threshold;
        auto_step_ms = overrides.auto_step_ms.value_or(0);
        rng.seed(instance.seed);

        const InferenceModel model =
            method == Method::goal_only ? InferenceModel::goal_only : InferenceModel::path_preference;
        location = instance.start;
        belief = Belief::uniform(*world, instance.goals, world->polytope_of(location), model);
        if (method != Method::compliant) {
            PlannerConfig cfg = options.planner;
            cfg.preference_reward = method != Method::goal_only;
            planner.emplace(*world, instance.goals, options.rewards, cfg);
        }
        trajectory.push_back(location);
        next_auto = Clock::now() + std::chrono::milliseconds(auto_step_ms);
    }

    Json created_json() const {
        Json goals = Json::array();
        for (GridCell g : instance.goals) goals.push_back(cell_json(g));
        return {{"id", id},
                {"map_id", map_id},
                {"method", to_string(method)},
                {"seed", instance.seed},
                {"start", cell_json(instance.start)},
                {"goal_candidates", goals},
                {"true_goal_index", instance.true_goal},
                {"t_max", instance.t_max},
                {"gamma_h", instance.gamma_h},
                {"overrides", overrides.to_json()},
                {"belief", belief_summary(initial_belief(), *world)}};
    }

    Belief initial_belief() const {
        const InferenceModel model =
            method == Method::goal_only ? InferenceModel::goal_only : InferenceModel::path_preference;
        return Belief::uniform(*world, instance.goals, world->polytope_of(instance.start), model);
    }

    Json snapshot() const {
        Json traj = Json::array();
        for (GridCell c : trajectory) traj.push_back(cell_json(c));
        Json goals = Json::array();
        for (GridCell g : instance.goals) goals.push_back(cell_json(g));
        Json snap = {{"id", id},
                     {"map_id", map_id},
                     {"method", to_string(method)},
                     {"seed", instance.seed},
                     {"status", to_string(status)},
                     {"step", step},
                     {"t_max", instance.t_max},
                     {"location", cell_json(location)},
                     {"polytope", world->arrangement().key(world->polytope_of(location))},
                     {"start", cell_json(instance.start)},
                     {"goal_candidates", goals},
                     {"true_goal_index", instance.true_goal},
                     {"trajectory", traj},
                     {"violations", violations},
                     {"belief", belief_summary(belief, *world)},
                     {"entropy", entropy(belief)},
                     {"event_count", events.size()},
                     {"auto_step_ms", auto_step_ms}};
        snap["last_plan_ms"] = last_plan_ms ? Json(*last_plan_ms) : Json(nullptr);
        snap["last_update_ms"] = last_update_ms ? Json(*last_update_ms) : Json(nullptr);
        snap["error"] = error ? Json(*error) : Json(nullptr);
        return snap;
    }

    void require_running() const {
        if (deleted) throw Error(ErrorKind::not_found, "session " + id + " was deleted");
        if (status != SessionStatus::running) {
            throw Error(ErrorKind::conflict, "session " + id + " is " + std::string(to_string(status)));
        }
    }

    Json heading(double angle) {
        require_running();
        if (!std::isfinite(angle)) throw Error(ErrorKind::invalid_input, "angle must be finite");
        const Observation o = heading_to_cell(*world, location, angle);
        const auto start = Clock::now();
        const HumanParams human{instance.gamma_h};
        try {
            belief = belief_update(belief, *world, location, o, human);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::degenerate_posterior) throw;
            belief = Belief::uniform(*world, instance.goals, world->polytope_of(location), belief.model());
        }
        last_update_ms = elapsed_ms(start);
        last_heading = o;
        last_heading_step = step;
        heading_pending = true;
        inputs.push_back({{"type", "heading"}, {"angle", angle}});

        Json summary = belief_summary(belief, *world);
        Json event = {{"seq", events.size()},
                      {"type", "heading"},
                      {"t", step},
                      {"angle", angle},
                      {"heading", kActions[static_cast<std::size_t>(o.heading)].name()},
                      {"intended_cell", cell_json(o.intended_cell)},
                      {"belief", summary}};
        publish(std::move(event));
        return summary;
    }

    Json advance() {
        require_running();
        std::optional<Action> action;
        std::optional<double> plan_ms;
        try {
            if (method == Method::compliant) {
                action = compliant_policy(*world, location, last_heading, step - last_heading_step, options.momentum);
            } else {
                const auto start = Clock::now();
                const PlanResult plan = planner->plan(belief, location, instance.t_max - step, rng);
                plan_ms = elapsed_ms(start);
                action = plan.action;
                if (method == Method::blended) {
                    std::optional<Action> user;
                    if (heading_pending && last_heading) user = last_heading->action();
                    action = blended_policy(belief, plan.action, user, options.entropy_threshold, *world, location);
                }
            }
        } catch (const Error& e) {
            error = std::string(to_string(e.kind())) + ": " + e.what();
            action.reset();
            status = SessionStatus::failed;
        }
        last_plan_ms = plan_ms;
        heading_pending = false;
        inputs.push_back({{"type", "step"}});

        const GridCell from = location;
        Json crossing_json = nullptr;
        Json reanchored = nullptr;
        if (action && status == SessionStatus::running) {
            const Crossing crossing = edge_crossed(*world, location, *action);
            const int from_vertex = world->polytope_of(location);
            location = apply_action(*world, location, *action);
            if (crossing.kind != Crossing::Kind::none) {
                const auto preferred = instance.preference.exit(from_vertex);
                const bool ok = crossing.kind == Crossing::Kind::edge && preferred && *preferred == crossing.edge;
                if (!ok) ++violations;
                crossing_json = edge_json(*world, crossing.edge);
                crossing_json["kind"] = crossing.kind == Crossing::Kind::edge ? "edge" : "invalid";
                crossing_json["preferred"] = ok;
                std::optional<EdgeRef> via;
                if (crossing.kind == Crossing::Kind::edge) via = crossing.edge;
                belief = reanchor_belief(belief, *world, world->polytope_of(location), via, options.back_edge_weight);
                Json exits = Json::array();
                for (const EdgeRef& e : belief.exits()) exits.push_back(edge_key(world->arrangement(), e));
                reanchored = {{"vertex", world->arrangement().key(belief.vertex())}, {"exits", exits}};
            }
        }
        trajectory.push_back(location);
        ++step;
        if (status == SessionStatus::running) {
            if (location == instance.goal()) {
                status = violations == 0 ? SessionStatus::succeeded : SessionStatus::failed;
            } else if (step >= instance.t_max) {
                status = SessionStatus::failed;
            }
        }

        Json event = {{"seq", events.size()},
                      {"type", "step"},
                      {"t", step},
                      {"action", action ? Json(action->name()) : Json(nullptr)},
                      {"from", cell_json(from)},
                      {"to", cell_json(location)},
                      {"crossing", crossing_json},
                      {"reanchored", reanchored},
                      {"status", to_string(status)},
                      {"violations", violations},
                      {"belief", belief_summary(belief, *world)}};
        event["plan_ms"] = plan_ms ? Json(*plan_ms) : Json(nullptr);
        event["error"] = error ? Json(*error) : Json(nullptr);
        publish(event);
        return event;
    }

    void publish(Json event) {
        events.push_back(std::move(event));
        cv.notify_all();
    }

    mutable std::mutex mutex;
    mutable std::condition_variable cv;

    std::string id;
    std::string map_id;
    std::shared_ptr<const World> world;
    Method method;
    SessionOverrides overrides;
    ProblemInstance instance;
    EpisodeOptions options;
    int auto_step_ms = 0;
    Clock::time_point next_auto;

    Rng rng;
    std::optional<Planner> planner;
    Belief belief;
    GridCell location;
    int step = 0;
    int violations = 0;
    SessionStatus status = SessionStatus::running;
    std::vector<GridCell> trajectory;
    std::optional<Observation> last_heading;
    int last_heading_step = 0;
    bool heading_pending = false;
    std::optional<double> last_plan_ms;
    std::optional<double> last_update_ms;
    std::optional<std::string> error;
    bool deleted = false;

    std::vector<Json> events;
    std::vector<Json> inputs;
};

SessionManager::SessionManager(std::map<std::string, std::shared_ptr<const World>> worlds)
    : worlds_(std::move(worlds)), id_salt_(std::random_device{}()) {
    id_salt_ = (id_salt_ << 32) ^ std::random_device{}();
    ticker_ = std::thread([this] { auto_step_loop(); });
}

SessionManager::~SessionManager() {
    {
        std::lock_guard lock(mutex_);
        stop_ = true;
    }
    ticker_cv_.notify_all();
    ticker_.join();
    std::lock_guard lock(mutex_);
    for (auto& [_, s] : sessions_) {
        std::lock_guard slock(s->mutex);
        s->deleted = true;
        s->cv.notify_all();
    }
}

std::map<std::string, std::shared_ptr<const World>> SessionManager::load_directory(const std::string& dir) {
    namespace fs = std::filesystem;
    std::map<std::string, std::shared_ptr<const World>> worlds;
    if (!fs::is_directory(dir)) throw Error(ErrorKind::invalid_input, "maps directory '" + dir + "' not found");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        worlds.emplace(f.stem().string(), std::make_shared<const World>(load_map_file(f.string())));
    }
    return worlds;
}

Json SessionManager::list_maps() const {
    Json out = Json::array();
    for (const auto& [id, world] : worlds_) out.push_back(map_summary(*world));
    return out;
}

std::string SessionManager::next_id() {
    std::ostringstream out;
    out << std::hex << splitmix64(id_salt_ + ++counter_);
    return out.str();
}

std::shared_ptr<Session> SessionManager::find(const std::string& id) const {
    std::lock_guard lock(mutex_);
    const auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorKind::not_found, "no session '" + id + "'");
    return it->second;
}

Json SessionManager::create(const std::string& map_id, const std::string& method_name, const Json& overrides_doc) {
    const auto w = worlds_.find(map_id);
    if (w == worlds_.end()) throw Error(ErrorKind::not_found, "unknown map '" + map_id + "'");
    const Method method = parse_method(method_name);
    SessionOverrides overrides = SessionOverrides::from_json(overrides_doc);
    if (!overrides.seed) {
        std::random_device rd;
        overrides.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
    }
    std::string id;
    {
        std::lock_guard lock(mutex_);
        id = next_id();
    }
    auto session = std::make_shared<Session>(id, map_id, w->second, method, std::move(overrides));
    Json created = session->created_json();
    {
        std::lock_guard lock(mutex_);
        sessions_.emplace(id, session);
    }
    ticker_cv_.notify_all();
    return {{"session", created}, {"map", map_summary(*w->second)}};
}

Json SessionManager::get_state(const std::string& id) const {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    Json snap = s->snapshot();
    snap["created"] = s->created_json();
    return snap;
}

Json SessionManager::post_heading(const std::string& id, double angle) {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->heading(angle);
}

Json SessionManager::step(const std::string& id) {
    auto s = find(id);
    std::lock_guard lock(s->mutex);
    return s->advance();
}

void SessionManager::remove(const std::string& id) {
    std::shared_ptr<Session> s;
    {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorKind::not_found, "no session '" + id + "'");
        s = it->second;
        sessions_.erase(it);
    }
    std::lock_guard lock(s->mutex);
    s->deleted = true;
    s->cv.notify_all();
}

std::vector<Json> SessionManager::events(const std::string& id, std::size_t from, int timeout_ms, bool* closed) const {
    auto s = find(id);
    std::unique_lock lock(s->mutex);
    s->cv.wait_for(lock, std::chrono::milliseconds(std::max(timeout_ms, 0)), [&] {
        return s->events.size() > from || s->deleted || s->status != SessionStatus::running;
    });
    std::vector<Json> out;
    for (std::size_t i = from; i < s->events.size(); ++i) out.push_back(s->events[i]);
    if (closed) *closed = s->deleted || s->status != SessionStatus::running;
    return out;
}

std::string SessionManager::replay(const std::string& id) {
    auto s = find(id);
    std::string map_id;
    Method method;
    Json overrides;
    std::vector<Json> inputs;
    {
        std::lock_guard lock(s->mutex);
        map_id = s->map_id;
        method = s->method;
        overrides = s->overrides.to_json();
        overrides.erase("auto_step_ms");
        inputs = s->inputs;
    }
    const std::string copy = create(map_id, std::string(to_string(method)), overrides)["session"]["id"];
    for (const Json& in : inputs) {
        if (in["type"] == "heading") {
            post_heading(copy, in["angle"].get<double>());
        } else {
            step(copy);
        }
    }
    return copy;
}

std::size_t SessionManager::session_count() const {
    std::lock_guard lock(mutex_);
    return sessions_.size();
}

void SessionManager::auto_step_loop() {
    std::unique_lock lock(mutex_);
    while (!stop_) {
        ticker_cv_.wait_for(lock, std::chrono::milliseconds(10));
        if (stop_) break;
        std::vector<std::shared_ptr<Session>> due;
        const auto now = Clock::now();
        for (auto& [_, s] : sessions_) due.push_back(s);
        lock.unlock();
        for (auto& s : due) {
            std::lock_guard slock(s->mutex);
            if (s->auto_step_ms <= 0 || s->deleted || s->status != SessionStatus::running) continue;
            if (now < s->next_auto) continue;
            s->next_auto = now + std::chrono::milliseconds(s->auto_step_ms);
            s->advance();
        }
        lock.lock();
    }
}

Json fold_events(const Json& created, const std::vector<Json>& events) {
    Json state = {{"location", created.at("start")},
                  {"step", 0},
                  {"status", "running"},
                  {"violations", 0},
                  {"trajectory", Json::array({created.at("start")})},
                  {"belief", created.at("belief")}};
    for (const Json& e : events) {
        state["belief"] = e.at("belief");
        if (e.at("type") != "step") continue;
        state["location"] = e.at("to");
        state["step"] = e.at("t");
        state["status"] = e.at("status");
        state["violations"] = e.at("violations");
        state["trajectory"].push_back(e.at("to"));
    }
    return state;
}

}  // namespace prefnav
