#include "prefnav/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "prefnav/errors.hpp"

namespace prefnav {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

nlohmann::json cell_json(GridCell c) { return nlohmann::json::array({c.x, c.y}); }

GridCell cell_from(const nlohmann::json& j, const char* field) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        throw Error(ErrorKind::invalid_input, std::string(field) + " must be an [x, y] integer pair");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

EdgeRef parse_edge_key(const World& world, const std::string& text) {
    const auto dash = text.find('-');
    if (dash == std::string::npos) throw Error(ErrorKind::invalid_input, "malformed edge key '" + text + "'");
    const auto from = world.arrangement().find_key(text.substr(0, dash));
    const auto to = world.arrangement().find_key(text.substr(dash + 1));
    if (!from || !to || !world.graph().adjacent(*from, *to)) {
        throw Error(ErrorKind::invalid_input, "edge key '" + text + "' is not a graph edge");
    }
    return {*from, *to};
}

std::string format_double(double v, int precision = 6) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << v;
    return out.str();
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::path_pref: return "path_pref";
        case Method::goal_only: return "goal_only";
        case Method::compliant: return "compliant";
        case Method::blended: return "blended";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    for (Method m : {Method::path_pref, Method::goal_only, Method::compliant, Method::blended}) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorKind::invalid_input, "unknown method '" + std::string(name) +
                                              "' (expected path_pref, goal_only, compliant or blended)");
}

void ProblemInstance::validate(const World& world) const {
    const GridMap& map = world.map();
    if (!map.is_free(start)) throw Error(ErrorKind::invalid_input, "start is not a free cell");
    if (goals.empty()) throw Error(ErrorKind::invalid_input, "instance has no goal candidates");
    std::set<GridCell> seen;
    for (GridCell g : goals) {
        if (!map.is_free(g)) throw Error(ErrorKind::invalid_input, "goal candidate is not a free cell");
        if (!seen.insert(g).second) throw Error(ErrorKind::invalid_input, "duplicate goal candidate");
    }
    if (true_goal < 0 || true_goal >= static_cast<int>(goals.size())) {
        throw Error(ErrorKind::invalid_input, "true goal index out of range");
    }
    if (delta_t < 1) throw Error(ErrorKind::invalid_input, "delta_t must be >= 1");
    if (t_max < 1) throw Error(ErrorKind::invalid_input, "t_max must be >= 1");
    if (!(gamma_h >= 0.0) || !std::isfinite(gamma_h)) throw Error(ErrorKind::invalid_input, "gamma_h must be >= 0");
    if (preference.size() != world.arrangement().cells().size()) {
        throw Error(ErrorKind::invalid_input, "preference does not match the map");
    }
    for (int v : world.graph().vertices()) {
        if (!world.graph().neighbors(v).empty() && !preference.defined(v)) {
            throw Error(ErrorKind::invalid_input, "preference misses vertex " + world.arrangement().key(v));
        }
    }
}

nlohmann::json to_json(const ProblemInstance& instance, const World& world) {
    nlohmann::json goals = nlohmann::json::array();
    for (GridCell g : instance.goals) goals.push_back(cell_json(g));
    nlohmann::json pref = nlohmann::json::object();
    for (int v : world.graph().vertices()) {
        if (auto e = instance.preference.exit(v)) pref[world.arrangement().key(v)] = edge_key(world.arrangement(), *e);
    }
    return {{"map", instance.map_id},
            {"start", cell_json(instance.start)},
            {"goal_candidates", goals},
            {"true_goal_index", instance.true_goal},
            {"preference", pref},
            {"delta_T", instance.delta_t},
            {"T_max", instance.t_max},
            {"gamma_h", instance.gamma_h},
            {"seed", instance.seed}};
}

ProblemInstance instance_from_json(const nlohmann::json& doc, const World& world) {
    try {
        ProblemInstance inst;
        inst.map_id = doc.at("map").get<std::string>();
        inst.start = cell_from(doc.at("start"), "start");
        for (const auto& g : doc.at("goal_candidates")) inst.goals.push_back(cell_from(g, "goal_candidates"));
        inst.true_goal = doc.at("true_goal_index").get<int>();
        inst.preference = Preference(world.arrangement().cells().size());
        for (const auto& [vertex, edge] : doc.at("preference").items()) {
            const EdgeRef e = parse_edge_key(world, edge.get<std::string>());
            if (world.arrangement().key(e.from) != vertex) {
                throw Error(ErrorKind::invalid_input, "preference edge does not leave vertex " + vertex);
            }
            inst.preference.set(e);
        }
        inst.delta_t = doc.at("delta_T").get<int>();
        inst.t_max = doc.at("T_max").get<int>();
        inst.gamma_h = doc.at("gamma_h").get<double>();
        inst.seed = doc.value("seed", std::uint64_t{0});
        inst.validate(world);
        return inst;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_input, std::string("instance: ") + e.what());
    }
}

ProblemInstance map_instance(const World& world, std::uint64_t seed) {
    const GridMap& map = world.map();
    ProblemInstance inst;
    inst.map_id = map.id;
    inst.start = map.start;
    inst.goals = map.goal_candidates;
    inst.true_goal = map.true_goal_index;
    inst.preference = world.preference();
    inst.delta_t = map.delta_t;
    inst.t_max = map.t_max;
    inst.gamma_h = map.gamma_h;
    inst.seed = seed;
    inst.validate(world);
    return inst;
}

ProblemInstance sample_instance(Rng& rng, const World& world) {
    if (world.arrangement().free_cell_count() < 2) {
        throw Error(ErrorKind::invalid_input, "map needs at least two free polytopes");
    }
    std::vector<GridCell> free = world.free_cells();
    const std::size_t count = 3 + uniform_index(rng, 3);
    if (free.size() < count + 1) throw Error(ErrorKind::invalid_input, "not enough free cells to sample an instance");
    // partial Fisher-Yates: the first count+1 entries become start and goals
    for (std::size_t i = 0; i <= count; ++i) {
        const std::size_t j = i + uniform_index(rng, free.size() - i);
        std::swap(free[i], free[j]);
    }
    ProblemInstance inst = map_instance(world);
    inst.start = free[0];
    inst.goals.assign(free.begin() + 1, free.begin() + 1 + static_cast<std::ptrdiff_t>(count));
    inst.true_goal = static_cast<int>(uniform_index(rng, count));
    inst.seed = rng();
    return inst;
}

RunResult run_episode(const World& world, const ProblemInstance& instance, Method method,
                      const EpisodeOptions& options, Rng& rng) {
    instance.validate(world);
    RunResult result;
    GridCell s = instance.start;
    const GridCell goal = instance.goal();
    result.trajectory.push_back(s);
    const HumanParams human{instance.gamma_h};
    const GroundTruthIntent truth{goal, instance.preference};

    const bool uses_belief = method != Method::compliant;
    const InferenceModel model =
        method == Method::goal_only ? InferenceModel::goal_only : InferenceModel::path_preference;
    std::optional<Planner> planner;
    std::optional<Belief> belief;
    try {
        if (uses_belief) {
            PlannerConfig cfg = options.planner;
            cfg.preference_reward = method != Method::goal_only;
            planner.emplace(world, instance.goals, options.rewards, cfg);
            belief = Belief::uniform(world, instance.goals, world.polytope_of(s), model);
        }

        std::optional<Observation> last;
        int last_t = 0;
        for (int t = 0; t <= instance.t_max; ++t) {
            std::optional<Observation> fresh;
            if (t % instance.delta_t == 0) {
                fresh = sample_human_observation(rng, world, s, truth, human);
                last = fresh;
                last_t = t;
                result.observations.push_back({t, s, fresh->heading});
                if (uses_belief) {
                    const auto start = Clock::now();
                    try {
                        belief = belief_update(*belief, world, s, *fresh, human, &result.cost_evaluations);
                    } catch (const Error& e) {
                        if (e.kind() != ErrorKind::degenerate_posterior) throw;
                        belief = Belief::uniform(world, instance.goals, world.polytope_of(s), model);
                    }
                    result.update_ms.push_back(elapsed_ms(start));
                }
            }
            if (t == instance.t_max) break;

            std::optional<Action> action;
            if (method == Method::compliant) {
                action = compliant_policy(world, s, last, t - last_t, options.momentum);
            } else {
                const auto start = Clock::now();
                const PlanResult plan = planner->plan(*belief, s, instance.t_max - t, rng);
                result.solve_ms.push_back(elapsed_ms(start));
                action = plan.action;
                if (method == Method::blended) {
                    std::optional<Action> user;
                    if (fresh) user = fresh->action();
                    action = blended_policy(*belief, plan.action, user, options.entropy_threshold, world, s);
                }
            }

            result.steps = t + 1;
            if (!action) {
                result.trajectory.push_back(s);
                continue;
            }
            const Crossing crossing = edge_crossed(world, s, *action);
            const int from_vertex = world.polytope_of(s);
            s = apply_action(world, s, *action);
            result.trajectory.push_back(s);
            if (crossing.kind != Crossing::Kind::none) {
                result.crossings.push_back(crossing.edge);
                const auto preferred = instance.preference.exit(from_vertex);
                if (crossing.kind == Crossing::Kind::invalid || !preferred || *preferred != crossing.edge) {
                    ++result.violations;
                }
                if (uses_belief) {
                    std::optional<EdgeRef> via;
                    if (crossing.kind == Crossing::Kind::edge) via = crossing.edge;
                    belief = reanchor_belief(*belief, world, world.polytope_of(s), via, options.back_edge_weight);
                }
            }
            if (s == goal) {
                result.reached_goal = true;
                break;
            }
        }
    } catch (const Error& e) {
        result.error = std::string(to_string(e.kind())) + ": " + e.what();
    }
    result.success = result.reached_goal && result.violations == 0 && !result.error;
    return result;
}

nlohmann::json to_json(const RunResult& result, const World& world, bool with_timings) {
    nlohmann::json traj = nlohmann::json::array();
    for (GridCell c : result.trajectory) traj.push_back(cell_json(c));
    nlohmann::json obs = nlohmann::json::array();
    for (const auto& o : result.observations) {
        obs.push_back({{"t", o.t}, {"location", cell_json(o.location)},
                       {"heading", kActions[static_cast<std::size_t>(o.heading)].name()}});
    }
    nlohmann::json crossings = nlohmann::json::array();
    for (const EdgeRef& e : result.crossings) {
        if (world.graph().adjacent(e.from, e.to)) {
            crossings.push_back(edge_key(world.arrangement(), e));
        } else {
            crossings.push_back("invalid:" + edge_key(world.arrangement(), e));
        }
    }
    nlohmann::json doc = {{"success", result.success},
                          {"reached_goal", result.reached_goal},
                          {"steps", result.steps},
                          {"violations", result.violations},
                          {"trajectory", traj},
                          {"observations", obs},
                          {"crossings", crossings},
                          {"cost_evaluations", result.cost_evaluations}};
    doc["error"] = result.error ? nlohmann::json(*result.error) : nlohmann::json(nullptr);
    if (with_timings) {
        doc["solve_ms"] = result.solve_ms;
        doc["update_ms"] = result.update_ms;
    }
    return doc;
}

SweepConfig sweep_config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorKind::invalid_input, "sweep config must be a JSON object");
    static const std::set<std::string> known{"maps",    "methods", "delta_t", "instances", "episodes",
                                             "t_max",   "gamma_h", "seed",    "threads",   "iterations",
                                             "exploration", "entropy_threshold", "back_edge_weight"};
    for (const auto& [key, _] : doc.items()) {
        if (!known.count(key)) throw Error(ErrorKind::invalid_input, "unknown sweep config key '" + key + "'");
    }
    SweepConfig cfg;
    try {
        if (doc.contains("maps")) cfg.maps = doc["maps"].get<std::vector<std::string>>();
        if (doc.contains("methods")) {
            cfg.methods.clear();
            for (const auto& m : doc["methods"]) cfg.methods.push_back(parse_method(m.get<std::string>()));
        }
        if (doc.contains("delta_t")) cfg.delta_ts = doc["delta_t"].get<std::vector<int>>();
        cfg.instances = doc.value("instances", cfg.instances);
        cfg.episodes = doc.value("episodes", cfg.episodes);
        cfg.t_max = doc.value("t_max", cfg.t_max);
        cfg.gamma_h = doc.value("gamma_h", cfg.gamma_h);
        cfg.seed = doc.value("seed", cfg.seed);
        cfg.threads = doc.value("threads", cfg.threads);
        cfg.episode.planner.iterations = doc.value("iterations", cfg.episode.planner.iterations);
        cfg.episode.planner.exploration = doc.value("exploration", cfg.episode.planner.exploration);
        cfg.episode.entropy_threshold = doc.value("entropy_threshold", cfg.episode.entropy_threshold);
        cfg.episode.back_edge_weight = doc.value("back_edge_weight", cfg.episode.back_edge_weight);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::invalid_input, std::string("sweep config: ") + e.what());
    }
    if (cfg.maps.empty()) throw Error(ErrorKind::invalid_input, "sweep config needs at least one map");
    if (cfg.methods.empty()) throw Error(ErrorKind::invalid_input, "sweep config needs at least one method");
    if (cfg.instances < 0 || cfg.episodes < 0) throw Error(ErrorKind::invalid_input, "counts must be >= 0");
    if (cfg.t_max < 1) throw Error(ErrorKind::invalid_input, "t_max must be >= 1");
    if (cfg.threads < 1) throw Error(ErrorKind::invalid_input, "threads must be >= 1");
    for (int dt : cfg.delta_ts) {
        if (dt < 1) throw Error(ErrorKind::invalid_input, "delta_t values must be >= 1");
    }
    return cfg;
}

std::vector<SweepRow> sweep(const SweepConfig& config) {
    std::vector<World> worlds;
    worlds.reserve(config.maps.size());
    for (const auto& path : config.maps) worlds.push_back(load_map_file(path));
    std::vector<const World*> ptrs;
    for (const auto& w : worlds) ptrs.push_back(&w);
    return sweep(ptrs, config);
}

std::vector<SweepRow> sweep(const std::vector<const World*>& worlds, const SweepConfig& config) {
    std::vector<SweepRow> rows;
    if (config.instances == 0 || config.episodes == 0) return rows;

    struct Job {
        std::size_t map;
        std::size_t method;
        std::size_t delta;
        int instance;
        int episode;
    };
    struct Outcome {
        bool success = false;
        int steps = 0;
        int violations = 0;
    };

    std::vector<std::vector<ProblemInstance>> instances(worlds.size());
    for (std::size_t m = 0; m < worlds.size(); ++m) {
        for (int i = 0; i < config.instances; ++i) {
            Rng rng(derive_seed(config.seed, {m, static_cast<std::uint64_t>(i)}));
            ProblemInstance inst = sample_instance(rng, *worlds[m]);
            inst.t_max = config.t_max;
            inst.gamma_h = config.gamma_h;
            instances[m].push_back(std::move(inst));
        }
    }

    std::vector<Job> jobs;
    for (std::size_t m = 0; m < worlds.size(); ++m) {
        for (std::size_t k = 0; k < config.methods.size(); ++k) {
            for (std::size_t d = 0; d < config.delta_ts.size(); ++d) {
                for (int i = 0; i < config.instances; ++i) {
                    for (int e = 0; e < config.episodes; ++e) jobs.push_back({m, k, d, i, e});
                }
            }
        }
    }
    std::vector<Outcome> outcomes(jobs.size());
    auto run_range = [&](std::size_t first, std::size_t stride) {
        for (std::size_t j = first; j < jobs.size(); j += stride) {
            const Job& job = jobs[j];
            ProblemInstance inst = instances[job.map][static_cast<std::size_t>(job.instance)];
            inst.delta_t = config.delta_ts[job.delta];
            // Seeds ignore the method so every method faces the same streams.
            Rng rng(derive_seed(config.seed, {0xe915u, job.map, static_cast<std::uint64_t>(job.instance),
                                              static_cast<std::uint64_t>(job.episode),
                                              static_cast<std::uint64_t>(inst.delta_t)}));
            const RunResult r = run_episode(*worlds[job.map], inst, config.methods[job.method], config.episode, rng);
            outcomes[j] = {r.success, r.steps, r.violations};
        }
    };
    const std::size_t threads = static_cast<std::size_t>(config.threads);
    if (threads <= 1) {
        run_range(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(run_range, t, threads);
        for (auto& th : pool) th.join();
    }

    std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<const Outcome*>> groups;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
        groups[{jobs[j].map, jobs[j].method, jobs[j].delta}].push_back(&outcomes[j]);
    }
    for (const auto& [key, list] : groups) {
        const auto [m, k, d] = key;
        SweepRow row;
        row.map = worlds[m]->map().id;
        row.method = config.methods[k];
        row.delta_t = config.delta_ts[d];
        row.episodes = static_cast<int>(list.size());
        for (const Outcome* o : list) {
            row.success_rate += o->success ? 1.0 : 0.0;
            row.mean_steps += o->steps;
            row.mean_violations += o->violations;
        }
        row.success_rate /= row.episodes;
        row.mean_steps /= row.episodes;
        row.mean_violations /= row.episodes;
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << "map,method,delta_T,episodes,success_rate,mean_steps,mean_violations\n";
    for (const auto& r : rows) {
        out << r.map << ',' << to_string(r.method) << ',' << r.delta_t << ',' << r.episodes << ','
            << format_double(r.success_rate) << ',' << format_double(r.mean_steps) << ','
            << format_double(r.mean_violations) << '\n';
    }
    return out.str();
}

std::string sweep_ranking(const std::vector<SweepRow>& rows) {
    std::map<std::pair<std::string, int>, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) groups[{r.map, r.delta_t}].push_back(&r);
    std::ostringstream out;
    for (auto& [key, list] : groups) {
        std::stable_sort(list.begin(), list.end(),
                         [](const SweepRow* a, const SweepRow* b) { return a->success_rate > b->success_rate; });
        out << key.first << " delta_T=" << key.second << ":";
        for (const SweepRow* r : list) out << ' ' << to_string(r->method) << '=' << format_double(r->success_rate, 3);
        out << '\n';
    }
    return out.str();
}

Estimate estimate(const std::vector<double>& samples) {
    Estimate e;
    if (samples.empty()) return e;
    double sum = 0;
    for (double x : samples) sum += x;
    e.mean = sum / static_cast<double>(samples.size());
    if (samples.size() < 2) return e;
    double ss = 0;
    for (double x : samples) ss += (x - e.mean) * (x - e.mean);
    const double sd = std::sqrt(ss / static_cast<double>(samples.size() - 1));
    e.ci95 = 1.96 * sd / std::sqrt(static_cast<double>(samples.size()));
    return e;
}

std::vector<TimingRow> time_benchmark(const std::vector<const World*>& worlds, int runs,
                                      std::uint64_t seed, const PlannerConfig& planner) {
    if (runs < 0) throw Error(ErrorKind::invalid_input, "runs must be >= 0");
    std::vector<TimingRow> rows;
    for (std::size_t m = 0; m < worlds.size(); ++m) {
        const World& world = *worlds[m];
        for (Method method : {Method::goal_only, Method::path_pref}) {
            TimingRow row;
            row.map = world.map().id;
            row.polytopes = world.arrangement().free_cell_count();
            row.method = method;
            row.runs = runs;
            std::vector<double> solve, update;
            double evals = 0;
            for (int r = 0; r < runs; ++r) {
                Rng rng(derive_seed(seed, {m, static_cast<std::uint64_t>(r)}));
                const ProblemInstance inst = sample_instance(rng, world);
                const InferenceModel model =
                    method == Method::goal_only ? InferenceModel::goal_only : InferenceModel::path_preference;
                const HumanParams human{inst.gamma_h};
                Belief belief = Belief::uniform(world, inst.goals, world.polytope_of(inst.start), model);
                const Observation o =
                    sample_human_observation(rng, world, inst.start, {inst.goal(), inst.preference}, human);
                std::uint64_t count = 0;
                auto start = Clock::now();
                try {
                    belief = belief_update(belief, world, inst.start, o, human, &count);
                } catch (const Error& e) {
                    if (e.kind() != ErrorKind::degenerate_posterior) throw;
                }
                update.push_back(elapsed_ms(start));
                evals += static_cast<double>(count);

                PlannerConfig cfg = planner;
                cfg.preference_reward = method == Method::path_pref;
                const Planner p(world, inst.goals, RewardParams{}, cfg);
                start = Clock::now();
                p.plan(belief, inst.start, inst.t_max, rng);
                solve.push_back(elapsed_ms(start));
            }
            row.solve_ms = estimate(solve);
            row.update_ms = estimate(update);
            row.cost_evaluations = runs > 0 ? evals / runs : 0.0;
            rows.push_back(row);
        }
    }
    return rows;
}

std::string timing_csv(const std::vector<TimingRow>& rows) {
    std::ostringstream out;
    out << "map,polytopes,method,runs,solve_ms_mean,solve_ms_ci95,update_ms_mean,update_ms_ci95,"
           "cost_evaluations_mean\n";
    for (const auto& r : rows) {
        out << r.map << ',' << r.polytopes << ',' << to_string(r.method) << ',' << r.runs << ','
            << format_double(r.solve_ms.mean, 3) << ',' << format_double(r.solve_ms.ci95, 3) << ','
            << format_double(r.update_ms.mean, 3) << ',' << format_double(r.update_ms.ci95, 3) << ','
            << format_double(r.cost_evaluations, 1) << '\n';
    }
    return out.str();
}

}  // namespace prefnav
