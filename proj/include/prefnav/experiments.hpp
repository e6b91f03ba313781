#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "prefnav/intent.hpp"
#include "prefnav/planning.hpp"
#include "prefnav/random.hpp"
#include "prefnav/worldgraph.hpp"

namespace prefnav {

enum class Method { path_pref, goal_only, compliant, blended };

std::string_view to_string(Method method);
/// Throws invalid_input for unknown names.
Method parse_method(std::string_view name);

struct ProblemInstance {
    std::string map_id;
    GridCell start;
    std::vector<GridCell> goals;
    int true_goal = 0;     // index into goals
    Preference preference;  // ground-truth θ
    int delta_t = 1;
    int t_max = 30;
    double gamma_h = 1.5;
    std::uint64_t seed = 0;

    GridCell goal() const { return goals[static_cast<std::size_t>(true_goal)]; }
    /// Throws invalid_input on any violated invariant.
    void validate(const World& world) const;
    bool operator==(const ProblemInstance&) const = default;
};

/// The preference is written as vertex key -> edge key so files stay valid
/// across rebuilds of the arrangement.
nlohmann::json to_json(const ProblemInstance& instance, const World& world);
ProblemInstance instance_from_json(const nlohmann::json& doc, const World& world);

/// The instance the map document itself describes.
ProblemInstance map_instance(const World& world, std::uint64_t seed = 0);

/// Start and 3-5 goal candidates on distinct free cells, true goal uniform,
/// preference from the map. Δ_T, T_max and γ_h come from the map document.
ProblemInstance sample_instance(Rng& rng, const World& world);

struct EpisodeOptions {
    RewardParams rewards;
    PlannerConfig planner;
    double entropy_threshold = 1.6;
    double back_edge_weight = 0.2;
    int momentum = 5;
};

struct ObservationRecord {
    int t = 0;
    GridCell location;
    int heading = 0;
};

struct RunResult {
    bool success = false;
    bool reached_goal = false;
    int steps = 0;  // time steps elapsed, stops included
    int violations = 0;
    std::vector<GridCell> trajectory;  // starts with the start cell
    std::vector<ObservationRecord> observations;
    std::vector<EdgeRef> crossings;
    std::vector<double> solve_ms;
    std::vector<double> update_ms;
    std::uint64_t cost_evaluations = 0;
    std::optional<std::string> error;
};

/// One simulated mission. The human is observed at t = 0, Δ_T, 2Δ_T, ...
/// (up to and including T_max) and the robot acts for t < T_max.
RunResult run_episode(const World& world, const ProblemInstance& instance, Method method,
                      const EpisodeOptions& options, Rng& rng);

/// Deterministic JSON rendering; timings are included only on request.
nlohmann::json to_json(const RunResult& result, const World& world, bool with_timings);

struct SweepConfig {
    std::vector<std::string> maps;  // map file paths
    std::vector<Method> methods{Method::path_pref, Method::goal_only, Method::compliant, Method::blended};
    std::vector<int> delta_ts{1, 5, 10, 20, 30};
    int instances = 6;
    int episodes = 50;
    int t_max = 30;
    double gamma_h = 1.5;
    std::uint64_t seed = 1;
    int threads = 1;
    EpisodeOptions episode;
};

/// Reads a JSON config; unknown keys are rejected.
SweepConfig sweep_config_from_json(const nlohmann::json& doc);

struct SweepRow {
    std::string map;
    Method method = Method::path_pref;
    int delta_t = 1;
    int episodes = 0;
    double success_rate = 0;
    double mean_steps = 0;
    double mean_violations = 0;
};

std::vector<SweepRow> sweep(const SweepConfig& config);
/// Same, on already loaded worlds.
std::vector<SweepRow> sweep(const std::vector<const World*>& worlds, const SweepConfig& config);

std::string sweep_csv(const std::vector<SweepRow>& rows);
/// Methods ordered by mean success per (map, Δ_T).
std::string sweep_ranking(const std::vector<SweepRow>& rows);

struct Estimate {
    double mean = 0;
    double ci95 = 0;  // half width
};

/// Mean and normal-approximation 95% half width.
Estimate estimate(const std::vector<double>& samples);

struct TimingRow {
    std::string map;
    int polytopes = 0;
    Method method = Method::path_pref;
    int runs = 0;
    Estimate solve_ms;
    Estimate update_ms;
    double cost_evaluations = 0;  // mean per update
};

/// First-decision solve time and first belief-update time per sampled
/// instance, for goal_only and path_pref.
std::vector<TimingRow> time_benchmark(const std::vector<const World*>& worlds, int runs,
                                      std::uint64_t seed, const PlannerConfig& planner);
std::string timing_csv(const std::vector<TimingRow>& rows);

}  // namespace prefnav
