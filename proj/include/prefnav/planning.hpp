#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "prefnav/intent.hpp"
#include "prefnav/random.hpp"
#include "prefnav/worldgraph.hpp"

namespace prefnav {

struct RewardParams {
    double goal = 50.0;          // reaching the goal
    double preferred = 15.5;     // crossing the preferred exit
    double nonpreferred = -18.0; // crossing any other boundary
    double discount = 0.95;
};

/// Simulated hidden state. Preferences beyond the root vertex are filled in
/// lazily and never change once set.
struct Particle {
    GridCell location;
    GridCell goal;
    std::vector<EdgeRef> prefs;

    std::optional<EdgeRef> pref(int vertex) const;
    /// No effect when the vertex already has an entry.
    void set_pref(EdgeRef exit);
};

/// Goal term + preference term - ‖a‖. The preference term needs the
/// particle's entry for s's vertex whenever a boundary is crossed; a missing
/// entry throws invalid_input. Arrival at the goal is judged on s + a.
double reward(const World& world, GridCell s, Action a, const Particle& particle,
              const RewardParams& params, bool preference_term = true);

enum class RolloutPolicy { greedy, uniform_random };

struct PlannerConfig {
    int iterations = 2000;
    int max_depth = 30;
    double exploration = 50.0;
    RolloutPolicy rollout = RolloutPolicy::greedy;
    double rollout_epsilon = 0.1;
    /// False for the goal-only baseline.
    bool preference_reward = true;
    /// Preferences for non-root vertices; uniform lazy sampling when absent.
    std::optional<Preference> completion;
};

struct PlanResult {
    Action action;
    std::array<double, 8> q{};
    std::array<int, 8> visits{};
    int root_visits = 0;
    int tree_nodes = 0;
    /// Nodes carrying more than one child per action; always zero since the
    /// tree never branches on observations.
    int observation_branches = 0;
    double value() const { return q[static_cast<std::size_t>(action.index())]; }
};

/// POMCP over (location, goal, preference) with no observations inside the
/// search: the tree branches on actions only. Tables are built once per
/// world and goal set, so keep one Planner per episode.
class Planner {
public:
    Planner(const World& world, std::span<const GridCell> goals, RewardParams rewards,
            PlannerConfig config);

    /// Searches `depth` steps ahead (config.max_depth when depth <= 0).
    /// Throws planning_error when s has no valid action.
    PlanResult plan(const Belief& belief, GridCell s, int depth, Rng& rng) const;

    const PlannerConfig& config() const { return config_; }

private:
    struct Step {
        int next = -1;
        float cost = 0;
        std::int8_t crossing = 0;  // 0 none, 1 graph edge, 2 invalid jump
        int from = -1;
        int to = -1;
    };
    struct SimParticle;

    double rollout(SimParticle& p, int loc, int depth, Rng& rng) const;
    double transition_reward(SimParticle& p, const Step& step, Rng& rng) const;
    int pref_target(SimParticle& p, int vertex, Rng& rng) const;

    const World* world_;
    std::vector<GridCell> goals_;
    std::vector<int> goal_index_;
    RewardParams rewards_;
    PlannerConfig config_;
    std::vector<Step> steps_;                   // cell * 8 + action
    std::vector<std::vector<double>> distance_;  // per goal, unconstrained
};

PlanResult pomcp_plan(const Belief& belief, const World& world, GridCell s, const RewardParams& params,
                      const PlannerConfig& config, Rng& rng);

/// Same search on goal-only particles without the preference reward.
PlanResult goal_only_plan(std::span<const double> goal_marginal, std::span<const GridCell> goals,
                          const World& world, GridCell s, const RewardParams& params,
                          const PlannerConfig& config, Rng& rng);

/// Keeps following the last heading for `momentum` steps after it was given.
/// Returns nullopt (stop) without a heading, after the momentum expires, or
/// when the heading is blocked.
std::optional<Action> compliant_policy(const World& world, GridCell s,
                                       const std::optional<Observation>& last, int age,
                                       int momentum = 5);

/// Step arbitration: the user's action when the belief entropy exceeds h and
/// a valid user action exists, otherwise the planned one.
Action blended_policy(const Belief& belief, Action planned, std::optional<Action> user, double h,
                      const World& world, GridCell s);

/// Exact finite-horizon dynamic program for a known goal and preference.
struct OracleSolution {
    int horizon = 0;
    std::vector<double> value;              // per cell index
    std::vector<std::array<double, 8>> q;   // -inf for invalid actions
    /// Actions within tol of the best Q.
    std::vector<int> optimal_actions(GridCell s, double tol = 1e-9) const;
    const World* world = nullptr;
};

OracleSolution value_iteration_oracle(const World& world, GridCell goal, const Preference& theta,
                                      const RewardParams& params, int horizon,
                                      bool preference_term = true);

}  // namespace prefnav
