#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "prefnav/pathcost.hpp"
#include "prefnav/random.hpp"
#include "prefnav/worldgraph.hpp"

namespace prefnav {

struct HumanParams {
    double gamma_h = 1.5;  // rationality coefficient; 0 gives a uniform human
};

enum class InferenceModel {
    path_preference,  // joint over (goal, preferred exit of current vertex)
    goal_only,        // goals only; costs ignore preferences
};

/// A heading cue snapped to a compass direction, and the cell it points at.
struct Observation {
    int heading = 0;  // index into kActions
    GridCell intended_cell;

    Action action() const { return kActions[static_cast<std::size_t>(heading)]; }
    bool operator==(const Observation&) const = default;
};

/// Headings whose one-step move from s is valid, in index order.
std::vector<int> admissible_headings(const World& world, GridCell s);

/// Nearest compass index for an angle in radians (0 = East, counter-clockwise);
/// exact ties go to the smaller angle.
int snap_heading(double angle);

/// Throws inadmissible_heading when the snapped move is blocked.
Observation heading_to_cell(const World& world, GridCell s, double angle);

/// Softmax of -gamma·cost with max-shift. Infinite costs get zero mass; an
/// all-infinite vector yields the uniform distribution.
std::vector<double> boltzmann(std::span<const double> costs, double gamma);

/// P(o | s, g, p) for every admissible heading of s, in admissible_headings order.
std::vector<double> observation_distribution(const World& world, GridCell s, GridCell g,
                                             const std::optional<PathConstraint>& constraint,
                                             const HumanParams& params, CostCache& cache);

/// Throws modeling_error when s has no admissible heading and
/// inadmissible_heading when o is not one of them.
double observation_likelihood(const World& world, GridCell s, GridCell g,
                              const std::optional<PathConstraint>& constraint,
                              const Observation& o, const HumanParams& params);

/// Posterior over (goal, preferred exit of the current vertex). Immutable;
/// updates return new snapshots.
class Belief {
public:
    /// Uniform prior over goals × exits of `vertex`.
    static Belief uniform(const World& world, std::vector<GridCell> goals, int vertex,
                          InferenceModel model);
    /// Explicit joint, row-major goals × columns; renormalized.
    static Belief from_probs(const World& world, std::vector<GridCell> goals, int vertex,
                             InferenceModel model, std::span<const double> probs);

    InferenceModel model() const { return model_; }
    int vertex() const { return vertex_; }
    std::span<const GridCell> goals() const { return goals_; }
    /// Empty for the goal-only model.
    std::span<const EdgeRef> exits() const { return exits_; }
    int goal_count() const { return static_cast<int>(goals_.size()); }
    int columns() const { return exits_.empty() ? 1 : static_cast<int>(exits_.size()); }

    /// Row-major goal_count() × columns().
    std::span<const double> probs() const { return probs_; }
    double prob(int goal, int column) const {
        return probs_[static_cast<std::size_t>(goal * columns() + column)];
    }
    std::vector<double> goal_marginal() const;
    std::vector<double> exit_marginal() const;
    /// Constraint for a column; nullopt for the goal-only model.
    std::optional<PathConstraint> constraint(int column) const;

private:
    friend Belief belief_update(const Belief&, const World&, GridCell, const Observation&,
                                const HumanParams&, std::uint64_t*);
    friend Belief reanchor_belief(const Belief&, const World&, int, std::optional<EdgeRef>, double);

    void normalize_from_logs();

    InferenceModel model_ = InferenceModel::path_preference;
    int vertex_ = -1;
    std::vector<GridCell> goals_;
    std::vector<EdgeRef> exits_;
    std::vector<double> log_weights_;
    std::vector<double> probs_;
};

/// Bayes rule with the Boltzmann observation model. `cost_evaluations`, when
/// given, is incremented by the number of cost_C requests issued.
/// Throws degenerate_posterior if the evidence mass underflows 1e-300.
Belief belief_update(const Belief& belief, const World& world, GridCell s, const Observation& o,
                     const HumanParams& params, std::uint64_t* cost_evaluations = nullptr);

/// Moves the belief to `new_vertex`: the goal marginal is kept, and the exit
/// coordinate restarts uniform except that the way back (reverse of
/// `entered_via`) is scaled by `back_edge_weight`.
Belief reanchor_belief(const Belief& belief, const World& world, int new_vertex,
                       std::optional<EdgeRef> entered_via, double back_edge_weight);

/// Shannon entropy in nats of the joint distribution.
double entropy(std::span<const double> probs);
double entropy(const Belief& belief);

struct GroundTruthIntent {
    GridCell goal;
    Preference preference;
};

/// Draws the simulated human's heading from the same model used for inference.
Observation sample_human_observation(Rng& rng, const World& world, GridCell s,
                                     const GroundTruthIntent& truth, const HumanParams& params);

}  // namespace prefnav
