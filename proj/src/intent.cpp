#include "prefnav/intent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "prefnav/errors.hpp"

namespace prefnav {

std::size_t sample_index(Rng& rng, std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double u = uniform01(rng) * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        if (u < weights[i]) return i;
        u -= weights[i];
    }
    // Rounding left u at the top edge; return the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;) {
        if (weights[i] > 0) return i;
    }
    return weights.size() - 1;
}

std::vector<int> admissible_headings(const World& world, GridCell s) {
    std::vector<int> out;
    if (!world.map().is_free(s)) return out;
    const int index = world.map().index(s);
    for (int k = 0; k < 8; ++k) {
        if (world.successor(index, k) >= 0) out.push_back(k);
    }
    return out;
}

int snap_heading(double angle) {
    constexpr double step = std::numbers::pi / 4.0;
    double a = std::fmod(angle, 2.0 * std::numbers::pi);
    if (a < 0) a += 2.0 * std::numbers::pi;
    const int k = static_cast<int>(std::ceil(a / step - 0.5));
    return ((k % 8) + 8) % 8;
}

Observation heading_to_cell(const World& world, GridCell s, double angle) {
    const int k = snap_heading(angle);
    const Action a = kActions[static_cast<std::size_t>(k)];
    const auto target = try_action(world, s, a);
    if (!target) {
        throw Error(ErrorKind::inadmissible_heading,
                    std::string("heading ") + a.name() + " is blocked by an obstacle or the map edge");
    }
    return {k, *target};
}

std::vector<double> boltzmann(std::span<const double> costs, double gamma) {
    std::vector<double> out(costs.size(), 0.0);
    if (costs.empty()) return out;
    double best = kInfinity;
    for (double c : costs) best = std::min(best, c);
    if (!std::isfinite(best)) {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(costs.size()));
        return out;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < costs.size(); ++i) {
        out[i] = std::isfinite(costs[i]) ? std::exp(-gamma * (costs[i] - best)) : 0.0;
        total += out[i];
    }
    for (double& p : out) p /= total;
    return out;
}

std::vector<double> observation_distribution(const World& world, GridCell s, GridCell g,
                                             const std::optional<PathConstraint>& constraint,
                                             const HumanParams& params, CostCache& cache) {
    const auto headings = admissible_headings(world, s);
    if (headings.empty()) {
        throw Error(ErrorKind::modeling_error, "robot has no admissible heading");
    }
    std::vector<double> costs;
    costs.reserve(headings.size());
    for (int k : headings) {
        const Action a = kActions[static_cast<std::size_t>(k)];
        costs.push_back(cache.cost(s, {s.x + a.dx, s.y + a.dy}, g, constraint));
    }
    return boltzmann(costs, params.gamma_h);
}

namespace {

std::size_t heading_slot(const std::vector<int>& headings, const Observation& o) {
    const auto it = std::find(headings.begin(), headings.end(), o.heading);
    if (it == headings.end()) {
        throw Error(ErrorKind::inadmissible_heading, "observation is not an admissible heading");
    }
    return static_cast<std::size_t>(it - headings.begin());
}

}  // namespace

double observation_likelihood(const World& world, GridCell s, GridCell g,
                              const std::optional<PathConstraint>& constraint,
                              const Observation& o, const HumanParams& params) {
    CostCache cache(world);
    const auto headings = admissible_headings(world, s);
    if (headings.empty()) throw Error(ErrorKind::modeling_error, "robot has no admissible heading");
    const std::size_t slot = heading_slot(headings, o);
    return observation_distribution(world, s, g, constraint, params, cache)[slot];
}

Belief Belief::uniform(const World& world, std::vector<GridCell> goals, int vertex,
                       InferenceModel model) {
    if (goals.empty()) throw Error(ErrorKind::invalid_input, "belief needs at least one goal");
    Belief b;
    b.model_ = model;
    b.vertex_ = vertex;
    b.goals_ = std::move(goals);
    if (model == InferenceModel::path_preference) {
        const auto exits = world.graph().neighbors(vertex);
        if (exits.empty()) {
            throw Error(ErrorKind::modeling_error,
                        "vertex " + std::to_string(vertex) + " has no neighbors to prefer");
        }
        b.exits_.assign(exits.begin(), exits.end());
    }
    const std::size_t n = b.goals_.size() * static_cast<std::size_t>(b.columns());
    b.log_weights_.assign(n, 0.0);
    b.probs_.assign(n, 1.0 / static_cast<double>(n));
    return b;
}

Belief Belief::from_probs(const World& world, std::vector<GridCell> goals, int vertex,
                          InferenceModel model, std::span<const double> probs) {
    Belief b = uniform(world, std::move(goals), vertex, model);
    if (probs.size() != b.probs_.size()) {
        throw Error(ErrorKind::invalid_input, "belief weights do not match goals × exits");
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
        if (!(probs[i] >= 0.0)) throw Error(ErrorKind::invalid_input, "belief weights must be nonnegative");
        b.log_weights_[i] = std::log(probs[i]);
    }
    if (std::all_of(probs.begin(), probs.end(), [](double p) { return p == 0.0; })) {
        throw Error(ErrorKind::invalid_input, "belief weights sum to zero");
    }
    b.normalize_from_logs();
    return b;
}

void Belief::normalize_from_logs() {
    const double top = *std::max_element(log_weights_.begin(), log_weights_.end());
    double total = 0.0;
    probs_.resize(log_weights_.size());
    for (std::size_t i = 0; i < log_weights_.size(); ++i) {
        probs_[i] = std::exp(log_weights_[i] - top);
        total += probs_[i];
    }
    for (double& p : probs_) p /= total;
    // Re-center so the accumulators never drift toward -inf.
    for (double& w : log_weights_) w -= top + std::log(total);
}

std::vector<double> Belief::goal_marginal() const {
    std::vector<double> out(goals_.size(), 0.0);
    for (int g = 0; g < goal_count(); ++g) {
        for (int c = 0; c < columns(); ++c) out[static_cast<std::size_t>(g)] += prob(g, c);
    }
    return out;
}

std::vector<double> Belief::exit_marginal() const {
    std::vector<double> out(exits_.size(), 0.0);
    if (exits_.empty()) return out;
    for (int g = 0; g < goal_count(); ++g) {
        for (int c = 0; c < columns(); ++c) out[static_cast<std::size_t>(c)] += prob(g, c);
    }
    return out;
}

std::optional<PathConstraint> Belief::constraint(int column) const {
    if (exits_.empty()) return std::nullopt;
    return PathConstraint{vertex_, exits_[static_cast<std::size_t>(column)]};
}

Belief belief_update(const Belief& belief, const World& world, GridCell s, const Observation& o,
                     const HumanParams& params, std::uint64_t* cost_evaluations) {
    if (world.polytope_of(s) != belief.vertex()) {
        throw Error(ErrorKind::invalid_input, "belief is anchored at a different vertex than the robot");
    }
    const auto headings = admissible_headings(world, s);
    if (headings.empty()) throw Error(ErrorKind::modeling_error, "robot has no admissible heading");
    const std::size_t slot = heading_slot(headings, o);

    CostCache cache(world);
    Belief next = belief;
    double evidence = 0.0;
    for (int g = 0; g < belief.goal_count(); ++g) {
        for (int c = 0; c < belief.columns(); ++c) {
            const auto dist = observation_distribution(world, s, belief.goals()[static_cast<std::size_t>(g)],
                                                       belief.constraint(c), params, cache);
            const double lik = dist[slot];
            const std::size_t i = static_cast<std::size_t>(g * belief.columns() + c);
            evidence += belief.probs_[i] * lik;
            next.log_weights_[i] = belief.log_weights_[i] + std::log(lik);
        }
    }
    if (cost_evaluations) *cost_evaluations += cache.evaluations();
    if (!(evidence >= 1e-300)) {
        throw Error(ErrorKind::degenerate_posterior, "observation has vanishing likelihood under every hypothesis");
    }
    next.normalize_from_logs();
    return next;
}

Belief reanchor_belief(const Belief& belief, const World& world, int new_vertex,
                       std::optional<EdgeRef> entered_via, double back_edge_weight) {
    if (entered_via && (entered_via->to != new_vertex || !world.graph().adjacent(entered_via->from, new_vertex))) {
        throw Error(ErrorKind::invalid_input, "entered_via must be a graph edge into the new vertex");
    }
    Belief next;
    next.model_ = belief.model_;
    next.vertex_ = new_vertex;
    next.goals_ = belief.goals_;
    const auto marginal = belief.goal_marginal();
    if (belief.model_ == InferenceModel::goal_only) {
        next.probs_ = marginal;
    } else {
        const auto exits = world.graph().neighbors(new_vertex);
        if (exits.empty()) {
            throw Error(ErrorKind::modeling_error,
                        "vertex " + std::to_string(new_vertex) + " has no neighbors to prefer");
        }
        next.exits_.assign(exits.begin(), exits.end());
        std::vector<double> prior(exits.size(), 1.0);
        double total = 0.0;
        for (std::size_t j = 0; j < exits.size(); ++j) {
            if (entered_via && exits[j].to == entered_via->from) prior[j] = back_edge_weight;
            total += prior[j];
        }
        next.probs_.resize(marginal.size() * exits.size());
        for (std::size_t g = 0; g < marginal.size(); ++g) {
            for (std::size_t j = 0; j < exits.size(); ++j) {
                next.probs_[g * exits.size() + j] = marginal[g] * prior[j] / total;
            }
        }
    }
    next.log_weights_.resize(next.probs_.size());
    for (std::size_t i = 0; i < next.probs_.size(); ++i) next.log_weights_[i] = std::log(next.probs_[i]);
    return next;
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs) {
        if (p > 0) h -= p * std::log(p);
    }
    return h;
}

double entropy(const Belief& belief) { return entropy(belief.probs()); }

Observation sample_human_observation(Rng& rng, const World& world, GridCell s,
                                     const GroundTruthIntent& truth, const HumanParams& params) {
    const auto headings = admissible_headings(world, s);
    if (headings.empty()) throw Error(ErrorKind::modeling_error, "robot has no admissible heading");
    std::optional<PathConstraint> constraint;
    const int v = world.polytope_of(s);
    if (auto exit = truth.preference.exit(v)) constraint = PathConstraint{v, *exit};
    CostCache cache(world);
    const auto dist = observation_distribution(world, s, truth.goal, constraint, params, cache);
    const int k = headings[sample_index(rng, dist)];
    const Action a = kActions[static_cast<std::size_t>(k)];
    return {k, {s.x + a.dx, s.y + a.dy}};
}

}  // namespace prefnav
