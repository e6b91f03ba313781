#include "prefnav/planning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "prefnav/errors.hpp"

namespace prefnav {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<double> distance_field(const World& world, int goal) {
    std::vector<double> dist(static_cast<std::size_t>(world.map().cell_count()), kInfinity);
    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    dist[static_cast<std::size_t>(goal)] = 0.0;
    open.emplace(0.0, goal);
    while (!open.empty()) {
        const auto [d, at] = open.top();
        open.pop();
        if (d > dist[static_cast<std::size_t>(at)]) continue;
        for (int a = 0; a < 8; ++a) {
            // moves are symmetric, so successors double as predecessors
            const int next = world.successor(at, a);
            if (next < 0) continue;
            const double nd = d + kActions[static_cast<std::size_t>(a)].length();
            if (nd < dist[static_cast<std::size_t>(next)]) {
                dist[static_cast<std::size_t>(next)] = nd;
                open.emplace(nd, next);
            }
        }
    }
    return dist;
}

struct Node {
    int location = -1;
    int visits = 0;
    std::array<int, 8> child;
    std::array<int, 8> count{};
    std::array<double, 8> q{};

    explicit Node(int loc) : location(loc) { child.fill(-1); }
};

}  // namespace

std::optional<EdgeRef> Particle::pref(int vertex) const {
    for (const EdgeRef& e : prefs) {
        if (e.from == vertex) return e;
    }
    return std::nullopt;
}

void Particle::set_pref(EdgeRef exit) {
    if (!pref(exit.from)) prefs.push_back(exit);
}

double reward(const World& world, GridCell s, Action a, const Particle& particle,
              const RewardParams& params, bool preference_term) {
    const GridCell next = apply_action(world, s, a);
    double r = -a.length();
    if (next == particle.goal) r += params.goal;
    if (!preference_term) return r;
    const Crossing c = edge_crossed(world, s, a);
    switch (c.kind) {
        case Crossing::Kind::none:
            break;
        case Crossing::Kind::invalid:
            r += params.nonpreferred;
            break;
        case Crossing::Kind::edge: {
            const auto preferred = particle.pref(c.edge.from);
            if (!preferred) {
                throw Error(ErrorKind::invalid_input, "particle has no preference for the crossed vertex");
            }
            r += (*preferred == c.edge) ? params.preferred : params.nonpreferred;
            break;
        }
    }
    return r;
}

struct Planner::SimParticle {
    int goal = -1;  // cell index
    int goal_slot = -1;
    int root_vertex = -1;
    int root_target = -1;
    std::vector<std::pair<int, int>> lazy;  // vertex -> preferred target
};

Planner::Planner(const World& world, std::span<const GridCell> goals, RewardParams rewards,
                 PlannerConfig config)
    : world_(&world), goals_(goals.begin(), goals.end()), rewards_(rewards), config_(std::move(config)) {
    if (goals_.empty()) throw Error(ErrorKind::planning_error, "planner needs at least one goal");
    if (config_.iterations < 1) throw Error(ErrorKind::invalid_input, "iterations must be >= 1");
    if (config_.max_depth < 1) throw Error(ErrorKind::invalid_input, "max_depth must be >= 1");
    if (!(rewards_.discount > 0.0 && rewards_.discount < 1.0)) {
        throw Error(ErrorKind::invalid_input, "discount must lie in (0, 1)");
    }
    const GridMap& map = world.map();
    steps_.resize(static_cast<std::size_t>(map.cell_count() * 8));
    for (int i = 0; i < map.cell_count(); ++i) {
        for (int a = 0; a < 8; ++a) {
            Step& st = steps_[static_cast<std::size_t>(i * 8 + a)];
            st.next = world.successor(i, a);
            if (st.next < 0) continue;
            st.cost = static_cast<float>(kActions[static_cast<std::size_t>(a)].length());
            st.from = world.polytope_of_index(i);
            st.to = world.polytope_of_index(st.next);
            if (st.from != st.to) st.crossing = world.graph().adjacent(st.from, st.to) ? 1 : 2;
        }
    }
    for (GridCell g : goals_) {
        goal_index_.push_back(map.index(g));
        distance_.push_back(distance_field(world, map.index(g)));
    }
}

int Planner::pref_target(SimParticle& p, int vertex, Rng& rng) const {
    if (vertex == p.root_vertex && p.root_target >= 0) return p.root_target;
    if (config_.completion) {
        if (auto e = config_.completion->exit(vertex)) return e->to;
        return -1;
    }
    for (const auto& [v, t] : p.lazy) {
        if (v == vertex) return t;
    }
    const auto exits = world_->graph().neighbors(vertex);
    if (exits.empty()) return -1;
    const int target = exits[uniform_index(rng, exits.size())].to;
    p.lazy.emplace_back(vertex, target);
    return target;
}

double Planner::transition_reward(SimParticle& p, const Step& step, Rng& rng) const {
    double r = -static_cast<double>(step.cost);
    if (step.next == p.goal) r += rewards_.goal;
    if (!config_.preference_reward || step.crossing == 0) return r;
    if (step.crossing == 2) return r + rewards_.nonpreferred;
    return r + (pref_target(p, step.from, rng) == step.to ? rewards_.preferred : rewards_.nonpreferred);
}

double Planner::rollout(SimParticle& p, int loc, int depth, Rng& rng) const {
    double total = 0.0;
    double discount = 1.0;
    const auto& dist = distance_[static_cast<std::size_t>(p.goal_slot)];
    for (int d = 0; d < depth; ++d) {
        const Step* row = &steps_[static_cast<std::size_t>(loc * 8)];
        int valid[8];
        int n_valid = 0;
        for (int a = 0; a < 8; ++a) {
            if (row[a].next >= 0) valid[n_valid++] = a;
        }
        if (n_valid == 0) break;
        int choice = -1;
        const bool explore = config_.rollout == RolloutPolicy::uniform_random ||
                             uniform01(rng) < config_.rollout_epsilon;
        if (explore) {
            choice = valid[uniform_index(rng, static_cast<std::size_t>(n_valid))];
        } else {
            double best = kInfinity;
            for (int i = 0; i < n_valid; ++i) {
                const Step& st = row[valid[i]];
                const double score = st.cost + dist[static_cast<std::size_t>(st.next)];
                if (score < best) {
                    best = score;
                    choice = valid[i];
                }
            }
            if (choice < 0) choice = valid[uniform_index(rng, static_cast<std::size_t>(n_valid))];
        }
        const Step& st = row[choice];
        total += discount * transition_reward(p, st, rng);
        discount *= rewards_.discount;
        loc = st.next;
        if (loc == p.goal) break;
    }
    return total;
}

PlanResult Planner::plan(const Belief& belief, GridCell s, int depth, Rng& rng) const {
    const GridMap& map = world_->map();
    if (depth <= 0) depth = config_.max_depth;
    if (!map.is_free(s)) throw Error(ErrorKind::planning_error, "robot location is not free");
    const int root_loc = map.index(s);
    bool any_valid = false;
    for (int a = 0; a < 8; ++a) any_valid |= steps_[static_cast<std::size_t>(root_loc * 8 + a)].next >= 0;
    if (!any_valid) throw Error(ErrorKind::planning_error, "no valid action from the robot location");

    // Map belief rows onto this planner's goal slots.
    std::vector<int> slot_of_row(static_cast<std::size_t>(belief.goal_count()), -1);
    for (int g = 0; g < belief.goal_count(); ++g) {
        for (std::size_t k = 0; k < goals_.size(); ++k) {
            if (goals_[k] == belief.goals()[static_cast<std::size_t>(g)]) slot_of_row[static_cast<std::size_t>(g)] = static_cast<int>(k);
        }
        if (slot_of_row[static_cast<std::size_t>(g)] < 0) {
            throw Error(ErrorKind::planning_error, "belief goal unknown to the planner");
        }
    }
    const auto probs = belief.probs();
    const int columns = belief.columns();
    const bool has_exits = !belief.exits().empty();

    std::vector<Node> tree;
    tree.reserve(static_cast<std::size_t>(config_.iterations) + 1);
    tree.emplace_back(root_loc);

    struct Visit {
        int node;
        int action;
        double reward;
    };
    std::vector<Visit> path;
    path.reserve(static_cast<std::size_t>(depth));
    SimParticle p;

    for (int it = 0; it < config_.iterations; ++it) {
        const std::size_t row = sample_index(rng, probs);
        const int g = static_cast<int>(row) / columns;
        p.goal_slot = slot_of_row[static_cast<std::size_t>(g)];
        p.goal = goal_index_[static_cast<std::size_t>(p.goal_slot)];
        p.root_vertex = belief.vertex();
        p.root_target = has_exits ? belief.exits()[row % static_cast<std::size_t>(columns)].to : -1;
        p.lazy.clear();

        path.clear();
        int node = 0;
        int remaining = depth;
        double tail = 0.0;
        while (remaining > 0) {
            Node& n = tree[static_cast<std::size_t>(node)];
            const int loc = n.location;
            if (loc == p.goal) break;  // absorbing for this particle
            const Step* steps = &steps_[static_cast<std::size_t>(loc * 8)];
            int chosen = -1;
            double best = kNegInf;
            const double log_n = std::log(static_cast<double>(std::max(n.visits, 1)));
            for (int a = 0; a < 8; ++a) {
                if (steps[a].next < 0) continue;
                if (n.count[static_cast<std::size_t>(a)] == 0) {
                    chosen = a;
                    break;
                }
                const double score = n.q[static_cast<std::size_t>(a)] +
                                     config_.exploration *
                                         std::sqrt(log_n / n.count[static_cast<std::size_t>(a)]);
                if (score > best) {
                    best = score;
                    chosen = a;
                }
            }
            if (chosen < 0) break;  // dead end
            const Step& st = steps[chosen];
            const double r = transition_reward(p, st, rng);
            path.push_back({node, chosen, r});
            --remaining;
            if (st.next == p.goal || remaining == 0) break;

            int child = tree[static_cast<std::size_t>(node)].child[static_cast<std::size_t>(chosen)];
            if (child < 0) {
                child = static_cast<int>(tree.size());
                tree.emplace_back(st.next);
                tree[static_cast<std::size_t>(node)].child[static_cast<std::size_t>(chosen)] = child;
                tail = rollout(p, st.next, remaining, rng);
                break;
            }
            node = child;
        }

        double ret = tail;
        for (auto v = path.rbegin(); v != path.rend(); ++v) {
            ret = v->reward + rewards_.discount * ret;
            Node& n = tree[static_cast<std::size_t>(v->node)];
            const auto a = static_cast<std::size_t>(v->action);
            n.visits += 1;
            n.count[a] += 1;
            n.q[a] += (ret - n.q[a]) / n.count[a];
        }
    }

    const Node& root = tree.front();
    PlanResult result;
    int best_action = -1;
    for (int a = 0; a < 8; ++a) {
        const auto k = static_cast<std::size_t>(a);
        result.q[k] = root.count[k] > 0 ? root.q[k] : kNegInf;
        result.visits[k] = root.count[k];
        if (root.count[k] > 0 && (best_action < 0 || root.q[k] > root.q[static_cast<std::size_t>(best_action)])) {
            best_action = a;
        }
    }
    if (best_action < 0) throw Error(ErrorKind::planning_error, "search produced no visited action");
    result.action = kActions[static_cast<std::size_t>(best_action)];
    result.root_visits = root.visits;
    result.tree_nodes = static_cast<int>(tree.size());
    return result;
}

PlanResult pomcp_plan(const Belief& belief, const World& world, GridCell s, const RewardParams& params,
                      const PlannerConfig& config, Rng& rng) {
    std::vector<GridCell> goals(belief.goals().begin(), belief.goals().end());
    const Planner planner(world, goals, params, config);
    return planner.plan(belief, s, config.max_depth, rng);
}

PlanResult goal_only_plan(std::span<const double> goal_marginal, std::span<const GridCell> goals,
                          const World& world, GridCell s, const RewardParams& params,
                          const PlannerConfig& config, Rng& rng) {
    if (goal_marginal.size() != goals.size()) {
        throw Error(ErrorKind::invalid_input, "goal marginal and goal list differ in length");
    }
    const Belief belief = Belief::from_probs(world, std::vector<GridCell>(goals.begin(), goals.end()),
                                             world.polytope_of(s), InferenceModel::goal_only, goal_marginal);
    PlannerConfig cfg = config;
    cfg.preference_reward = false;
    const Planner planner(world, goals, params, cfg);
    return planner.plan(belief, s, cfg.max_depth, rng);
}

std::optional<Action> compliant_policy(const World& world, GridCell s,
                                       const std::optional<Observation>& last, int age, int momentum) {
    if (!last || age < 0 || age > momentum) return std::nullopt;
    const Action a = last->action();
    if (!try_action(world, s, a)) return std::nullopt;
    return a;
}

Action blended_policy(const Belief& belief, Action planned, std::optional<Action> user, double h,
                      const World& world, GridCell s) {
    if (!user) return planned;
    if (entropy(belief) <= h) return planned;
    if (!try_action(world, s, *user)) return planned;
    return *user;
}

std::vector<int> OracleSolution::optimal_actions(GridCell s, double tol) const {
    const auto& row = q[static_cast<std::size_t>(world->map().index(s))];
    double best = kNegInf;
    for (double v : row) best = std::max(best, v);
    std::vector<int> out;
    if (!std::isfinite(best)) return out;
    for (int a = 0; a < 8; ++a) {
        if (row[static_cast<std::size_t>(a)] >= best - tol) out.push_back(a);
    }
    return out;
}

OracleSolution value_iteration_oracle(const World& world, GridCell goal, const Preference& theta,
                                      const RewardParams& params, int horizon, bool preference_term) {
    const GridMap& map = world.map();
    const int n = map.cell_count();
    const int goal_index = map.index(goal);
    std::vector<double> value(static_cast<std::size_t>(n), 0.0);
    std::vector<std::array<double, 8>> q(static_cast<std::size_t>(n));

    // Rewards do not depend on the stage, so tabulate them once.
    std::vector<std::array<double, 8>> r(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const GridCell s = map.cell_at(i);
        for (int a = 0; a < 8; ++a) {
            double& entry = r[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)];
            entry = kNegInf;
            if (world.successor(i, a) < 0) continue;
            const Action act = kActions[static_cast<std::size_t>(a)];
            Particle particle{s, goal, {}};
            if (auto e = theta.exit(world.polytope_of(s))) particle.set_pref(*e);
            const Crossing c = edge_crossed(world, s, act);
            if (preference_term && c.kind == Crossing::Kind::edge && !particle.pref(c.edge.from)) {
                // a vertex without a stated preference: every exit is non-preferred
                entry = -act.length() + (world.successor(i, a) == goal_index ? params.goal : 0.0) +
                        params.nonpreferred;
                continue;
            }
            entry = reward(world, s, act, particle, params, preference_term);
        }
    }

    for (int stage = 1; stage <= horizon; ++stage) {
        std::vector<double> next_value(static_cast<std::size_t>(n), 0.0);
        for (int i = 0; i < n; ++i) {
            auto& qi = q[static_cast<std::size_t>(i)];
            qi.fill(kNegInf);
            if (i == goal_index || map.blocked[static_cast<std::size_t>(i)]) continue;
            double best = kNegInf;
            for (int a = 0; a < 8; ++a) {
                const int next = world.successor(i, a);
                if (next < 0) continue;
                const double future = next == goal_index ? 0.0 : value[static_cast<std::size_t>(next)];
                qi[static_cast<std::size_t>(a)] =
                    r[static_cast<std::size_t>(i)][static_cast<std::size_t>(a)] + params.discount * future;
                best = std::max(best, qi[static_cast<std::size_t>(a)]);
            }
            next_value[static_cast<std::size_t>(i)] = std::isfinite(best) ? best : 0.0;
        }
        value.swap(next_value);
    }
    OracleSolution out;
    out.horizon = horizon;
    out.value = std::move(value);
    out.q = std::move(q);
    out.world = &world;
    return out;
}

}  // namespace prefnav
