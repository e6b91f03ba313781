#include "prefnav/pathcost.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>

#include "prefnav/errors.hpp"

namespace prefnav {

namespace {

const double kSqrt2 = std::sqrt(2.0);

struct Scratch {
    std::vector<double> g;
    std::vector<int> parent;
    std::vector<std::uint32_t> stamp;
    std::vector<char> closed;
    std::uint32_t generation = 0;

    void reset(std::size_t n) {
        if (g.size() != n) {
            g.assign(n, kInfinity);
            parent.assign(n, -1);
            stamp.assign(n, 0);
            closed.assign(n, 0);
            generation = 0;
        }
        ++generation;
    }
    bool seen(int i) const { return stamp[static_cast<std::size_t>(i)] == generation; }
    void touch(int i) {
        const auto k = static_cast<std::size_t>(i);
        if (stamp[k] != generation) {
            stamp[k] = generation;
            g[k] = kInfinity;
            parent[k] = -1;
            closed[k] = 0;
        }
    }
};

struct Leg {
    double length = kInfinity;
    std::vector<GridCell> path;
};

Leg astar(const World& world, GridCell start, GridCell goal,
          const std::optional<PathConstraint>& constraint) {
    const GridMap& map = world.map();
    if (!map.is_free(start) || !map.is_free(goal)) {
        throw Error(ErrorKind::invalid_input, "path endpoints must be free cells");
    }
    thread_local Scratch s;
    s.reset(static_cast<std::size_t>(map.cell_count()));

    using Entry = std::tuple<double, double, int>;  // f, h, index
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
    const int start_index = map.index(start);
    const int goal_index = map.index(goal);
    s.touch(start_index);
    s.g[static_cast<std::size_t>(start_index)] = 0.0;
    const double h0 = octile_distance(start, goal);
    open.emplace(h0, h0, start_index);

    while (!open.empty()) {
        const auto [f, h, at] = open.top();
        open.pop();
        const auto k = static_cast<std::size_t>(at);
        if (s.closed[k]) continue;
        s.closed[k] = 1;
        if (at == goal_index) break;
        for (int a = 0; a < 8; ++a) {
            const int next = world.successor(at, a);
            if (next < 0) continue;
            if (!transition_allowed(world, at, next, constraint)) continue;
            s.touch(next);
            const auto n = static_cast<std::size_t>(next);
            if (s.closed[n]) continue;
            const double step = (a % 2 == 1) ? kSqrt2 : 1.0;
            const double candidate = s.g[k] + step;
            if (candidate < s.g[n]) {
                s.g[n] = candidate;
                s.parent[n] = at;
                const double hn = octile_distance(map.cell_at(next), goal);
                open.emplace(candidate + hn, hn, next);
            }
        }
    }

    if (!s.seen(goal_index) || !s.closed[static_cast<std::size_t>(goal_index)]) return {};
    Leg leg;
    for (int at = goal_index; at >= 0; at = s.parent[static_cast<std::size_t>(at)]) {
        leg.path.push_back(map.cell_at(at));
        if (at == start_index) break;
    }
    std::reverse(leg.path.begin(), leg.path.end());
    leg.length = path_length(leg.path);
    return leg;
}

}  // namespace

double octile_distance(GridCell a, GridCell b) {
    const int dx = std::abs(a.x - b.x);
    const int dy = std::abs(a.y - b.y);
    return std::max(dx, dy) - std::min(dx, dy) + kSqrt2 * std::min(dx, dy);
}

double path_length(std::span<const GridCell> path) {
    if (path.empty()) return kInfinity;
    int straight = 0;
    int diagonal = 0;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const bool diag = path[i].x != path[i - 1].x && path[i].y != path[i - 1].y;
        (diag ? diagonal : straight) += 1;
    }
    return straight + kSqrt2 * diagonal;
}

bool transition_allowed(const World& world, int from_index, int to_index,
                        const std::optional<PathConstraint>& constraint) {
    if (!constraint) return true;
    const int from = world.polytope_of_index(from_index);
    if (from != constraint->vertex) return true;
    const int to = world.polytope_of_index(to_index);
    return to == from || to == constraint->exit.to;
}

PathResult shortest_path(const World& world, const PathQuery& query) {
    if (query.constraint && query.constraint->exit.from != query.constraint->vertex) {
        throw Error(ErrorKind::invalid_input, "preferred exit must leave the constrained vertex");
    }
    Leg leg;
    if (query.via) {
        Leg first = astar(world, query.start, *query.via, query.constraint);
        if (first.path.empty()) return {};
        Leg second = astar(world, *query.via, query.goal, query.constraint);
        if (second.path.empty()) return {};
        leg.path = std::move(first.path);
        leg.path.insert(leg.path.end(), second.path.begin() + 1, second.path.end());
        leg.length = path_length(leg.path);
    } else {
        leg = astar(world, query.start, query.goal, query.constraint);
        if (leg.path.empty()) return {};
    }
    PathResult result;
    result.length = leg.length;
    result.path = std::move(leg.path);
    result.edge_sequence = edge_sequence_of(world, result.path);
    return result;
}

std::vector<EdgeRef> edge_sequence_of(const World& world, std::span<const GridCell> path) {
    std::vector<EdgeRef> out;
    for (std::size_t i = 1; i < path.size(); ++i) {
        const Action a{path[i].x - path[i - 1].x, path[i].y - path[i - 1].y};
        if (std::abs(a.dx) > 1 || std::abs(a.dy) > 1 || (a.dx == 0 && a.dy == 0)) {
            throw Error(ErrorKind::invalid_action, "path contains a non-adjacent step");
        }
        const Crossing c = edge_crossed(world, path[i - 1], a);
        if (c.kind != Crossing::Kind::none) out.push_back(c.edge);
    }
    return out;
}

double cost_C(const World& world, GridCell s, GridCell o, GridCell g,
              const std::optional<PathConstraint>& constraint) {
    return shortest_path(world, {s, g, o, constraint}).length;
}

double CostCache::cost(GridCell s, GridCell o, GridCell g,
                       const std::optional<PathConstraint>& constraint) {
    ++evaluations_;
    const World& w = *world_;
    const Key key{w.map().index(s), w.map().index(o), w.map().index(g),
                  constraint ? constraint->vertex : -1, constraint ? constraint->exit.from : -1,
                  constraint ? constraint->exit.to : -1};
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    ++searches_;
    double value;
    const int si = w.map().index(s);
    const int oi = w.map().index(o);
    const bool direct = std::abs(s.x - o.x) <= 1 && std::abs(s.y - o.y) <= 1 && !(s == o);
    if (direct && transition_allowed(w, si, oi, constraint)) {
        // The first leg is the single step; skip the path bookkeeping.
        const Leg rest = astar(w, o, g, constraint);
        value = rest.path.empty() ? kInfinity : octile_distance(s, o) + rest.length;
    } else {
        value = cost_C(w, s, o, g, constraint);
    }
    memo_.emplace(key, value);
    return value;
}

}  // namespace prefnav
