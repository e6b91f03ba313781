#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <tuple>
#include <vector>

#include "prefnav/worldgraph.hpp"

namespace prefnav {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Every transition out of `vertex` must use `exit`; other exits are pruned.
struct PathConstraint {
    int vertex = -1;
    EdgeRef exit;

    auto operator<=>(const PathConstraint&) const = default;
};

struct PathQuery {
    GridCell start;
    GridCell goal;
    std::optional<GridCell> via;
    std::optional<PathConstraint> constraint;
};

struct PathResult {
    double length = kInfinity;
    std::vector<GridCell> path;
    std::vector<EdgeRef> edge_sequence;

    bool reachable() const { return !path.empty(); }
};

double octile_distance(GridCell a, GridCell b);
/// Sum of step lengths, computed from the step counts so that equal-length
/// paths compare equal bit for bit.
double path_length(std::span<const GridCell> path);

bool transition_allowed(const World& world, int from_index, int to_index,
                        const std::optional<PathConstraint>& constraint);

/// A* over the 8-connected grid with octile heuristic and lexicographic
/// (f, h, cell index) tie-breaking. Unreachable queries return an infinite
/// length and an empty path.
PathResult shortest_path(const World& world, const PathQuery& query);

/// Polytope crossings along a path, invalid (non-adjacent) jumps included.
/// Throws invalid_action on a step that is not a legal move.
std::vector<EdgeRef> edge_sequence_of(const World& world, std::span<const GridCell> path);

/// Cost of reaching g from s through the one-step successor o, constrained
/// by the preference on s's vertex when given: δ(s→o) + δ(o→g), both legs
/// constrained.
double cost_C(const World& world, GridCell s, GridCell o, GridCell g,
              const std::optional<PathConstraint>& constraint);

/// Memoizes cost_C evaluations for one robot location. Not thread-safe; use
/// one cache per worker.
class CostCache {
public:
    explicit CostCache(const World& world) : world_(&world) {}

    double cost(GridCell s, GridCell o, GridCell g, const std::optional<PathConstraint>& constraint);
    /// Number of cost requests served (cached or not).
    std::uint64_t evaluations() const { return evaluations_; }
    std::uint64_t searches() const { return searches_; }
    void clear() { memo_.clear(); }

private:
    using Key = std::tuple<int, int, int, int, int, int>;
    const World* world_;
    std::map<Key, double> memo_;
    std::uint64_t evaluations_ = 0;
    std::uint64_t searches_ = 0;
};

}  // namespace prefnav
