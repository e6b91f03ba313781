#pragma once

#include <array>
#include <compare>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefnav/geometry.hpp"

namespace prefnav {

struct GridCell {
    int x = 0;
    int y = 0;

    constexpr auto operator<=>(const GridCell&) const = default;
};

/// One of the eight unit moves. Index k corresponds to heading angle k·π/4
/// (0 = East, 2 = North), so actions and compass headings share indices.
struct Action {
    int dx = 0;
    int dy = 0;

    constexpr bool operator==(const Action&) const = default;
    double length() const { return (dx != 0 && dy != 0) ? std::sqrt(2.0) : 1.0; }
    int index() const;
    const char* name() const;
};

inline constexpr std::array<Action, 8> kActions = {{
    {1, 0}, {1, 1}, {0, 1}, {-1, 1}, {-1, 0}, {-1, -1}, {0, -1}, {1, -1},
}};

/// Directed use of an undirected graph edge.
struct EdgeRef {
    int from = -1;
    int to = -1;

    constexpr auto operator<=>(const EdgeRef&) const = default;
    EdgeRef reversed() const { return {to, from}; }
};

struct GraphEdge {
    int u = -1;  // u < v
    int v = -1;
    int hyperplane = -1;
};

/// Adjacency of obstacle-free arrangement cells. Vertex ids are arrangement
/// cell ids.
class PolytopeGraph {
public:
    std::span<const int> vertices() const { return vertices_; }
    std::span<const GraphEdge> edges() const { return edges_; }
    bool is_vertex(int v) const;
    /// Sorted by target. Throws not_found for unknown vertices.
    std::span<const EdgeRef> neighbors(int v) const;
    bool adjacent(int u, int v) const;
    /// Hyperplane label of the edge {u, v}, or -1.
    int label(int u, int v) const;

private:
    friend PolytopeGraph build_graph(const Arrangement& arrangement);

    std::vector<int> vertices_;
    std::vector<GraphEdge> edges_;
    std::vector<std::vector<EdgeRef>> adjacency_;  // indexed by cell id
    std::vector<char> is_vertex_;
};

PolytopeGraph build_graph(const Arrangement& arrangement);

/// Result of moving between grid cells, classified against the graph.
struct Crossing {
    enum class Kind { none, edge, invalid };
    Kind kind = Kind::none;
    EdgeRef edge;  // polytopes before and after; meaningful unless kind == none

    bool operator==(const Crossing&) const = default;
};

/// A full path preference: preferred exit for every vertex with neighbors.
class Preference {
public:
    Preference() = default;
    explicit Preference(std::size_t cell_count) : target_(cell_count, -1) {}

    void set(EdgeRef exit);
    std::optional<EdgeRef> exit(int vertex) const;
    bool defined(int vertex) const { return exit(vertex).has_value(); }
    std::size_t size() const { return target_.size(); }
    bool operator==(const Preference&) const = default;

private:
    std::vector<int> target_;
};

struct PreferenceSpec {
    enum class Mode { explicit_edges, auto_ccw };
    Mode mode = Mode::auto_ccw;
    int obstacle = 0;
    std::map<std::string, std::string> edges;  // vertex key -> "uKey-vKey"
};

struct GridMap {
    std::string id;
    int width = 0;
    int height = 0;
    double cell_size = 1.0;
    std::vector<ObstaclePolytope> obstacles;
    GridCell start;
    std::vector<GridCell> goal_candidates;
    int true_goal_index = 0;
    PreferenceSpec preference;
    int t_max = 30;
    int delta_t = 1;
    double gamma_h = 1.5;

    std::vector<char> blocked;          // row-major
    std::vector<int> cell_to_polytope;  // row-major

    bool in_bounds(GridCell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
    int index(GridCell c) const { return c.y * width + c.x; }
    GridCell cell_at(int index) const { return {index % width, index / width}; }
    int cell_count() const { return width * height; }
    bool is_free(GridCell c) const { return in_bounds(c) && !blocked[static_cast<std::size_t>(index(c))]; }
    Vec2 center(GridCell c) const { return {(c.x + 0.5) * cell_size, (c.y + 0.5) * cell_size}; }
    Rect bounds() const { return {0.0, 0.0, width * cell_size, height * cell_size}; }
};

/// Loaded environment: map, arrangement, graph and the successor tables used
/// by the search code. Immutable after load.
class World {
public:
    World(GridMap map, Arrangement arrangement);

    const GridMap& map() const { return map_; }
    const Arrangement& arrangement() const { return arrangement_; }
    const PolytopeGraph& graph() const { return graph_; }
    /// Ground-truth preference resolved from the map document.
    const Preference& preference() const { return preference_; }

    int polytope_of(GridCell c) const { return map_.cell_to_polytope[static_cast<std::size_t>(map_.index(c))]; }
    int polytope_of_index(int index) const { return map_.cell_to_polytope[static_cast<std::size_t>(index)]; }
    /// Row-major index of the successor of cell `index` under action k, or -1.
    int successor(int index, int action) const { return successor_[static_cast<std::size_t>(index * 8 + action)]; }
    std::vector<GridCell> free_cells() const;

private:
    GridMap map_;
    Arrangement arrangement_;
    PolytopeGraph graph_;
    Preference preference_;
    std::vector<int> successor_;
};

/// Parses and validates a map document; throws Error(invalid_input) naming
/// the offending field.
World load_map(std::string_view document, std::string id = {});
World load_map_file(const std::string& path);
/// Serializes the map document (not the derived tables).
std::string dump_map(const GridMap& map);

/// Throws invalid_action when the target is blocked or out of bounds.
GridCell apply_action(const World& world, GridCell s, Action a);
std::optional<GridCell> try_action(const World& world, GridCell s, Action a);
Crossing edge_crossed(const World& world, GridCell s, Action a);

/// Preferred exit of each vertex is the neighbor lying furthest
/// counter-clockwise around the given obstacle.
Preference auto_ccw_preference(const Arrangement& arrangement, const PolytopeGraph& graph,
                               int obstacle);
Preference resolve_preference(const Arrangement& arrangement, const PolytopeGraph& graph,
                              const PreferenceSpec& spec);

std::string edge_key(const Arrangement& arrangement, EdgeRef edge);

}  // namespace prefnav
