#include "prefnav/worldgraph.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include "prefnav/errors.hpp"

namespace prefnav {

int Action::index() const {
    for (std::size_t k = 0; k < kActions.size(); ++k) {
        if (kActions[k] == *this) return static_cast<int>(k);
    }
    throw Error(ErrorKind::invalid_action, "not a unit move");
}

const char* Action::name() const {
    static constexpr std::array<const char*, 8> names = {"E", "NE", "N", "NW", "W", "SW", "S", "SE"};
    return names[static_cast<std::size_t>(index())];
}

bool PolytopeGraph::is_vertex(int v) const {
    return v >= 0 && static_cast<std::size_t>(v) < is_vertex_.size() && is_vertex_[static_cast<std::size_t>(v)];
}

std::span<const EdgeRef> PolytopeGraph::neighbors(int v) const {
    if (!is_vertex(v)) throw Error(ErrorKind::not_found, "unknown vertex " + std::to_string(v));
    return adjacency_[static_cast<std::size_t>(v)];
}

bool PolytopeGraph::adjacent(int u, int v) const {
    if (!is_vertex(u) || !is_vertex(v)) return false;
    const auto& list = adjacency_[static_cast<std::size_t>(u)];
    return std::binary_search(list.begin(), list.end(), EdgeRef{u, v});
}

int PolytopeGraph::label(int u, int v) const {
    if (!is_vertex(u) || !is_vertex(v)) return -1;
    const auto lo = std::min(u, v);
    const auto hi = std::max(u, v);
    for (const GraphEdge& e : edges_) {
        if (e.u == lo && e.v == hi) return e.hyperplane;
    }
    return -1;
}

PolytopeGraph build_graph(const Arrangement& arrangement) {
    PolytopeGraph g;
    const auto cells = arrangement.cells();
    g.is_vertex_.assign(cells.size(), 0);
    g.adjacency_.assign(cells.size(), {});
    std::set<std::tuple<int, int, int>> edges;
    for (const Cell& cell : cells) {
        if (cell.is_obstacle) continue;
        g.vertices_.push_back(cell.id);
        g.is_vertex_[static_cast<std::size_t>(cell.id)] = 1;
        for (const EssentialConstraint& e : cell.essential) {
            if (arrangement.is_bound_index(e.index)) continue;
            SignVector flipped = cell.signs;
            flipped[static_cast<std::size_t>(e.index)] = static_cast<std::int8_t>(-flipped[static_cast<std::size_t>(e.index)]);
            const auto other = arrangement.find_cell(flipped);
            if (!other || arrangement.cell(*other).is_obstacle) continue;
            edges.emplace(std::min(cell.id, *other), std::max(cell.id, *other), e.index);
        }
    }
    for (const auto& [u, v, k] : edges) {
        g.edges_.push_back({u, v, k});
        g.adjacency_[static_cast<std::size_t>(u)].push_back({u, v});
        g.adjacency_[static_cast<std::size_t>(v)].push_back({v, u});
    }
    for (auto& list : g.adjacency_) std::sort(list.begin(), list.end());
    return g;
}

void Preference::set(EdgeRef exit) {
    target_.at(static_cast<std::size_t>(exit.from)) = exit.to;
}

std::optional<EdgeRef> Preference::exit(int vertex) const {
    if (vertex < 0 || static_cast<std::size_t>(vertex) >= target_.size()) return std::nullopt;
    const int to = target_[static_cast<std::size_t>(vertex)];
    if (to < 0) return std::nullopt;
    return EdgeRef{vertex, to};
}

World::World(GridMap map, Arrangement arrangement)
    : map_(std::move(map)), arrangement_(std::move(arrangement)), graph_(build_graph(arrangement_)) {
    preference_ = resolve_preference(arrangement_, graph_, map_.preference);
    successor_.assign(static_cast<std::size_t>(map_.cell_count() * 8), -1);
    for (int i = 0; i < map_.cell_count(); ++i) {
        const GridCell c = map_.cell_at(i);
        if (!map_.is_free(c)) continue;
        for (int k = 0; k < 8; ++k) {
            const GridCell t{c.x + kActions[static_cast<std::size_t>(k)].dx, c.y + kActions[static_cast<std::size_t>(k)].dy};
            if (map_.is_free(t)) successor_[static_cast<std::size_t>(i * 8 + k)] = map_.index(t);
        }
    }
}

std::vector<GridCell> World::free_cells() const {
    std::vector<GridCell> out;
    for (int i = 0; i < map_.cell_count(); ++i) {
        if (!map_.blocked[static_cast<std::size_t>(i)]) out.push_back(map_.cell_at(i));
    }
    return out;
}

std::optional<GridCell> try_action(const World& world, GridCell s, Action a) {
    const GridCell t{s.x + a.dx, s.y + a.dy};
    if (!world.map().is_free(s) || !world.map().is_free(t)) return std::nullopt;
    return t;
}

GridCell apply_action(const World& world, GridCell s, Action a) {
    if (auto t = try_action(world, s, a)) return *t;
    throw Error(ErrorKind::invalid_action, "action " + std::string(a.name()) + " from (" +
                                               std::to_string(s.x) + ", " + std::to_string(s.y) +
                                               ") is blocked or leaves the map");
}

Crossing edge_crossed(const World& world, GridCell s, Action a) {
    const GridCell t = apply_action(world, s, a);
    const int from = world.polytope_of(s);
    const int to = world.polytope_of(t);
    if (from == to) return {};
    const auto kind = world.graph().adjacent(from, to) ? Crossing::Kind::edge : Crossing::Kind::invalid;
    return {kind, {from, to}};
}

Preference auto_ccw_preference(const Arrangement& arrangement, const PolytopeGraph& graph,
                               int obstacle) {
    const auto obstacles = arrangement.obstacles();
    if (obstacle < 0 || static_cast<std::size_t>(obstacle) >= obstacles.size()) {
        throw Error(ErrorKind::invalid_input, "auto_ccw obstacle index out of range");
    }
    std::vector<LinearConstraint> rows;
    for (const HalfPlane& h : obstacles[static_cast<std::size_t>(obstacle)].halfplanes) {
        rows.push_back({h.normal, h.offset});
    }
    const Vec2 hub = polygon_centroid(clip_polygon(arrangement.bounds(), rows));

    Preference pref(arrangement.cells().size());
    for (int v : graph.vertices()) {
        const auto exits = graph.neighbors(v);
        if (exits.empty()) continue;
        const Vec2 here = arrangement.cell(v).interior;
        const Vec2 radial = here - hub;
        const Vec2 tangent = perp(radial) * (1.0 / std::max(norm(radial), 1e-12));
        const EdgeRef* best = nullptr;
        double best_score = 0.0;
        for (const EdgeRef& e : exits) {
            const double score = dot(arrangement.cell(e.to).interior - here, tangent);
            if (best == nullptr || score > best_score + 1e-12) {
                best = &e;
                best_score = score;
            }
        }
        pref.set(*best);
    }
    return pref;
}

std::string edge_key(const Arrangement& arrangement, EdgeRef edge) {
    return arrangement.key(edge.from) + "-" + arrangement.key(edge.to);
}

Preference resolve_preference(const Arrangement& arrangement, const PolytopeGraph& graph,
                              const PreferenceSpec& spec) {
    if (spec.mode == PreferenceSpec::Mode::auto_ccw) {
        return auto_ccw_preference(arrangement, graph, spec.obstacle);
    }
    Preference pref(arrangement.cells().size());
    for (const auto& [vertex_key, edge] : spec.edges) {
        const auto v = arrangement.find_key(vertex_key);
        if (!v || !graph.is_vertex(*v)) {
            throw Error(ErrorKind::invalid_input, "preference names unknown vertex " + vertex_key);
        }
        const auto dash = edge.find('-');
        if (dash == std::string::npos) {
            throw Error(ErrorKind::invalid_input, "preference edge '" + edge + "' is not of the form u-v");
        }
        const auto from = arrangement.find_key(edge.substr(0, dash));
        const auto to = arrangement.find_key(edge.substr(dash + 1));
        if (!from || !to || *from != *v || !graph.adjacent(*from, *to)) {
            throw Error(ErrorKind::invalid_input,
                        "preference edge '" + edge + "' is not an exit of vertex " + vertex_key);
        }
        pref.set({*from, *to});
    }
    for (int v : graph.vertices()) {
        if (!graph.neighbors(v).empty() && !pref.defined(v)) {
            throw Error(ErrorKind::invalid_input,
                        "preference missing for vertex " + arrangement.key(v));
        }
    }
    return pref;
}

}  // namespace prefnav
