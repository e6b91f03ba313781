#include <gtest/gtest.h>

#include "oracles.hpp"
#include "prefnav/errors.hpp"
#include "prefnav/pathcost.hpp"

using namespace prefnav;

namespace {

const World& map1() {
    static const World w = load_map_file(oracle::map_path("map1"));
    return w;
}

const World& open10() {
    static const World w = load_map(oracle::open_map_json(10, 10, {0, 0}, {{9, 9}}));
    return w;
}

const double kRoot2 = std::sqrt(2.0);

void expect_valid_path(const World& w, const PathResult& r, GridCell a, GridCell b) {
    ASSERT_FALSE(r.path.empty());
    EXPECT_EQ(r.path.front(), a);
    EXPECT_EQ(r.path.back(), b);
    for (std::size_t i = 1; i < r.path.size(); ++i) {
        EXPECT_TRUE(w.map().is_free(r.path[i]));
        EXPECT_LE(std::abs(r.path[i].x - r.path[i - 1].x), 1);
        EXPECT_LE(std::abs(r.path[i].y - r.path[i - 1].y), 1);
        EXPECT_NE(r.path[i], r.path[i - 1]);
    }
    EXPECT_EQ(r.length, path_length(r.path));
}

std::optional<PathConstraint> random_constraint(const World& w, GridCell s, Rng& rng) {
    const int v = w.polytope_of(s);
    const auto nb = w.graph().neighbors(v);
    if (nb.empty()) return std::nullopt;
    return PathConstraint{v, nb[uniform_index(rng, nb.size())]};
}

}  // namespace

TEST(ShortestPath, PureDiagonal) {
    const PathResult r = shortest_path(open10(), {{0, 0}, {3, 3}, {}, {}});
    EXPECT_EQ(r.length, 3 * kRoot2);
    EXPECT_EQ(r.path.size(), 4u);
    EXPECT_TRUE(r.edge_sequence.empty());
}

TEST(ShortestPath, ViaOnOptimalPathKeepsLength) {
    const PathResult plain = shortest_path(open10(), {{0, 0}, {6, 2}, {}, {}});
    const PathResult via = shortest_path(open10(), {{0, 0}, {6, 2}, GridCell{2, 2}, {}});
    EXPECT_EQ(plain.length, via.length);
    EXPECT_EQ(plain.length, 4 + 2 * kRoot2);
}

TEST(ShortestPath, PreferredTopExitForcesTheLongWay) {
    const World& w = map1();
    const GridCell s{1, 3};
    const GridCell g{8, 3};
    const int v = w.polytope_of(s);
    const int top_left = w.polytope_of({1, 8});
    ASSERT_TRUE(w.graph().adjacent(v, top_left));
    const PathConstraint c{v, {v, top_left}};

    const PathResult free = shortest_path(w, {s, g, {}, {}});
    const PathResult constrained = shortest_path(w, {s, g, {}, c});
    EXPECT_EQ(free.length, oracle::shortest(w, s, g));
    EXPECT_EQ(constrained.length, oracle::shortest(w, s, g, v, top_left));
    EXPECT_GT(constrained.length, free.length);
    expect_valid_path(w, constrained, s, g);
    EXPECT_EQ(constrained.edge_sequence.front(), c.exit);
}

TEST(ShortestPath, MatchesDijkstraOnRandomInstances) {
    Rng rng(42);
    const World office = load_map_file(oracle::map_path("office"));
    const World classroom = load_map_file(oracle::map_path("classroom"));
    const std::vector<const World*> worlds = {&map1(), &office, &classroom};
    int infinite = 0;
    for (int i = 0; i < 100; ++i) {
        const World& w = *worlds[static_cast<std::size_t>(i % 3)];
        const auto cells = w.free_cells();
        const GridCell s = cells[uniform_index(rng, cells.size())];
        const GridCell g = cells[uniform_index(rng, cells.size())];
        const auto c = random_constraint(w, s, rng);
        const PathResult r = shortest_path(w, {s, g, {}, c});
        const double expected = c ? oracle::shortest(w, s, g, c->vertex, c->exit.to) : oracle::shortest(w, s, g);
        if (std::isinf(expected)) {
            ++infinite;
            EXPECT_TRUE(std::isinf(r.length));
            EXPECT_TRUE(r.path.empty());
            continue;
        }
        EXPECT_EQ(r.length, expected) << "instance " << i;
        expect_valid_path(w, r, s, g);
        const PathResult plain = shortest_path(w, {s, g, {}, {}});
        EXPECT_GE(r.length, plain.length);
        if (c) {
            for (const EdgeRef& e : r.edge_sequence) {
                if (e.from == c->vertex) EXPECT_EQ(e, c->exit);
            }
        }
    }
    EXPECT_LT(infinite, 100);
}

TEST(ShortestPath, ViaTriangleProperty) {
    Rng rng(9);
    const World& w = map1();
    const auto cells = w.free_cells();
    for (int i = 0; i < 60; ++i) {
        const GridCell s = cells[uniform_index(rng, cells.size())];
        const GridCell g = cells[uniform_index(rng, cells.size())];
        const GridCell o = cells[uniform_index(rng, cells.size())];
        const double direct = shortest_path(w, {s, g, {}, {}}).length;
        const double via = shortest_path(w, {s, g, o, {}}).length;
        EXPECT_GE(via, direct - 1e-12);
        const bool on_optimal = std::abs(oracle::shortest(w, s, o) + oracle::shortest(w, o, g) - direct) < 1e-9;
        EXPECT_EQ(std::abs(via - direct) < 1e-9, on_optimal);
    }
}

TEST(ShortestPath, DeterministicTieBreaking) {
    const PathResult a = shortest_path(map1(), {{0, 0}, {9, 9}, {}, {}});
    const PathResult b = shortest_path(map1(), {{0, 0}, {9, 9}, {}, {}});
    EXPECT_EQ(a.path, b.path);
}

TEST(ShortestPath, RejectsBlockedEndpointsAndMismatchedConstraint) {
    EXPECT_THROW(shortest_path(map1(), {{0, 0}, {5, 5}, {}, {}}), Error);
    const int v = map1().polytope_of({0, 0});
    const EdgeRef other = map1().graph().neighbors(map1().polytope_of({5, 1}))[0];
    EXPECT_THROW(shortest_path(map1(), {{0, 0}, {9, 9}, {}, PathConstraint{v, other}}), Error);
}

TEST(CostC, GoalIsTheSuccessor) {
    EXPECT_EQ(cost_C(open10(), {4, 4}, {5, 5}, {5, 5}, {}), kRoot2);
    EXPECT_EQ(cost_C(open10(), {4, 4}, {4, 5}, {4, 5}, {}), 1.0);
}

TEST(CostC, OpenMapIsStepPlusOctile) {
    const GridCell s{2, 2};
    const GridCell g{8, 5};
    for (const Action a : kActions) {
        const GridCell o{s.x + a.dx, s.y + a.dy};
        EXPECT_NEAR(cost_C(open10(), s, o, g, {}), a.length() + octile_distance(o, g), 1e-12);
    }
}

TEST(CostC, Map1AllHeadingsMatchOracleUnderPreference) {
    const World& w = map1();
    for (GridCell s : {GridCell{1, 5}, GridCell{2, 2}, GridCell{5, 8}, GridCell{8, 1}}) {
        const int v = w.polytope_of(s);
        for (const EdgeRef& exit : w.graph().neighbors(v)) {
            const PathConstraint c{v, exit};
            for (GridCell g : w.map().goal_candidates) {
                CostCache cache(w);
                for (const Action a : kActions) {
                    const GridCell o{s.x + a.dx, s.y + a.dy};
                    if (!w.map().is_free(o)) continue;
                    const double expected = oracle::cost_via(w, s, o, g, v, exit.to);
                    const double got = cost_C(w, s, o, g, c);
                    if (std::isinf(expected)) {
                        EXPECT_TRUE(std::isinf(got));
                    } else {
                        EXPECT_NEAR(got, expected, 1e-12);
                    }
                    const double cached = cache.cost(s, o, g, c);
                    EXPECT_TRUE(cached == got || std::abs(cached - got) < 1e-12);
                }
            }
        }
    }
}

TEST(CostCache, CountsRequestsAndMemoizes) {
    const World& w = map1();
    CostCache cache(w);
    const double a = cache.cost({1, 1}, {2, 2}, {8, 8}, {});
    const double b = cache.cost({1, 1}, {2, 2}, {8, 8}, {});
    EXPECT_EQ(a, b);
    EXPECT_EQ(cache.evaluations(), 2u);
    EXPECT_EQ(cache.searches(), 1u);
    cache.clear();
    cache.cost({1, 1}, {2, 2}, {8, 8}, {});
    EXPECT_EQ(cache.searches(), 2u);
}

TEST(EdgeSequence, InsideOnePolytopeIsEmpty) {
    const std::vector<GridCell> path = {{0, 0}, {1, 1}, {2, 1}, {2, 2}};
    EXPECT_TRUE(edge_sequence_of(map1(), path).empty());
    const std::vector<GridCell> jump = {{0, 0}, {2, 0}};
    EXPECT_THROW(edge_sequence_of(map1(), jump), Error);
}

TEST(EdgeSequence, HomotopyClassesAroundTheObstacle) {
    const World& w = map1();
    const GridCell s{1, 4};
    const GridCell g{8, 5};
    auto around = [&](int row, bool x_first) {
        std::vector<GridCell> path{s};
        oracle::append_l_path(path, {s.x, row}, true);
        oracle::append_l_path(path, {g.x, row}, x_first);
        oracle::append_l_path(path, g, true);
        return path;
    };
    const auto top_a = around(8, true);
    const auto top_b = around(9, true);
    const auto bottom = around(1, true);
    ASSERT_EQ(oracle::polytope_sequence(w, top_a), oracle::polytope_sequence(w, top_b));
    EXPECT_EQ(edge_sequence_of(w, top_a), edge_sequence_of(w, top_b));
    EXPECT_NE(edge_sequence_of(w, top_a), edge_sequence_of(w, bottom));
    EXPECT_EQ(edge_sequence_of(w, top_a).size(), 4u);
}
