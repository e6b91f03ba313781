#include <gtest/gtest.h>

#include <chrono>
#include <deque>

#include <json.hpp>

#include "oracles.hpp"
#include "prefnav/errors.hpp"
#include "prefnav/worldgraph.hpp"

using namespace prefnav;

namespace {

const World& map1() {
    static const World w = load_map_file(oracle::map_path("map1"));
    return w;
}

ErrorKind load_error(const std::string& doc, std::string* message = nullptr) {
    try {
        load_map(doc);
    } catch (const Error& e) {
        if (message) *message = e.what();
        return e.kind();
    }
    return ErrorKind::conflict;
}

/// Pairs of polytopes straddled by some 4-neighbour pair of free cells.
std::set<std::pair<int, int>> grid_adjacency(const World& w) {
    std::set<std::pair<int, int>> out;
    const auto& m = w.map();
    for (GridCell c : w.free_cells()) {
        for (GridCell n : {GridCell{c.x + 1, c.y}, GridCell{c.x, c.y + 1}}) {
            if (!m.is_free(n)) continue;
            const int a = w.polytope_of(c);
            const int b = w.polytope_of(n);
            if (a != b) out.insert({std::min(a, b), std::max(a, b)});
        }
    }
    return out;
}

// Two blocks touching diagonally leave a gap that only a diagonal move crosses.
const char* kGapMap = R"({"width":10,"height":10,"cell_size":1.0,
  "obstacles":[{"halfplanes":[{"n":[1,0],"c":5.0},{"n":[-1,0],"c":-3.8},{"n":[0,1],"c":6.2},{"n":[0,-1],"c":-5.1}]},
               {"halfplanes":[{"n":[1,0],"c":6.1},{"n":[-1,0],"c":-5.05},{"n":[0,1],"c":4.95},{"n":[0,-1],"c":-3.9}]}],
  "start":[0,0],"goal_candidates":[[9,9]],"true_goal_index":0,
  "preference":{"mode":"auto_ccw","obstacle":0},"T_max":30,"delta_T":1,"gamma_h":1.5})";

}  // namespace

TEST(LoadMap, Map1Structure) {
    const World& w = map1();
    EXPECT_EQ(w.map().width, 10);
    EXPECT_EQ(w.map().height, 10);
    EXPECT_EQ(w.graph().vertices().size(), 8u);
    EXPECT_EQ(w.arrangement().free_cell_count(), 8);
}

TEST(LoadMap, BundledMapsLoadQuicklyWithEnoughPolytopes) {
    for (const char* name : {"office", "classroom"}) {
        const auto t0 = std::chrono::steady_clock::now();
        const World w = load_map_file(oracle::map_path(name));
        const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        EXPECT_LT(s, 5.0) << name;
        EXPECT_GE(w.graph().vertices().size(), 40u) << name;
    }
    EXPECT_EQ(load_map_file(oracle::map_path("classroom")).graph().vertices().size(), 73u);
}

TEST(LoadMap, DeterministicForIdenticalInput) {
    const World a = load_map_file(oracle::map_path("office"));
    const World b = load_map_file(oracle::map_path("office"));
    ASSERT_EQ(a.arrangement().cells().size(), b.arrangement().cells().size());
    for (std::size_t i = 0; i < a.arrangement().cells().size(); ++i) {
        EXPECT_EQ(a.arrangement().key(static_cast<int>(i)), b.arrangement().key(static_cast<int>(i)));
    }
    EXPECT_EQ(a.map().cell_to_polytope, b.map().cell_to_polytope);
    EXPECT_EQ(a.preference(), b.preference());
}

TEST(LoadMap, RejectsGoalInsideObstacle) {
    auto doc = nlohmann::json::parse(dump_map(map1().map()));
    doc["goal_candidates"] = {{8, 8}, {5, 5}};
    std::string msg;
    EXPECT_EQ(load_error(doc.dump(), &msg), ErrorKind::invalid_input);
    EXPECT_NE(msg.find("goal candidate 1"), std::string::npos) << msg;
}

TEST(LoadMap, RejectsMalformedDocuments) {
    auto base = nlohmann::json::parse(dump_map(map1().map()));
    EXPECT_EQ(load_error("{"), ErrorKind::invalid_input);
    auto d = base;
    d["start"] = {4, 4};
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
    d = base;
    d["goal_candidates"] = {{8, 8}, {8, 8}};
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
    d = base;
    d["true_goal_index"] = 7;
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
    d = base;
    d["obstacles"] = nlohmann::json::array();
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
    d = base;
    d["delta_T"] = 0;
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
    d = base;
    d["preference"] = {{"mode", "clockwise"}};
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
    d = base;
    d["width"] = "ten";
    EXPECT_EQ(load_error(d.dump()), ErrorKind::invalid_input);
}

TEST(LoadMap, DumpRoundTrip) {
    const World again = load_map(dump_map(map1().map()), "map1");
    EXPECT_EQ(again.map().cell_to_polytope, map1().map().cell_to_polytope);
    EXPECT_EQ(again.map().goal_candidates, map1().map().goal_candidates);
    EXPECT_EQ(again.preference(), map1().preference());
}

TEST(LoadMap, ExplicitPreferenceMatchesGenerated) {
    const World& w = map1();
    nlohmann::json pref = nlohmann::json::object();
    for (int v : w.graph().vertices()) {
        pref[w.arrangement().key(v)] = edge_key(w.arrangement(), *w.preference().exit(v));
    }
    auto doc = nlohmann::json::parse(dump_map(w.map()));
    doc["preference"] = pref;
    EXPECT_EQ(load_map(doc.dump()).preference(), w.preference());

    pref.erase(pref.begin());
    doc["preference"] = pref;
    EXPECT_EQ(load_error(doc.dump()), ErrorKind::invalid_input);
}

TEST(Graph, Map1IsOneEightCycle) {
    const World& w = map1();
    const auto& g = w.graph();
    EXPECT_EQ(g.edges().size(), 8u);
    for (int v : g.vertices()) EXPECT_EQ(g.neighbors(v).size(), 2u);
    // Walk the ring without turning back; it must close after 8 steps.
    int prev = -1;
    int at = g.vertices().front();
    std::set<int> seen;
    for (int i = 0; i < 8; ++i) {
        seen.insert(at);
        const auto nb = g.neighbors(at);
        const int next = nb[0].to != prev ? nb[0].to : nb[1].to;
        prev = at;
        at = next;
    }
    EXPECT_EQ(at, g.vertices().front());
    EXPECT_EQ(seen.size(), 8u);
    EXPECT_EQ(grid_adjacency(w).size(), 8u);
}

TEST(Graph, Map1EdgesMatchGridAdjacency) {
    const World& w = map1();
    std::set<std::pair<int, int>> edges;
    for (const auto& e : w.graph().edges()) edges.insert({e.u, e.v});
    EXPECT_EQ(edges, grid_adjacency(w));
}

TEST(Graph, BundledMapsAreConsistentAndConnected) {
    for (const char* name : {"map1", "office", "classroom"}) {
        const World w = load_map_file(oracle::map_path(name));
        const auto& g = w.graph();
        for (auto [a, b] : grid_adjacency(w)) EXPECT_TRUE(g.adjacent(a, b)) << name;

        std::size_t degree_sum = 0;
        for (int v : g.vertices()) degree_sum += g.neighbors(v).size();
        EXPECT_EQ(degree_sum, 2 * g.edges().size()) << name;

        for (const auto& e : g.edges()) {
            const auto& su = w.arrangement().cell(e.u).signs;
            const auto& sv = w.arrangement().cell(e.v).signs;
            int diff = 0;
            for (std::size_t k = 0; k < su.size(); ++k) diff += su[k] != sv[k];
            EXPECT_EQ(diff, 1);
            EXPECT_NE(su[e.hyperplane], sv[e.hyperplane]);
            EXPECT_EQ(g.label(e.u, e.v), e.hyperplane);
            for (int c : {e.u, e.v}) {
                const auto& ess = w.arrangement().cell(c).essential;
                EXPECT_TRUE(std::any_of(ess.begin(), ess.end(), [&](auto x) { return x.index == e.hyperplane; }));
            }
        }

        std::set<int> reached{g.vertices().front()};
        std::deque<int> q{g.vertices().front()};
        while (!q.empty()) {
            const int v = q.front();
            q.pop_front();
            for (const EdgeRef& e : g.neighbors(v))
                if (reached.insert(e.to).second) q.push_back(e.to);
        }
        EXPECT_EQ(reached.size(), g.vertices().size()) << name;

        // Every vertex with neighbours has a preferred exit.
        for (int v : g.vertices()) {
            if (g.neighbors(v).empty()) continue;
            const auto p = w.preference().exit(v);
            ASSERT_TRUE(p.has_value());
            EXPECT_TRUE(g.adjacent(p->from, p->to));
        }
    }
}

TEST(Graph, NeighborsAreSortedAndUnknownVertexThrows) {
    const World w = load_map_file(oracle::map_path("classroom"));
    for (int v : w.graph().vertices()) {
        const auto nb = w.graph().neighbors(v);
        EXPECT_TRUE(std::is_sorted(nb.begin(), nb.end()));
        for (const EdgeRef& e : nb) EXPECT_EQ(e.from, v);
    }
    const Cell* obstacle = nullptr;
    for (const Cell& c : w.arrangement().cells()) {
        if (c.is_obstacle) obstacle = &c;
    }
    ASSERT_NE(obstacle, nullptr);
    try {
        w.graph().neighbors(obstacle->id);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::not_found);
    }
}

TEST(Graph, AutoCcwGoesCounterClockwiseAroundTheObstacle) {
    const World& w = map1();
    for (int v : w.graph().vertices()) {
        const EdgeRef e = *w.preference().exit(v);
        const Vec2 a = w.arrangement().cell(e.from).interior - Vec2{5, 5};
        const Vec2 b = w.arrangement().cell(e.to).interior - Vec2{5, 5};
        EXPECT_GT(cross(a, b), 0.0);
    }
}

TEST(Actions, IndicesNamesAndLengths) {
    for (std::size_t k = 0; k < kActions.size(); ++k) {
        EXPECT_EQ(kActions[k].index(), static_cast<int>(k));
        const double expected = (k % 2 == 0) ? 1.0 : std::sqrt(2.0);
        EXPECT_DOUBLE_EQ(kActions[k].length(), expected);
    }
    EXPECT_STREQ(kActions[0].name(), "E");
    EXPECT_STREQ(kActions[2].name(), "N");
    EXPECT_THROW(Action({2, 0}).index(), Error);
}

TEST(Actions, ApplyActionRules) {
    const World open = load_map(oracle::open_map_json(10, 10, {0, 0}, {{9, 9}}));
    EXPECT_EQ(apply_action(open, {2, 2}, {1, 0}), (GridCell{3, 2}));
    EXPECT_THROW(apply_action(open, {9, 2}, {1, 0}), Error);
    EXPECT_THROW(apply_action(map1(), {2, 4}, {1, 0}), Error);
    EXPECT_FALSE(try_action(map1(), {2, 4}, {1, 0}).has_value());

    const World gap = load_map(kGapMap);
    ASSERT_FALSE(gap.map().is_free({4, 5}));
    ASSERT_FALSE(gap.map().is_free({5, 4}));
    EXPECT_EQ(apply_action(gap, {4, 4}, {1, 1}), (GridCell{5, 5}));
}

TEST(EdgeCrossed, NoneEdgeAndInvalid) {
    const World& w = map1();
    EXPECT_EQ(edge_crossed(w, {1, 1}, {1, 1}).kind, Crossing::Kind::none);

    const Crossing up = edge_crossed(w, {1, 6}, {0, 1});
    ASSERT_EQ(up.kind, Crossing::Kind::edge);
    EXPECT_EQ(up.edge.from, w.polytope_of({1, 6}));
    EXPECT_EQ(up.edge.to, w.polytope_of({1, 7}));
    // Facet 2 of map1 is y <= 7.
    EXPECT_EQ(w.graph().label(up.edge.from, up.edge.to), 2);

    const World gap = load_map(kGapMap);
    const Crossing diag = edge_crossed(gap, {4, 4}, {1, 1});
    EXPECT_EQ(diag.kind, Crossing::Kind::invalid);
    EXPECT_FALSE(gap.graph().adjacent(diag.edge.from, diag.edge.to));
}
