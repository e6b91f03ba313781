#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <thread>

#include "oracles.hpp"
#include "prefnav/errors.hpp"
#include "prefnav/service.hpp"

using namespace prefnav;

namespace {

std::map<std::string, std::shared_ptr<const World>> bundled_worlds() {
    std::map<std::string, std::shared_ptr<const World>> worlds;
    worlds.emplace("map1", std::make_shared<const World>(load_map_file(oracle::map_path("map1"))));
    worlds.emplace("corridor",
                   std::make_shared<const World>(load_map(oracle::open_map_json(12, 3, {5, 1}, {{11, 1}, {0, 1}}),
                                                          "corridor")));
    return worlds;
}

std::optional<ErrorKind> kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

class ServiceTest : public ::testing::Test {
protected:
    SessionManager manager{bundled_worlds()};

    std::string create(const std::string& map, const std::string& method, Json overrides = Json::object()) {
        if (!overrides.contains("iterations")) overrides["iterations"] = 100;
        if (!overrides.contains("seed")) overrides["seed"] = 7;
        return manager.create(map, method, overrides)["session"]["id"];
    }

    std::vector<Json> all_events(const std::string& id) {
        bool closed = false;
        return manager.events(id, 0, 0, &closed);
    }
};

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_F(ServiceTest, ListsMaps) {
    const Json maps = manager.list_maps();
    ASSERT_EQ(maps.size(), 2u);
    EXPECT_EQ(maps[1]["id"], "map1");
    EXPECT_EQ(maps[1]["polytopes"].size(), 8u);
    EXPECT_EQ(maps[1]["obstacles"].size(), 1u);
}

TEST_F(ServiceTest, CreateReturnsSessionAndGeometry) {
    const Json out = manager.create("map1", "path_pref", {{"seed", 3}});
    EXPECT_EQ(out["map"]["polytopes"].size(), 8u);
    const Json& s = out["session"];
    EXPECT_EQ(s["method"], "path_pref");
    EXPECT_EQ(s["seed"], 3u);
    EXPECT_EQ(s["start"], Json::array({1, 1}));
    EXPECT_EQ(s["belief"]["goal_marginal"].size(), 4u);
    const Json state = manager.get_state(s["id"]);
    EXPECT_EQ(state["status"], "running");
    EXPECT_EQ(state["step"], 0);
    EXPECT_EQ(manager.session_count(), 1u);
}

TEST_F(ServiceTest, CreateRejectsBadRequests) {
    EXPECT_EQ(kind_of([&] { manager.create("nowhere", "path_pref", Json::object()); }), ErrorKind::not_found);
    EXPECT_EQ(kind_of([&] { manager.create("map1", "psychic", Json::object()); }), ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([&] { manager.create("map1", "path_pref", {{"colour", 1}}); }), ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([&] { manager.create("map1", "path_pref", {{"start", {4, 4}}}); }), ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([&] { manager.create("map1", "path_pref", {{"t_max", 0}}); }), ErrorKind::invalid_input);
    EXPECT_EQ(kind_of([&] { manager.get_state("abc"); }), ErrorKind::not_found);
    EXPECT_EQ(manager.session_count(), 0u);
}

TEST_F(ServiceTest, OverridesRoundTrip) {
    const Json doc = {{"seed", 5},     {"start", {0, 2}}, {"goal_candidates", {{9, 9}, {0, 9}}},
                      {"true_goal_index", 1}, {"t_max", 12}, {"gamma_h", 2.5},
                      {"iterations", 40}, {"entropy_threshold", 0.5}, {"auto_step_ms", 0}};
    EXPECT_EQ(SessionOverrides::from_json(doc).to_json(), doc);
}

TEST_F(ServiceTest, InadmissibleHeadingLeavesBeliefUntouched) {
    const std::string id = create("map1", "path_pref", {{"start", {0, 1}}});
    const Json before = manager.get_state(id);
    EXPECT_EQ(kind_of([&] { manager.post_heading(id, kPi); }), ErrorKind::inadmissible_heading);
    const Json after = manager.get_state(id);
    EXPECT_EQ(after["belief"], before["belief"]);
    EXPECT_EQ(after["event_count"], 0);
    EXPECT_EQ(kind_of([&] { manager.post_heading(id, std::nan("")); }), ErrorKind::invalid_input);
}

TEST_F(ServiceTest, RepeatedHeadingsRaiseTheirGoal) {
    const std::string id = create("corridor", "path_pref");
    double previous = manager.get_state(id)["belief"]["goal_marginal"][0]["prob"];
    EXPECT_NEAR(previous, 0.5, 1e-12);
    for (int i = 0; i < 3; ++i) {
        const Json b = manager.post_heading(id, 0.0);
        const double p = b["goal_marginal"][0]["prob"];
        EXPECT_GT(p, previous);
        previous = p;
    }
}

TEST_F(ServiceTest, BeliefSummaryIsConsistent) {
    const std::string id = create("map1", "path_pref");
    manager.post_heading(id, kPi / 4);
    manager.post_heading(id, 0.0);
    const Json b = manager.get_state(id)["belief"];
    double total = 0, h = 0;
    for (const auto& row : b["joint"]) {
        for (const auto& p : row) {
            const double x = p.get<double>();
            total += x;
            if (x > 0) h -= x * std::log(x);
        }
    }
    EXPECT_NEAR(total, 1.0, 1e-6);
    EXPECT_NEAR(b["entropy"].get<double>(), h, 1e-9);
    double goals = 0, exits = 0;
    for (const auto& g : b["goal_marginal"]) goals += g["prob"].get<double>();
    for (const auto& e : b["preference"]) exits += e["prob"].get<double>();
    EXPECT_NEAR(goals, 1.0, 1e-6);
    EXPECT_NEAR(exits, 1.0, 1e-6);
    EXPECT_EQ(b["preference"].size(), b["joint"][0].size());
}

TEST_F(ServiceTest, TerminalSessionsRejectInput) {
    const std::string id = create("map1", "compliant", {{"t_max", 1}});
    const Json e = manager.step(id);
    EXPECT_EQ(e["status"], "failed");
    EXPECT_EQ(kind_of([&] { manager.step(id); }), ErrorKind::conflict);
    EXPECT_EQ(kind_of([&] { manager.post_heading(id, 0.0); }), ErrorKind::conflict);
    bool closed = false;
    EXPECT_EQ(manager.events(id, 0, 0, &closed).size(), 1u);
    EXPECT_TRUE(closed);
}

TEST_F(ServiceTest, ReachingTheGoalSucceeds) {
    const std::string id = create("corridor", "compliant", {{"start", {9, 1}}});
    manager.post_heading(id, 0.0);
    EXPECT_EQ(manager.step(id)["status"], "running");
    EXPECT_EQ(manager.step(id)["status"], "succeeded");
    EXPECT_EQ(manager.get_state(id)["location"], Json::array({11, 1}));
}

TEST_F(ServiceTest, EventLogFoldsIntoSnapshot) {
    for (const std::string method : {"path_pref", "goal_only", "compliant", "blended"}) {
        const std::string id = create("map1", method);
        for (int i = 0; i < 6; ++i) {
            if (i % 2 == 0) manager.post_heading(id, 0.0);
            manager.step(id);
        }
        const Json state = manager.get_state(id);
        const Json folded = fold_events(state["created"], all_events(id));
        for (const char* field : {"location", "step", "status", "violations", "trajectory", "belief"}) {
            EXPECT_EQ(folded[field], state[field]) << method << " " << field;
        }
        const auto events = all_events(id);
        for (std::size_t k = 0; k < events.size(); ++k) EXPECT_EQ(events[k]["seq"], k);
    }
}

TEST_F(ServiceTest, ReplayReproducesFinalState) {
    const std::string id = create("map1", "path_pref", {{"seed", 99}});
    for (int i = 0; i < 5; ++i) {
        manager.post_heading(id, kPi / 4 * i);
        manager.step(id);
        manager.step(id);
    }
    const std::string copy = manager.replay(id);
    EXPECT_NE(copy, id);
    const Json a = manager.get_state(id), b = manager.get_state(copy);
    for (const char* field : {"location", "step", "status", "violations", "trajectory", "belief", "seed",
                              "event_count", "goal_candidates"}) {
        EXPECT_EQ(a[field], b[field]) << field;
    }
}

TEST_F(ServiceTest, SessionsAreIsolatedAcrossThreads) {
    auto drive = [&](const std::string& id, double angle) {
        for (int i = 0; i < 5; ++i) {
            manager.post_heading(id, angle);
            manager.step(id);
        }
    };
    const std::string a = create("map1", "path_pref", {{"seed", 1}});
    const std::string b = create("map1", "path_pref", {{"seed", 2}});
    std::thread ta(drive, a, 0.0);
    std::thread tb(drive, b, kPi / 2);
    ta.join();
    tb.join();
    const std::string a2 = create("map1", "path_pref", {{"seed", 1}});
    const std::string b2 = create("map1", "path_pref", {{"seed", 2}});
    drive(a2, 0.0);
    drive(b2, kPi / 2);
    EXPECT_EQ(manager.get_state(a)["trajectory"], manager.get_state(a2)["trajectory"]);
    EXPECT_EQ(manager.get_state(b)["trajectory"], manager.get_state(b2)["trajectory"]);
    EXPECT_EQ(manager.get_state(a)["belief"], manager.get_state(a2)["belief"]);
    EXPECT_EQ(manager.get_state(b)["belief"], manager.get_state(b2)["belief"]);
}

TEST_F(ServiceTest, CrossingEventCarriesReanchoredBelief) {
    const std::string id = create("map1", "compliant");
    manager.post_heading(id, 0.0);
    Json crossing_event;
    for (int i = 0; i < 5 && crossing_event.is_null(); ++i) {
        const Json e = manager.step(id);
        if (!e["crossing"].is_null()) crossing_event = e;
    }
    ASSERT_FALSE(crossing_event.is_null());
    EXPECT_EQ(crossing_event["crossing"]["kind"], "edge");
    EXPECT_EQ(crossing_event["reanchored"]["vertex"], crossing_event["crossing"]["to"]);
    EXPECT_EQ(crossing_event["belief"]["vertex"], crossing_event["crossing"]["to"]);
    EXPECT_FALSE(crossing_event["reanchored"]["exits"].empty());
    EXPECT_EQ(crossing_event["reanchored"]["exits"].size(), crossing_event["belief"]["preference"].size());
}

TEST_F(ServiceTest, DeleteRemovesSession) {
    const std::string id = create("map1", "path_pref");
    manager.remove(id);
    EXPECT_EQ(kind_of([&] { manager.get_state(id); }), ErrorKind::not_found);
    EXPECT_EQ(kind_of([&] { manager.remove(id); }), ErrorKind::not_found);
    EXPECT_EQ(manager.session_count(), 0u);
}

TEST_F(ServiceTest, EventsWaitForNewInput) {
    const std::string id = create("map1", "path_pref");
    std::thread poster([&] {
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
        manager.post_heading(id, 0.0);
    });
    bool closed = true;
    const auto batch = manager.events(id, 0, 5000, &closed);
    poster.join();
    ASSERT_EQ(batch.size(), 1u);
    EXPECT_EQ(batch[0]["type"], "heading");
    EXPECT_FALSE(closed);
}

TEST_F(ServiceTest, AutoStepAdvancesOnItsOwn) {
    const std::string id = create("map1", "compliant", {{"auto_step_ms", 5}, {"t_max", 4}});
    bool closed = false;
    std::size_t seen = 0;
    for (int i = 0; i < 200 && !closed; ++i) seen += manager.events(id, seen, 100, &closed).size();
    EXPECT_TRUE(closed);
    EXPECT_EQ(manager.get_state(id)["step"], 4);
    EXPECT_EQ(manager.get_state(id)["status"], "failed");
}
