#include <fstream>
#include <sstream>

#include <json.hpp>

#include "prefnav/errors.hpp"
#include "prefnav/worldgraph.hpp"

namespace prefnav {

namespace {

using nlohmann::json;

constexpr double kCenterClearance = 1e-6;

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::invalid_input, what); }

const json& field(const json& doc, const char* name) {
    if (!doc.contains(name)) fail(std::string("map document missing field '") + name + "'");
    return doc.at(name);
}

GridCell parse_cell(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number_integer() || !j[1].is_number_integer()) {
        fail(what + " must be an [x, y] integer pair");
    }
    return {j[0].get<int>(), j[1].get<int>()};
}

std::string cell_text(GridCell c) {
    return "(" + std::to_string(c.x) + ", " + std::to_string(c.y) + ")";
}

GridMap parse(const json& doc) {
    GridMap m;
    try {
        m.width = field(doc, "width").get<int>();
        m.height = field(doc, "height").get<int>();
        m.cell_size = field(doc, "cell_size").get<double>();
        if (m.width < 1 || m.height < 1) fail("width and height must be positive");
        if (!(m.cell_size > 0.0)) fail("cell_size must be positive");

        const json& obstacles = field(doc, "obstacles");
        if (!obstacles.is_array() || obstacles.empty()) fail("obstacles must be a nonempty array");
        for (std::size_t i = 0; i < obstacles.size(); ++i) {
            ObstaclePolytope ob;
            ob.id = static_cast<int>(i);
            for (const json& h : field(obstacles[i], "halfplanes")) {
                const json& n = field(h, "n");
                if (!n.is_array() || n.size() != 2) fail("half-plane normal must have two entries");
                ob.halfplanes.push_back(
                    HalfPlane::make({n[0].get<double>(), n[1].get<double>()}, field(h, "c").get<double>()));
            }
            m.obstacles.push_back(std::move(ob));
        }

        m.start = parse_cell(field(doc, "start"), "start");
        for (const json& g : field(doc, "goal_candidates")) {
            m.goal_candidates.push_back(parse_cell(g, "goal candidate"));
        }
        m.true_goal_index = doc.value("true_goal_index", 0);
        m.t_max = doc.value("T_max", 30);
        m.delta_t = doc.value("delta_T", 1);
        m.gamma_h = doc.value("gamma_h", 1.5);

        if (doc.contains("preference")) {
            const json& p = doc.at("preference");
            if (!p.is_object()) fail("preference must be an object");
            if (p.contains("mode")) {
                if (p.at("mode") != "auto_ccw") fail("unknown preference mode");
                m.preference.mode = PreferenceSpec::Mode::auto_ccw;
                m.preference.obstacle = p.value("obstacle", 0);
            } else {
                m.preference.mode = PreferenceSpec::Mode::explicit_edges;
                for (const auto& [k, v] : p.items()) m.preference.edges[k] = v.get<std::string>();
            }
        }
    } catch (const json::exception& e) {
        fail(std::string("map document type error: ") + e.what());
    }
    if (m.goal_candidates.empty()) fail("goal_candidates must be nonempty");
    if (m.true_goal_index < 0 || static_cast<std::size_t>(m.true_goal_index) >= m.goal_candidates.size()) {
        fail("true_goal_index out of range");
    }
    if (m.t_max < 1) fail("T_max must be >= 1");
    if (m.delta_t < 1) fail("delta_T must be >= 1");
    if (!(m.gamma_h >= 0.0) || !std::isfinite(m.gamma_h)) fail("gamma_h must be finite and >= 0");
    return m;
}

}  // namespace

World load_map(std::string_view document, std::string id) {
    json doc;
    try {
        doc = json::parse(document);
    } catch (const json::parse_error& e) {
        fail(std::string("map document is not valid JSON: ") + e.what());
    }
    GridMap m = parse(doc);
    m.id = doc.value("id", id);

    std::vector<Vec2> centers;
    centers.reserve(static_cast<std::size_t>(m.cell_count()));
    for (int i = 0; i < m.cell_count(); ++i) centers.push_back(m.center(m.cell_at(i)));

    Arrangement arr = Arrangement::build(m.obstacles, m.bounds(), {centers, 0x5eed});
    for (std::size_t k = 0; k < arr.hyperplanes().size(); ++k) {
        for (Vec2 c : centers) {
            if (arr.hyperplanes()[k].distance(c) < kCenterClearance) {
                fail("grid cell center (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                     ") lies on hyperplane " + std::to_string(k));
            }
        }
    }

    m.blocked.assign(static_cast<std::size_t>(m.cell_count()), 0);
    m.cell_to_polytope.assign(static_cast<std::size_t>(m.cell_count()), -1);
    for (int i = 0; i < m.cell_count(); ++i) {
        const int cell = arr.locate_cell(centers[static_cast<std::size_t>(i)]);
        m.cell_to_polytope[static_cast<std::size_t>(i)] = cell;
        m.blocked[static_cast<std::size_t>(i)] = arr.cell(cell).is_obstacle ? 1 : 0;
    }

    if (!m.is_free(m.start)) fail("start " + cell_text(m.start) + " is blocked or out of bounds");
    for (std::size_t i = 0; i < m.goal_candidates.size(); ++i) {
        const GridCell g = m.goal_candidates[i];
        if (!m.is_free(g)) {
            fail("goal candidate " + std::to_string(i) + " " + cell_text(g) + " is blocked or out of bounds");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (m.goal_candidates[j] == g) fail("duplicate goal candidate " + cell_text(g));
        }
    }
    return World(std::move(m), std::move(arr));
}

World load_map_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open map file " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    std::string id = path;
    if (const auto slash = id.find_last_of('/'); slash != std::string::npos) id = id.substr(slash + 1);
    if (const auto dot = id.rfind(".json"); dot != std::string::npos) id = id.substr(0, dot);
    return load_map(buffer.str(), id);
}

std::string dump_map(const GridMap& m) {
    json doc;
    doc["id"] = m.id;
    doc["width"] = m.width;
    doc["height"] = m.height;
    doc["cell_size"] = m.cell_size;
    json obstacles = json::array();
    for (const ObstaclePolytope& ob : m.obstacles) {
        json hs = json::array();
        for (const HalfPlane& h : ob.halfplanes) hs.push_back({{"n", {h.normal.x, h.normal.y}}, {"c", h.offset}});
        obstacles.push_back({{"halfplanes", hs}});
    }
    doc["obstacles"] = obstacles;
    doc["start"] = {m.start.x, m.start.y};
    json goals = json::array();
    for (GridCell g : m.goal_candidates) goals.push_back({g.x, g.y});
    doc["goal_candidates"] = goals;
    doc["true_goal_index"] = m.true_goal_index;
    if (m.preference.mode == PreferenceSpec::Mode::auto_ccw) {
        doc["preference"] = {{"mode", "auto_ccw"}, {"obstacle", m.preference.obstacle}};
    } else {
        doc["preference"] = m.preference.edges;
    }
    doc["T_max"] = m.t_max;
    doc["delta_T"] = m.delta_t;
    doc["gamma_h"] = m.gamma_h;
    return doc.dump(2);
}

}  // namespace prefnav
