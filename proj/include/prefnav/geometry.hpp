#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "prefnav/lp2d.hpp"
#include "prefnav/vec2.hpp"

namespace prefnav {

/// Points within this distance of a hyperplane have no well-defined sign.
inline constexpr double kTieTolerance = 1e-9;

/// The closed half-plane {x : normal·x <= offset}.
/// Stored scaled so that max(|n.x|, |n.y|) == 1.
struct HalfPlane {
    Vec2 normal;
    double offset = 0.0;

    static HalfPlane make(Vec2 normal, double offset);

    double eval(Vec2 p) const { return dot(normal, p) - offset; }
    /// Euclidean distance of p to the boundary line.
    double distance(Vec2 p) const { return std::abs(eval(p)) / norm(normal); }
};

struct ObstaclePolytope {
    int id = 0;
    std::vector<HalfPlane> halfplanes;
};

struct Rect {
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;

    bool contains(Vec2 p) const {
        return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
    }
};

using SignVector = std::vector<std::int8_t>;

/// A constraint of a cell's H-representation. Indices >= hyperplane count
/// refer to the four environment bounds (xmax, xmin, ymax, ymin order).
struct EssentialConstraint {
    int index = 0;
    std::int8_t side = 0;

    bool operator==(const EssentialConstraint&) const = default;
};

struct Cell {
    int id = 0;
    SignVector signs;
    std::vector<EssentialConstraint> essential;
    bool is_obstacle = false;
    std::vector<Vec2> outline;  // counter-clockwise vertex loop
    Vec2 interior;              // centroid of the outline
    double area = 0.0;
};

struct ArrangementOptions {
    /// Extra points whose cells seed the enumeration (e.g. grid centers).
    std::vector<Vec2> seeds;
    std::uint64_t lp_seed = 0x5eed;
};

/// Partition of a bounded rectangle by the lines of every obstacle facet.
/// Immutable after construction.
class Arrangement {
public:
    /// Builds and validates. Throws Error(invalid_input) for empty/unbounded
    /// obstacles, obstacles outside the bounds, or coincident hyperplanes.
    static Arrangement build(std::span<const ObstaclePolytope> obstacles, Rect bounds,
                             const ArrangementOptions& options = {});

    std::span<const HalfPlane> hyperplanes() const { return hyperplanes_; }
    std::span<const Cell> cells() const { return cells_; }
    std::span<const ObstaclePolytope> obstacles() const { return obstacles_; }
    const Cell& cell(int id) const { return cells_.at(static_cast<std::size_t>(id)); }
    Rect bounds() const { return bounds_; }

    int hyperplane_count() const { return static_cast<int>(hyperplanes_.size()); }
    bool is_bound_index(int index) const { return index >= hyperplane_count(); }
    /// Obstacle owning a hyperplane index.
    int obstacle_of(int hyperplane) const { return owner_.at(static_cast<std::size_t>(hyperplane)); }

    /// Entry k is sign(normal_k·p - offset_k). Throws boundary_point when p
    /// is within kTieTolerance of a hyperplane.
    SignVector sign_vector(Vec2 p) const;

    /// Throws arrangement_incomplete if no enumerated cell matches.
    int locate_cell(Vec2 p) const;
    std::optional<int> find_cell(const SignVector& signs) const;

    /// Canonical string id of a sign vector (hex, bit k set when entry k is +1).
    static std::string key_of(const SignVector& signs);
    const std::string& key(int cell_id) const { return keys_.at(static_cast<std::size_t>(cell_id)); }
    std::optional<int> find_key(const std::string& key) const;

    int free_cell_count() const;

    /// The signed constraint rows of a sign pattern plus the four bounds.
    std::vector<LinearConstraint> constraint_rows(const SignVector& signs) const;
    std::uint64_t lp_seed() const { return lp_seed_; }

private:
    std::vector<HalfPlane> hyperplanes_;
    std::vector<int> owner_;
    std::vector<ObstaclePolytope> obstacles_;
    std::vector<Cell> cells_;
    std::vector<std::string> keys_;
    std::unordered_map<std::string, int> by_key_;
    Rect bounds_;
    std::uint64_t lp_seed_ = 0;
};

/// Indices of non-redundant constraints of the cell with the given signs:
/// k is kept iff maximizing the violation of row k subject to every other row
/// has a strictly positive optimum. Throws numerical_failure on LP breakdown.
std::vector<EssentialConstraint> essential_constraints(const Arrangement& arrangement,
                                                       const SignVector& signs);
std::vector<EssentialConstraint> essential_constraints(const Arrangement& arrangement,
                                                       const Cell& cell);

/// Convex polygon {x in rect : rows}, counter-clockwise; empty when the set
/// has no interior.
std::vector<Vec2> clip_polygon(Rect rect, std::span<const LinearConstraint> rows);
double polygon_area(std::span<const Vec2> loop);
Vec2 polygon_centroid(std::span<const Vec2> loop);

}  // namespace prefnav
