#pragma once

#include <cstdint>
#include <span>

#include "prefnav/vec2.hpp"

namespace prefnav {

/// One row a·x <= b of a two-variable linear program.
struct LinearConstraint {
    Vec2 a;
    double b = 0.0;
};

enum class LpStatus { optimal, infeasible, unbounded };

struct LpResult {
    LpStatus status = LpStatus::infeasible;
    Vec2 point;
    double value = 0.0;
};

/// Maximizes objective·x subject to the constraints with Seidel's randomized
/// incremental algorithm. Ties in the objective are broken toward the
/// counter-clockwise perpendicular so the optimum is a unique vertex.
/// The insertion order is shuffled with `seed`, which makes runs reproducible.
LpResult solve_lp2d(Vec2 objective, std::span<const LinearConstraint> constraints,
                    std::uint64_t seed = 0x5eed);

}  // namespace prefnav
