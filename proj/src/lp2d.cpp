#include "prefnav/lp2d.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace prefnav {

namespace {

constexpr double kBox = 1e7;
constexpr double kFeasTol = 1e-10;

struct Objective {
    Vec2 primary;
    Vec2 secondary;

    // true when p is strictly better than q under the lexicographic order
    bool better(Vec2 p, Vec2 q) const {
        const double dp = dot(primary, p) - dot(primary, q);
        if (dp > 1e-12 * (1.0 + std::abs(dot(primary, q)))) return true;
        if (dp < -1e-12 * (1.0 + std::abs(dot(primary, q)))) return false;
        return dot(secondary, p) > dot(secondary, q);
    }
};

bool violates(const LinearConstraint& h, Vec2 x) {
    const double lhs = dot(h.a, x);
    return lhs > h.b + kFeasTol * (1.0 + norm(h.a) * norm(x) + std::abs(h.b));
}

struct RunResult {
    bool feasible = false;
    Vec2 x;
};

RunResult run(const Objective& obj, const std::vector<LinearConstraint>& rows, double box) {
    std::vector<LinearConstraint> all;
    all.reserve(rows.size() + 4);
    all.push_back({{1, 0}, box});
    all.push_back({{-1, 0}, box});
    all.push_back({{0, 1}, box});
    all.push_back({{0, -1}, box});
    all.insert(all.end(), rows.begin(), rows.end());

    Vec2 x{box, box};
    for (Vec2 corner : {Vec2{box, -box}, Vec2{-box, box}, Vec2{-box, -box}}) {
        if (obj.better(corner, x)) x = corner;
    }

    for (std::size_t i = 4; i < all.size(); ++i) {
        const LinearConstraint& h = all[i];
        if (!violates(h, x)) continue;

        const double an = norm(h.a);
        if (an == 0.0) return {};  // 0 <= b with b < 0
        const Vec2 u = perp(h.a) * (1.0 / an);
        const Vec2 p0 = h.a * (h.b / (an * an));

        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < i; ++j) {
            const LinearConstraint& g = all[j];
            const double denom = dot(g.a, u);
            const double num = g.b - dot(g.a, p0);
            if (std::abs(denom) < 1e-12 * norm(g.a)) {
                if (num < -kFeasTol * (1.0 + std::abs(g.b))) return {};
                continue;
            }
            if (denom > 0) {
                hi = std::min(hi, num / denom);
            } else {
                lo = std::max(lo, num / denom);
            }
        }
        if (lo > hi) {
            if (lo - hi > kFeasTol * (1.0 + std::abs(lo))) return {};
            const double mid = 0.5 * (lo + hi);
            lo = hi = mid;
        }

        const double cu = dot(obj.primary, u);
        double t;
        if (cu > 1e-14 * norm(obj.primary)) {
            t = hi;
        } else if (cu < -1e-14 * norm(obj.primary)) {
            t = lo;
        } else {
            t = dot(obj.secondary, u) > 0 ? hi : lo;
        }
        x = p0 + u * t;
    }
    return {true, x};
}

}  // namespace

LpResult solve_lp2d(Vec2 objective, std::span<const LinearConstraint> constraints,
                    std::uint64_t seed) {
    std::vector<LinearConstraint> rows(constraints.begin(), constraints.end());
    std::mt19937_64 rng(seed);
    std::shuffle(rows.begin(), rows.end(), rng);

    const bool zero_objective = objective.x == 0.0 && objective.y == 0.0;
    const Vec2 primary = zero_objective ? Vec2{1, 0} : objective;
    const Objective obj{primary, perp(primary)};

    const RunResult first = run(obj, rows, kBox);
    if (!first.feasible) return {LpStatus::infeasible, {}, 0.0};

    LpResult result{LpStatus::optimal, first.x, dot(objective, first.x)};
    if (!zero_objective) {
        // A bounded optimum does not move when the artificial box grows.
        const RunResult wider = run(obj, rows, 2 * kBox);
        const double v2 = dot(objective, wider.x);
        if (!wider.feasible || v2 > result.value + 1e-6 * (1.0 + std::abs(result.value))) {
            return {LpStatus::unbounded, {}, 0.0};
        }
    }
    return result;
}

}  // namespace prefnav
