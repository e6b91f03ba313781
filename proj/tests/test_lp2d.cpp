#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"
#include "prefnav/lp2d.hpp"

using namespace prefnav;

TEST(Lp2d, UnitBoxMaximum) {
    const std::vector<LinearConstraint> rows = {{{1, 0}, 1}, {{0, 1}, 1}, {{-1, 0}, 0}, {{0, -1}, 0}};
    const LpResult r = solve_lp2d({1, 0}, rows);
    ASSERT_EQ(r.status, LpStatus::optimal);
    EXPECT_NEAR(r.value, 1.0, 1e-12);
    EXPECT_NEAR(r.point.x, 1.0, 1e-12);
}

TEST(Lp2d, ContradictoryBoundsAreInfeasible) {
    const std::vector<LinearConstraint> rows = {{{1, 0}, 1}, {{-1, 0}, -2}};
    EXPECT_EQ(solve_lp2d({1, 0}, rows).status, LpStatus::infeasible);
}

TEST(Lp2d, OpenDirectionIsUnbounded) {
    const std::vector<LinearConstraint> rows = {{{-1, 0}, 0}, {{0, 1}, 1}, {{0, -1}, 1}};
    EXPECT_EQ(solve_lp2d({1, 0}, rows).status, LpStatus::unbounded);
}

TEST(Lp2d, ZeroObjectiveReportsFeasibility) {
    const std::vector<LinearConstraint> ok = {{{1, 1}, 1}, {{-1, 0}, 0}, {{0, -1}, 0}};
    EXPECT_EQ(solve_lp2d({0, 0}, ok).status, LpStatus::optimal);
}

TEST(Lp2d, RandomInstancesMatchVertexEnumeration) {
    Rng rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const Vec2 center{5 * u(rng), 5 * u(rng)};
        std::vector<LinearConstraint> rows;
        // Tangents of a circle around the center bound the region on all sides.
        for (int k = 0; k < 20; ++k) {
            const double a = 2 * std::numbers::pi * (k + 0.4 * u(rng)) / 20;
            const Vec2 n{std::cos(a) * (1 + 0.5 * u(rng)), std::sin(a) * (1 + 0.5 * u(rng))};
            rows.push_back({n, dot(n, center) + 0.5 + std::abs(u(rng))});
        }
        const Vec2 c{u(rng), u(rng)};
        const LpResult r = solve_lp2d(c, rows, static_cast<std::uint64_t>(trial));
        const auto expected = oracle::lp_by_vertices(c, rows);
        ASSERT_TRUE(expected.has_value());
        ASSERT_EQ(r.status, LpStatus::optimal);
        EXPECT_NEAR(r.value, *expected, 1e-7) << "trial " << trial;
        for (const auto& row : rows) EXPECT_LE(dot(row.a, r.point) - row.b, 1e-9);
    }
}

TEST(Lp2d, SameSeedSameAnswer) {
    Rng rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<LinearConstraint> rows;
    for (int k = 0; k < 30; ++k) {
        const double a = 2 * std::numbers::pi * k / 30;
        rows.push_back({{std::cos(a), std::sin(a)}, 1 + 0.1 * u(rng)});
    }
    const LpResult a = solve_lp2d({0.3, 0.7}, rows, 99);
    const LpResult b = solve_lp2d({0.3, 0.7}, rows, 99);
    EXPECT_EQ(a.point, b.point);
    EXPECT_EQ(a.value, b.value);
}
