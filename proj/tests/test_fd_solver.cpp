#include <cmath>

#include <gtest/gtest.h>

#include "ctlstop/fd_solver.hpp"
#include "ctlstop/kink_game.hpp"
#include "ctlstop/quadratic_game.hpp"

using namespace ctlstop;

namespace {

GridProblem grid(const GameModel& m, double L, long N) {
    GridProblem p;
    p.L = L;
    p.N = N;
    p.model = m;
    p.far_field = default_far_field(m);
    return p;
}

double max_error(const DiscreteSolution& s, const Generator& gen, double window) {
    double e = 0.0;
    for (std::size_t i = 0; i < s.x.size(); ++i)
        if (std::abs(s.x[i]) <= window) e = std::max(e, std::abs(s.u[i] - eval_u(gen, s.x[i])));
    return e;
}

}  // namespace

TEST(FdSolver, ConvergesToTheKinkClosedForms) {
    for (double lam : {1.0, 1.5, 10.0}) {
        const KinkParams p{0.5, lam};
        const auto gen = classify_regime_II(p).generator;
        const auto coarse = solve(grid(p.model(), 4.0, 401));
        const auto fine = solve(grid(p.model(), 4.0, 1601));
        const double ec = max_error(coarse, gen, 3.0), ef = max_error(fine, gen, 3.0);
        EXPECT_LT(ef, ec) << lam;
        EXPECT_LT(ef, 5e-3 * lam) << lam;
        EXPECT_LT(fine.max_residual, 1e-9);
    }
}

TEST(FdSolver, ConvergesToTheQuadraticClosedForm) {
    const QuadParams p{1, 1, 0.5, 0};
    const auto gen = classify_regime_I(p).generator;
    const auto s = solve(grid(p.model(), 4.0, 1601));
    EXPECT_LT(max_error(s, gen, 3.0), 1e-2);
    const RegionSet rs = extract_discrete_regions(s);
    const double beta = gen.breakpoint("beta").value();
    ASSERT_EQ(rs.control.size(), 2u);
    EXPECT_NEAR(rs.control[1].lo, beta, 3 * s.problem.h());
    EXPECT_NEAR(rs.control[0].hi, -beta, 3 * s.problem.h());
}

TEST(FdSolver, ZeroPayoffsGiveZero) {
    GameModel m;
    m.discount = 1.0;
    const auto s = solve(grid(m, 3.0, 301));
    for (std::size_t i = 0; i < s.u.size(); ++i) {
        EXPECT_EQ(s.u[i], 0.0);
        EXPECT_EQ(s.labels[i], Label::Obstacle) << i;
    }
}

TEST(FdSolver, CentralDifferencesRefuseStrongDrift) {
    auto p = grid(make_kink_model(0.5, 1.5), 6.0, 201);
    p.model.drift.b0 = 100.0;
    p.allow_upwind = false;
    try {
        solve(p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::NonMonotoneScheme);
    }
    p.allow_upwind = true;
    const auto s = solve(p);
    EXPECT_TRUE(s.upwinded);
    EXPECT_LT(s.max_residual, 1e-9);
}

TEST(FdSolver, RejectsTinyGrids) {
    EXPECT_THROW(solve(grid(make_kink_model(0.5, 1.0), 2.0, 100)), Error);
}

TEST(FdProperty, MaximumPrincipleAndComplementarity) {
    for (double lam : {0.5, 1.3, 1.5, 3.0, 20.0}) {
        const auto s = solve(grid(make_kink_model(0.5, lam), 4.0, 801));
        const double h = s.problem.h();
        for (std::size_t i = 1; i + 1 < s.u.size(); ++i) {
            ASSERT_GE(s.u[i], -1e-12);
            ASSERT_LE(s.u[i], lam + 1e-12);
            // controller never pays more than a unit-slope move
            ASSERT_LE(s.u[i], s.u[i - 1] + h + 1e-12);
            ASSERT_LE(s.u[i], s.u[i + 1] + h + 1e-12);
            if (s.labels[i] == Label::Obstacle) ASSERT_NEAR(s.u[i], s.g[i], 1e-9);
            if (s.labels[i] == Label::ODE) ASSERT_LE(s.g[i], s.u[i] + 1e-9);
        }
        EXPECT_LT(s.max_residual, 1e-9) << lam;
    }
}

TEST(FdProperty, FarBoundaryDoesNotReachTheCentre) {
    const QuadParams q{1, 1, 0.5, 0.3};
    const auto near = solve(grid(q.model(), 4.0, 801));
    const auto far = solve(grid(q.model(), 6.0, 1201));
    ASSERT_DOUBLE_EQ(near.problem.h(), far.problem.h());
    for (std::size_t i = 0; i < near.x.size(); ++i) {
        if (std::abs(near.x[i]) > 2.0) continue;
        const std::size_t j = i + 200;
        ASSERT_NEAR(near.x[i], far.x[j], 1e-12);
        EXPECT_NEAR(near.u[i], far.u[j], 1e-8) << near.x[i];
    }
}

TEST(FdProperty, SymmetricProblemsGiveSymmetricSolutions) {
    const auto s = solve(grid(make_kink_model(0.5, 1.5), 4.0, 801));
    const std::size_t n = s.u.size();
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(s.u[i], s.u[n - 1 - i], 1e-10);
}

TEST(FdRegions, CaseCKinkAtZero) {
    const auto s = solve(grid(make_kink_model(0.5, 10.0), 4.0, 1601));
    const RegionSet rs = extract_discrete_regions(s);
    bool found = false;
    for (double k : rs.kinks) found |= std::abs(k) <= 1.5 * s.problem.h();
    EXPECT_TRUE(found);
    ASSERT_FALSE(rs.control.empty());
    const double alpha = classify_regime_II({0.5, 10.0}).alpha;
    EXPECT_NEAR(rs.control.back().hi, alpha, 3 * s.problem.h());
}

TEST(FdRegions, CaseBRepellingKinks) {
    const auto s = solve(grid(make_kink_model(0.5, 1.5), 4.0, 1601));
    const RegionSet rs = extract_discrete_regions(s);
    const auto r = classify_regime_II({0.5, 1.5});
    ASSERT_EQ(rs.control.size(), 2u);
    EXPECT_NEAR(rs.control[1].lo, *r.beta, 3 * s.problem.h());
    EXPECT_NEAR(rs.control[1].hi, r.alpha, 3 * s.problem.h());
    const auto tag = rs.tag_at(rs.control[1].lo, 1e-12);
    ASSERT_TRUE(tag);
    EXPECT_EQ(*tag, BoundaryKind::Repelling);
}
