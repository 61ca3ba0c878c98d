#include "freshness/aoii.hpp"
#include "freshness/cmdp.hpp"
#include "freshness/lagrangian.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace freshness;

namespace {

// F(lambda) = M (lambda - root), M with negative diagonal and weak coupling.
struct Affine {
    double m00 = -0.05, m01 = 0.01, m10 = 0.008, m11 = -0.04;
    LagrangeVec root{3.0, 7.0};

    ConstraintEval operator()(const LagrangeVec& l) const {
        const double x = l.lambda0 - root.lambda0, y = l.lambda1 - root.lambda1;
        return {m00 * x + m01 * y, m10 * x + m11 * y};
    }
    DualProblem problem() const {
        return [*this](const LagrangeVec& l) {
            DualEvaluation e;
            e.slack = (*this)(l);
            e.policy = {0};
            return e;
        };
    }
};

double mixing_residual(const std::array<ConstraintEval, 4>& s, double r0, double r1) {
    const std::array<double, 4> w{r0 * r1, r0 * (1 - r1), (1 - r0) * r1, (1 - r0) * (1 - r1)};
    double a = 0, b = 0;
    for (int k = 0; k < 4; ++k) {
        a += w[k] * s[k].c0;
        b += w[k] * s[k].c1;
    }
    return std::max(std::abs(a), std::abs(b));
}

// Exhaustive grid followed by successively finer local grids.
std::pair<double, double> grid_oracle(const std::array<ConstraintEval, 4>& s) {
    double best0 = 0.5, best1 = 0.5, best = mixing_residual(s, 0.5, 0.5);
    double step = 1e-3;
    for (int i = 0; i <= 1000; ++i)
        for (int j = 0; j <= 1000; ++j) {
            const double r = mixing_residual(s, i * step, j * step);
            if (r < best) best = r, best0 = i * step, best1 = j * step;
        }
    for (int level = 0; level < 6; ++level) {
        const double c0 = best0, c1 = best1;
        const double next = step / 10;
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j) {
                const double r0 = std::clamp(c0 + i * next, 0.0, 1.0), r1 = std::clamp(c1 + j * next, 0.0, 1.0);
                const double r = mixing_residual(s, r0, r1);
                if (r < best) best = r, best0 = r0, best1 = r1;
            }
        step = next;
    }
    return {best0, best1};
}

} // namespace

TEST(Geometry, OriginInside) {
    EXPECT_TRUE(point_in_triangle({0, 1}, {1, -1}, {-1, -1}));
}

TEST(Geometry, AllPositive) {
    EXPECT_FALSE(point_in_triangle({1, 1}, {2, 1}, {1, 2}));
}

TEST(Geometry, OriginAtVertexCounts) {
    EXPECT_TRUE(point_in_triangle({0, 0}, {1, 0}, {0, 1}));
}

TEST(Geometry, OriginOnEdgeCounts) {
    EXPECT_TRUE(point_in_triangle({-1, 0}, {1, 0}, {0, 1}));
}

TEST(Geometry, DegenerateTriangleThrows) {
    try {
        point_in_triangle({1, 1}, {2, 2}, {3, 3});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateTriangle);
    }
}

TEST(Geometry, CollinearImagesUseSegmentHull) {
    EXPECT_TRUE(image_contains_origin({ConstraintEval{-1, -1}, ConstraintEval{1, 1}, ConstraintEval{2, 2}}));
    EXPECT_FALSE(image_contains_origin({ConstraintEval{1, 1}, ConstraintEval{2, 2}, ConstraintEval{3, 3}}));
    EXPECT_TRUE(image_contains_origin({ConstraintEval{0, 0}, ConstraintEval{0, 0}, ConstraintEval{0, 0}}));
}

TEST(Triangle, LongestEdgeFirst) {
    const LambdaTriangle t{{LagrangeVec{0, 0}, LagrangeVec{1, 0}, LagrangeVec{0, 3}}};
    const auto r = t.longest_edge_first();
    EXPECT_EQ(r.vertices[0], (LagrangeVec{1, 0}));
    EXPECT_EQ(r.vertices[1], (LagrangeVec{0, 3}));
    EXPECT_NEAR(t.area(), 1.5, 1e-15);
    EXPECT_NEAR(t.centroid().lambda1, 1.0, 1e-15);
}

TEST(Cache, SolvesEachMultiplierOnce) {
    int calls = 0;
    CachedDualProblem cached([&](const LagrangeVec& l) {
        ++calls;
        DualEvaluation e;
        e.cost = l.lambda0;
        return e;
    });
    cached({1.0, 2.0});
    cached({1.0, 2.0});
    cached({1.0 + 1e-15, 2.0});
    cached({1.5, 2.0});
    EXPECT_EQ(calls, 2);
    EXPECT_EQ(cached.fresh_solves(), 2u);
}

TEST(InitialPoints, FindsAllPatterns) {
    const Affine f;
    CachedDualProblem problem(f.problem());
    const auto q = find_initial_quadrant_points(problem, 100.0);
    EXPECT_EQ(q.a, (LagrangeVec{0, 0}));
    EXPECT_TRUE(matches(f(q.b), Sign::Minus, Sign::Minus));
    EXPECT_TRUE(matches(f(q.c), Sign::Plus, Sign::Minus));
    EXPECT_TRUE(matches(f(q.d), Sign::Minus, Sign::Plus));
}

TEST(InitialPoints, ScanBudgetExhausted) {
    CachedDualProblem problem([](const LagrangeVec&) {
        DualEvaluation e;
        e.slack = {1.0, 1.0};
        return e;
    });
    try {
        find_initial_quadrant_points(problem, 10.0, 4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NotFound);
    }
}

TEST(TriangleBisection, AffineRoot) {
    const Affine f;
    CachedDualProblem problem(f.problem());
    SearchConfig cfg;
    cfg.eps_lambda = 0.01;
    const QuadrantPoints init{{0, 0}, {40, 40}, {0, 40}, {40, 0}};
    const auto res = triangle_bisection(problem, init, cfg);
    EXPECT_LE((res.lambda_star - f.root).norm(), 3 * cfg.eps_lambda);
    EXPECT_GT(res.outer_iterations, 0u);
    EXPECT_EQ(res.trace.size(), res.outer_iterations);
    for (std::size_t i = 0; i < res.trace.size(); ++i) EXPECT_EQ(res.trace[i].iter, i + 1);
}

TEST(TriangleBisection, RejectsBadSigns) {
    const Affine f;
    CachedDualProblem problem(f.problem());
    const QuadrantPoints swapped{{0, 0}, {40, 40}, {40, 0}, {0, 40}};
    try {
        triangle_bisection(problem, swapped, SearchConfig{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    }
    EXPECT_LE(problem.fresh_solves(), 4u);
}

TEST(TriangleBisection, MaxIterations) {
    const Affine f;
    CachedDualProblem problem(f.problem());
    SearchConfig cfg;
    cfg.eps_lambda = 1e-12;
    cfg.max_outer = 3;
    try {
        triangle_bisection(problem, {{0, 0}, {40, 40}, {0, 40}, {40, 0}}, cfg);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::MaxIterations);
    }
}

TEST(Neighbors, ExactRootGivesFourCopies) {
    const Affine f;
    CachedDualProblem problem(f.problem());
    const auto n = neighbor_policies(problem, f.root, 0.1, 0.1);
    for (const auto& m : n.multipliers) EXPECT_EQ(m, f.root);
    EXPECT_EQ(problem.fresh_solves(), 1u);
}

TEST(Neighbors, AffineNeedsFewScalings) {
    const Affine f;
    CachedDualProblem problem(f.problem());
    const LagrangeVec near{f.root.lambda0 + 0.2, f.root.lambda1 - 0.3};
    const double gamma = 0.1;
    const auto n = neighbor_policies(problem, near, gamma, 0.1);
    for (std::size_t k = 0; k < 4; ++k) {
        const auto [s0, s1] = kPatterns[k];
        EXPECT_TRUE(matches(n.evaluations[k].slack, s0, s1));
        for (auto [got, start] : {std::pair{n.multipliers[k].lambda0, near.lambda0},
                                  std::pair{n.multipliers[k].lambda1, near.lambda1}}) {
            const double scalings = std::abs(std::log(got / start) / std::log1p(gamma));
            EXPECT_LE(scalings, 2.0 + 1e-9) << "pattern " << k;
        }
    }
}

TEST(Neighbors, PatternNotFound) {
    CachedDualProblem problem([](const LagrangeVec&) {
        DualEvaluation e;
        e.slack = {1.0, 1.0};
        return e;
    });
    try {
        neighbor_policies(problem, {1, 1}, 0.1, 0.1, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::PatternNotFound);
    }
}

TEST(Mixing, SymmetricSystem) {
    const auto sol = solve_mixing({ConstraintEval{1, 1}, {1, -1}, {-1, 1}, {-1, -1}});
    EXPECT_NEAR(sol.rho0, 0.5, 1e-9);
    EXPECT_NEAR(sol.rho1, 0.5, 1e-9);
}

TEST(Mixing, FreeRowDefaultsToHalf) {
    const auto sol = solve_mixing({ConstraintEval{0, 1}, {0, -1}, {0, 1}, {0, -1}});
    EXPECT_EQ(sol.rho0, 0.5);
    EXPECT_NEAR(sol.rho1, 0.5, 1e-12);
}

TEST(Mixing, MatchesGridOracle) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> mag(0.01, 0.2);
    for (int trial = 0; trial < 20; ++trial) {
        // Signs of patterns (+,+), (+,-), (-,+), (-,-).
        const std::array<ConstraintEval, 4> s{ConstraintEval{mag(rng), mag(rng)}, {mag(rng), -mag(rng)},
                                              {-mag(rng), mag(rng)}, {-mag(rng), -mag(rng)}};
        const auto sol = solve_mixing(s);
        EXPECT_LE(mixing_residual(s, sol.rho0, sol.rho1), 1e-9);
        const auto [o0, o1] = grid_oracle(s);
        EXPECT_NEAR(sol.rho0, o0, 1e-6) << "trial " << trial;
        EXPECT_NEAR(sol.rho1, o1, 1e-6) << "trial " << trial;
    }
}

TEST(Mixing, NoSolution) {
    try {
        solve_mixing({ConstraintEval{1, 1}, {1, 1}, {1, 1}, {0.5, 2}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::NoSolution);
    }
}

TEST(MixedPolicy, DegenerateWeights) {
    MixedPolicy m;
    m.policies = {Policy{1}, Policy{0}, Policy{0}, Policy{0}};
    m.rho0 = m.rho1 = 1.0;
    const auto w = m.weights();
    EXPECT_EQ(w[0], 1.0);
    EXPECT_EQ(w[1] + w[2] + w[3], 0.0);
    const auto v = evaluate_mixed_policy(m, [](const Policy& p) {
        return std::pair{p[0] == 1 ? 2.5 : 9.0, ConstraintEval{p[0] == 1 ? 0.25 : -1.0, 0.5}};
    });
    EXPECT_EQ(v.J, 2.5);
    EXPECT_EQ(v.c0, 0.25);
    EXPECT_EQ(v.c1, 0.5);
}

TEST(Bisection1d, TwoLevelSlack) {
    const ScalarDualProblem problem = [](double l) {
        ScalarDualEvaluation e;
        e.slack = l < 1.0 ? 0.2 : -0.1;
        e.cost = l < 1.0 ? 1.0 : 4.0;
        e.policy = {l < 1.0 ? 1u : 0u};
        return e;
    };
    const auto m = bisection_1d(problem, 8.0, 1e-6);
    EXPECT_NEAR(m.mu, 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(m.slack(), 0.0, 1e-12);
    EXPECT_NEAR(m.cost(), 3.0, 1e-12);
    EXPECT_NEAR(m.lambda_star, 1.0, 1e-6);
}

TEST(Bisection1d, InvalidBracket) {
    const ScalarDualProblem slack_negative = [](double) {
        ScalarDualEvaluation e;
        e.slack = -0.5;
        return e;
    };
    try {
        bisection_1d(slack_negative, 8.0, 1e-6);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidBracket);
    }
}

// Constrained optimum from a dense multiplier grid: the best mixture of
// two grid policies straddling the budget.
TEST(AoiiCmdp, MatchesDenseLambdaGrid) {
    const auto p = aoii::derive_chain_params(8, 0.5, 1.0, 30);
    const double alpha = 0.3;
    SolverConfig cfg;
    cfg.eps_v = 1e-8;
    const auto sol = solve_aoii_cmdp(p, alpha, cfg);
    ASSERT_TRUE(sol.binding);
    EXPECT_LE(std::abs(sol.mixture.slack()), 1e-6);

    const auto problem = make_aoii_dual_problem(p, alpha, cfg);
    double best = std::numeric_limits<double>::infinity();
    std::optional<ScalarDualEvaluation> prev;
    for (double l = 0.0; l <= 30.0; l += 1e-3) {
        auto e = problem(l);
        if (prev && prev->slack > 0 && e.slack <= 0) {
            const double mu = e.slack / (e.slack - prev->slack);
            best = std::min(best, mu * prev->cost + (1 - mu) * e.cost);
        }
        if (e.slack <= 0) best = std::min(best, e.cost);
        prev = std::move(e);
    }
    EXPECT_NEAR(sol.J, best, 1e-3);
    // Occupation-measure LP, tests/oracles/cmdp_lp.py
    EXPECT_NEAR(sol.J, 1.760712667, 1e-5);
}

TEST(AoiiCmdp, LpValues) {
    SolverConfig cfg;
    cfg.eps_v = 1e-8;
    struct Case {
        int n;
        double pr, ps, alpha, J;
    };
    for (const Case& c : {Case{8, 0.5, 1.0, 0.05, 6.354594145}, Case{8, 0.5, 1.0, 0.2, 2.602647345},
                          Case{8, 0.5, 0.9, 0.2, 2.875588221}, Case{4, 0.7, 1.0, 0.1, 2.076606122}}) {
        const auto p = aoii::derive_chain_params(c.n, c.pr, c.ps, 30);
        const auto sol = solve_aoii_cmdp(p, c.alpha, cfg);
        EXPECT_NEAR(sol.J, c.J, 1e-5) << "N=" << c.n << " alpha=" << c.alpha;
        EXPECT_LE(sol.rate, c.alpha + 1e-6);
    }
}

TEST(AoiiCmdp, NonBindingBudget) {
    const auto p = aoii::derive_chain_params(8, 0.5, 1.0, 30);
    const auto sol = solve_aoii_cmdp(p, 0.9, SolverConfig{});
    EXPECT_FALSE(sol.binding);
    EXPECT_EQ(sol.mixture.mu, 1.0);
    EXPECT_LE(sol.rate, 0.9);
}

TEST(TwoRateCmdp, ReferenceInstanceMeetsBudgets) {
    const auto p = two_rate::make_params(0.2, 0.1, 0.5, 20, 1);
    SolverConfig cfg;
    cfg.eps_v = 1e-6;
    const auto sol = solve_two_rate_cmdp(p, cfg, SearchConfig{});
    EXPECT_FALSE(sol.neighbor_fallback);
    EXPECT_LE(std::abs(sol.value.c0), 0.01);
    EXPECT_LE(std::abs(sol.value.c1), 0.01);
    const auto res = sol.mixed.equation_residuals();
    EXPECT_LE(std::abs(res[0]), 1e-6);
    EXPECT_LE(std::abs(res[1]), 1e-6);
    // Re-evaluating the component policies reproduces the stored slacks.
    for (std::size_t k = 0; k < 4; ++k) {
        const auto c = two_rate::constraint_values(p, sol.mixed.policies[k]);
        EXPECT_NEAR(c.c0, sol.mixed.slacks[k].c0, 1e-12);
        EXPECT_NEAR(c.c1, sol.mixed.slacks[k].c1, 1e-12);
    }
    // Occupation-measure LP, tests/oracles/cmdp_lp.py
    EXPECT_NEAR(sol.value.J, 3.39872, 1e-4);
    EXPECT_EQ(sol.trace.size(), sol.outer_iterations);
}

TEST(TwoRateCmdp, NeverBeatsTheLp) {
    SolverConfig cfg;
    cfg.eps_v = 1e-6;
    struct Case {
        double q, amax, lp;
    };
    for (const Case& c : {Case{0.5, 0.5, 2.275}, Case{0.8, 0.5, 1.752}, Case{0.2, 0.3, 4.108}, Case{0.2, 0.6, 3.1616}}) {
        const auto p = two_rate::make_params(c.q, 0.1, c.amax, 20, 1);
        const auto sol = solve_two_rate_cmdp(p, cfg, SearchConfig{});
        EXPECT_GE(sol.value.J, c.lp - 1e-4) << "q=" << c.q << " amax=" << c.amax;
        EXPECT_LE(sol.value.J, 1.015 * c.lp) << "q=" << c.q << " amax=" << c.amax;
        EXPECT_LE(sol.value.c0, 1e-6);
        EXPECT_LE(sol.value.c1, 1e-6);
    }
}
