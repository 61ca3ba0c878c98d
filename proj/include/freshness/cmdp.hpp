#pragma once

// End-to-end constrained solvers for the two models.

#include "freshness/aoii.hpp"
#include "freshness/errors.hpp"
#include "freshness/evaluation.hpp"
#include "freshness/lagrangian.hpp"
#include "freshness/solver.hpp"
#include "freshness/two_rate.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

namespace freshness {

// ---------------------------------------------------------------------------
// AoII, one rate constraint

inline ScalarDualProblem make_aoii_dual_problem(const aoii::AoiiParams& p, double alpha, const SolverConfig& solver) {
    return [p, alpha, solver](double lambda) {
        const auto mdp = aoii::build_aoii_lagrangian_mdp(p, lambda);
        const auto sol = rvia(mdp, solver);
        const auto plain = aoii::build_aoii_lagrangian_mdp(p, 0.0);
        ScalarDualEvaluation e;
        e.policy = sol.policy;
        e.cost = average_cost(plain, sol.policy);
        e.slack = long_run_average(plain, sol.policy, [](StateIndex, Action a) { return double(a); }) - alpha;
        return e;
    };
}

struct AoiiCmdpSolution {
    bool binding = true;          // false: the unconstrained optimum already meets the budget
    TwoPolicyMixture mixture;     // for a non-binding budget: plus = minus = lambda 0 policy
    double J = 0.0;
    double rate = 0.0;
};

/// Optimal AoII under update rate <= alpha. The upper multiplier starts at
/// 10 delta_max and doubles until the constraint is met.
inline AoiiCmdpSolution solve_aoii_cmdp(const aoii::AoiiParams& p, double alpha, const SolverConfig& solver,
                                        double eps_bisection = 1e-6) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorKind::InvalidParams, "alpha must lie in (0, 1)");
    const auto problem = make_aoii_dual_problem(p, alpha, solver);
    AoiiCmdpSolution out;

    const auto free = problem(0.0);
    if (free.slack <= 0.0) {
        out.binding = false;
        out.mixture.plus = free;
        out.mixture.minus = free;
        out.mixture.mu = 1.0;
        out.mixture.evaluations = 1;
        out.J = free.cost;
        out.rate = free.slack + alpha;
        return out;
    }

    double hi = 10.0 * p.delta_max;
    for (int k = 0; problem(hi).slack >= 0.0; ++k) {
        if (k >= 60) throw Error(ErrorKind::NotFound, "no multiplier makes the rate constraint hold");
        hi *= 2.0;
    }
    out.mixture = bisection_1d(problem, hi, eps_bisection);
    out.J = out.mixture.cost();
    out.rate = out.mixture.slack() + alpha;
    return out;
}

// ---------------------------------------------------------------------------
// Two-rate AoI, two constraints

inline DualProblem make_two_rate_dual_problem(const two_rate::TwoRateParams& p, const SolverConfig& solver) {
    // The age component moves deterministically, so threshold policies can
    // induce periodic chains; iterate on the lazy kernel.
    SolverConfig lazy = solver;
    lazy.aperiodicity = std::min(lazy.aperiodicity, 0.5);
    return [p, lazy](const LagrangeVec& lambda) {
        const auto mdp = two_rate::build_two_rate_lagrangian_mdp(p, lambda);
        const auto sol = rvia(mdp, lazy);
        DualEvaluation e;
        e.policy = sol.policy;
        e.slack = two_rate::constraint_values(p, sol.policy);
        e.cost = two_rate::average_age(p, sol.policy);
        return e;
    };
}

struct TwoRateCmdpSolution {
    LagrangeVec lambda_star;
    MixedPolicy mixed;
    MixedEvaluation value;
    QuadrantPoints initial;
    std::size_t outer_iterations = 0;
    std::size_t fresh_solves = 0;
    std::vector<SearchTraceRow> trace;
    bool neighbor_fallback = false;   // sign patterns not all reachable; mixed along one axis
};

inline MixedEvaluation evaluate_mixed_policy(const MixedPolicy& mixed, const two_rate::TwoRateParams& p) {
    return evaluate_mixed_policy(mixed, [&](const Policy& pol) {
        return std::pair{two_rate::average_age(p, pol), two_rate::constraint_values(p, pol)};
    });
}

namespace detail {

/// When some sign pattern is unreachable the binding structure is
/// one-dimensional: mix the A (+,+) policy with the B (-,-) one, or with
/// whichever of C, D exists, with the largest weight on A that keeps both
/// rates within budget (slack <= 0).
inline MixedPolicy one_axis_mixture(CachedDualProblem& problem, const QuadrantPoints& q) {
    const DualEvaluation a = problem(q.a);
    MixedPolicy best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const LagrangeVec& other : {q.b, q.c, q.d}) {
        const DualEvaluation o = problem(other);
        double w = 1.0;
        for (auto [sa, so] : {std::pair{a.slack.c0, o.slack.c0}, std::pair{a.slack.c1, o.slack.c1}}) {
            if (sa > 0.0 && so < 0.0) w = std::min(w, -so / (sa - so));
        }
        w = std::clamp(w, 0.0, 1.0);
        const double c0 = w * a.slack.c0 + (1.0 - w) * o.slack.c0;
        const double c1 = w * a.slack.c1 + (1.0 - w) * o.slack.c1;
        if (c0 > kSignTolerance || c1 > kSignTolerance) continue;
        const double cost = w * a.cost + (1.0 - w) * o.cost;
        if (cost < best_cost) {
            best_cost = cost;
            best.policies = {a.policy, o.policy, a.policy, o.policy};
            best.slacks = {a.slack, o.slack, a.slack, o.slack};
            best.costs = {a.cost, o.cost, a.cost, o.cost};
            best.rho0 = w;
            best.rho1 = 1.0;
        }
    }
    if (!std::isfinite(best_cost))
        throw Error(ErrorKind::PatternNotFound, "no feasible one-axis mixture of the quadrant policies");
    return best;
}

} // namespace detail

/// Optimal average AoI under both per-context update budgets.
///
/// Triangle bisection on a piecewise-constant constraint map can settle
/// away from the dual optimum, so the search is repeated: each round starts
/// from the four neighbor multipliers of the previous round (they carry the
/// required sign patterns and bracket the previous lambda*), and the
/// cheapest mixed policy over all rounds is kept.
inline TwoRateCmdpSolution solve_two_rate_cmdp(const two_rate::TwoRateParams& p, const SolverConfig& solver,
                                               const SearchConfig& search) {
    search.validate();
    CachedDualProblem problem(make_two_rate_dual_problem(p, solver));
    TwoRateCmdpSolution out;
    out.initial = find_initial_quadrant_points(problem, 10.0 * p.delta_max);

    QuadrantPoints start = out.initial;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t round = 0; round <= search.restarts; ++round) {
        auto bis = triangle_bisection(problem, start, search);
        for (auto& row : bis.trace) {
            row.iter += out.outer_iterations;
            out.trace.push_back(row);
        }
        out.outer_iterations += bis.outer_iterations;

        NeighborPolicies neighbors;
        MixedPolicy mixed;
        try {
            neighbors = neighbor_policies(problem, bis.lambda_star, search.gamma, search.eps_lambda);
            mixed = make_mixed_policy(neighbors);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::PatternNotFound && e.kind() != ErrorKind::NoSolution) throw;
            if (round > 0) break;
            out.lambda_star = bis.lambda_star;
            out.mixed = detail::one_axis_mixture(problem, out.initial);
            out.value = evaluate_mixed_policy(out.mixed, p);
            out.neighbor_fallback = true;
            break;
        }
        const MixedEvaluation value = evaluate_mixed_policy(mixed, p);
        if (value.J < best - 1e-12) {
            best = value.J;
            out.lambda_star = bis.lambda_star;
            out.mixed = std::move(mixed);
            out.value = value;
        }
        const auto& m = neighbors.multipliers;
        start = {m[0], m[3], m[1], m[2]};
    }
    out.fresh_solves = problem.fresh_solves();
    return out;
}

} // namespace freshness
