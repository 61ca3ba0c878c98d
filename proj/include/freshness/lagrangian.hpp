#pragma once

// Exact solution of rate-constrained problems through their Lagrangian dual:
// 1-D bisection with two-policy mixing, and iterative triangle bisection
// with four-policy mixing for two constraints.

#include "freshness/dual_types.hpp"
#include "freshness/errors.hpp"
#include "freshness/mdp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace freshness {

struct SearchConfig {
    double eps_lambda = 0.1;     // outer-loop termination on centroid movement
    double gamma = 0.1;          // multiplicative step for neighbor policies
    std::size_t max_outer = 200;
    double eps_bisection = 1e-6; // bracket width for the 1-D search
    std::size_t restarts = 5;    // extra bisection rounds seeded from the neighbor multipliers

    void validate() const {
        if (!(eps_lambda > 0.0)) throw Error(ErrorKind::InvalidInput, "eps_lambda must be positive");
        if (!(gamma > 0.0)) throw Error(ErrorKind::InvalidInput, "gamma must be positive");
        if (!(eps_bisection > 0.0)) throw Error(ErrorKind::InvalidInput, "eps_bisection must be positive");
        if (max_outer < 1) throw Error(ErrorKind::InvalidInput, "max_outer must be >= 1");
    }
};

inline constexpr double kContainmentTolerance = 1e-12;
inline constexpr double kSignTolerance = 1e-9;

// ---------------------------------------------------------------------------
// Geometry

namespace detail {

inline double cross(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

/// Twice the signed area of triangle (a, b, c).
inline double signed_area2(const ConstraintEval& a, const ConstraintEval& b, const ConstraintEval& c) {
    return cross(b.c0 - a.c0, b.c1 - a.c1, c.c0 - a.c0, c.c1 - a.c1);
}

/// Origin on the segment hull of collinear points.
inline bool origin_on_hull_of_collinear(const std::array<ConstraintEval, 3>& pts) {
    std::size_t i0 = 0, i1 = 0;
    double widest = -1.0;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = i + 1; j < 3; ++j) {
            const double d = std::hypot(pts[i].c0 - pts[j].c0, pts[i].c1 - pts[j].c1);
            if (d > widest) {
                widest = d;
                i0 = i;
                i1 = j;
            }
        }
    const auto& a = pts[i0];
    const auto& b = pts[i1];
    if (widest <= kContainmentTolerance) return std::hypot(a.c0, a.c1) <= kContainmentTolerance;
    const double along = (-a.c0 * (b.c0 - a.c0) - a.c1 * (b.c1 - a.c1)) / (widest * widest);
    const double off = std::abs(cross(b.c0 - a.c0, b.c1 - a.c1, -a.c0, -a.c1)) / widest;
    return off <= kContainmentTolerance && along >= -kContainmentTolerance && along <= 1.0 + kContainmentTolerance;
}

} // namespace detail

/// True iff the origin lies inside or on the boundary of triangle
/// (fa, fb, fc), by the signs of the three sub-triangle areas.
inline bool point_in_triangle(const ConstraintEval& fa, const ConstraintEval& fb, const ConstraintEval& fc) {
    if (std::abs(detail::signed_area2(fa, fb, fc)) <= kContainmentTolerance)
        throw Error(ErrorKind::DegenerateTriangle, "image triangle is collinear");
    const ConstraintEval origin{};
    const double d1 = detail::signed_area2(fa, fb, origin);
    const double d2 = detail::signed_area2(fb, fc, origin);
    const double d3 = detail::signed_area2(fc, fa, origin);
    const bool negative = d1 < -kContainmentTolerance || d2 < -kContainmentTolerance || d3 < -kContainmentTolerance;
    const bool positive = d1 > kContainmentTolerance || d2 > kContainmentTolerance || d3 > kContainmentTolerance;
    return !(negative && positive);
}

/// Containment that also accepts collapsed image triangles, which are common
/// once the vertices map to the same deterministic policy.
inline bool image_contains_origin(const std::array<ConstraintEval, 3>& f) {
    if (std::abs(detail::signed_area2(f[0], f[1], f[2])) <= kContainmentTolerance)
        return detail::origin_on_hull_of_collinear(f);
    return point_in_triangle(f[0], f[1], f[2]);
}

struct LambdaTriangle {
    std::array<LagrangeVec, 3> vertices;

    double area() const {
        const auto& [a, b, c] = vertices;
        return 0.5 * std::abs((b.lambda0 - a.lambda0) * (c.lambda1 - a.lambda1) -
                              (b.lambda1 - a.lambda1) * (c.lambda0 - a.lambda0));
    }
    LagrangeVec centroid() const { return (1.0 / 3.0) * (vertices[0] + vertices[1] + vertices[2]); }

    /// Cyclic rotation placing the longest edge first (vertices 0 -> 1).
    LambdaTriangle longest_edge_first() const {
        const auto& v = vertices;
        const double e01 = (v[1] - v[0]).norm();
        const double e12 = (v[2] - v[1]).norm();
        const double e20 = (v[0] - v[2]).norm();
        if (e12 > e01 && e12 >= e20) return {{v[1], v[2], v[0]}};
        if (e20 > e01 && e20 > e12) return {{v[2], v[0], v[1]}};
        return *this;
    }
};

// ---------------------------------------------------------------------------
// Dual problem evaluation

/// Outcome of solving the unconstrained problem at one multiplier.
struct DualEvaluation {
    Policy policy;
    ConstraintEval slack;
    double cost = 0.0;   // long-run average of the base cost under policy
};

using DualProblem = std::function<DualEvaluation(const LagrangeVec&)>;

/// Memoizes a DualProblem by multiplier rounded to 12 significant digits.
class CachedDualProblem {
public:
    explicit CachedDualProblem(DualProblem fn) : fn_(std::move(fn)) {}

    DualEvaluation operator()(const LagrangeVec& lambda) {
        const auto key = std::make_pair(round12(lambda.lambda0), round12(lambda.lambda1));
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        DualEvaluation fresh = fn_(lambda);
        std::lock_guard lock(mutex_);
        auto [it, inserted] = cache_.emplace(key, std::move(fresh));
        if (inserted) ++fresh_solves_;
        return it->second;
    }

    std::size_t fresh_solves() const {
        std::lock_guard lock(mutex_);
        return fresh_solves_;
    }

private:
    static double round12(double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.11e", x);
        return std::strtod(buf, nullptr);
    }

    DualProblem fn_;
    mutable std::mutex mutex_;
    std::map<std::pair<double, double>, DualEvaluation> cache_;
    std::size_t fresh_solves_ = 0;
};

enum class Sign { Plus, Minus };

/// `Plus` means slack >= 0, `Minus` slack <= 0 (zero satisfies both).
inline bool matches(double slack, Sign s) {
    return s == Sign::Plus ? slack >= -kSignTolerance : slack <= kSignTolerance;
}
inline bool matches(const ConstraintEval& e, Sign s0, Sign s1) { return matches(e.c0, s0) && matches(e.c1, s1); }

/// Corner multipliers with slack signs A (+,+), B (-,-), C (+,-), D (-,+).
struct QuadrantPoints {
    LagrangeVec a, b, c, d;
};

/// Scans lambda in {0, lambda_bar 2^-k, ..., lambda_bar} per axis. A is
/// the origin and B the smallest diagonal point (t, t) with (-,-); C and D
/// are the grid points with (+,-) and (-,+) closest to the origin (ties by
/// lexicographic order), which keeps the starting quadrilateral tight around
/// the root.
inline QuadrantPoints find_initial_quadrant_points(CachedDualProblem& problem, double lambda_bar,
                                                   int scan_depth = 16) {
    if (!(lambda_bar > 0.0)) throw Error(ErrorKind::InvalidInput, "lambda_bar must be positive");
    std::vector<double> values{0.0};
    for (int k = scan_depth; k >= 0; --k) values.push_back(std::ldexp(lambda_bar, -k));

    auto not_found = [](const char* name) {
        return Error(ErrorKind::NotFound,
                     std::string("no multiplier with sign pattern ") + name + " within the scan budget");
    };

    QuadrantPoints pts;
    pts.a = {0.0, 0.0};
    if (!matches(problem(pts.a).slack, Sign::Plus, Sign::Plus)) throw not_found("(+,+)");

    bool found_b = false;
    for (double t : values)
        if (matches(problem({t, t}).slack, Sign::Minus, Sign::Minus)) {
            pts.b = {t, t};
            found_b = true;
            break;
        }
    if (!found_b) throw not_found("(-,-)");

    // Grid points ordered by distance from the origin.
    std::vector<LagrangeVec> grid;
    for (double l0 : values)
        for (double l1 : values) grid.push_back({l0, l1});
    std::stable_sort(grid.begin(), grid.end(),
                     [](const LagrangeVec& x, const LagrangeVec& y) { return x.norm() < y.norm(); });
    auto nearest = [&](Sign s0, Sign s1, const char* name) {
        for (const auto& lambda : grid) {
            // (+,-) needs lambda0 < lambda1 territory and vice versa; skip the
            // half-plane where the pattern cannot be the first hit.
            if (s0 == Sign::Plus && lambda.lambda0 > lambda.lambda1) continue;
            if (s0 == Sign::Minus && lambda.lambda1 > lambda.lambda0) continue;
            if (matches(problem(lambda).slack, s0, s1)) return lambda;
        }
        for (const auto& lambda : grid)
            if (matches(problem(lambda).slack, s0, s1)) return lambda;
        throw not_found(name);
    };
    pts.c = nearest(Sign::Plus, Sign::Minus, "(+,-)");
    pts.d = nearest(Sign::Minus, Sign::Plus, "(-,+)");
    return pts;
}

struct SearchTraceRow {
    std::size_t iter = 0;
    std::array<LagrangeVec, 3> vertices;     // the evaluated triangle R
    std::array<ConstraintEval, 3> images;
    LagrangeVec centroid;                    // lambda_E after the update
    bool contains_origin = false;
};

struct BisectionResult {
    LagrangeVec lambda_star;
    DualEvaluation at_star;
    std::size_t outer_iterations = 0;
    std::vector<SearchTraceRow> trace;
};

/// Iterative triangle bisection on F(lambda) = (c0, c1) of the
/// lambda-optimal policy.
///
/// The quadrilateral A-D-B-C is split into R = (A, D, C) and S = (D, B, C).
/// Each step keeps R if its image contains the origin, else S; when neither
/// image does (F is piecewise constant), the one whose image centroid is
/// nearest the origin is kept. The kept triangle is rotated so its longest
/// edge comes first, bisected at that edge's midpoint, and lambda_E moves to
/// its centroid. Stops when lambda_E moves less than eps_lambda.
inline BisectionResult triangle_bisection(CachedDualProblem& problem, const QuadrantPoints& init,
                                          const SearchConfig& cfg) {
    cfg.validate();
    if (!matches(problem(init.a).slack, Sign::Plus, Sign::Plus) ||
        !matches(problem(init.b).slack, Sign::Minus, Sign::Minus) ||
        !matches(problem(init.c).slack, Sign::Plus, Sign::Minus) ||
        !matches(problem(init.d).slack, Sign::Minus, Sign::Plus))
        throw Error(ErrorKind::InvalidInput, "initial points violate the required sign patterns");

    auto images = [&](const LambdaTriangle& t) {
        return std::array<ConstraintEval, 3>{problem(t.vertices[0]).slack, problem(t.vertices[1]).slack,
                                             problem(t.vertices[2]).slack};
    };
    auto centroid_distance = [](const std::array<ConstraintEval, 3>& f) {
        return std::hypot((f[0].c0 + f[1].c0 + f[2].c0) / 3.0, (f[0].c1 + f[1].c1 + f[2].c1) / 3.0);
    };

    LagrangeVec a = init.a, b = init.b, c = init.c, d = init.d;
    LambdaTriangle R{{a, d, c}};
    LambdaTriangle S{{d, b, c}};
    LagrangeVec e_new = d;
    const double inf = std::numeric_limits<double>::infinity();
    double movement = inf;

    BisectionResult out;
    while (movement >= cfg.eps_lambda) {
        if (out.outer_iterations >= cfg.max_outer)
            throw Error(ErrorKind::MaxIterations, "triangle bisection exceeded " + std::to_string(cfg.max_outer) +
                                                      " outer iterations");
        ++out.outer_iterations;

        const auto fr = images(R);
        const bool r_contains = image_contains_origin(fr);
        LambdaTriangle kept = R;
        if (!r_contains) {
            const auto fs = images(S);
            if (image_contains_origin(fs) || centroid_distance(fs) < centroid_distance(fr)) kept = S;
        }
        kept = kept.longest_edge_first();
        a = kept.vertices[0];
        b = kept.vertices[1];
        c = kept.vertices[2];
        const LagrangeVec e_old = e_new;
        e_new = kept.centroid();
        d = 0.5 * (a + b);
        movement = (e_new - e_old).norm();

        out.trace.push_back({out.outer_iterations, R.vertices, fr, e_new, r_contains});
        R = LambdaTriangle{{a, d, c}};
        S = LambdaTriangle{{d, b, c}};
    }
    out.lambda_star = e_new;
    out.at_star = problem(e_new);
    return out;
}

// ---------------------------------------------------------------------------
// Four-policy mixing

/// Order of the pattern-indexed arrays below: (+,+), (+,-), (-,+), (-,-).
inline constexpr std::array<std::pair<Sign, Sign>, 4> kPatterns{{{Sign::Plus, Sign::Plus},
                                                                  {Sign::Plus, Sign::Minus},
                                                                  {Sign::Minus, Sign::Plus},
                                                                  {Sign::Minus, Sign::Minus}}};

struct NeighborPolicies {
    std::array<DualEvaluation, 4> evaluations;
    std::array<LagrangeVec, 4> multipliers;
};

/// Moves away from lambda_star one pattern at a time: a component whose
/// slack must become >= 0 is divided by (1 + gamma), one that must become
/// <= 0 is multiplied (after nudging 0 up to gamma * eps_lambda). Only the
/// components still missing their sign are scaled.
inline NeighborPolicies neighbor_policies(CachedDualProblem& problem, const LagrangeVec& lambda_star, double gamma,
                                          double eps_lambda, int max_scalings = 200) {
    if (!(gamma > 0.0)) throw Error(ErrorKind::InvalidInput, "gamma must be positive");
    NeighborPolicies out;
    for (std::size_t k = 0; k < kPatterns.size(); ++k) {
        const auto [s0, s1] = kPatterns[k];
        LagrangeVec lambda = lambda_star;
        bool found = false;
        for (int step = 0; step <= max_scalings; ++step) {
            const DualEvaluation e = problem(lambda);
            const bool ok0 = matches(e.slack.c0, s0);
            const bool ok1 = matches(e.slack.c1, s1);
            if (ok0 && ok1) {
                out.evaluations[k] = e;
                out.multipliers[k] = lambda;
                found = true;
                break;
            }
            auto scale = [&](double& x, Sign s) {
                if (s == Sign::Plus) {
                    x /= 1.0 + gamma;
                } else {
                    if (x == 0.0) x = gamma * eps_lambda;
                    x *= 1.0 + gamma;
                }
            };
            if (!ok0) scale(lambda.lambda0, s0);
            if (!ok1) scale(lambda.lambda1, s1);
        }
        if (!found)
            throw Error(ErrorKind::PatternNotFound,
                        "sign pattern #" + std::to_string(k) + " not reached within " + std::to_string(max_scalings) +
                            " scalings");
    }
    return out;
}

struct MixingSolution {
    double rho0 = 0.5;
    double rho1 = 0.5;
    double residual = 0.0;   // max of the two equation residuals
};

namespace detail {

inline double bilinear(const std::array<double, 4>& v, double r0, double r1) {
    return r0 * r1 * v[0] + r0 * (1.0 - r1) * v[1] + (1.0 - r0) * r1 * v[2] + (1.0 - r0) * (1.0 - r1) * v[3];
}

struct MixingSystem {
    std::array<double, 4> row0;
    std::array<double, 4> row1;

    double residual(double r0, double r1) const {
        return std::max(std::abs(bilinear(row0, r0, r1)), std::abs(bilinear(row1, r0, r1)));
    }
};

inline bool negligible(const std::array<double, 4>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::abs(x) <= 1e-15; });
}

/// Damped Newton on the 2x2 bilinear system, clamped to the unit square.
inline MixingSolution newton_mixing(const MixingSystem& sys, double r0, double r1, int max_iter = 60) {
    auto f = [&](double x, double y) {
        return std::array<double, 2>{bilinear(sys.row0, x, y), bilinear(sys.row1, x, y)};
    };
    for (int it = 0; it < max_iter; ++it) {
        const auto fv = f(r0, r1);
        const double res = std::max(std::abs(fv[0]), std::abs(fv[1]));
        if (res <= 1e-13) break;
        const auto& u = sys.row0;
        const auto& w = sys.row1;
        const double j00 = r1 * u[0] + (1 - r1) * u[1] - r1 * u[2] - (1 - r1) * u[3];
        const double j01 = r0 * u[0] - r0 * u[1] + (1 - r0) * u[2] - (1 - r0) * u[3];
        const double j10 = r1 * w[0] + (1 - r1) * w[1] - r1 * w[2] - (1 - r1) * w[3];
        const double j11 = r0 * w[0] - r0 * w[1] + (1 - r0) * w[2] - (1 - r0) * w[3];
        const double det = j00 * j11 - j01 * j10;
        if (std::abs(det) < 1e-300) break;
        const double dx = (fv[0] * j11 - fv[1] * j01) / det;
        const double dy = (j00 * fv[1] - j10 * fv[0]) / det;
        double step = 1.0;
        bool improved = false;
        for (int k = 0; k < 30; ++k, step *= 0.5) {
            const double nx = std::clamp(r0 - step * dx, 0.0, 1.0);
            const double ny = std::clamp(r1 - step * dy, 0.0, 1.0);
            if (sys.residual(nx, ny) < res) {
                r0 = nx;
                r1 = ny;
                improved = true;
                break;
            }
        }
        if (!improved) break;
    }
    return {r0, r1, sys.residual(r0, r1)};
}

/// Exhaustive refinement: step 1e-2 over the square, then 1e-4 and 1e-6
/// windows around the incumbent.
inline MixingSolution grid_mixing(const MixingSystem& sys) {
    MixingSolution best{0.5, 0.5, sys.residual(0.5, 0.5)};
    double lo0 = 0.0, hi0 = 1.0, lo1 = 0.0, hi1 = 1.0;
    for (double step : {1e-2, 1e-4, 1e-6}) {
        const int n0 = static_cast<int>(std::lround((hi0 - lo0) / step));
        const int n1 = static_cast<int>(std::lround((hi1 - lo1) / step));
        for (int i = 0; i <= n0; ++i)
            for (int j = 0; j <= n1; ++j) {
                const double x = std::clamp(lo0 + i * step, 0.0, 1.0);
                const double y = std::clamp(lo1 + j * step, 0.0, 1.0);
                const double r = sys.residual(x, y);
                if (r < best.residual) best = {x, y, r};
            }
        lo0 = std::max(0.0, best.rho0 - step);
        hi0 = std::min(1.0, best.rho0 + step);
        lo1 = std::max(0.0, best.rho1 - step);
        hi1 = std::min(1.0, best.rho1 + step);
    }
    return best;
}

} // namespace detail

/// Mixing probabilities (rho0, rho1) such that weighting the four policies
/// by rho0 rho1, rho0 (1 - rho1), (1 - rho0) rho1, (1 - rho0)(1 - rho1)
/// zeroes both mixed slacks. An all-zero equation leaves its probability
/// free; it is then fixed at 0.5.
inline MixingSolution solve_mixing(const std::array<ConstraintEval, 4>& slacks) {
    detail::MixingSystem sys;
    for (std::size_t k = 0; k < 4; ++k) {
        sys.row0[k] = slacks[k].c0;
        sys.row1[k] = slacks[k].c1;
    }
    constexpr double kTarget = 1e-9;
    constexpr double kAccept = 1e-6;

    const bool free0 = detail::negligible(sys.row0);
    const bool free1 = detail::negligible(sys.row1);
    if (free0 && free1) return {0.5, 0.5, sys.residual(0.5, 0.5)};
    if (free0 || free1) {
        // The remaining equation is linear in its own probability.
        const auto& row = free0 ? sys.row1 : sys.row0;
        auto eval = [&](double r) { return free0 ? detail::bilinear(row, 0.5, r) : detail::bilinear(row, r, 0.5); };
        const double at0 = eval(0.0), at1 = eval(1.0);
        if (at0 != at1) {
            const double r = std::clamp(at0 / (at0 - at1), 0.0, 1.0);
            MixingSolution sol = free0 ? MixingSolution{0.5, r, 0.0} : MixingSolution{r, 0.5, 0.0};
            sol.residual = sys.residual(sol.rho0, sol.rho1);
            if (sol.residual <= kTarget) return sol;
        }
    }

    MixingSolution sol = detail::newton_mixing(sys, 0.5, 0.5);
    if (sol.residual <= kTarget) return sol;

    MixingSolution grid = detail::grid_mixing(sys);
    MixingSolution polished = detail::newton_mixing(sys, grid.rho0, grid.rho1);
    if (polished.residual < grid.residual) grid = polished;
    if (grid.residual > kAccept)
        throw Error(ErrorKind::NoSolution, "mixing system has no root in [0,1]^2 (best residual " +
                                               std::to_string(grid.residual) + ")");
    return grid;
}

/// Randomization over four deterministic policies, drawn once at time 0.
struct MixedPolicy {
    std::array<Policy, 4> policies;            // (+,+), (+,-), (-,+), (-,-)
    std::array<ConstraintEval, 4> slacks;
    std::array<double, 4> costs{};
    double rho0 = 0.5;
    double rho1 = 0.5;

    std::array<double, 4> weights() const {
        return {rho0 * rho1, rho0 * (1.0 - rho1), (1.0 - rho0) * rho1, (1.0 - rho0) * (1.0 - rho1)};
    }

    /// Mixing-equation residuals from the stored slacks.
    std::array<double, 2> equation_residuals() const {
        const auto w = weights();
        double r0 = 0.0, r1 = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            r0 += w[k] * slacks[k].c0;
            r1 += w[k] * slacks[k].c1;
        }
        return {r0, r1};
    }
};

inline MixedPolicy make_mixed_policy(const NeighborPolicies& neighbors) {
    MixedPolicy mixed;
    std::array<ConstraintEval, 4> slacks;
    for (std::size_t k = 0; k < 4; ++k) {
        mixed.policies[k] = neighbors.evaluations[k].policy;
        mixed.costs[k] = neighbors.evaluations[k].cost;
        slacks[k] = neighbors.evaluations[k].slack;
    }
    mixed.slacks = slacks;
    const auto sol = solve_mixing(slacks);
    mixed.rho0 = sol.rho0;
    mixed.rho1 = sol.rho1;
    return mixed;
}

struct MixedEvaluation {
    double J = 0.0;
    double c0 = 0.0;
    double c1 = 0.0;
};

/// Probability-weighted combination of per-policy (cost, c0, c1) values
/// produced by `evaluate`.
template <class Evaluate>
    requires std::invocable<Evaluate&, const Policy&>
MixedEvaluation evaluate_mixed_policy(const MixedPolicy& mixed, Evaluate&& evaluate) {
    const auto w = mixed.weights();
    MixedEvaluation out;
    for (std::size_t k = 0; k < 4; ++k) {
        if (w[k] == 0.0) continue;
        const auto [cost, slack] = evaluate(mixed.policies[k]);
        out.J += w[k] * cost;
        out.c0 += w[k] * slack.c0;
        out.c1 += w[k] * slack.c1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Single constraint

struct ScalarDualEvaluation {
    Policy policy;
    double slack = 0.0;
    double cost = 0.0;
};

using ScalarDualProblem = std::function<ScalarDualEvaluation(double)>;

/// Two-policy mixture: `plus` (slack >= 0) is used with probability mu,
/// `minus` (slack <= 0) otherwise.
struct TwoPolicyMixture {
    double lambda_star = 0.0;
    ScalarDualEvaluation plus;
    ScalarDualEvaluation minus;
    double mu = 1.0;
    std::size_t evaluations = 0;

    double slack() const { return mu * plus.slack + (1.0 - mu) * minus.slack; }
    double cost() const { return mu * plus.cost + (1.0 - mu) * minus.cost; }
};

/// Bisection on lambda over [0, lambda_hi] until the bracket is narrower
/// than eps, then mixes the last policies on each side of the constraint.
/// Requires slack(0) > 0 and slack(lambda_hi) < 0.
inline TwoPolicyMixture bisection_1d(const ScalarDualProblem& problem, double lambda_hi, double eps) {
    if (!(eps > 0.0) || !(lambda_hi > 0.0)) throw Error(ErrorKind::InvalidInput, "need eps > 0 and lambda_hi > 0");
    TwoPolicyMixture out;
    out.plus = problem(0.0);
    out.minus = problem(lambda_hi);
    out.evaluations = 2;
    if (!(out.plus.slack > 0.0))
        throw Error(ErrorKind::InvalidBracket, "constraint is not violated at lambda = 0 (slack " +
                                                   std::to_string(out.plus.slack) + ")");
    if (!(out.minus.slack < 0.0))
        throw Error(ErrorKind::InvalidBracket, "constraint still violated at lambda_hi (slack " +
                                                   std::to_string(out.minus.slack) + ")");
    double lo = 0.0, hi = lambda_hi;
    while (hi - lo >= eps) {
        const double mid = 0.5 * (lo + hi);
        ScalarDualEvaluation e = problem(mid);
        ++out.evaluations;
        if (e.slack == 0.0) {
            out.plus = e;
            out.minus = std::move(e);
            lo = hi = mid;
            break;
        }
        if (e.slack > 0.0) {
            lo = mid;
            out.plus = std::move(e);
        } else {
            hi = mid;
            out.minus = std::move(e);
        }
    }
    out.lambda_star = 0.5 * (lo + hi);
    const double denom = out.minus.slack - out.plus.slack;
    out.mu = denom == 0.0 ? 1.0 : out.minus.slack / denom;
    return out;
}

} // namespace freshness
