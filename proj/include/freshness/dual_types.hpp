#pragma once

#include <cmath>

namespace freshness {

/// Multipliers for the (no request, request) update-rate constraints.
struct LagrangeVec {
    double lambda0 = 0.0;
    double lambda1 = 0.0;

    friend LagrangeVec operator+(LagrangeVec a, LagrangeVec b) { return {a.lambda0 + b.lambda0, a.lambda1 + b.lambda1}; }
    friend LagrangeVec operator-(LagrangeVec a, LagrangeVec b) { return {a.lambda0 - b.lambda0, a.lambda1 - b.lambda1}; }
    friend LagrangeVec operator*(double k, LagrangeVec a) { return {k * a.lambda0, k * a.lambda1}; }
    friend bool operator==(const LagrangeVec&, const LagrangeVec&) = default;

    double norm() const { return std::hypot(lambda0, lambda1); }
    bool nonnegative() const { return lambda0 >= 0.0 && lambda1 >= 0.0; }
};

/// Signed constraint slacks of a policy: long-run update rate in each
/// context minus its budget. Feasible iff both are <= 0.
struct ConstraintEval {
    double c0 = 0.0;
    double c1 = 0.0;
};

} // namespace freshness
