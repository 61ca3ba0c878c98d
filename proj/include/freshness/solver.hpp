#pragma once

#include "freshness/errors.hpp"
#include "freshness/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace freshness {

struct SolverConfig {
    double eps_v = 0.1;                   // span termination threshold
    std::size_t max_iterations = 100000;
    StateIndex ref_state = 0;             // normalization state, V(ref_state) == 0
    double aperiodicity = 1.0;            // tau in P' = tau P + (1 - tau) I; 1 keeps P

    void validate() const {
        if (!(eps_v > 0.0)) throw Error(ErrorKind::InvalidInput, "eps_V must be positive");
        if (max_iterations < 1) throw Error(ErrorKind::InvalidInput, "max_iterations must be >= 1");
        if (!(aperiodicity > 0.0 && aperiodicity <= 1.0))
            throw Error(ErrorKind::InvalidInput, "aperiodicity must lie in (0, 1]");
    }
};

struct SolveResult {
    double J = 0.0;                 // optimal average cost
    std::vector<double> V;          // differential values, V[ref_state] == 0
    Policy policy;
    std::size_t n_iterations = 0;
    double residual_span = 0.0;
};

struct Backup {
    double value = 0.0;
    Action action = kIdle;
};

namespace detail {

/// Q(s, a) = C(s, a) + sum_s' P(s'|s, a) V(s'); row probabilities sum to 1.
inline double q_value(const FiniteMdp& mdp, std::span<const double> V, StateIndex s, Action a) {
    double acc = 0.0;
    for (const auto& t : mdp.successors(s, a)) acc += t.prob * V[t.next];
    return mdp.cost(s, a) + acc;
}

/// A later action only wins if it beats the incumbent by more than rounding
/// noise, so exact ties resolve toward the lower index (idle).
inline bool strictly_better(double candidate, double incumbent) {
    return candidate < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent));
}

inline Backup backup(const FiniteMdp& mdp, std::span<const double> V, StateIndex s) {
    Backup best{std::numeric_limits<double>::infinity(), kIdle};
    bool found = false;
    for (Action a = 0; a < mdp.n_actions(); ++a) {
        if (!mdp.allowed(s, a)) continue;
        const double q = q_value(mdp, V, s, a);
        if (!found || strictly_better(q, best.value)) {
            best = {q, a};
            found = true;
        }
    }
    return best;
}

/// Backup under tau P + (1 - tau) I.
inline double lazy_backup(const FiniteMdp& mdp, std::span<const double> W, StateIndex s, double tau) {
    double best = std::numeric_limits<double>::infinity();
    for (Action a = 0; a < mdp.n_actions(); ++a) {
        if (!mdp.allowed(s, a)) continue;
        double acc = 0.0;
        for (const auto& t : mdp.successors(s, a)) acc += t.prob * W[t.next];
        best = std::min(best, mdp.cost(s, a) + tau * acc + (1.0 - tau) * W[s]);
    }
    return best;
}

} // namespace detail

/// Minimum over allowed actions of sum_s' P(s'|s,a) [C(s,a) + V(s')] and its
/// argmin, ties toward the smaller action index.
inline Backup bellman_backup(const FiniteMdp& mdp, std::span<const double> V, StateIndex s) {
    if (V.size() != mdp.n_states())
        throw Error(ErrorKind::InvalidInput, "value vector size does not match the state count");
    if (s >= mdp.n_states()) throw Error(ErrorKind::InvalidInput, "state index out of range");
    return detail::backup(mdp, V, s);
}

/// Policy greedy with respect to V.
inline Policy greedy_policy(const FiniteMdp& mdp, std::span<const double> V) {
    Policy policy(mdp.n_states());
    for (StateIndex s = 0; s < mdp.n_states(); ++s) policy[s] = detail::backup(mdp, V, s).action;
    return policy;
}

/// max_s |J + V(s) - min_a sum P (C + V)|.
inline double bellman_residual(const FiniteMdp& mdp, double J, std::span<const double> V) {
    double worst = 0.0;
    for (StateIndex s = 0; s < mdp.n_states(); ++s)
        worst = std::max(worst, std::abs(J + V[s] - detail::backup(mdp, V, s).value));
    return worst;
}

/// Relative value iteration.
///
/// Each sweep computes v_t(s) = min_a Q_{t-1}(s, a), then renormalizes
/// V_t = v_t - v_t(ref). Stops once span(V_t - V_{t-1}) < eps_v; the gain is
/// read as v_t(ref) of the final sweep and the returned policy is greedy with
/// respect to the final V. `initial` overrides V_0 = 0.
///
/// With aperiodicity tau < 1 the sweeps run on the kernel tau P + (1 - tau) I,
/// which has the same gain and greedy policies but converges on periodic
/// chains; its relative values are h / tau and are scaled back before
/// returning. The span test applies to the transformed iterates.
inline SolveResult rvia(const FiniteMdp& mdp, const SolverConfig& cfg,
                        std::optional<std::vector<double>> initial = std::nullopt) {
    cfg.validate();
    const std::size_t n = mdp.n_states();
    if (cfg.ref_state >= n) throw Error(ErrorKind::InvalidInput, "ref_state out of range");

    const double tau = cfg.aperiodicity;
    std::vector<double> prev = initial ? std::move(*initial) : std::vector<double>(n, 0.0);
    if (prev.size() != n) throw Error(ErrorKind::InvalidInput, "initial value vector has the wrong size");
    if (tau < 1.0)
        for (double& x : prev) x /= tau;
    std::vector<double> next(n, 0.0);

    double span = std::numeric_limits<double>::infinity();
    double gain = 0.0;
    std::size_t t = 0;
    while (t < cfg.max_iterations) {
        ++t;
        if (tau < 1.0) {
            for (StateIndex s = 0; s < n; ++s) next[s] = detail::lazy_backup(mdp, prev, s, tau);
        } else {
            for (StateIndex s = 0; s < n; ++s) next[s] = detail::backup(mdp, prev, s).value;
        }
        gain = next[cfg.ref_state];
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (StateIndex s = 0; s < n; ++s) {
            next[s] -= gain;
            const double d = next[s] - prev[s];
            hi = std::max(hi, d);
            lo = std::min(lo, d);
        }
        span = hi - lo;
        prev.swap(next);
        if (span < cfg.eps_v) break;
    }
    if (!(span < cfg.eps_v))
        throw Error(ErrorKind::NonConvergence, "RVIA did not reach span " + std::to_string(cfg.eps_v) + " within " +
                                                   std::to_string(cfg.max_iterations) + " iterations (span " +
                                                   std::to_string(span) + ")");

    if (tau < 1.0)
        for (double& x : prev) x *= tau;
    SolveResult result;
    result.J = gain;
    result.policy = greedy_policy(mdp, prev);
    result.V = std::move(prev);
    result.n_iterations = t;
    result.residual_span = span;
    return result;
}

} // namespace freshness
