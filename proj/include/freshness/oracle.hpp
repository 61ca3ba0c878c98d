#pragma once

#include "freshness/errors.hpp"
#include "freshness/evaluation.hpp"
#include "freshness/mdp.hpp"
#include "freshness/solver.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace freshness {

inline constexpr std::uint64_t kEnumerationLimit = std::uint64_t{1} << 20;

/// Brute-force optimal policy: evaluates every deterministic mask-respecting
/// policy exactly and keeps the cheapest, first in lexicographic order
/// (state 0 most significant) among equals.
///
/// Policies whose induced chain has several recurrent classes are skipped.
/// In a weakly communicating MDP the cost of any such class is also attained
/// by a unichain policy, so the minimum is unaffected. MultiChain is raised
/// only when no unichain policy exists at all. V is the chosen policy's
/// differential value vector anchored at state 0.
inline SolveResult enumerate_optimal_policy(const FiniteMdp& mdp) {
    const std::size_t n = mdp.n_states();
    std::vector<std::vector<Action>> choices(n);
    std::uint64_t total = 1;
    for (StateIndex s = 0; s < n; ++s) {
        choices[s] = mdp.allowed_actions(s);
        total *= choices[s].size();
        if (total > kEnumerationLimit)
            throw Error(ErrorKind::TooLarge, "more than 2^20 deterministic policies");
    }

    std::vector<std::size_t> digit(n, 0);
    Policy policy(n);
    for (StateIndex s = 0; s < n; ++s) policy[s] = choices[s][0];

    SolveResult best;
    best.J = std::numeric_limits<double>::infinity();
    std::size_t evaluated = 0;
    for (std::uint64_t k = 0; k < total; ++k) {
        try {
            const double J = average_cost(mdp, policy);
            if (best.policy.empty() || J < best.J - 1e-12) {
                best.J = J;
                best.policy = policy;
            }
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::MultiChain) throw;
        }
        ++evaluated;
        // Odometer increment with the last state varying fastest.
        for (std::size_t i = n; i-- > 0;) {
            if (++digit[i] < choices[i].size()) {
                policy[i] = choices[i][digit[i]];
                break;
            }
            digit[i] = 0;
            policy[i] = choices[i][0];
        }
    }
    if (best.policy.empty())
        throw Error(ErrorKind::MultiChain, "every deterministic policy induces several recurrent classes");

    best.V = differential_values(mdp, best.policy, best.J, 0);
    best.n_iterations = evaluated;
    best.residual_span = 0.0;
    return best;
}

} // namespace freshness
