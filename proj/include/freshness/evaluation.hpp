#pragma once

#include "freshness/errors.hpp"
#include "freshness/graph.hpp"
#include "freshness/mdp.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>
#include <vector>

namespace freshness {

/// Chains whose recurrent class is at most this size are solved densely;
/// larger ones go through a sparse LU factorization.
inline constexpr std::size_t kDenseSolveLimit = 400;

namespace detail {

inline graph::Digraph induced_graph(const FiniteMdp& mdp, const Policy& policy) {
    graph::Digraph g(mdp.n_states());
    for (StateIndex s = 0; s < mdp.n_states(); ++s)
        for (const auto& t : mdp.successors(s, policy[s])) g[s].push_back(t.next);
    return g;
}

inline void check_policy(const FiniteMdp& mdp, const Policy& policy) {
    if (!mdp.respects_mask(policy))
        throw Error(ErrorKind::InvalidInput, "policy does not respect the action mask");
}

} // namespace detail

/// Stationary distribution of the chain induced by a deterministic policy.
///
/// The recurrent class is located graph-theoretically and the balance
/// equations are solved on it alone; transient states get zero mass.
/// Throws MultiChain when the induced chain has more than one closed class.
inline std::vector<double> stationary_distribution(const FiniteMdp& mdp, const Policy& policy) {
    detail::check_policy(mdp, policy);
    const auto g = detail::induced_graph(mdp, policy);
    const auto comps = graph::strongly_connected(g);
    const auto closed = graph::closed_components(g, comps);
    if (closed.size() != 1)
        throw Error(ErrorKind::MultiChain,
                    "induced chain has " + std::to_string(closed.size()) + " recurrent classes");

    const std::size_t n = mdp.n_states();
    std::vector<std::size_t> local(n, n);
    std::vector<StateIndex> members;
    for (StateIndex s = 0; s < n; ++s)
        if (comps.component_of[s] == closed.front()) {
            local[s] = members.size();
            members.push_back(s);
        }
    const std::size_t m = members.size();

    // Balance equations mu^T (P - I) = 0 written as (P^T - I) mu = 0, with the
    // last equation replaced by sum(mu) = 1.
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    rhs(static_cast<Eigen::Index>(m - 1)) = 1.0;
    Eigen::VectorXd mu;

    if (m <= kDenseSolveLimit) {
        Eigen::MatrixXd A = -Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        for (std::size_t i = 0; i < m; ++i)
            for (const auto& t : mdp.successors(members[i], policy[members[i]]))
                A(static_cast<Eigen::Index>(local[t.next]), static_cast<Eigen::Index>(i)) += t.prob;
        A.row(static_cast<Eigen::Index>(m - 1)).setOnes();
        mu = A.partialPivLu().solve(rhs);
    } else {
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(m * 6);
        const auto last = static_cast<Eigen::Index>(m - 1);
        for (std::size_t i = 0; i < m; ++i) {
            const auto col = static_cast<Eigen::Index>(i);
            if (col != last) entries.emplace_back(col, col, -1.0);
            entries.emplace_back(last, col, 1.0);
            for (const auto& t : mdp.successors(members[i], policy[members[i]])) {
                const auto row = static_cast<Eigen::Index>(local[t.next]);
                if (row != last) entries.emplace_back(row, col, t.prob);
            }
        }
        Eigen::SparseMatrix<double> A(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
        A.setFromTriplets(entries.begin(), entries.end());
        Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
        lu.compute(A);
        if (lu.info() != Eigen::Success)
            throw Error(ErrorKind::MultiChain, "stationary system is singular: " + lu.lastErrorMessage());
        mu = lu.solve(rhs);
    }

    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < m; ++i) out[members[i]] = std::max(0.0, mu(static_cast<Eigen::Index>(i)));
    double total = 0.0;
    for (double x : out) total += x;
    for (double& x : out) x /= total;
    return out;
}

/// Exact long-run average of g(s, policy(s)) under the induced chain.
template <class Reward>
double long_run_average(const FiniteMdp& mdp, const Policy& policy, Reward&& g) {
    const auto mu = stationary_distribution(mdp, policy);
    double acc = 0.0;
    for (StateIndex s = 0; s < mdp.n_states(); ++s)
        if (mu[s] != 0.0) acc += mu[s] * g(s, policy[s]);
    return acc;
}

/// Long-run average of the MDP's own cost table.
inline double average_cost(const FiniteMdp& mdp, const Policy& policy) {
    return long_run_average(mdp, policy, [&](StateIndex s, Action a) { return mdp.cost(s, a); });
}

/// Differential values h of a unichain policy with gain J, normalized so
/// that h(ref) == 0: h = c - J + P h.
inline std::vector<double> differential_values(const FiniteMdp& mdp, const Policy& policy, double J,
                                               StateIndex ref = 0) {
    const auto mu = stationary_distribution(mdp, policy);
    const std::size_t n = mdp.n_states();
    StateIndex anchor = 0;
    for (StateIndex s = 0; s < n; ++s)
        if (mu[s] > mu[anchor]) anchor = s;

    // (I - P) h = c - J has a one-dimensional solution set; pin it by
    // replacing the anchor row (a recurrent state) with mu^T h = 0.
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Eigen::VectorXd b(static_cast<Eigen::Index>(n));
    for (StateIndex s = 0; s < n; ++s) {
        const auto i = static_cast<Eigen::Index>(s);
        for (const auto& t : mdp.successors(s, policy[s])) A(i, static_cast<Eigen::Index>(t.next)) -= t.prob;
        b(i) = mdp.cost(s, policy[s]) - J;
    }
    const auto a = static_cast<Eigen::Index>(anchor);
    for (StateIndex s = 0; s < n; ++s) A(a, static_cast<Eigen::Index>(s)) = mu[s];
    b(a) = 0.0;
    Eigen::VectorXd h = A.partialPivLu().solve(b);
    std::vector<double> out(n);
    const double shift = h(static_cast<Eigen::Index>(ref));
    for (StateIndex s = 0; s < n; ++s) out[s] = h(static_cast<Eigen::Index>(s)) - shift;
    out[ref] = 0.0;
    return out;
}

} // namespace freshness
