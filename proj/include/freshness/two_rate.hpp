#pragma once

// Two-rate AoI problem: requests arrive i.i.d. Bernoulli(q), updates are
// budgeted separately in slots with and without a request.

#include "freshness/dual_types.hpp"
#include "freshness/errors.hpp"
#include "freshness/evaluation.hpp"
#include "freshness/mdp.hpp"
#include "freshness/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace freshness::two_rate {

struct TwoRateParams {
    double q = 0.2;           // request probability per slot
    double alpha_min = 0.1;   // update rate cap per slot without request
    double alpha_max = 0.5;   // update rate cap per slot with request
    double alpha0 = 0.0;      // (1 - q) * alpha_min
    double alpha1 = 0.0;      // q * alpha_max
    int delta_max = 20;
    int b_max = 5;
};

inline TwoRateParams make_params(double q, double alpha_min, double alpha_max, int delta_max, int b_max) {
    if (!(q > 0.0 && q < 1.0)) throw Error(ErrorKind::InvalidParams, "q must lie in (0, 1)");
    if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max < 1.0))
        throw Error(ErrorKind::InvalidParams, "need 0 < alpha_min <= alpha_max < 1");
    if (delta_max < 1) throw Error(ErrorKind::InvalidParams, "delta_max must be >= 1");
    if (b_max < 1) throw Error(ErrorKind::InvalidParams, "b_max must be >= 1");
    return {q, alpha_min, alpha_max, (1.0 - q) * alpha_min, q * alpha_max, delta_max, b_max};
}

/// Row-major (b0, b1, delta, r) indexing, delta in 1..delta_max.
struct TokenLayout {
    int b_max = 0;
    int delta_max = 0;

    std::size_t size() const {
        return static_cast<std::size_t>((b_max + 1) * (b_max + 1) * delta_max * 2);
    }
    StateIndex index(int b0, int b1, int delta, int r) const {
        return static_cast<StateIndex>(((b0 * (b_max + 1) + b1) * delta_max + (delta - 1)) * 2 + r);
    }
    int request(StateIndex s) const { return static_cast<int>(s % 2); }
    int age(StateIndex s) const { return static_cast<int>((s / 2) % static_cast<std::size_t>(delta_max)) + 1; }
    int tokens1(StateIndex s) const {
        return static_cast<int>((s / 2 / static_cast<std::size_t>(delta_max)) % static_cast<std::size_t>(b_max + 1));
    }
    int tokens0(StateIndex s) const {
        return static_cast<int>(s / 2 / static_cast<std::size_t>(delta_max) / static_cast<std::size_t>(b_max + 1));
    }
};

/// Row-major (delta, r) indexing of the token-free model.
struct PlainLayout {
    int delta_max = 0;

    std::size_t size() const { return static_cast<std::size_t>(delta_max * 2); }
    StateIndex index(int delta, int r) const { return static_cast<StateIndex>((delta - 1) * 2 + r); }
    int request(StateIndex s) const { return static_cast<int>(s % 2); }
    int age(StateIndex s) const { return static_cast<int>(s / 2) + 1; }
};

inline TokenLayout token_layout(const TwoRateParams& p) { return {p.b_max, p.delta_max}; }
inline PlainLayout plain_layout(const TwoRateParams& p) { return {p.delta_max}; }

inline int next_age(int delta, Action a, int delta_max) { return a == kUpdate ? 1 : std::min(delta + 1, delta_max); }

/// Token-based MDP over (b0, b1, delta, r). Only the bucket of the current
/// context moves; an update there spends one of its tokens and is masked
/// when that bucket is empty.
inline FiniteMdp build_two_rate_token_mdp(const TwoRateParams& p) {
    const TokenLayout layout = token_layout(p);
    MdpBuilder builder(layout.size(), 2);
    for (int b0 = 0; b0 <= p.b_max; ++b0)
        for (int b1 = 0; b1 <= p.b_max; ++b1)
            for (int d = 1; d <= p.delta_max; ++d)
                for (int r = 0; r <= 1; ++r) {
                    const StateIndex s = layout.index(b0, b1, d, r);
                    const int bucket = r == 0 ? b0 : b1;
                    const double arrival = r == 0 ? p.alpha_min : p.alpha_max;
                    for (Action a : {kIdle, kUpdate}) {
                        if (a == kUpdate && bucket == 0) {
                            builder.mask(s, a);
                            continue;
                        }
                        const int spent = bucket - static_cast<int>(a);
                        const int refilled = std::min(spent + 1, p.b_max);
                        const int d_next = next_age(d, a, p.delta_max);
                        std::vector<Transition> succ;
                        for (auto [bucket_next, prob_b] : {std::pair{refilled, arrival}, std::pair{spent, 1.0 - arrival}}) {
                            const int nb0 = r == 0 ? bucket_next : b0;
                            const int nb1 = r == 1 ? bucket_next : b1;
                            succ.push_back({layout.index(nb0, nb1, d_next, 1), prob_b * p.q});
                            succ.push_back({layout.index(nb0, nb1, d_next, 0), prob_b * (1.0 - p.q)});
                        }
                        builder.set_row(s, a, static_cast<double>(d), std::move(succ));
                    }
                }
    return builder.build();
}

/// Dual MDP over (delta, r): cost delta + lambda0 (1 - r) a + lambda1 r a,
/// no tokens, both actions always allowed.
inline FiniteMdp build_two_rate_lagrangian_mdp(const TwoRateParams& p, const LagrangeVec& lambda) {
    if (!lambda.nonnegative())
        throw Error(ErrorKind::InvalidInput, "Lagrange multipliers must be nonnegative");
    const PlainLayout layout = plain_layout(p);
    MdpBuilder builder(layout.size(), 2);
    for (int d = 1; d <= p.delta_max; ++d)
        for (int r = 0; r <= 1; ++r)
            for (Action a : {kIdle, kUpdate}) {
                const int d_next = next_age(d, a, p.delta_max);
                const double penalty = (r == 0 ? lambda.lambda0 : lambda.lambda1) * a;
                builder.set_row(layout.index(d, r), a, d + penalty,
                                {{layout.index(d_next, 1), p.q}, {layout.index(d_next, 0), 1.0 - p.q}});
            }
    return builder.build();
}

/// Long-run update rates (context 0, context 1) of a policy on a model
/// whose state index parity is the request bit (true for both layouts).
inline ConstraintEval context_rates(const FiniteMdp& mdp, const Policy& policy) {
    const auto mu = stationary_distribution(mdp, policy);
    ConstraintEval rates;
    for (StateIndex s = 0; s < mdp.n_states(); ++s) {
        if (policy[s] != kUpdate) continue;
        (s % 2 == 0 ? rates.c0 : rates.c1) += mu[s];
    }
    return rates;
}

/// c0 = rate of updates in r = 0 slots - alpha0, c1 likewise for r = 1.
inline ConstraintEval constraint_values(const TwoRateParams& p, const Policy& policy) {
    if (policy.size() != plain_layout(p).size())
        throw Error(ErrorKind::LayoutMismatch, "policy is not defined on the (delta, r) state space");
    const auto mdp = build_two_rate_lagrangian_mdp(p, {});
    const auto rates = context_rates(mdp, policy);
    return {rates.c0 - p.alpha0, rates.c1 - p.alpha1};
}

/// Average AoI of a policy on the token-free model.
inline double average_age(const TwoRateParams& p, const Policy& policy) {
    const auto mdp = build_two_rate_lagrangian_mdp(p, {});
    return average_cost(mdp, policy);
}

struct TokenThresholdWitness {
    int b0 = 0, b1 = 0, r = 0;
    int lower = 0;
    int upper = 0;
};

struct TokenThresholds {
    std::vector<int> thresholds;   // indexed by (b0 * (b_max + 1) + b1) * 2 + r
    std::optional<TokenThresholdWitness> witness;

    bool is_threshold() const { return !witness.has_value(); }
};

/// For each (b0, b1, r) the policy must update exactly when delta >= T.
inline TokenThresholds extract_threshold_profile(const Policy& policy, const TokenLayout& layout) {
    if (policy.size() != layout.size())
        throw Error(ErrorKind::LayoutMismatch, "policy size does not match the token layout");
    std::vector<std::vector<StateIndex>> lines;
    for (int b0 = 0; b0 <= layout.b_max; ++b0)
        for (int b1 = 0; b1 <= layout.b_max; ++b1)
            for (int r = 0; r <= 1; ++r) {
                std::vector<StateIndex> line;
                for (int d = 1; d <= layout.delta_max; ++d) line.push_back(layout.index(b0, b1, d, r));
                lines.push_back(std::move(line));
            }
    const auto checked = line_thresholds(policy, lines, 1);
    TokenThresholds out;
    if (checked.violation) {
        const auto& v = *checked.violation;
        const int per_b0 = (layout.b_max + 1) * 2;
        out.witness = TokenThresholdWitness{static_cast<int>(v.line) / per_b0,
                                            (static_cast<int>(v.line) % per_b0) / 2,
                                            static_cast<int>(v.line) % 2, v.lower, v.upper};
    } else {
        out.thresholds = checked.thresholds;
    }
    return out;
}

} // namespace freshness::two_rate
