#pragma once

// Single-rate AoII problem: the Markov source tracked over a Bernoulli
// channel, its Lagrangian relaxation, and the token-bucket reformulation.

#include "freshness/errors.hpp"
#include "freshness/mdp.hpp"
#include "freshness/solver.hpp"
#include "freshness/threshold.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace freshness::aoii {

struct AoiiParams {
    int source_states = 8;     // N
    double p_stay = 0.5;       // source keeps its value
    double p_change = 0.0;     // source moves to one specific other value
    double p_success = 1.0;    // channel delivers
    double p_fail = 0.0;
    double beta = 0.0;         // P(AoII resets | update, AoII > 0)
    int delta_max = 30;        // AoII cap
};

struct TokenParams {
    double alpha = 0.1;   // token arrival probability per slot
    int b_max = 5;        // bucket capacity

    void validate() const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw Error(ErrorKind::InvalidParams, "token rate alpha must lie in (0, 1)");
        if (b_max < 1) throw Error(ErrorKind::InvalidParams, "b_max must be >= 1");
    }
};

/// Fills the derived chain probabilities and checks p_R > p_t.
inline AoiiParams derive_chain_params(int source_states, double p_stay, double p_success, int delta_max) {
    if (source_states < 2) throw Error(ErrorKind::InvalidParams, "N must be >= 2");
    if (!(p_stay > 0.0 && p_stay < 1.0)) throw Error(ErrorKind::InvalidParams, "p_R must lie in (0, 1)");
    if (!(p_success > 0.0 && p_success <= 1.0)) throw Error(ErrorKind::InvalidParams, "p_s must lie in (0, 1]");
    if (delta_max < 1) throw Error(ErrorKind::InvalidParams, "delta_max must be >= 1");

    AoiiParams p;
    p.source_states = source_states;
    p.p_stay = p_stay;
    p.p_change = (1.0 - p_stay) / (source_states - 1);
    p.p_success = p_success;
    p.p_fail = 1.0 - p_success;
    p.beta = p.p_stay * p.p_success + p.p_fail * p.p_change;
    p.delta_max = delta_max;
    if (!(p.p_stay > p.p_change))
        throw Error(ErrorKind::InvalidParams, "p_R must exceed p_t = (1 - p_R)/(N - 1), i.e. p_R > 1/N");
    return p;
}

/// AoII successor distribution: at most two outcomes, AoII + 1 saturating
/// at delta_max.
inline std::array<std::pair<int, double>, 2> aoii_step(const AoiiParams& p, int delta, Action a) {
    const int grown = std::min(delta + 1, p.delta_max);
    if (delta == 0) return {{{0, p.p_stay}, {1, 1.0 - p.p_stay}}};
    const double reset = (a == kUpdate) ? p.beta : p.p_change;
    return {{{0, reset}, {grown, 1.0 - reset}}};
}

/// States 0..delta_max (AoII value); cost delta + lambda * a; both actions
/// allowed everywhere.
inline FiniteMdp build_aoii_lagrangian_mdp(const AoiiParams& p, double lambda) {
    if (!(lambda >= 0.0)) throw Error(ErrorKind::InvalidInput, "lambda must be nonnegative");
    const auto n = static_cast<std::size_t>(p.delta_max + 1);
    MdpBuilder builder(n, 2);
    for (int d = 0; d <= p.delta_max; ++d)
        for (Action a : {kIdle, kUpdate}) {
            std::vector<Transition> succ;
            for (auto [next, prob] : aoii_step(p, d, a)) succ.push_back({static_cast<StateIndex>(next), prob});
            builder.set_row(static_cast<StateIndex>(d), a, d + lambda * a, std::move(succ));
        }
    return builder.build();
}

/// Row-major (b, delta) indexing of the token model.
struct AoiiTokenLayout {
    int b_max = 0;
    int delta_max = 0;

    std::size_t size() const { return static_cast<std::size_t>((b_max + 1) * (delta_max + 1)); }
    StateIndex index(int b, int delta) const { return static_cast<StateIndex>(b * (delta_max + 1) + delta); }
    int tokens(StateIndex s) const { return static_cast<int>(s) / (delta_max + 1); }
    int age(StateIndex s) const { return static_cast<int>(s) % (delta_max + 1); }
};

inline AoiiTokenLayout token_layout(const AoiiParams& p, const TokenParams& t) { return {t.b_max, p.delta_max}; }

/// Token-based MDP: tokens arrive w.p. alpha (capped at b_max), an update
/// spends one token and is masked out when the bucket is empty. Cost is the
/// AoII value.
inline FiniteMdp build_aoii_token_mdp(const AoiiParams& p, const TokenParams& t) {
    t.validate();
    const AoiiTokenLayout layout = token_layout(p, t);
    MdpBuilder builder(layout.size(), 2);
    for (int b = 0; b <= t.b_max; ++b)
        for (int d = 0; d <= p.delta_max; ++d) {
            const StateIndex s = layout.index(b, d);
            for (Action a : {kIdle, kUpdate}) {
                if (a == kUpdate && b == 0) {
                    builder.mask(s, a);
                    continue;
                }
                const int spent = b - static_cast<int>(a);
                const int with_arrival = std::min(spent + 1, t.b_max);
                std::vector<Transition> succ;
                for (auto [next_d, prob_d] : aoii_step(p, d, a)) {
                    succ.push_back({layout.index(with_arrival, next_d), t.alpha * prob_d});
                    succ.push_back({layout.index(spent, next_d), (1.0 - t.alpha) * prob_d});
                }
                builder.set_row(s, a, static_cast<double>(d), std::move(succ));
            }
        }
    return builder.build();
}

/// Per-state AoII value of the token layout, used as the simulation metric.
inline std::vector<double> token_ages(const AoiiTokenLayout& layout) {
    std::vector<double> out(layout.size());
    for (StateIndex s = 0; s < out.size(); ++s) out[s] = layout.age(s);
    return out;
}

struct ThresholdProfile {
    std::vector<int> by_tokens;   // index b; b = 0 is always delta_max + 1
};

struct NotThreshold {
    int b = 0;
    int lower = 0;   // policy updates here
    int upper = 0;   // ... but idles at this larger AoII
};

struct ThresholdExtraction {
    std::optional<ThresholdProfile> profile;
    std::optional<NotThreshold> witness;

    bool is_threshold() const { return profile.has_value(); }
};

/// Checks that, for every b, the policy updates exactly when AoII >= T(b).
/// T(b) = delta_max + 1 encodes "never update at this b".
inline ThresholdExtraction extract_threshold_profile(const Policy& policy, const AoiiTokenLayout& layout) {
    if (policy.size() != layout.size())
        throw Error(ErrorKind::LayoutMismatch, "policy size does not match the token layout");
    std::vector<std::vector<StateIndex>> lines;
    for (int b = 0; b <= layout.b_max; ++b) {
        std::vector<StateIndex> line;
        for (int d = 0; d <= layout.delta_max; ++d) line.push_back(layout.index(b, d));
        lines.push_back(std::move(line));
    }
    const auto checked = line_thresholds(policy, lines, 0);
    ThresholdExtraction out;
    if (checked.violation) {
        const auto& v = *checked.violation;
        out.witness = NotThreshold{static_cast<int>(v.line), v.lower, v.upper};
    } else {
        out.profile = ThresholdProfile{checked.thresholds};
    }
    return out;
}

inline ThresholdExtraction extract_threshold_profile(const SolveResult& result, const AoiiTokenLayout& layout) {
    return extract_threshold_profile(result.policy, layout);
}

/// DV(b, delta) = sum P(.|s, 1) V - sum P(.|s, 0) V for delta = 0..delta_max.
/// The sign decides the greedy action (update iff DV < 0) since the cost
/// does not depend on the action. Requires b >= 1.
inline std::vector<double> dv_profile(const FiniteMdp& mdp, const std::vector<double>& V,
                                      const AoiiTokenLayout& layout, int b) {
    if (b < 1 || b > layout.b_max) throw Error(ErrorKind::InvalidInput, "dv_profile needs 1 <= b <= b_max");
    if (V.size() != mdp.n_states() || mdp.n_states() != layout.size())
        throw Error(ErrorKind::LayoutMismatch, "value vector does not match the token layout");
    auto expect = [&](StateIndex s, Action a) {
        double acc = 0.0;
        for (const auto& t : mdp.successors(s, a)) acc += t.prob * V[t.next];
        return acc;
    };
    std::vector<double> dv(static_cast<std::size_t>(layout.delta_max + 1));
    for (int d = 0; d <= layout.delta_max; ++d) {
        const StateIndex s = layout.index(b, d);
        dv[static_cast<std::size_t>(d)] = expect(s, kUpdate) - expect(s, kIdle);
    }
    return dv;
}

} // namespace freshness::aoii
