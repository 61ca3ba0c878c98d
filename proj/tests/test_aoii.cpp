#include "freshness/accessibility.hpp"
#include "freshness/aoii.hpp"
#include "freshness/evaluation.hpp"
#include "freshness/oracle.hpp"
#include "freshness/solver.hpp"

#include <gtest/gtest.h>

#include <map>

using namespace freshness;
using namespace freshness::aoii;

namespace {

double prob_to(const FiniteMdp& mdp, StateIndex s, Action a, StateIndex to) {
    double acc = 0.0;
    for (const auto& t : mdp.successors(s, a))
        if (t.next == to) acc += t.prob;
    return acc;
}

double update_rate(const FiniteMdp& mdp, const Policy& pol) {
    return long_run_average(mdp, pol, [](StateIndex, Action a) { return static_cast<double>(a); });
}

struct GridPoint {
    int n;
    double pr, ps, alpha;
    int bmax, dmax;
};

std::vector<GridPoint> structure_grid() {
    std::vector<GridPoint> out;
    for (int n : {2, 4, 8})
        for (double pr : {0.3, 0.5, 0.9}) {
            if (!(pr > 1.0 / n)) continue;
            for (double ps : {0.5, 1.0})
                for (double alpha : {0.1, 0.3, 0.5})
                    for (int b : {1, 3, 5})
                        for (int d : {10, 30}) out.push_back({n, pr, ps, alpha, b, d});
        }
    return out;
}

} // namespace

TEST(ChainParams, EightStateSource) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 30);
    EXPECT_NEAR(p.p_change, 0.5 / 7, 1e-12);
    EXPECT_NEAR(p.beta, 0.5, 1e-12);
    EXPECT_EQ(p.p_fail, 0.0);
}

TEST(ChainParams, LossyChannel) {
    const auto p = derive_chain_params(8, 0.5, 0.9, 30);
    EXPECT_NEAR(p.beta, 0.45 + 0.1 * (0.5 / 7), 1e-12);
    EXPECT_NEAR(p.beta, 0.457143, 1e-6);
}

TEST(ChainParams, RejectsStayEqualToChange) {
    try {
        derive_chain_params(2, 0.5, 1.0, 30);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::InvalidParams);
    }
    EXPECT_THROW(derive_chain_params(1, 0.9, 1.0, 30), Error);
    EXPECT_THROW(derive_chain_params(8, 0.5, 0.0, 30), Error);
    EXPECT_THROW(derive_chain_params(8, 0.5, 1.0, 0), Error);
}

TEST(LagrangianMdp, Transitions) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 30);
    const auto mdp = build_aoii_lagrangian_mdp(p, 2.0);
    for (Action a : {kIdle, kUpdate}) {
        EXPECT_NEAR(prob_to(mdp, 0, a, 0), p.p_stay, 1e-15);
        EXPECT_NEAR(prob_to(mdp, 0, a, 1), 1 - p.p_stay, 1e-15);
    }
    EXPECT_NEAR(prob_to(mdp, 3, kUpdate, 0), p.beta, 1e-15);
    EXPECT_NEAR(prob_to(mdp, 3, kUpdate, 4), 1 - p.beta, 1e-15);
    EXPECT_NEAR(prob_to(mdp, 3, kIdle, 0), p.p_change, 1e-15);
    EXPECT_NEAR(prob_to(mdp, 30, kIdle, 30), 1 - p.p_change, 1e-15);
    EXPECT_DOUBLE_EQ(mdp.cost(3, kUpdate), 5.0);
    EXPECT_DOUBLE_EQ(mdp.cost(3, kIdle), 3.0);
    EXPECT_THROW(build_aoii_lagrangian_mdp(p, -1.0), Error);
}

TEST(LagrangianMdp, FreeUpdatesAreAlwaysUsed) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 5);
    const auto mdp = build_aoii_lagrangian_mdp(p, 0.0);
    const auto oracle = enumerate_optimal_policy(mdp);
    SolverConfig cfg;
    cfg.eps_v = 1e-10;
    const auto res = rvia(mdp, cfg);
    EXPECT_NEAR(res.J, oracle.J, 1e-8);
    for (int d = 1; d <= 5; ++d) EXPECT_EQ(res.policy[d], kUpdate) << "delta " << d;
}

TEST(TokenMdp, CaseThreeRow) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 10);
    const TokenParams t{0.3, 4};
    const auto mdp = build_aoii_token_mdp(p, t);
    const auto L = token_layout(p, t);
    const StateIndex s = L.index(2, 0);
    EXPECT_NEAR(prob_to(mdp, s, kUpdate, L.index(2, 0)), 0.3 * 0.5, 1e-15);
    EXPECT_NEAR(prob_to(mdp, s, kUpdate, L.index(2, 1)), 0.3 * 0.5, 1e-15);
    EXPECT_NEAR(prob_to(mdp, s, kUpdate, L.index(1, 0)), 0.7 * 0.5, 1e-15);
    EXPECT_NEAR(prob_to(mdp, s, kUpdate, L.index(1, 1)), 0.7 * 0.5, 1e-15);
}

TEST(TokenMdp, MaskAndSaturation) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 10);
    const TokenParams t{0.3, 4};
    const auto mdp = build_aoii_token_mdp(p, t);
    const auto L = token_layout(p, t);
    for (int d = 0; d <= 10; ++d) {
        EXPECT_FALSE(mdp.allowed(L.index(0, d), kUpdate));
        for (int b = 1; b <= 4; ++b) EXPECT_TRUE(mdp.allowed(L.index(b, d), kUpdate));
    }
    double to_cap = 0.0;
    for (const auto& tr : mdp.successors(L.index(4, 2), kIdle)) {
        EXPECT_EQ(L.tokens(tr.next), 4);
        to_cap += tr.prob;
    }
    EXPECT_NEAR(to_cap, 1.0, 1e-12);
    EXPECT_DOUBLE_EQ(mdp.cost(L.index(3, 7), kUpdate), 7.0);
}

TEST(TokenMdp, LayoutIsBijective) {
    const AoiiTokenLayout L{5, 30};
    std::map<StateIndex, int> seen;
    for (int b = 0; b <= 5; ++b)
        for (int d = 0; d <= 30; ++d) {
            const StateIndex s = L.index(b, d);
            EXPECT_EQ(L.tokens(s), b);
            EXPECT_EQ(L.age(s), d);
            ++seen[s];
        }
    EXPECT_EQ(seen.size(), L.size());
}

TEST(TokenMdp, InvalidTokenParams) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 10);
    EXPECT_THROW(build_aoii_token_mdp(p, {0.0, 3}), Error);
    EXPECT_THROW(build_aoii_token_mdp(p, {1.0, 3}), Error);
    EXPECT_THROW(build_aoii_token_mdp(p, {0.5, 0}), Error);
}

TEST(Threshold, AlwaysIdle) {
    const AoiiTokenLayout L{3, 10};
    const auto ex = extract_threshold_profile(Policy(L.size(), kIdle), L);
    ASSERT_TRUE(ex.is_threshold());
    for (int T : ex.profile->by_tokens) EXPECT_EQ(T, 11);
}

TEST(Threshold, Counterexample) {
    const AoiiTokenLayout L{3, 10};
    Policy pol(L.size(), kIdle);
    pol[L.index(1, 2)] = kUpdate;
    const auto ex = extract_threshold_profile(pol, L);
    ASSERT_FALSE(ex.is_threshold());
    EXPECT_EQ(ex.witness->b, 1);
    EXPECT_EQ(ex.witness->lower, 2);
    EXPECT_EQ(ex.witness->upper, 3);
}

TEST(Threshold, LayoutMismatch) {
    const AoiiTokenLayout L{3, 10};
    EXPECT_THROW(extract_threshold_profile(Policy(5, kIdle), L), Error);
}

TEST(Threshold, SolvedPolicyOnFullGrid) {
    SolverConfig cfg;
    cfg.eps_v = 1e-6;
    for (const auto& g : structure_grid()) {
        const auto p = derive_chain_params(g.n, g.pr, g.ps, g.dmax);
        const TokenParams t{g.alpha, g.bmax};
        const auto mdp = build_aoii_token_mdp(p, t);
        const auto L = token_layout(p, t);
        const auto res = rvia(mdp, cfg);
        const auto ex = extract_threshold_profile(res, L);
        EXPECT_TRUE(ex.is_threshold()) << "N=" << g.n << " pR=" << g.pr << " ps=" << g.ps << " alpha=" << g.alpha
                                       << " bmax=" << g.bmax << " dmax=" << g.dmax;
        EXPECT_EQ(ex.profile->by_tokens[0], g.dmax + 1);

        for (int b = 1; b <= g.bmax; ++b) {
            const auto dv = dv_profile(mdp, res.V, L, b);
            for (std::size_t d = 1; d < dv.size(); ++d) EXPECT_LE(dv[d], dv[d - 1] + 1e-8);
        }

        EXPECT_LE(update_rate(mdp, res.policy), g.alpha + 1e-9);
        EXPECT_TRUE(check_weak_accessibility(mdp));
    }
}

TEST(DvProfile, EightStateSource) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 30);
    const TokenParams t{0.2, 5};
    const auto mdp = build_aoii_token_mdp(p, t);
    const auto L = token_layout(p, t);
    SolverConfig cfg;
    cfg.eps_v = 1e-8;
    const auto res = rvia(mdp, cfg);
    for (int b = 1; b <= 5; ++b) {
        const auto dv = dv_profile(mdp, res.V, L, b);
        // Updating with nothing to correct only burns a token.
        EXPECT_GE(dv[0], -1e-9);
        EXPECT_EQ(res.policy[L.index(b, 0)], kIdle);
        for (std::size_t d = 1; d < dv.size(); ++d) EXPECT_LE(dv[d], dv[d - 1] + 1e-8);
        // Greedy action agrees with the sign of DV.
        for (int d = 0; d <= 30; ++d)
            if (std::abs(dv[d]) > 1e-9) EXPECT_EQ(res.policy[L.index(b, d)], dv[d] < 0 ? kUpdate : kIdle);
    }
    const auto top = dv_profile(mdp, res.V, L, 5);
    EXPECT_LE(top[2], top[1]);
    EXPECT_THROW(dv_profile(mdp, res.V, L, 0), Error);
}

TEST(TokenMdp, RateNeverExceedsBudget) {
    const auto p = derive_chain_params(4, 0.6, 0.8, 8);
    const TokenParams t{0.25, 2};
    const auto mdp = build_aoii_token_mdp(p, t);
    const auto L = token_layout(p, t);
    // Greedy spending and a few fixed thresholds.
    for (int T = 0; T <= 9; ++T) {
        Policy pol(L.size(), kIdle);
        for (StateIndex s = 0; s < L.size(); ++s)
            if (L.tokens(s) > 0 && L.age(s) >= T) pol[s] = kUpdate;
        EXPECT_LE(update_rate(mdp, pol), t.alpha + 1e-9);
    }
}

TEST(TokenMdp, LargerBucketNeverHurts) {
    const auto p = derive_chain_params(8, 0.5, 1.0, 30);
    SolverConfig cfg;
    cfg.eps_v = 1e-8;
    for (double alpha : {0.1, 0.3}) {
        double prev = std::numeric_limits<double>::infinity();
        for (int b = 1; b <= 6; ++b) {
            const auto mdp = build_aoii_token_mdp(p, {alpha, b});
            const double J = average_cost(mdp, rvia(mdp, cfg).policy);
            EXPECT_LE(J, prev + 1e-8) << "alpha " << alpha << " bmax " << b;
            prev = J;
        }
    }
}

TEST(TokenMdp, RviaMatchesOracleOnSmallInstances) {
    SolverConfig cfg;
    cfg.eps_v = 1e-10;
    for (double alpha : {0.2, 0.5, 0.8}) {
        const auto p = derive_chain_params(3, 0.6, 0.9, 4);
        const auto mdp = build_aoii_token_mdp(p, {alpha, 2});
        EXPECT_NEAR(rvia(mdp, cfg).J, enumerate_optimal_policy(mdp).J, 1e-6);
    }
}
