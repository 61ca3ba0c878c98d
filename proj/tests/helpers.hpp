#pragma once

#include "freshness/mdp.hpp"

#include <random>
#include <vector>

namespace testing_support {

using namespace freshness;

/// Random MDP with every state reachable from every other under action 0
/// (a ring edge is always present), so every policy that keeps the ring is
/// unichain. Action 1 is masked with probability 1/4.
inline FiniteMdp random_mdp(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    MdpBuilder b(n, 2);
    for (StateIndex s = 0; s < n; ++s) {
        for (Action a : {kIdle, kUpdate}) {
            if (a == kUpdate && u(rng) < 0.25) continue;
            std::vector<Transition> succ;
            double w_ring = 0.2 + u(rng);
            succ.push_back({(s + 1) % n, w_ring});
            double total = w_ring;
            for (int k = 0; k < 2; ++k) {
                const double w = u(rng);
                succ.push_back({static_cast<StateIndex>(rng() % n), w});
                total += w;
            }
            for (auto& t : succ) t.prob /= total;
            b.set_row(s, a, 10.0 * u(rng), std::move(succ));
        }
    }
    return b.build();
}

} // namespace testing_support
