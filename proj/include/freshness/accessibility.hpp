#pragma once

#include "freshness/graph.hpp"
#include "freshness/mdp.hpp"

namespace freshness {

/// True iff the chain under the uniformly randomized policy has exactly one
/// closed communicating class (every other state is transient).
inline bool check_weak_accessibility(const FiniteMdp& mdp) {
    graph::Digraph g(mdp.n_states());
    for (StateIndex s = 0; s < mdp.n_states(); ++s)
        for (Action a = 0; a < mdp.n_actions(); ++a) {
            if (!mdp.allowed(s, a)) continue;
            for (const auto& t : mdp.successors(s, a)) g[s].push_back(t.next);
        }
    const auto comps = graph::strongly_connected(g);
    return graph::closed_components(g, comps).size() == 1;
}

} // namespace freshness
