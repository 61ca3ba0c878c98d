#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

namespace freshness::graph {

/// Adjacency lists over vertices 0..n-1.
using Digraph = std::vector<std::vector<std::size_t>>;

struct Components {
    std::vector<std::size_t> component_of; // vertex -> component id
    std::size_t count = 0;
};

/// Strongly connected components (iterative Tarjan, no recursion so large
/// chains do not blow the stack).
inline Components strongly_connected(const Digraph& g) {
    constexpr std::size_t kUnvisited = std::numeric_limits<std::size_t>::max();
    const std::size_t n = g.size();
    std::vector<std::size_t> index(n, kUnvisited), low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    Components out;
    out.component_of.assign(n, kUnvisited);
    std::size_t next_index = 0;

    struct Frame {
        std::size_t v;
        std::size_t edge;
    };
    std::vector<Frame> call;

    for (std::size_t root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        call.push_back({root, 0});
        index[root] = low[root] = next_index++;
        stack.push_back(root);
        on_stack[root] = 1;

        while (!call.empty()) {
            Frame& f = call.back();
            const std::size_t v = f.v;
            if (f.edge < g[v].size()) {
                const std::size_t w = g[v][f.edge++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = next_index++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    call.push_back({w, 0});
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            if (low[v] == index[v]) {
                std::size_t w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    out.component_of[w] = out.count;
                } while (w != v);
                ++out.count;
            }
            call.pop_back();
            if (!call.empty()) {
                const std::size_t parent = call.back().v;
                low[parent] = std::min(low[parent], low[v]);
            }
        }
    }
    return out;
}

/// Component ids with no edge leaving the component (closed classes).
inline std::vector<std::size_t> closed_components(const Digraph& g, const Components& c) {
    std::vector<char> leaks(c.count, 0);
    for (std::size_t v = 0; v < g.size(); ++v)
        for (std::size_t w : g[v])
            if (c.component_of[w] != c.component_of[v]) leaks[c.component_of[v]] = 1;
    std::vector<std::size_t> closed;
    for (std::size_t k = 0; k < c.count; ++k)
        if (!leaks[k]) closed.push_back(k);
    return closed;
}

} // namespace freshness::graph
