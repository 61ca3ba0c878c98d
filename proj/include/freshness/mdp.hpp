#pragma once

#include "freshness/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace freshness {

using StateIndex = std::size_t;
using Action = std::uint32_t;
using Policy = std::vector<Action>;

inline constexpr Action kIdle = 0;
inline constexpr Action kUpdate = 1;

inline constexpr double kRowSumTolerance = 1e-12;

struct Transition {
    StateIndex next = 0;
    double prob = 0.0;
};

/// Finite average-cost MDP with sparse successor lists.
///
/// Rows are stored per (state, action) pair in compressed form. A row is
/// either allowed (non-empty, probabilities summing to one) or masked out.
/// Instances are immutable once built; use MdpBuilder to create them.
class FiniteMdp {
public:
    FiniteMdp() = default;

    std::size_t n_states() const noexcept { return n_states_; }
    std::size_t n_actions() const noexcept { return n_actions_; }

    bool allowed(StateIndex s, Action a) const { return allowed_[row(s, a)] != 0; }
    double cost(StateIndex s, Action a) const { return cost_[row(s, a)]; }

    std::span<const Transition> successors(StateIndex s, Action a) const {
        const std::size_t r = row(s, a);
        return {transitions_.data() + offsets_[r], offsets_[r + 1] - offsets_[r]};
    }

    std::size_t n_transitions() const noexcept { return transitions_.size(); }

    std::vector<Action> allowed_actions(StateIndex s) const {
        std::vector<Action> out;
        for (Action a = 0; a < n_actions_; ++a)
            if (allowed(s, a)) out.push_back(a);
        return out;
    }

    bool respects_mask(const Policy& policy) const {
        if (policy.size() != n_states_) return false;
        for (StateIndex s = 0; s < n_states_; ++s)
            if (policy[s] >= n_actions_ || !allowed(s, policy[s])) return false;
        return true;
    }

private:
    friend class MdpBuilder;

    std::size_t row(StateIndex s, Action a) const { return s * n_actions_ + a; }

    std::size_t n_states_ = 0;
    std::size_t n_actions_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<Transition> transitions_;
    std::vector<double> cost_;
    std::vector<std::uint8_t> allowed_;
};

/// Collects rows and validates them into a FiniteMdp. Duplicate successors
/// within a row are merged, so saturating updates (min with a cap) can be
/// added naively.
class MdpBuilder {
public:
    MdpBuilder(std::size_t n_states, std::size_t n_actions)
        : n_states_(n_states), n_actions_(n_actions), rows_(n_states * n_actions),
          cost_(n_states * n_actions, 0.0), allowed_(n_states * n_actions, 0) {
        if (n_states == 0 || n_actions == 0)
            throw Error(ErrorKind::InvalidInput, "MDP needs at least one state and one action");
    }

    /// Marks (s, a) as allowed with the given cost and successor distribution.
    MdpBuilder& set_row(StateIndex s, Action a, double cost, std::vector<Transition> succ) {
        check_index(s, a);
        const std::size_t r = s * n_actions_ + a;
        std::vector<Transition> merged;
        merged.reserve(succ.size());
        for (const auto& t : succ) {
            if (t.next >= n_states_)
                throw Error(ErrorKind::InvalidInput, "successor index out of range in row " + describe(s, a));
            if (t.prob == 0.0) continue;
            auto it = std::find_if(merged.begin(), merged.end(),
                                   [&](const Transition& m) { return m.next == t.next; });
            if (it == merged.end())
                merged.push_back(t);
            else
                it->prob += t.prob;
        }
        std::sort(merged.begin(), merged.end(),
                  [](const Transition& x, const Transition& y) { return x.next < y.next; });
        rows_[r] = std::move(merged);
        cost_[r] = cost;
        allowed_[r] = 1;
        return *this;
    }

    MdpBuilder& mask(StateIndex s, Action a) {
        check_index(s, a);
        const std::size_t r = s * n_actions_ + a;
        rows_[r].clear();
        cost_[r] = 0.0;
        allowed_[r] = 0;
        return *this;
    }

    FiniteMdp build() const {
        FiniteMdp mdp;
        mdp.n_states_ = n_states_;
        mdp.n_actions_ = n_actions_;
        mdp.offsets_.assign(rows_.size() + 1, 0);
        std::size_t nnz = 0;
        for (const auto& r : rows_) nnz += r.size();
        mdp.transitions_.reserve(nnz);

        for (StateIndex s = 0; s < n_states_; ++s) {
            bool any = false;
            for (Action a = 0; a < n_actions_; ++a) {
                const std::size_t r = s * n_actions_ + a;
                if (!allowed_[r]) continue;
                any = true;
                if (!std::isfinite(cost_[r]) || cost_[r] < 0.0)
                    throw Error(ErrorKind::InvalidInput, "cost must be finite and nonnegative in row " + describe(s, a));
                double sum = 0.0;
                for (const auto& t : rows_[r]) {
                    if (!(t.prob >= 0.0 && t.prob <= 1.0))
                        throw Error(ErrorKind::InvalidInput, "probability outside [0,1] in row " + describe(s, a));
                    sum += t.prob;
                }
                if (std::abs(sum - 1.0) > kRowSumTolerance)
                    throw Error(ErrorKind::InvalidInput, "row " + describe(s, a) + " sums to " + std::to_string(sum));
            }
            if (!any)
                throw Error(ErrorKind::InvalidInput, "state " + std::to_string(s) + " has no allowed action");
        }

        for (std::size_t r = 0; r < rows_.size(); ++r) {
            mdp.offsets_[r] = mdp.transitions_.size();
            mdp.transitions_.insert(mdp.transitions_.end(), rows_[r].begin(), rows_[r].end());
        }
        mdp.offsets_[rows_.size()] = mdp.transitions_.size();
        mdp.cost_ = cost_;
        mdp.allowed_ = allowed_;
        return mdp;
    }

private:
    void check_index(StateIndex s, Action a) const {
        if (s >= n_states_ || a >= n_actions_)
            throw Error(ErrorKind::InvalidInput, "row index out of range: " + describe(s, a));
    }

    static std::string describe(StateIndex s, Action a) {
        return "(" + std::to_string(s) + ", " + std::to_string(a) + ")";
    }

    std::size_t n_states_;
    std::size_t n_actions_;
    std::vector<std::vector<Transition>> rows_;
    std::vector<double> cost_;
    std::vector<std::uint8_t> allowed_;
};

} // namespace freshness
