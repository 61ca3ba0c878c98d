#pragma once

// Monte Carlo evaluation of deterministic, randomized and baseline policies.

#include "freshness/aoii.hpp"
#include "freshness/errors.hpp"
#include "freshness/evaluation.hpp"
#include "freshness/lagrangian.hpp"
#include "freshness/mdp.hpp"
#include "freshness/two_rate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <variant>
#include <vector>

namespace freshness::sim {

struct SimConfig {
    std::size_t horizon = 20000;
    std::size_t runs = 400;
    std::uint64_t seed = 1;
    std::size_t burn_in = 0;       // slots simulated before averaging starts
    unsigned threads = 0;          // 0: hardware concurrency
    std::size_t trace_runs = 0;    // per-slot rows are kept for the first trace_runs runs

    void validate() const {
        if (horizon < 1) throw Error(ErrorKind::InvalidInput, "horizon T must be >= 1");
        if (runs < 1) throw Error(ErrorKind::InvalidInput, "runs must be >= 1");
    }
};

struct SimResult {
    double avg_cost = 0.0;
    double rate0 = 0.0;         // updates in context-0 slots per slot
    double rate1 = 0.0;         // updates in context-1 slots per slot
    double total_rate = 0.0;
    double stderr_cost = 0.0;
    double stderr_rate0 = 0.0;
    double stderr_rate1 = 0.0;
    double stderr_total = 0.0;
};

enum class BaselineKind { UniformTwoRate, RandomTwoRate, NeverUpdate, GreedyToken };

inline std::string to_string(BaselineKind k) {
    switch (k) {
    case BaselineKind::UniformTwoRate: return "uniform";
    case BaselineKind::RandomTwoRate: return "random";
    case BaselineKind::NeverUpdate: return "never";
    case BaselineKind::GreedyToken: return "greedy";
    }
    return "?";
}

struct Baseline {
    BaselineKind kind = BaselineKind::NeverUpdate;
    double alpha_min = 0.0;   // per-slot rate in context 0
    double alpha_max = 0.0;   // per-slot rate in context 1
};

/// Finite mixture of deterministic policies, one drawn per run at t = 0.
struct RandomizedPolicy {
    std::vector<Policy> policies;
    std::vector<double> weights;
};

inline RandomizedPolicy randomized(const MixedPolicy& m) {
    const auto w = m.weights();
    return {{m.policies.begin(), m.policies.end()}, {w.begin(), w.end()}};
}

inline RandomizedPolicy randomized(const TwoPolicyMixture& m) {
    return {{m.plus.policy, m.minus.policy}, {m.mu, 1.0 - m.mu}};
}

using DecisionSource = std::variant<Policy, RandomizedPolicy, Baseline>;

/// A model prepared for simulation: the kernel, the context bit of every
/// state (request bit, or 0 when there is none) and the state columns of
/// the trace output.
struct SimModel {
    FiniteMdp mdp;
    std::vector<std::uint8_t> context;
    StateIndex initial = 0;
    std::string trace_header;                                   // columns between t and action
    std::function<void(std::ostream&, StateIndex)> describe;    // writes those columns
};

inline SimModel aoii_token_model(const aoii::AoiiParams& p, const aoii::TokenParams& t) {
    const auto layout = aoii::token_layout(p, t);
    SimModel m{aoii::build_aoii_token_mdp(p, t), std::vector<std::uint8_t>(layout.size(), 0), layout.index(0, 0),
               "b,delta", nullptr};
    m.describe = [layout](std::ostream& os, StateIndex s) { os << layout.tokens(s) << ',' << layout.age(s); };
    return m;
}

/// Token-free AoII chain; the b column is left empty.
inline SimModel aoii_plain_model(const aoii::AoiiParams& p) {
    const auto n = static_cast<std::size_t>(p.delta_max + 1);
    SimModel m{aoii::build_aoii_lagrangian_mdp(p, 0.0), std::vector<std::uint8_t>(n, 0), 0, "b,delta", nullptr};
    m.describe = [](std::ostream& os, StateIndex s) { os << ',' << s; };
    return m;
}

inline SimModel two_rate_token_model(const two_rate::TwoRateParams& p) {
    const auto layout = two_rate::token_layout(p);
    SimModel m{two_rate::build_two_rate_token_mdp(p), {}, layout.index(0, 0, 1, 0), "b0,b1,delta,r", nullptr};
    m.context.resize(layout.size());
    for (StateIndex s = 0; s < layout.size(); ++s) m.context[s] = static_cast<std::uint8_t>(layout.request(s));
    m.describe = [layout](std::ostream& os, StateIndex s) {
        os << layout.tokens0(s) << ',' << layout.tokens1(s) << ',' << layout.age(s) << ',' << layout.request(s);
    };
    return m;
}

/// Token-free (delta, r) chain; the b0, b1 columns are left empty.
inline SimModel two_rate_plain_model(const two_rate::TwoRateParams& p) {
    const auto layout = two_rate::plain_layout(p);
    SimModel m{two_rate::build_two_rate_lagrangian_mdp(p, {}), {}, layout.index(1, 0), "b0,b1,delta,r", nullptr};
    m.context.resize(layout.size());
    for (StateIndex s = 0; s < layout.size(); ++s) m.context[s] = static_cast<std::uint8_t>(layout.request(s));
    m.describe = [layout](std::ostream& os, StateIndex s) {
        os << ",," << layout.age(s) << ',' << layout.request(s);
    };
    return m;
}

/// Where each run starts: the model's fixed initial state, or a draw from
/// the stationary distribution of the (drawn) deterministic policy, which
/// removes start-up bias from the time averages.
enum class StartMode { Fixed, Stationary };

namespace detail {

/// Uniform on [0, 1) from the top 53 bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::mt19937_64 run_stream(std::uint64_t seed, std::size_t run) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(std::uint64_t{run} >> 32)};
    return std::mt19937_64(seq);
}

inline std::size_t sample_index(const std::vector<double>& weights, double u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return i;
    }
    // Rounding leaves u just above the total; take the last positive weight.
    for (std::size_t i = weights.size(); i-- > 0;)
        if (weights[i] > 0.0) return i;
    return 0;
}

inline StateIndex sample_successor(const FiniteMdp& mdp, StateIndex s, Action a, double u) {
    const auto succ = mdp.successors(s, a);
    double acc = 0.0;
    for (const auto& t : succ) {
        acc += t.prob;
        if (u < acc) return t.next;
    }
    return succ.back().next;
}

struct RunStats {
    double cost = 0.0;
    double rate0 = 0.0;
    double rate1 = 0.0;
    std::string trace;
};

inline void check_policy(const SimModel& model, const Policy& policy) {
    if (policy.size() != model.mdp.n_states())
        throw Error(ErrorKind::LayoutMismatch, "policy has " + std::to_string(policy.size()) +
                                                   " entries but the model has " +
                                                   std::to_string(model.mdp.n_states()) + " states");
    if (!model.mdp.respects_mask(policy))
        throw Error(ErrorKind::LayoutMismatch, "policy selects an action masked out by the model");
}

} // namespace detail

/// Runs cfg.runs independent trajectories of cfg.horizon slots. Run k draws
/// from its own generator seeded by (cfg.seed, k), so results do not depend
/// on thread count. Per-run averages are reduced in run order; standard
/// errors are over runs.
inline SimResult simulate(const SimModel& model, const DecisionSource& source, const SimConfig& cfg,
                          StartMode start = StartMode::Fixed, std::ostream* trace = nullptr) {
    cfg.validate();
    const FiniteMdp& mdp = model.mdp;
    if (model.context.size() != mdp.n_states())
        throw Error(ErrorKind::LayoutMismatch, "context vector does not match the model");

    // Deterministic components and, for stationary starts, their
    // stationary distributions.
    std::vector<Policy> components;
    std::vector<double> component_weights;
    const Baseline* baseline = std::get_if<Baseline>(&source);
    if (const auto* p = std::get_if<Policy>(&source)) {
        components = {*p};
        component_weights = {1.0};
    } else if (const auto* r = std::get_if<RandomizedPolicy>(&source)) {
        if (r->policies.empty() || r->policies.size() != r->weights.size())
            throw Error(ErrorKind::InvalidInput, "randomized policy needs one weight per component");
        components = r->policies;
        component_weights = r->weights;
    }
    for (const auto& pol : components) detail::check_policy(model, pol);
    if (baseline && start == StartMode::Stationary)
        throw Error(ErrorKind::InvalidInput, "stationary starts need a deterministic policy or a mixture of them");

    std::vector<std::vector<double>> start_dist;
    if (start == StartMode::Stationary)
        for (std::size_t k = 0; k < components.size(); ++k)
            start_dist.push_back(component_weights[k] > 0.0 ? stationary_distribution(mdp, components[k])
                                                            : std::vector<double>{});

    auto one_run = [&](std::size_t run) {
        auto rng = detail::run_stream(cfg.seed, run);
        std::size_t component = 0;
        if (components.size() > 1) component = detail::sample_index(component_weights, detail::uniform01(rng));
        StateIndex s = model.initial;
        if (start == StartMode::Stationary) s = detail::sample_index(start_dist[component], detail::uniform01(rng));

        const bool tracing = trace != nullptr && run < cfg.trace_runs;
        std::ostringstream rows;
        double credit[2] = {0.0, 0.0};
        detail::RunStats stats;
        const std::size_t total = cfg.burn_in + cfg.horizon;
        for (std::size_t t = 0; t < total; ++t) {
            const int r = model.context[s];
            Action a = kIdle;
            if (!baseline) {
                a = components[component][s];
            } else {
                const double rate = r == 0 ? baseline->alpha_min : baseline->alpha_max;
                switch (baseline->kind) {
                case BaselineKind::UniformTwoRate:
                    credit[r] += rate;
                    if (credit[r] >= 1.0 - 1e-12) {
                        credit[r] -= 1.0;
                        a = kUpdate;
                    }
                    break;
                case BaselineKind::RandomTwoRate: a = detail::uniform01(rng) < rate ? kUpdate : kIdle; break;
                case BaselineKind::NeverUpdate: a = kIdle; break;
                case BaselineKind::GreedyToken: a = kUpdate; break;
                }
                if (!mdp.allowed(s, a)) a = kIdle;
            }
            const double cost = mdp.cost(s, a);
            if (t >= cfg.burn_in) {
                stats.cost += cost;
                if (a == kUpdate) (r == 0 ? stats.rate0 : stats.rate1) += 1.0;
            }
            if (tracing) {
                rows << run << ',' << t << ',';
                model.describe(rows, s);
                rows << ',' << a << ',' << cost << '\n';
            }
            s = detail::sample_successor(mdp, s, a, detail::uniform01(rng));
        }
        const auto h = static_cast<double>(cfg.horizon);
        stats.cost /= h;
        stats.rate0 /= h;
        stats.rate1 /= h;
        if (tracing) stats.trace = rows.str();
        return stats;
    };

    std::vector<detail::RunStats> per_run(cfg.runs);
    unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.runs));
    if (workers <= 1) {
        for (std::size_t k = 0; k < cfg.runs; ++k) per_run[k] = one_run(k);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> failures(workers);
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t k = w; k < cfg.runs; k += workers) per_run[k] = one_run(k);
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        for (auto& th : pool) th.join();
        for (auto& f : failures)
            if (f) std::rethrow_exception(f);
    }

    if (trace) {
        *trace << "run,t," << model.trace_header << ",action,cost\n";
        for (const auto& st : per_run) *trace << st.trace;
    }

    auto mean_and_stderr = [&](auto field) {
        double sum = 0.0;
        for (const auto& st : per_run) sum += field(st);
        const double n = static_cast<double>(per_run.size());
        const double mean = sum / n;
        if (per_run.size() < 2) return std::pair{mean, 0.0};
        double ss = 0.0;
        for (const auto& st : per_run) ss += (field(st) - mean) * (field(st) - mean);
        return std::pair{mean, std::sqrt(ss / (n - 1.0) / n)};
    };
    SimResult out;
    std::tie(out.avg_cost, out.stderr_cost) = mean_and_stderr([](const detail::RunStats& x) { return x.cost; });
    std::tie(out.rate0, out.stderr_rate0) = mean_and_stderr([](const detail::RunStats& x) { return x.rate0; });
    std::tie(out.rate1, out.stderr_rate1) = mean_and_stderr([](const detail::RunStats& x) { return x.rate1; });
    std::tie(out.total_rate, out.stderr_total) =
        mean_and_stderr([](const detail::RunStats& x) { return x.rate0 + x.rate1; });
    return out;
}

} // namespace freshness::sim
