#pragma once

// Experiment families: parameter sweeps comparing token-based, constrained
// and baseline policies, plus single-instance solve and simulate commands.

#include "freshness/aoii.hpp"
#include "freshness/cmdp.hpp"
#include "freshness/config.hpp"
#include "freshness/evaluation.hpp"
#include "freshness/sim.hpp"
#include "freshness/two_rate.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace freshness::experiments {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

/// Process exit code for an error kind.
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::ParseError:
    case ErrorKind::ValidationError:
    case ErrorKind::InvalidParams: return 2;
    case ErrorKind::NonConvergence: return 3;
    case ErrorKind::NotFound:
    case ErrorKind::MaxIterations:
    case ErrorKind::PatternNotFound:
    case ErrorKind::NoSolution:
    case ErrorKind::InvalidBracket:
    case ErrorKind::DegenerateTriangle: return 4;
    default: return 1;
    }
}

/// Fixed column set of each family's CSV.
inline std::string csv_header(const ExperimentSpec& spec) {
    switch (spec.family) {
    case Family::AoiiSweepAlpha: return "alpha,bmax,method,J_exact,J_sim,rate_sim,stderr";
    case Family::AoiiSweepPr: return "p_R,bmax,method,J_exact,J_sim,rate_sim,stderr";
    case Family::Aoi2SweepQ: return "q,bmax,method,J_exact,J_sim,rate0_sim,rate1_sim,stderr";
    case Family::Aoi2SweepAlphaMax: return "alpha_max,bmax,method,J_exact,J_sim,rate0_sim,rate1_sim,stderr";
    case Family::Aoi2GapBmax: return "q,bmax,J_token,J_cmdp,gap";
    case Family::Solve:
        if (spec.resolved_model() == ModelKind::Aoii)
            return spec.method == "token" ? "b,delta,action" : "component,weight,delta,action";
        return spec.method == "token" ? "b0,b1,delta,r,action" : "component,weight,delta,r,action";
    case Family::Simulate: return "model,method,bmax,J_sim,rate0_sim,rate1_sim,stderr";
    }
    return {};
}

/// Exact long-run cost of the stationary randomized policy that updates in
/// state s with probability p_update[s].
inline double randomized_average_cost(const FiniteMdp& mdp, const std::vector<double>& p_update) {
    MdpBuilder builder(mdp.n_states(), 1);
    for (StateIndex s = 0; s < mdp.n_states(); ++s) {
        const double p = mdp.allowed(s, kUpdate) ? p_update[s] : 0.0;
        std::vector<Transition> row;
        double cost = 0.0;
        for (Action a : {kIdle, kUpdate}) {
            const double w = a == kUpdate ? p : 1.0 - p;
            if (w == 0.0) continue;
            cost += w * mdp.cost(s, a);
            for (const auto& t : mdp.successors(s, a)) row.push_back({t.next, w * t.prob});
        }
        builder.set_row(s, 0, cost, std::move(row));
    }
    return average_cost(builder.build(), Policy(mdp.n_states(), 0));
}

namespace detail {

struct Emitter {
    std::ostream& csv;

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) csv << ',';
            csv << fields[i];
        }
        csv << '\n';
        csv.flush();
    }
};

/// Re-raises with the grid point prepended, keeping the error kind.
template <class F>
void at_point(const std::string& where, F&& f) {
    try {
        f();
    } catch (const Error& e) {
        throw Error(e.kind(), where + ": " + e.message());
    }
}

inline aoii::AoiiParams aoii_params(const ExperimentSpec& spec, double p_stay) {
    return aoii::derive_chain_params(spec.source_states, p_stay, spec.p_success, spec.delta_max);
}

inline two_rate::TwoRateParams two_rate_params(const ExperimentSpec& spec, double q, double alpha_max, int b_max) {
    return two_rate::make_params(q, spec.alpha_min, alpha_max, spec.delta_max, b_max);
}

inline void run_aoii_sweep(const ExperimentSpec& spec, Emitter& out, std::ostream& summary) {
    const bool by_alpha = spec.family == Family::AoiiSweepAlpha;
    for (double v : spec.grid) {
        const double p_stay = by_alpha ? spec.p_stay : v;
        const double alpha = by_alpha ? v : spec.alpha;
        const std::string x = fmt(v);
        const std::string name = by_alpha ? "alpha" : "p_R";
        const auto p = aoii_params(spec, p_stay);
        for (int b : spec.bmax) {
            at_point(name + "=" + x + ", bmax=" + std::to_string(b), [&] {
                const aoii::TokenParams tp{alpha, b};
                const auto model = sim::aoii_token_model(p, tp);
                const auto sol = rvia(model.mdp, spec.solver);
                const double exact = average_cost(model.mdp, sol.policy);
                std::vector<std::string> row{x, std::to_string(b), "token", fmt(exact), "", "", ""};
                if (spec.simulate) {
                    const auto s = sim::simulate(model, sol.policy, spec.sim, sim::StartMode::Stationary);
                    row[4] = fmt(s.avg_cost);
                    row[5] = fmt(s.total_rate);
                    row[6] = fmt(s.stderr_cost);
                }
                out.row(row);
            });
        }
        at_point(name + "=" + x + ", cmdp", [&] {
            const auto c = solve_aoii_cmdp(p, alpha, spec.solver, spec.search.eps_bisection);
            std::vector<std::string> row{x, "", "cmdp", fmt(c.J), "", "", ""};
            if (spec.simulate) {
                const auto model = sim::aoii_plain_model(p);
                const auto s =
                    sim::simulate(model, sim::randomized(c.mixture), spec.sim, sim::StartMode::Stationary);
                row[4] = fmt(s.avg_cost);
                row[5] = fmt(s.total_rate);
                row[6] = fmt(s.stderr_cost);
            }
            out.row(row);
            summary << name << "=" << x << ": cmdp J=" << fmt(c.J) << " rate=" << fmt(c.rate)
                    << (c.binding ? "" : " (budget not binding)") << '\n';
        });
    }
}

inline void run_two_rate_sweep(const ExperimentSpec& spec, Emitter& out, std::ostream& summary) {
    const bool by_q = spec.family == Family::Aoi2SweepQ;
    const std::string name = by_q ? "q" : "alpha_max";
    for (double v : spec.grid) {
        const double q = by_q ? v : spec.q;
        const double amax = by_q ? spec.alpha_max : v;
        const std::string x = fmt(v);
        auto sim_fields = [&](const sim::SimResult& s) {
            return std::vector<std::string>{fmt(s.avg_cost), fmt(s.rate0), fmt(s.rate1), fmt(s.stderr_cost)};
        };
        auto emit = [&](const std::string& bmax, const std::string& method, const std::string& exact,
                        const std::function<sim::SimResult()>& run_sim) {
            std::vector<std::string> row{x, bmax, method, exact, "", "", "", ""};
            if (spec.simulate) {
                const auto f = sim_fields(run_sim());
                std::copy(f.begin(), f.end(), row.begin() + 4);
            }
            out.row(row);
        };
        for (int b : spec.bmax) {
            at_point(name + "=" + x + ", bmax=" + std::to_string(b), [&] {
                const auto p = two_rate_params(spec, q, amax, b);
                const auto model = sim::two_rate_token_model(p);
                const auto sol = rvia(model.mdp, spec.solver);
                emit(std::to_string(b), "token", fmt(average_cost(model.mdp, sol.policy)), [&] {
                    return sim::simulate(model, sol.policy, spec.sim, sim::StartMode::Stationary);
                });
            });
        }
        const auto p = two_rate_params(spec, q, amax, spec.bmax.front());
        const auto plain = sim::two_rate_plain_model(p);
        at_point(name + "=" + x + ", cmdp", [&] {
            const auto c = solve_two_rate_cmdp(p, spec.solver, spec.search);
            emit("", "cmdp", fmt(c.value.J), [&] {
                return sim::simulate(plain, sim::randomized(c.mixed), spec.sim, sim::StartMode::Stationary);
            });
            summary << name << "=" << x << ": cmdp J=" << fmt(c.value.J) << " c0=" << fmt(c.value.c0)
                    << " c1=" << fmt(c.value.c1) << " lambda*=(" << fmt(c.lambda_star.lambda0) << ","
                    << fmt(c.lambda_star.lambda1) << ") outer=" << c.outer_iterations << '\n';
        });
        at_point(name + "=" + x + ", baselines", [&] {
            emit("", "uniform", "", [&] {
                return sim::simulate(plain, sim::Baseline{sim::BaselineKind::UniformTwoRate, p.alpha_min, p.alpha_max},
                                     spec.sim);
            });
            std::vector<double> p_update(plain.mdp.n_states());
            for (StateIndex s = 0; s < p_update.size(); ++s)
                p_update[s] = plain.context[s] ? p.alpha_max : p.alpha_min;
            emit("", "random", fmt(randomized_average_cost(plain.mdp, p_update)), [&] {
                return sim::simulate(plain, sim::Baseline{sim::BaselineKind::RandomTwoRate, p.alpha_min, p.alpha_max},
                                     spec.sim);
            });
        });
    }
}

inline void run_gap(const ExperimentSpec& spec, Emitter& out, std::ostream& summary) {
    for (double q : spec.grid) {
        const std::string x = fmt(q);
        double j_cmdp = 0.0;
        at_point("q=" + x + ", cmdp", [&] {
            j_cmdp = solve_two_rate_cmdp(two_rate_params(spec, q, spec.alpha_max, 1), spec.solver, spec.search).value.J;
        });
        summary << "q=" << x << ": cmdp J=" << fmt(j_cmdp) << '\n';
        for (int b : spec.bmax) {
            at_point("q=" + x + ", bmax=" + std::to_string(b), [&] {
                const auto p = two_rate_params(spec, q, spec.alpha_max, b);
                const auto mdp = two_rate::build_two_rate_token_mdp(p);
                const double j = average_cost(mdp, rvia(mdp, spec.solver).policy);
                out.row({x, std::to_string(b), fmt(j), fmt(j_cmdp), fmt(j - j_cmdp)});
            });
        }
    }
}

inline void run_solve(const ExperimentSpec& spec, Emitter& out, std::ostream& summary) {
    const int b = spec.bmax.front();
    if (spec.resolved_model() == ModelKind::Aoii) {
        const auto p = aoii_params(spec, spec.p_stay);
        if (spec.method == "token") {
            const aoii::TokenParams tp{spec.alpha, b};
            const auto mdp = aoii::build_aoii_token_mdp(p, tp);
            const auto sol = rvia(mdp, spec.solver);
            const auto layout = aoii::token_layout(p, tp);
            for (StateIndex s = 0; s < layout.size(); ++s)
                out.row({std::to_string(layout.tokens(s)), std::to_string(layout.age(s)),
                         std::to_string(sol.policy[s])});
            const double rate =
                long_run_average(mdp, sol.policy, [](StateIndex, Action a) { return static_cast<double>(a); });
            summary << "J=" << fmt(average_cost(mdp, sol.policy)) << " rate=" << fmt(rate)
                    << " iterations=" << sol.n_iterations << '\n';
        } else {
            const auto c = solve_aoii_cmdp(p, spec.alpha, spec.solver, spec.search.eps_bisection);
            const auto& m = c.mixture;
            const std::pair<const Policy*, double> parts[] = {{&m.plus.policy, m.mu}, {&m.minus.policy, 1.0 - m.mu}};
            for (std::size_t k = 0; k < 2; ++k)
                for (StateIndex s = 0; s < parts[k].first->size(); ++s)
                    out.row({std::to_string(k), fmt(parts[k].second), std::to_string(s),
                             std::to_string((*parts[k].first)[s])});
            summary << "J=" << fmt(c.J) << " rate=" << fmt(c.rate) << " lambda*=" << fmt(m.lambda_star) << '\n';
        }
        return;
    }
    const auto p = two_rate_params(spec, spec.q, spec.alpha_max, b);
    if (spec.method == "token") {
        const auto mdp = two_rate::build_two_rate_token_mdp(p);
        const auto sol = rvia(mdp, spec.solver);
        const auto layout = two_rate::token_layout(p);
        for (StateIndex s = 0; s < layout.size(); ++s)
            out.row({std::to_string(layout.tokens0(s)), std::to_string(layout.tokens1(s)),
                     std::to_string(layout.age(s)), std::to_string(layout.request(s)), std::to_string(sol.policy[s])});
        const auto rates = two_rate::context_rates(mdp, sol.policy);
        summary << "J=" << fmt(average_cost(mdp, sol.policy)) << " c0=" << fmt(rates.c0 - p.alpha0)
                << " c1=" << fmt(rates.c1 - p.alpha1) << " iterations=" << sol.n_iterations << '\n';
        return;
    }
    const auto c = solve_two_rate_cmdp(p, spec.solver, spec.search);
    const auto layout = two_rate::plain_layout(p);
    const auto w = c.mixed.weights();
    for (std::size_t k = 0; k < 4; ++k)
        for (StateIndex s = 0; s < layout.size(); ++s)
            out.row({std::to_string(k), fmt(w[k]), std::to_string(layout.age(s)), std::to_string(layout.request(s)),
                     std::to_string(c.mixed.policies[k][s])});
    summary << "J=" << fmt(c.value.J) << " c0=" << fmt(c.value.c0) << " c1=" << fmt(c.value.c1) << " lambda*=("
            << fmt(c.lambda_star.lambda0) << "," << fmt(c.lambda_star.lambda1) << ") rho=(" << fmt(c.mixed.rho0)
            << "," << fmt(c.mixed.rho1) << ") outer=" << c.outer_iterations << '\n';
    if (!spec.trace_out.empty()) {
        std::ofstream tr(spec.trace_out);
        if (!tr) throw Error(ErrorKind::InvalidInput, "cannot write trace file '" + spec.trace_out + "'");
        tr << "iter,lambda0_A,lambda1_A,lambda0_B,lambda1_B,lambda0_C,lambda1_C,lambda0_E,lambda1_E,"
              "c0_A,c1_A,c0_B,c1_B,c0_C,c1_C,contains_origin\n";
        for (const auto& r : c.trace) {
            tr << r.iter;
            for (const auto& v : r.vertices) tr << ',' << fmt(v.lambda0) << ',' << fmt(v.lambda1);
            tr << ',' << fmt(r.centroid.lambda0) << ',' << fmt(r.centroid.lambda1);
            for (const auto& f : r.images) tr << ',' << fmt(f.c0) << ',' << fmt(f.c1);
            tr << ',' << (r.contains_origin ? 1 : 0) << '\n';
        }
    }
}

inline void run_simulate(const ExperimentSpec& spec, Emitter& out, std::ostream& summary) {
    const int b = spec.bmax.front();
    const bool aoii = spec.resolved_model() == ModelKind::Aoii;
    std::ofstream trace_file;
    std::ostream* trace = nullptr;
    if (!spec.trace_out.empty()) {
        trace_file.open(spec.trace_out);
        if (!trace_file) throw Error(ErrorKind::InvalidInput, "cannot write trace file '" + spec.trace_out + "'");
        trace = &trace_file;
    }
    sim::SimConfig cfg = spec.sim;
    if (trace && cfg.trace_runs == 0) cfg.trace_runs = 1;
    sim::SimResult r;
    const auto& m = spec.method;
    const auto start = sim::StartMode::Stationary;
    if (aoii) {
        const auto p = aoii_params(spec, spec.p_stay);
        const aoii::TokenParams tp{spec.alpha, b};
        if (m == "token") {
            const auto model = sim::aoii_token_model(p, tp);
            r = sim::simulate(model, rvia(model.mdp, spec.solver).policy, cfg, start, trace);
        } else if (m == "cmdp") {
            const auto c = solve_aoii_cmdp(p, spec.alpha, spec.solver, spec.search.eps_bisection);
            r = sim::simulate(sim::aoii_plain_model(p), sim::randomized(c.mixture), cfg, start, trace);
        } else {
            const auto kind = m == "never" ? sim::BaselineKind::NeverUpdate : sim::BaselineKind::GreedyToken;
            r = sim::simulate(sim::aoii_token_model(p, tp), sim::Baseline{kind, 0.0, 0.0}, cfg,
                              sim::StartMode::Fixed, trace);
        }
    } else {
        const auto p = two_rate_params(spec, spec.q, spec.alpha_max, b);
        if (m == "token") {
            const auto model = sim::two_rate_token_model(p);
            r = sim::simulate(model, rvia(model.mdp, spec.solver).policy, cfg, start, trace);
        } else if (m == "cmdp") {
            const auto c = solve_two_rate_cmdp(p, spec.solver, spec.search);
            r = sim::simulate(sim::two_rate_plain_model(p), sim::randomized(c.mixed), cfg, start, trace);
        } else {
            const auto kind = m == "uniform"  ? sim::BaselineKind::UniformTwoRate
                              : m == "random" ? sim::BaselineKind::RandomTwoRate
                              : m == "never"  ? sim::BaselineKind::NeverUpdate
                                              : sim::BaselineKind::GreedyToken;
            const auto model = kind == sim::BaselineKind::GreedyToken ? sim::two_rate_token_model(p)
                                                                       : sim::two_rate_plain_model(p);
            r = sim::simulate(model, sim::Baseline{kind, p.alpha_min, p.alpha_max}, cfg, sim::StartMode::Fixed,
                              trace);
        }
    }
    out.row({aoii ? "aoii" : "aoi2", m, std::to_string(b), fmt(r.avg_cost), fmt(r.rate0), fmt(r.rate1),
             fmt(r.stderr_cost)});
    summary << "J_sim=" << fmt(r.avg_cost) << " +- " << fmt(r.stderr_cost) << " rate0=" << fmt(r.rate0)
            << " rate1=" << fmt(r.rate1) << '\n';
}

} // namespace detail

/// Writes the provenance preamble, the header and one row per (grid value,
/// method) to `csv`; progress lines and the resolved spec go to `summary`.
/// Rows are flushed as they complete, so a failure keeps earlier rows.
inline void run_experiment(const ExperimentSpec& spec, std::ostream& csv, std::ostream& summary) {
    validate(spec);
    const auto settings = describe(spec);
    csv << "# freshness-mdp " << to_string(spec.family) << '\n';
    for (const auto& line : settings) csv << "# " << line << '\n';
    csv << csv_header(spec) << '\n';
    for (const auto& line : settings) summary << line << '\n';

    detail::Emitter out{csv};
    switch (spec.family) {
    case Family::AoiiSweepAlpha:
    case Family::AoiiSweepPr: detail::run_aoii_sweep(spec, out, summary); break;
    case Family::Aoi2SweepQ:
    case Family::Aoi2SweepAlphaMax: detail::run_two_rate_sweep(spec, out, summary); break;
    case Family::Aoi2GapBmax: detail::run_gap(spec, out, summary); break;
    case Family::Solve: detail::run_solve(spec, out, summary); break;
    case Family::Simulate: detail::run_simulate(spec, out, summary); break;
    }
}

} // namespace freshness::experiments
