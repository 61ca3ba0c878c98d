#pragma once

// Experiment specification and its line-oriented `key = value` file format.

#include "freshness/errors.hpp"
#include "freshness/lagrangian.hpp"
#include "freshness/sim.hpp"
#include "freshness/solver.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace freshness::experiments {

enum class Family { AoiiSweepAlpha, AoiiSweepPr, Aoi2SweepQ, Aoi2SweepAlphaMax, Aoi2GapBmax, Solve, Simulate };

inline constexpr std::pair<Family, std::string_view> kFamilyNames[] = {
    {Family::AoiiSweepAlpha, "aoii-sweep-alpha"},     {Family::AoiiSweepPr, "aoii-sweep-pr"},
    {Family::Aoi2SweepQ, "aoi2-sweep-q"},             {Family::Aoi2SweepAlphaMax, "aoi2-sweep-alphamax"},
    {Family::Aoi2GapBmax, "aoi2-gap-bmax"},           {Family::Solve, "solve"},
    {Family::Simulate, "simulate"}};

inline std::string to_string(Family f) {
    for (auto [fam, name] : kFamilyNames)
        if (fam == f) return std::string(name);
    return "?";
}

inline std::optional<Family> parse_family(std::string_view s) {
    for (auto [fam, name] : kFamilyNames)
        if (name == s) return fam;
    return std::nullopt;
}

enum class ModelKind { Aoii, TwoRate };

inline bool is_aoii(Family f) { return f == Family::AoiiSweepAlpha || f == Family::AoiiSweepPr; }

struct ExperimentSpec {
    Family family = Family::Solve;
    ModelKind model = ModelKind::TwoRate;   // solve / simulate only; sweeps imply it
    std::string method = "token";           // solve / simulate only

    // AoII source and channel
    int source_states = 8;
    double p_stay = 0.5;
    double p_success = 1.0;
    double alpha = 0.1;

    // two-rate requests and budgets
    double q = 0.2;
    double alpha_min = 0.1;
    double alpha_max = 0.5;

    int delta_max = 20;
    std::vector<double> grid;
    std::vector<int> bmax;

    SolverConfig solver;
    SearchConfig search;
    sim::SimConfig sim;
    bool simulate = true;          // sweeps: also run Monte Carlo columns

    std::string out;               // CSV path; empty writes to stdout
    std::string trace_out;         // search trace (solve) or slot trace (simulate)

    ModelKind resolved_model() const {
        if (is_aoii(family)) return ModelKind::Aoii;
        if (family == Family::Solve || family == Family::Simulate) return model;
        return ModelKind::TwoRate;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string where(int line) { return line > 0 ? "line " + std::to_string(line) + ": " : "override: "; }

template <class T>
T parse_number(const std::string& text, const std::string& key, int line) {
    T value{};
    const char* first = text.data();
    const char* last = first + text.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last || text.empty())
        throw Error(ErrorKind::ParseError, where(line) + "cannot parse '" + text + "' as a number for '" + key + "'");
    return value;
}

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& key, int line) {
    std::vector<T> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_number<T>(trim(item), key, line));
    if (out.empty()) throw Error(ErrorKind::ParseError, where(line) + "empty list for '" + key + "'");
    return out;
}

inline bool parse_bool(const std::string& text, const std::string& key, int line) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw Error(ErrorKind::ParseError, where(line) + "expected true/false for '" + key + "', got '" + text + "'");
}

} // namespace detail

/// Sets one key; `line` is the file line (0 for command-line overrides).
inline void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value, int line) {
    using detail::parse_number;
    if (key == "family") {
        const auto f = parse_family(value);
        if (!f) throw Error(ErrorKind::ParseError, detail::where(line) + "unknown family '" + value + "'");
        spec.family = *f;
    } else if (key == "model") {
        if (value == "aoii") spec.model = ModelKind::Aoii;
        else if (value == "aoi2") spec.model = ModelKind::TwoRate;
        else throw Error(ErrorKind::ParseError, detail::where(line) + "model must be aoii or aoi2, got '" + value + "'");
    } else if (key == "method") {
        spec.method = value;
    } else if (key == "N") {
        spec.source_states = parse_number<int>(value, key, line);
    } else if (key == "p_R") {
        spec.p_stay = parse_number<double>(value, key, line);
    } else if (key == "p_s") {
        spec.p_success = parse_number<double>(value, key, line);
    } else if (key == "alpha") {
        spec.alpha = parse_number<double>(value, key, line);
    } else if (key == "q") {
        spec.q = parse_number<double>(value, key, line);
    } else if (key == "alpha_min") {
        spec.alpha_min = parse_number<double>(value, key, line);
    } else if (key == "alpha_max") {
        spec.alpha_max = parse_number<double>(value, key, line);
    } else if (key == "delta_max") {
        spec.delta_max = parse_number<int>(value, key, line);
    } else if (key == "grid") {
        spec.grid = detail::parse_list<double>(value, key, line);
    } else if (key == "bmax") {
        spec.bmax = detail::parse_list<int>(value, key, line);
    } else if (key == "eps_V") {
        spec.solver.eps_v = parse_number<double>(value, key, line);
    } else if (key == "max_iterations") {
        spec.solver.max_iterations = parse_number<std::size_t>(value, key, line);
    } else if (key == "eps_lambda") {
        spec.search.eps_lambda = parse_number<double>(value, key, line);
    } else if (key == "gamma") {
        spec.search.gamma = parse_number<double>(value, key, line);
    } else if (key == "max_outer") {
        spec.search.max_outer = parse_number<std::size_t>(value, key, line);
    } else if (key == "restarts") {
        spec.search.restarts = parse_number<std::size_t>(value, key, line);
    } else if (key == "T") {
        spec.sim.horizon = parse_number<std::size_t>(value, key, line);
    } else if (key == "runs") {
        spec.sim.runs = parse_number<std::size_t>(value, key, line);
    } else if (key == "seed") {
        spec.sim.seed = parse_number<std::uint64_t>(value, key, line);
    } else if (key == "burn_in") {
        spec.sim.burn_in = parse_number<std::size_t>(value, key, line);
    } else if (key == "threads") {
        spec.sim.threads = parse_number<unsigned>(value, key, line);
    } else if (key == "trace_runs") {
        spec.sim.trace_runs = parse_number<std::size_t>(value, key, line);
    } else if (key == "simulate") {
        spec.simulate = detail::parse_bool(value, key, line);
    } else if (key == "out") {
        spec.out = value;
    } else if (key == "trace_out") {
        spec.trace_out = value;
    } else {
        throw Error(ErrorKind::ParseError, detail::where(line) + "unknown key '" + key + "'");
    }
}

/// Parses `key = value` lines; `#` starts a comment. Keys set in the text
/// are recorded in `seen` when given.
inline void apply_config_text(ExperimentSpec& spec, std::istream& in, std::vector<std::string>* seen = nullptr) {
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string text = detail::trim(std::string_view(raw).substr(0, hash));
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::ParseError, detail::where(line) + "expected 'key = value', got '" + text + "'");
        const std::string key = detail::trim(std::string_view(text).substr(0, eq));
        const std::string value = detail::trim(std::string_view(text).substr(eq + 1));
        if (key.empty()) throw Error(ErrorKind::ParseError, detail::where(line) + "missing key before '='");
        apply_setting(spec, key, value, line);
        if (seen) seen->push_back(key);
    }
}

/// Grids and b_max lists of the published figures, used when the file
/// leaves them out.
inline void fill_defaults(ExperimentSpec& spec, const std::vector<std::string>& seen) {
    auto given = [&](const char* key) { return std::find(seen.begin(), seen.end(), key) != seen.end(); };
    auto steps = [](double from, double to, double step) {
        std::vector<double> v;
        const int n = static_cast<int>(std::lround((to - from) / step));
        for (int i = 0; i <= n; ++i) v.push_back(std::round((from + i * step) * 1e9) / 1e9);
        return v;
    };
    if (!given("delta_max")) spec.delta_max = spec.resolved_model() == ModelKind::Aoii ? 30 : 20;
    if (!given("grid")) {
        switch (spec.family) {
        case Family::AoiiSweepAlpha: spec.grid = steps(0.05, 0.5, 0.05); break;
        case Family::AoiiSweepPr: spec.grid = steps(0.2, 0.9, 0.1); break;
        case Family::Aoi2SweepQ: spec.grid = steps(0.1, 0.9, 0.1); break;
        case Family::Aoi2SweepAlphaMax: spec.grid = steps(0.2, 0.8, 0.1); break;
        case Family::Aoi2GapBmax: spec.grid = {0.2, 0.5}; break;
        case Family::Solve:
        case Family::Simulate: break;
        }
    }
    if (!given("bmax")) {
        switch (spec.family) {
        case Family::AoiiSweepAlpha:
        case Family::AoiiSweepPr: spec.bmax = {5, 10, 20}; break;
        case Family::Aoi2GapBmax:
            spec.bmax.clear();
            for (int b = 1; b <= 15; ++b) spec.bmax.push_back(b);
            break;
        default: spec.bmax = {5}; break;
        }
    }
}

inline void require(bool ok, const std::string& invariant) {
    if (!ok) throw Error(ErrorKind::ValidationError, "invariant violated: " + invariant);
}

/// Checks every invariant of the resolved spec, naming the first one broken.
inline void validate(const ExperimentSpec& spec) {
    const bool aoii = spec.resolved_model() == ModelKind::Aoii;
    const bool sweep = spec.family != Family::Solve && spec.family != Family::Simulate;
    require(spec.delta_max >= 1, "delta_max >= 1");
    require(!spec.bmax.empty(), "bmax list nonempty");
    for (int b : spec.bmax) require(b >= 1, "every bmax >= 1");
    if (sweep) require(!spec.grid.empty(), "grid nonempty");

    auto check_aoii = [&](double p_stay, double alpha) {
        require(spec.source_states >= 2, "N >= 2");
        require(p_stay > 1.0 / spec.source_states && p_stay < 1.0, "p_R in (1/N, 1)");
        require(spec.p_success > 0.0 && spec.p_success <= 1.0, "p_s in (0, 1]");
        require(alpha > 0.0 && alpha < 1.0, "alpha in (0, 1)");
    };
    auto check_two_rate = [&](double q, double amax) {
        require(q > 0.0 && q < 1.0, "q in (0, 1)");
        require(spec.alpha_min > 0.0 && spec.alpha_min < 1.0, "alpha_min in (0, 1)");
        require(amax > 0.0 && amax < 1.0, "alpha_max in (0, 1)");
        require(spec.alpha_min <= amax, "alpha_min <= alpha_max");
    };
    switch (spec.family) {
    case Family::AoiiSweepAlpha:
        for (double a : spec.grid) check_aoii(spec.p_stay, a);
        break;
    case Family::AoiiSweepPr:
        for (double p : spec.grid) check_aoii(p, spec.alpha);
        break;
    case Family::Aoi2SweepQ:
    case Family::Aoi2GapBmax:
        for (double q : spec.grid) check_two_rate(q, spec.alpha_max);
        break;
    case Family::Aoi2SweepAlphaMax:
        for (double a : spec.grid) check_two_rate(spec.q, a);
        break;
    case Family::Solve:
    case Family::Simulate:
        if (aoii) check_aoii(spec.p_stay, spec.alpha);
        else check_two_rate(spec.q, spec.alpha_max);
        break;
    }
    if (spec.family == Family::Solve)
        require(spec.method == "token" || spec.method == "cmdp", "solve method in {token, cmdp}");
    if (spec.family == Family::Simulate) {
        const std::vector<std::string> ok = aoii ? std::vector<std::string>{"token", "cmdp", "never", "greedy"}
                                                 : std::vector<std::string>{"token", "cmdp", "uniform", "random",
                                                                            "never", "greedy"};
        require(std::find(ok.begin(), ok.end(), spec.method) != ok.end(), "simulate method known for the model");
    }
    require(spec.solver.eps_v > 0.0, "eps_V > 0");
    require(spec.solver.max_iterations >= 1, "max_iterations >= 1");
    require(spec.search.eps_lambda > 0.0, "eps_lambda > 0");
    require(spec.search.gamma > 0.0, "gamma > 0");
    require(spec.search.max_outer >= 1, "max_outer >= 1");
    require(spec.sim.horizon >= 1, "T >= 1");
    require(spec.sim.runs >= 1, "runs >= 1");
}

struct Override {
    std::string key;
    std::string value;
};

/// Reads the file, applies overrides on top, fills figure defaults for
/// anything still unset and validates.
inline ExperimentSpec load_spec(std::istream& in, const std::vector<Override>& overrides = {}) {
    ExperimentSpec spec;
    std::vector<std::string> seen;
    apply_config_text(spec, in, &seen);
    for (const auto& o : overrides) {
        apply_setting(spec, o.key, o.value, 0);
        seen.push_back(o.key);
    }
    fill_defaults(spec, seen);
    validate(spec);
    return spec;
}

inline ExperimentSpec load_spec(const std::string& path, const std::vector<Override>& overrides = {}) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ParseError, "cannot open config file '" + path + "'");
    return load_spec(in, overrides);
}

namespace detail {

inline std::string join_numbers(const auto& values) {
    std::ostringstream os;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) os << ',';
        os << values[i];
    }
    return os.str();
}

} // namespace detail

/// Every resolved setting as `key = value` lines, in a fixed order.
inline std::vector<std::string> describe(const ExperimentSpec& spec) {
    std::vector<std::string> lines;
    auto add = [&](const std::string& k, const std::string& v) { lines.push_back(k + " = " + v); };
    auto num = [](double x) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", x);
        return std::string(buf);
    };
    add("family", to_string(spec.family));
    const bool aoii = spec.resolved_model() == ModelKind::Aoii;
    if (spec.family == Family::Solve || spec.family == Family::Simulate) {
        add("model", aoii ? "aoii" : "aoi2");
        add("method", spec.method);
    }
    if (aoii) {
        add("N", std::to_string(spec.source_states));
        add("p_R", num(spec.p_stay));
        add("p_s", num(spec.p_success));
        add("alpha", num(spec.alpha));
    } else {
        add("q", num(spec.q));
        add("alpha_min", num(spec.alpha_min));
        add("alpha_max", num(spec.alpha_max));
    }
    add("delta_max", std::to_string(spec.delta_max));
    if (!spec.grid.empty()) add("grid", detail::join_numbers(spec.grid));
    add("bmax", detail::join_numbers(spec.bmax));
    add("eps_V", num(spec.solver.eps_v));
    add("max_iterations", std::to_string(spec.solver.max_iterations));
    add("eps_lambda", num(spec.search.eps_lambda));
    add("gamma", num(spec.search.gamma));
    add("max_outer", std::to_string(spec.search.max_outer));
    add("restarts", std::to_string(spec.search.restarts));
    add("T", std::to_string(spec.sim.horizon));
    add("runs", std::to_string(spec.sim.runs));
    add("seed", std::to_string(spec.sim.seed));
    add("burn_in", std::to_string(spec.sim.burn_in));
    add("simulate", spec.simulate ? "true" : "false");
    return lines;
}

} // namespace freshness::experiments
