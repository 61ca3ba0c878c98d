#include "freshness/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fx = freshness::experiments;

int main(int argc, char** argv) {
    CLI::App app{"Freshness-optimal update scheduling under rate constraints"};
    app.set_version_flag("--version", "freshness-mdp 1.0");

    std::string family;
    std::string config;
    std::optional<std::string> bmax, seed, out, eps_v, eps_lambda, gamma, horizon, runs;
    std::vector<std::string> sets;

    app.add_option("family", family,
                   "aoii-sweep-alpha | aoii-sweep-pr | aoi2-sweep-q | aoi2-sweep-alphamax | aoi2-gap-bmax | "
                   "solve | simulate")
        ->required();
    app.add_option("--config", config, "key = value configuration file");
    app.add_option("--bmax", bmax, "bucket capacities, comma separated");
    app.add_option("--seed", seed, "master seed");
    app.add_option("--out", out, "CSV output path (default: stdout)");
    app.add_option("--epsV", eps_v, "RVIA span threshold");
    app.add_option("--epsLambda", eps_lambda, "multiplier search threshold");
    app.add_option("--gamma", gamma, "neighbor scaling factor");
    app.add_option("--T", horizon, "simulation horizon in slots");
    app.add_option("--runs", runs, "independent simulation runs");
    app.add_option("--set", sets, "extra key=value setting (repeatable)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::vector<fx::Override> overrides{{"family", family}};
        auto add = [&](const char* key, const std::optional<std::string>& v) {
            if (v) overrides.push_back({key, *v});
        };
        add("bmax", bmax);
        add("seed", seed);
        add("out", out);
        add("eps_V", eps_v);
        add("eps_lambda", eps_lambda);
        add("gamma", gamma);
        add("T", horizon);
        add("runs", runs);
        for (const auto& s : sets) {
            const auto eq = s.find('=');
            if (eq == std::string::npos)
                throw freshness::Error(freshness::ErrorKind::ParseError, "override: expected key=value, got '" + s + "'");
            overrides.push_back({fx::detail::trim(s.substr(0, eq)), fx::detail::trim(s.substr(eq + 1))});
        }

        std::istringstream empty;
        const fx::ExperimentSpec spec = config.empty() ? fx::load_spec(empty, overrides) : fx::load_spec(config, overrides);

        std::ofstream file;
        if (!spec.out.empty()) {
            file.open(spec.out);
            if (!file) throw freshness::Error(freshness::ErrorKind::InvalidInput, "cannot write '" + spec.out + "'");
        }
        std::ostream& csv = spec.out.empty() ? std::cout : file;
        std::ostream& summary = spec.out.empty() ? std::cerr : std::cout;
        fx::run_experiment(spec, csv, summary);
    } catch (const freshness::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return fx::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
