// colloidsim: run a configured scenario and write its CSV outputs and report.
//
//   colloidsim column --config configs/johnson1996.cfg --out out/johnson
//
// Exit codes: 0 success, 2 configuration error, 3 solver failure,
// 4 invariant-check failure.

#include "colloid/config.hpp"
#include "colloid/errors.hpp"
#include "colloid/scenarios.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <set>

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kInvariant = 4 };

using colloid::scenarios::Scenario;

const std::map<std::string, std::set<Scenario>> kCommands = {
    {"cell", {Scenario::CellTensors}},
    {"batch", {Scenario::BatchAggregation}},
    {"column", {Scenario::ColumnSingle, Scenario::ColumnAggregating}},
    {"compare", {Scenario::BlockingCompare}},
    {"sweep", {Scenario::RateSweep}},
};

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Colloid aggregation, deposition and homogenization scenarios"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir;
    int resolution = 0;
    bool verbose = false;
    for (const auto& [name, kinds] : kCommands) {
        auto* sub = app.add_subcommand(name, std::string("run a ") + name + " scenario");
        sub->add_option("--config", config, "scenario configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides scenario.output_dir)");
        sub->add_option("--resolution", resolution,
                        "cell grid resolution (cell) or column intervals (column, compare, sweep)")
            ->check(CLI::PositiveNumber);
        sub->add_flag("--verbose", verbose, "print progress and the report");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    colloid::scenarios::ScenarioConfig cfg;
    try {
        colloid::scenarios::ConfigOverrides overrides;
        if (!out_dir.empty()) overrides.output_dir = out_dir;
        if (resolution > 0) overrides.resolution = resolution;
        cfg = colloid::scenarios::load_config(config, overrides);
        if (!kCommands.at(command).count(cfg.scenario)) {
            throw colloid::ConfigError("scenario.kind = " + std::string(colloid::scenarios::to_string(cfg.scenario)) +
                                           " cannot run under '" + command + "'",
                                       0, "scenario.kind");
        }
    } catch (const colloid::ConfigError& e) {
        std::cerr << "config error: " << config << ": " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << config << ": " << e.what() << '\n';
        return kConfig;
    }

    try {
        colloid::scenarios::RunOptions opts;
        if (verbose) opts.log = &std::cerr;
        const auto report = colloid::scenarios::run_scenario(cfg, opts);
        if (verbose) std::cout << report.text(cfg);
        for (const auto& c : report.checks) {
            if (!c.passed) std::cerr << "invariant failed: " << c.name << " (" << c.detail << ")\n";
        }
        std::cout << colloid::scenarios::to_string(cfg.scenario) << ": " << (report.passed() ? "PASS" : "FAIL")
                  << ", outputs in " << cfg.output_dir.generic_string() << '\n';
        return report.passed() ? kOk : kInvariant;
    } catch (const colloid::ConvergenceError& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    } catch (const colloid::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const colloid::GeometryError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    }
}
