#pragma once

/**
 * @file scenarios.hpp
 * Scenario pipelines: each one builds its models from a ScenarioConfig, runs
 * them, writes CSV outputs plus `report.txt` and `resolved.cfg` into the
 * output directory, and evaluates its invariant checks.
 *
 * Outputs per scenario:
 *   cell_tensors        tensors.csv
 *   batch_aggregation   batch.csv
 *   column_single       breakthrough.csv
 *   column_aggregating  breakthrough_aggregating.csv, breakthrough_single.csv
 *   blocking_compare    breakthrough_none.csv, breakthrough_langmuir.csv, breakthrough_rsa.csv
 *   rate_sweep          breakthrough_rate_<k>.csv, sweep.csv
 */

#include "colloid/config.hpp"
#include "colloid/nondim.hpp"
#include "colloid/transport.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace colloid::scenarios {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct RunReport {
    Scenario scenario = Scenario::ColumnSingle;
    std::vector<CheckResult> checks;
    std::vector<std::string> measurements; // "name: value" lines
    std::vector<std::filesystem::path> files;
    double wall_seconds = 0.0;

    bool passed() const;
    std::string text(const ScenarioConfig& cfg) const;
};

struct RunOptions {
    std::ostream* log = nullptr; // progress messages when set
};

/// Reference scales of a resolved config.
nondim::ReferenceQuantities reference_of(const ScenarioConfig& cfg);

/// Aggregation kernel of the [kernel] section over `ladder`.
kinetics::AggregationKernel make_kernel(const ScenarioConfig& cfg, const kinetics::SpeciesLadder& ladder);

/// Blocking function of `kind` using the [blocking] parameters.
transport::BlockingFunction make_blocking(const ScenarioConfig& cfg, transport::BlockingKind kind);

/// Column model with `n_classes` classes; aggregation is on when n_classes > 1.
transport::ColumnModel make_column_model(const ScenarioConfig& cfg, int n_classes,
                                         transport::BlockingKind blocking, double rate_multiplier = 1.0);

/**
 * Run the configured pipeline. Module errors propagate after every file this
 * call created has been removed. Invariant failures do not throw; they show
 * up in RunReport::passed().
 */
RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Breakthrough table: time_s, u_1..u_N, theta_1..theta_N, total_mass_weighted.
void write_breakthrough_csv(std::ostream& out, const transport::BreakthroughCurve& curve,
                            const std::vector<std::string>& header);

} // namespace colloid::scenarios
