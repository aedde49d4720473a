#pragma once

/**
 * @file config.hpp
 * Scenario configuration: a sectioned key = value text file.
 *
 *   # comment
 *   [scenario]
 *   kind = column_single
 *   [column]
 *   darcy_velocity = 1.02e-4
 *
 * Keys are typed (real, integer, string, choice, list of reals). Unknown
 * sections and keys are rejected. Every key has a default except
 * scenario.kind; a value of 0 for the keys marked "auto" in the schema means
 * "derive it", and the derived number is what `to_config_text` writes back.
 */

#include "colloid/blocking.hpp"
#include "colloid/homogenize.hpp"
#include "colloid/kinetics.hpp"
#include "colloid/transport.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace colloid::scenarios {

enum class Scenario { CellTensors, BatchAggregation, ColumnSingle, ColumnAggregating, BlockingCompare, RateSweep };

const char* to_string(Scenario s);

struct GeometrySection {
    homogenize::GrainShape shape = homogenize::GrainShape::IsotropicDisc;
    int resolution = 128;
    double porosity = 0.75;
    double solver_tol = 1e-10;
    double surface_rate_a = 0.0; // a on Gamma, scaled
    double surface_rate_b = 0.0;
    double biot = 1.0;
};

struct LadderSection {
    int n_classes = 2;
    double monomer_radius = 0.15e-6;
    double monomer_diffusivity = 0.0; // auto: Einstein-Stokes
    double fractal_dimension = 2.5;
    double temperature = 298.15;
    double viscosity = 8.9e-4;
};

struct KernelSection {
    kinetics::KernelKind kind = kinetics::KernelKind::Constant;
    double beta0 = 0.0; // auto: 8kT / (3 eta)
    double efficiency = 1.0;
    kinetics::Closure closure = kinetics::Closure::Conservative;
};

struct ColumnSection {
    transport::ColumnParams params;
    double affinity_exponent = 1.0;
};

struct BlockingSection {
    transport::BlockingKind kind = transport::BlockingKind::None;
    double beta = 2.9;
    double theta_inf = 0.345;
};

struct NumericsSection {
    int intervals = 200;
    double dt = 0.0;    // auto: t0 / 500
    double t_end = 0.0; // auto: 2 t0
    double newton_tol = 1e-10;
    int newton_max_iter = 25;
};

struct BatchSection {
    double initial_monomers = 1.0;
    double dt = 0.0; // auto: 0.1 / (max gamma * initial_monomers)
    int steps = 1000;
};

struct SweepSection {
    std::vector<double> multipliers{1.0, 2.0};
};

struct ReferenceSection {
    double length = 0.0;          // auto: column length
    double diffusivity = 0.0;     // auto: monomer diffusivity
    double mobile_conc = 0.0;     // auto: inlet concentration
    double deposited_conc = 0.0;  // auto: jamming coverage / (pi a_p^2)
    double deposition_rate = 0.0; // auto: kinetic rate
};

struct ScenarioConfig {
    Scenario scenario = Scenario::ColumnSingle;
    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 1;

    GeometrySection geometry;
    LadderSection ladder;
    KernelSection kernel;
    ColumnSection column;
    BlockingSection blocking;
    NumericsSection numerics;
    BatchSection batch;
    SweepSection sweep;
    ReferenceSection reference;

    /// Sections that appeared in the source text.
    std::vector<std::string> present_sections;
};

/// Command-line overrides, applied before validation.
struct ConfigOverrides {
    std::optional<std::filesystem::path> output_dir;
    /// geometry.resolution for cell_tensors, numerics.intervals for column scenarios.
    std::optional<int> resolution;
};

/// Parse, validate and resolve every "auto" default.
ScenarioConfig parse_config(std::string_view text, const ConfigOverrides& overrides = {});
ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

/// Sections a scenario needs in the file.
std::vector<std::string> required_sections(Scenario s);

/// Fully resolved configuration in the input format; loading it reproduces the run.
std::string to_config_text(const ScenarioConfig& cfg);

/// Fill every "auto" field with its derived value. Idempotent.
void resolve_defaults(ScenarioConfig& cfg);

/// Fluid of the ladder section.
kinetics::FluidProperties fluid_of(const ScenarioConfig& cfg);

} // namespace colloid::scenarios
