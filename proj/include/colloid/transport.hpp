#pragma once

/**
 * @file transport.hpp
 * One-dimensional column model for N colloid size classes:
 *
 *   du_i/dt     = -v_i du_i/dx + D_i d2u_i/dx2 - f/(pi a_i^2) dtheta_i/dt + R_i(u)
 *   dtheta_i/dt = pi a_i^2 k_i u_i B(sum_j theta_j) - b_i theta_i
 *
 * with a switch-pulse Dirichlet inlet and a zero-gradient outlet. With N = 1,
 * no aggregation and b = 0 this is the single-species column model of
 * Johnson, Sun and Elimelech.
 *
 * Discretization: vertex-centred finite volumes on M+1 nodes (half cells at
 * the two ends), first-order upwind advection, central dispersion, implicit
 * Euler, and full Newton on the coupled state with a block-tridiagonal solve.
 */

#include "colloid/blocking.hpp"
#include "colloid/homogenize.hpp"
#include "colloid/kinetics.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <vector>

namespace colloid::transport {

/// Inputs of the column model; defaults are the reference (Table 3) set.
struct ColumnParams {
    double length = 0.101;             // L [m]
    double darcy_velocity = 1.02e-4;   // U [m/s]
    double porosity = 0.392;           // phi [-]
    double collector_radius = 0.16e-3; // a_c [m]
    double particle_radius = 0.15e-6;  // a_p [m]
    double dispersivity = 0.692e-3;    // alpha_L [m]
    double bulk_diffusivity = 0.0;     // D_inf [m^2/s]; 0 selects Einstein-Stokes
    double medium_tortuosity = 1.0;    // tau_m [-]
    double kinetic_rate = 5e-7;        // k [m/s]
    double inlet_conc = 5.58e14;       // n0 [1/m^3] (5.58e8 per cm^3)
    double pulse_duration = 5445.0;    // t0 [s]

    void validate() const;
};

struct HydroDerived {
    double pore_radius = 0.0;      // r_0 = (1.1969 phi - 0.1557) a_c
    double particle_velocity = 0.0; // v_p = U/phi (2 - (1 - a_p/r_0)^2)
    double dispersion = 0.0;       // D_h = D_inf / tau_m + alpha_L v_p
    double specific_surface = 0.0; // f = 3 (1 - phi) / (phi a_c)
};

/// Closed formulas for the monomer, Einstein-Stokes D_inf at 298.15 K when unset.
HydroDerived derived_hydro(const ColumnParams& params);
/// Same formulas for a particle of radius `particle_radius` with bulk diffusivity `bulk_diffusivity`.
HydroDerived derived_hydro(const ColumnParams& params, double particle_radius, double bulk_diffusivity);

/// Resolved transport and deposition coefficients for one size class.
struct SpeciesCoefficients {
    double velocity = 0.0;       // v_i [m/s], >= 0
    double dispersion = 0.0;     // D_i [m^2/s]
    double attachment = 0.0;     // k_i [m/s]
    double detachment = 0.0;     // b_i [1/s]
    double cross_section = 1.0;  // pi a_i^2 [m^2]
    double mass_weight = 1.0;    // monomers per cluster
};

enum class BoundaryMode {
    Flow,   // Dirichlet inlet at x = 0, advective outflow at x = L
    Closed  // zero total flux at both ends
};

/// Everything step_column needs; build with resolve_column or by hand.
struct ColumnModel {
    double length = 1.0;
    double specific_surface = 0.0; // f [1/m]
    double inlet_conc = 0.0;       // n0
    double pulse_duration = 0.0;   // t0
    std::vector<SpeciesCoefficients> species;
    BlockingFunction blocking;
    std::optional<kinetics::AggregationKernel> kernel;
    kinetics::Closure closure = kinetics::Closure::Conservative;
    BoundaryMode boundary = BoundaryMode::Flow;

    // Optional overrides, all in physical units and evaluated at the new time level.
    std::function<double(std::size_t species, double t)> inlet;
    std::function<double(std::size_t species, double x, double t)> mobile_source;
    std::function<double(std::size_t species, double x, double t)> coverage_source;

    std::size_t n_species() const { return species.size(); }
    /// Inlet value for `species`: n0 on [0, t0] for the monomers, 0 otherwise.
    double inlet_value(std::size_t species, double t) const;
    /// f / (pi a_i^2): mobile-equivalent concentration per unit coverage.
    double deposit_factor(std::size_t species) const;
    void validate() const;
};

struct ResolveOptions {
    kinetics::FluidProperties fluid{};
    double affinity_exponent = 1.0; // k_i = k (r_i / r_1)^exponent
    kinetics::Closure closure = kinetics::Closure::Conservative;
};

/// Per-class coefficients from the column inputs and a size ladder (radii a_i = r_i).
ColumnModel resolve_column(const ColumnParams& params, const kinetics::SpeciesLadder& ladder,
                           const BlockingFunction& blocking,
                           std::optional<kinetics::AggregationKernel> kernel,
                           const ResolveOptions& opts = {});

struct ColumnState {
    std::vector<double> grid; // M+1 nodes on [0, L]
    Eigen::MatrixXd mobile;   // N x (M+1)
    Eigen::MatrixXd coverage; // N x (M+1)
    double time = 0.0;

    static ColumnState zero(const ColumnModel& model, int intervals);
    int intervals() const { return static_cast<int>(grid.size()) - 1; }
    /// Control volume of node m (half cells at both ends).
    double volume(int m) const;
};

struct StepOptions {
    double newton_tol = 1e-10; // max-norm of the scaled residual
    int max_iter = 25;
};

struct StepDiagnostics {
    int iterations = 0;
    double residual = 0.0;
    std::vector<double> influx;  // per species, amount entering through x = 0 during the step
    std::vector<double> outflux; // per species, amount leaving through x = L
    std::vector<double> source;  // per species, amount added by mobile/coverage sources
    int clamped = 0;             // small negative values reset to zero
    int negative_blocking = 0;   // nodes with B(theta) < 0 after the step
};

/// Advance one implicit Euler step of length dt.
ColumnState step_column(const ColumnState& state, const ColumnModel& model, double dt,
                        const StepOptions& opts = {}, StepDiagnostics* diag = nullptr);

struct BreakthroughCurve {
    std::vector<double> times;
    std::vector<std::vector<double>> outlet;   // [species][time] u_i(L)
    std::vector<std::vector<double>> coverage; // [species][time] theta_i at the outlet node
    std::vector<double> total;                 // sum_i i u_i(L)

    double plateau() const;
    /// First time the total reaches `fraction` of its plateau (linear interpolation).
    double time_to_fraction(double fraction) const;
};

/// Mass-weighted bookkeeping over a run (units of monomer concentration times length).
struct MassLedger {
    double initial = 0.0;
    double injected = 0.0;
    double sourced = 0.0;
    double mobile = 0.0;
    double deposited = 0.0;
    double outflow = 0.0;

    double relative_error() const;
};

/// Mobile and deposited mass-weighted inventories of a state.
MassLedger inventory(const ColumnState& state, const ColumnModel& model);

struct ColumnRun {
    ColumnState final_state;
    BreakthroughCurve curve;
    MassLedger mass;
    double max_total_coverage = 0.0; // over space and time
    int clamped = 0;
    int negative_blocking = 0;
    int steps = 0;
};

/**
 * March from the zero state to t_end. The step that would cross the pulse
 * end t0 is shortened to land on it, so the inlet switch sits on a step boundary.
 */
ColumnRun run_column(const ColumnModel& model, double t_end, double dt, int intervals,
                     const StepOptions& opts = {});
/// Same, from a given initial state.
ColumnRun run_column_from(const ColumnState& initial, const ColumnModel& model, double t_end,
                          double dt, const StepOptions& opts = {});

/**
 * Column coefficients from homogenized quantities. Per class i:
 *   D_i = d_i T*_11 + alpha_L v_i   (T* replaces 1/tau_m)
 *   k_i = A_i / f,  b_i = B_i       (linear exchange dv/dt = A u - B v, B(theta) == 1)
 * A_i and B_i are rates in 1/s.
 */
ColumnModel effective_upscaled_system(const ColumnParams& params,
                                      const std::vector<homogenize::EffectiveTensors>& tensors,
                                      const std::vector<double>& attachment_rates,
                                      const std::vector<double>& detachment_rates,
                                      const kinetics::SpeciesLadder& ladder,
                                      std::optional<kinetics::AggregationKernel> kernel,
                                      const ResolveOptions& opts = {});

} // namespace colloid::transport
