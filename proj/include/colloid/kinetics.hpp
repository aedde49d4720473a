#pragma once

/**
 * @file kinetics.hpp
 * Smoluchowski aggregation for a population truncated at N size classes,
 * plus the size ladder that derives per-class radii and diffusivities
 * from the monomer values.
 *
 * Class k (1-based in the physics, 0-based in every container here) holds
 * clusters made of k primary particles. Rates follow
 * @f[
 *   R_k(u) = \tfrac12 \sum_{i+j=k} \gamma_{ij} u_i u_j
 *          - u_k \sum_{i} \gamma_{ki} u_i ,\qquad \gamma_{ij} = \alpha_{ij}\beta_{ij}.
 * @f]
 */

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace colloid::kinetics {

/// Boltzmann constant [J/K].
inline constexpr double kBoltzmann = 1.380649e-23;

struct SpeciesLadder {
    int n_classes = 1;
    double monomer_radius = 0.0;      // r_1 [m]
    double monomer_diffusivity = 0.0; // d_1 [m^2/s]
    double fractal_dimension = 3.0;   // D_F [-]
    std::vector<double> radii;         // r_i = i^(1/D_F) r_1
    std::vector<double> diffusivities; // d_i = d_1 / i^(1/D_F)

    std::size_t size() const { return radii.size(); }
};

/// r_i = i^(1/D_F) r_1 and d_i = d_1 i^(-1/D_F) for i = 1..N.
SpeciesLadder build_ladder(int n_classes, double monomer_radius, double monomer_diffusivity,
                           double fractal_dimension);

struct FluidProperties {
    double temperature = 298.15;       // T [K]
    double dynamic_viscosity = 8.9e-4; // eta [Pa s]
    double boltzmann_constant = kBoltzmann;

    void validate() const;
};

/// kT / (6 pi eta r).
double einstein_stokes_diffusivity(const FluidProperties& fluid, double radius);

enum class KernelKind { Constant, Brownian };

/// Collision efficiency alpha and collision frequency beta; both symmetric.
class AggregationKernel {
public:
    AggregationKernel(Eigen::MatrixXd efficiency, Eigen::MatrixXd collision_rate, KernelKind kind);

    static AggregationKernel constant(int n_classes, double beta0, double efficiency = 1.0);

    std::size_t size() const { return static_cast<std::size_t>(beta_.rows()); }
    const Eigen::MatrixXd& efficiency() const { return alpha_; }
    const Eigen::MatrixXd& collision_rate() const { return beta_; }
    /// gamma_ij = alpha_ij * beta_ij.
    const Eigen::MatrixXd& gamma() const { return gamma_; }
    KernelKind kind() const { return kind_; }

    /// Kernel with every beta_ij multiplied by `factor` (rate sweeps).
    AggregationKernel scaled(double factor) const;
    /// Kernel built from the transposed matrices; identical for valid kernels.
    AggregationKernel transposed() const;

private:
    Eigen::MatrixXd alpha_;
    Eigen::MatrixXd beta_;
    Eigen::MatrixXd gamma_;
    KernelKind kind_;
};

/// beta_ij = (2kT / 3 eta) (r_i + r_j)(1/r_i + 1/r_j), alpha = 1.
AggregationKernel brownian_kernel(const SpeciesLadder& ladder, const FluidProperties& fluid);

/// Nonnegative class concentrations u_1..u_N.
class Concentrations {
public:
    explicit Concentrations(Eigen::VectorXd values);
    explicit Concentrations(std::vector<double> values);
    static Concentrations zeros(std::size_t n) { return Concentrations(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))); }

    const Eigen::VectorXd& values() const { return values_; }
    std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
    double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

private:
    Eigen::VectorXd values_;
};

/**
 * How collisions producing a cluster larger than N are treated.
 * Conservative drops them from gain and loss, so sum_k k R_k = 0.
 * Lossy keeps the loss term, so mass leaves through the top class.
 */
enum class Closure { Conservative, Lossy };

Eigen::VectorXd reaction_rates(const Eigen::VectorXd& u, const AggregationKernel& kernel,
                               Closure closure = Closure::Conservative);
Eigen::VectorXd reaction_rates(const Concentrations& u, const AggregationKernel& kernel,
                               Closure closure = Closure::Conservative);

/// dR_k/du_m, row k, column m.
Eigen::MatrixXd reaction_jacobian(const Eigen::VectorXd& u, const AggregationKernel& kernel,
                                  Closure closure = Closure::Conservative);

/// First mass moment sum_k k u_k.
double mass_moment(const Eigen::VectorXd& u);

struct NewtonOptions {
    double tol = 1e-10; // max-norm of the residual
    int max_iter = 25;
};

struct BatchStepInfo {
    int iterations = 0;
    double residual = 0.0;
    int clamped = 0; // entries in [-1e-12, 0) reset to zero
};

/// Entries above this magnitude below zero are an error, not a clamp.
inline constexpr double kNegativityTolerance = 1e-12;

/**
 * One implicit Euler step u_new = u + dt R(u_new), solved by full Newton.
 * Throws ConvergenceError when the residual is not below `opts.tol` within
 * `opts.max_iter` iterations.
 */
Concentrations step_batch(const Concentrations& u, const AggregationKernel& kernel, double dt,
                          const NewtonOptions& opts = {}, Closure closure = Closure::Conservative,
                          BatchStepInfo* info = nullptr);

/**
 * Step size below which implicit Euler keeps a nonnegative state nonnegative
 * in practice: 1 / (max gamma * total number concentration).
 */
double nonnegativity_dt_bound(const Concentrations& u, const AggregationKernel& kernel);

struct BatchTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> states;
    int clamped = 0;
};

BatchTrajectory run_batch(const Concentrations& u0, const AggregationKernel& kernel, double dt,
                          int steps, const NewtonOptions& opts = {},
                          Closure closure = Closure::Conservative);

} // namespace colloid::kinetics
