#include "colloid/kinetics.hpp"

#include "colloid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace colloid::kinetics {

SpeciesLadder build_ladder(int n_classes, double monomer_radius, double monomer_diffusivity,
                           double fractal_dimension) {
    if (n_classes < 1) throw ParameterError("ladder needs at least one size class");
    if (!(monomer_radius > 0.0)) throw ParameterError("monomer radius must be positive");
    if (!(monomer_diffusivity > 0.0)) throw ParameterError("monomer diffusivity must be positive");
    if (!(fractal_dimension > 0.0)) throw ParameterError("fractal dimension must be positive");

    SpeciesLadder ladder;
    ladder.n_classes = n_classes;
    ladder.monomer_radius = monomer_radius;
    ladder.monomer_diffusivity = monomer_diffusivity;
    ladder.fractal_dimension = fractal_dimension;
    ladder.radii.resize(static_cast<std::size_t>(n_classes));
    ladder.diffusivities.resize(static_cast<std::size_t>(n_classes));
    for (int i = 1; i <= n_classes; ++i) {
        const double growth = std::pow(static_cast<double>(i), 1.0 / fractal_dimension);
        ladder.radii[static_cast<std::size_t>(i - 1)] = growth * monomer_radius;
        ladder.diffusivities[static_cast<std::size_t>(i - 1)] = monomer_diffusivity / growth;
    }
    return ladder;
}

void FluidProperties::validate() const {
    if (!(temperature > 0.0) || !(dynamic_viscosity > 0.0) || !(boltzmann_constant > 0.0)) {
        throw ParameterError("fluid temperature, viscosity and Boltzmann constant must be positive");
    }
}

double einstein_stokes_diffusivity(const FluidProperties& fluid, double radius) {
    fluid.validate();
    if (!(radius > 0.0)) throw ParameterError("particle radius must be positive");
    return fluid.boltzmann_constant * fluid.temperature /
           (6.0 * std::numbers::pi * fluid.dynamic_viscosity * radius);
}

AggregationKernel::AggregationKernel(Eigen::MatrixXd efficiency, Eigen::MatrixXd collision_rate,
                                     KernelKind kind)
    : alpha_(std::move(efficiency)), beta_(std::move(collision_rate)), kind_(kind) {
    if (alpha_.rows() != alpha_.cols() || beta_.rows() != beta_.cols() ||
        alpha_.rows() != beta_.rows() || beta_.rows() < 1) {
        throw ShapeError("kernel matrices must be square, nonempty and of equal size");
    }
    for (Eigen::Index i = 0; i < beta_.rows(); ++i) {
        for (Eigen::Index j = 0; j < beta_.cols(); ++j) {
            if (alpha_(i, j) < 0.0 || alpha_(i, j) > 1.0) {
                throw ParameterError("collision efficiency must lie in [0,1]");
            }
            if (beta_(i, j) < 0.0) throw ParameterError("collision rate must be nonnegative");
            if (alpha_(i, j) != alpha_(j, i) || beta_(i, j) != beta_(j, i)) {
                throw ParameterError("aggregation kernel must be symmetric");
            }
        }
    }
    gamma_ = alpha_.cwiseProduct(beta_);
}

AggregationKernel AggregationKernel::constant(int n_classes, double beta0, double efficiency) {
    if (n_classes < 1) throw ParameterError("kernel needs at least one size class");
    const auto n = static_cast<Eigen::Index>(n_classes);
    return AggregationKernel(Eigen::MatrixXd::Constant(n, n, efficiency),
                             Eigen::MatrixXd::Constant(n, n, beta0), KernelKind::Constant);
}

AggregationKernel AggregationKernel::scaled(double factor) const {
    if (factor < 0.0) throw ParameterError("kernel scale factor must be nonnegative");
    return AggregationKernel(alpha_, beta_ * factor, kind_);
}

AggregationKernel AggregationKernel::transposed() const {
    return AggregationKernel(alpha_.transpose(), beta_.transpose(), kind_);
}

AggregationKernel brownian_kernel(const SpeciesLadder& ladder, const FluidProperties& fluid) {
    fluid.validate();
    const auto n = static_cast<Eigen::Index>(ladder.size());
    if (n < 1) throw ShapeError("empty species ladder");
    const double prefactor =
        2.0 * fluid.boltzmann_constant * fluid.temperature / (3.0 * fluid.dynamic_viscosity);
    Eigen::MatrixXd beta(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double ri = ladder.radii[static_cast<std::size_t>(i)];
            const double rj = ladder.radii[static_cast<std::size_t>(j)];
            beta(i, j) = prefactor * (ri + rj) * (1.0 / ri + 1.0 / rj);
            beta(j, i) = beta(i, j);
        }
    }
    return AggregationKernel(Eigen::MatrixXd::Ones(n, n), std::move(beta), KernelKind::Brownian);
}

Concentrations::Concentrations(Eigen::VectorXd values) : values_(std::move(values)) {
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
        if (!(values_[i] >= 0.0)) throw ParameterError("concentrations must be nonnegative");
    }
}

Concentrations::Concentrations(std::vector<double> values)
    : Concentrations(Eigen::Map<const Eigen::VectorXd>(values.data(),
                                                       static_cast<Eigen::Index>(values.size()))) {}

namespace {

void check_dimensions(const Eigen::VectorXd& u, const AggregationKernel& kernel) {
    if (static_cast<std::size_t>(u.size()) != kernel.size()) {
        throw ShapeError("concentration vector has " + std::to_string(u.size()) +
                         " classes but kernel has " + std::to_string(kernel.size()));
    }
}

// Partner b of class c takes part in the loss term of c. Sizes are c+1 and b+1.
bool loss_partner(Eigen::Index c, Eigen::Index b, Eigen::Index n, Closure closure) {
    return closure == Closure::Lossy || (c + 1) + (b + 1) <= n;
}

} // namespace

Eigen::VectorXd reaction_rates(const Eigen::VectorXd& u, const AggregationKernel& kernel,
                               Closure closure) {
    check_dimensions(u, kernel);
    const auto& g = kernel.gamma();
    const Eigen::Index n = u.size();
    Eigen::VectorXd rates = Eigen::VectorXd::Zero(n);
    for (Eigen::Index c = 0; c < n; ++c) {
        // ordered pairs (a, b) with (a+1) + (b+1) = c+1
        double gain = 0.0;
        for (Eigen::Index a = 0; a < c; ++a) {
            const Eigen::Index b = c - 1 - a;
            gain += g(a, b) * u[a] * u[b];
        }
        double loss = 0.0;
        for (Eigen::Index b = 0; b < n; ++b) {
            if (loss_partner(c, b, n, closure)) loss += g(c, b) * u[b];
        }
        rates[c] = 0.5 * gain - u[c] * loss;
    }
    return rates;
}

Eigen::VectorXd reaction_rates(const Concentrations& u, const AggregationKernel& kernel,
                               Closure closure) {
    return reaction_rates(u.values(), kernel, closure);
}

Eigen::MatrixXd reaction_jacobian(const Eigen::VectorXd& u, const AggregationKernel& kernel,
                                  Closure closure) {
    check_dimensions(u, kernel);
    const auto& g = kernel.gamma();
    const Eigen::Index n = u.size();
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        for (Eigen::Index m = 0; m < c; ++m) {
            const Eigen::Index partner = c - 1 - m;
            jac(c, m) += 0.5 * (g(m, partner) + g(partner, m)) * u[partner];
        }
        double loss = 0.0;
        for (Eigen::Index b = 0; b < n; ++b) {
            if (!loss_partner(c, b, n, closure)) continue;
            loss += g(c, b) * u[b];
            jac(c, b) -= u[c] * g(c, b);
        }
        jac(c, c) -= loss;
    }
    return jac;
}

double mass_moment(const Eigen::VectorXd& u) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < u.size(); ++i) m += static_cast<double>(i + 1) * u[i];
    return m;
}

Concentrations step_batch(const Concentrations& u, const AggregationKernel& kernel, double dt,
                          const NewtonOptions& opts, Closure closure, BatchStepInfo* info) {
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    const Eigen::VectorXd& u0 = u.values();
    check_dimensions(u0, kernel);
    const Eigen::Index n = u0.size();

    Eigen::VectorXd x = u0;
    auto residual = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd {
        return v - u0 - dt * reaction_rates(v, kernel, closure);
    };
    Eigen::VectorXd r = residual(x);
    double res = r.lpNorm<Eigen::Infinity>();
    int iter = 0;
    while (res > opts.tol) {
        if (iter >= opts.max_iter) {
            throw ConvergenceError("batch aggregation Newton did not converge", res, iter);
        }
        const Eigen::MatrixXd jac =
            Eigen::MatrixXd::Identity(n, n) - dt * reaction_jacobian(x, kernel, closure);
        x -= jac.partialPivLu().solve(r);
        r = residual(x);
        res = r.lpNorm<Eigen::Infinity>();
        ++iter;
    }

    const double floor = -kNegativityTolerance * std::max(1.0, u0.lpNorm<Eigen::Infinity>());
    int clamped = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (x[i] >= 0.0) continue;
        if (x[i] < floor) {
            throw ParameterError("implicit step produced a negative concentration; reduce dt below " +
                                 std::to_string(nonnegativity_dt_bound(u, kernel)));
        }
        x[i] = 0.0;
        ++clamped;
    }
    if (info != nullptr) *info = BatchStepInfo{iter, res, clamped};
    return Concentrations(std::move(x));
}

double nonnegativity_dt_bound(const Concentrations& u, const AggregationKernel& kernel) {
    const double total = u.values().sum();
    const double gmax = kernel.gamma().maxCoeff();
    if (total <= 0.0 || gmax <= 0.0) return std::numeric_limits<double>::infinity();
    return 1.0 / (gmax * total);
}

BatchTrajectory run_batch(const Concentrations& u0, const AggregationKernel& kernel, double dt,
                          int steps, const NewtonOptions& opts, Closure closure) {
    if (steps < 0) throw ParameterError("step count must be nonnegative");
    BatchTrajectory traj;
    traj.times.reserve(static_cast<std::size_t>(steps) + 1);
    traj.states.reserve(static_cast<std::size_t>(steps) + 1);
    traj.times.push_back(0.0);
    traj.states.push_back(u0.values());
    Concentrations u = u0;
    for (int s = 1; s <= steps; ++s) {
        BatchStepInfo info;
        u = step_batch(u, kernel, dt, opts, closure, &info);
        traj.clamped += info.clamped;
        traj.times.push_back(dt * s);
        traj.states.push_back(u.values());
    }
    return traj;
}

} // namespace colloid::kinetics
