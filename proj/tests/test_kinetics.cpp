#include "colloid/errors.hpp"
#include "colloid/kinetics.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace colloid;
using namespace colloid::kinetics;

namespace {

// Fifth root by Newton iteration in long double.
long double fifth_root(long double a) {
    long double x = 1.0L;
    for (int k = 0; k < 100; ++k) x -= (x * x * x * x * x - a) / (5.0L * x * x * x * x);
    return x;
}

// Every ordered pair (i, j) with i + j <= N collides at rate gamma_ij u_i u_j / 2,
// removing one i and one j and creating one i + j.
Eigen::VectorXd pair_enumeration_rates(const Eigen::VectorXd& u, const Eigen::MatrixXd& gamma) {
    const int n = static_cast<int>(u.size());
    Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
    for (int i = 1; i <= n; ++i) {
        for (int j = 1; j <= n; ++j) {
            if (i + j > n) continue;
            const double rate = 0.5 * gamma(i - 1, j - 1) * u[i - 1] * u[j - 1];
            r[i - 1] -= rate;
            r[j - 1] -= rate;
            r[i + j - 1] += rate;
        }
    }
    return r;
}

Eigen::MatrixXd random_symmetric(int n, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) m(i, j) = m(j, i) = dist(rng);
    }
    return m;
}

Eigen::VectorXd random_state(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    Eigen::VectorXd u(n);
    for (int i = 0; i < n; ++i) u[i] = dist(rng);
    return u;
}

} // namespace

TEST_CASE("ladder of a single class is the monomer") {
    const auto l = build_ladder(1, 1.0, 1.0, 3.0);
    REQUIRE(l.size() == 1);
    CHECK(l.radii[0] == 1.0);
    CHECK(l.diffusivities[0] == 1.0);
}

TEST_CASE("compact clusters double their radius at eight monomers") {
    const auto l = build_ladder(8, 1.0, 1.0, 3.0);
    CHECK(l.radii[7] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(l.diffusivities[7] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("dimer radius for a fractal dimension of 2.5") {
    const auto l = build_ladder(2, 0.15e-6, 1e-12, 2.5);
    // 2^(1/2.5) = 4^(1/5)
    const long double expected = fifth_root(4.0L) * 0.15e-6L;
    CHECK(std::abs(l.radii[1] - static_cast<double>(expected)) <= 1e-15 * static_cast<double>(expected));
    CHECK(l.diffusivities[1] * l.radii[1] == doctest::Approx(1e-12 * 0.15e-6).epsilon(1e-14));
}

TEST_CASE("ladder is monotone for any admissible fractal dimension") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> df(1.0, 3.0);
    for (int draw = 0; draw < 200; ++draw) {
        const auto l = build_ladder(12, 1e-7, 2e-12, df(rng));
        for (std::size_t i = 1; i < l.size(); ++i) {
            CHECK(l.radii[i] > l.radii[i - 1]);
            CHECK(l.diffusivities[i] < l.diffusivities[i - 1]);
        }
    }
}

TEST_CASE("ladder rejects inadmissible input") {
    CHECK_THROWS_AS(build_ladder(0, 1.0, 1.0, 2.0), ParameterError);
    CHECK_THROWS_AS(build_ladder(2, 0.0, 1.0, 2.0), ParameterError);
    CHECK_THROWS_AS(build_ladder(2, 1.0, -1.0, 2.0), ParameterError);
    CHECK_THROWS_AS(build_ladder(2, 1.0, 1.0, 0.0), ParameterError);
}

TEST_CASE("Einstein-Stokes diffusivity of the reference particle") {
    const FluidProperties water;
    const double d = einstein_stokes_diffusivity(water, 0.15e-6);
    const long double pi = 3.141592653589793238462643383279L;
    const long double oracle = 1.380649e-23L * 298.15L / (6.0L * pi * 8.9e-4L * 0.15e-6L);
    CHECK(d == doctest::Approx(static_cast<double>(oracle)).epsilon(1e-14));
    CHECK(d == doctest::Approx(1.6358e-12).epsilon(1e-4));
}

TEST_CASE("Einstein-Stokes scales with temperature and radius") {
    FluidProperties hot;
    hot.temperature = 2.0 * 298.15;
    CHECK(einstein_stokes_diffusivity(hot, 1e-7) ==
          doctest::Approx(2.0 * einstein_stokes_diffusivity(FluidProperties{}, 1e-7)).epsilon(1e-14));
    CHECK(einstein_stokes_diffusivity(FluidProperties{}, 2e-7) ==
          doctest::Approx(0.5 * einstein_stokes_diffusivity(FluidProperties{}, 1e-7)).epsilon(1e-14));
    CHECK_THROWS_AS(einstein_stokes_diffusivity(FluidProperties{}, 0.0), ParameterError);
    FluidProperties bad;
    bad.dynamic_viscosity = 0.0;
    CHECK_THROWS_AS(einstein_stokes_diffusivity(bad, 1e-7), ParameterError);
}

TEST_CASE("Brownian kernel for equal radii is 8kT/(3 eta)") {
    const FluidProperties water;
    const auto l = build_ladder(1, 0.15e-6, 1e-12, 3.0);
    const auto k = brownian_kernel(l, water);
    const double expected = 8.0 * kBoltzmann * 298.15 / (3.0 * 8.9e-4);
    CHECK(k.gamma()(0, 0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(1.2334e-17).epsilon(1e-4));
}

TEST_CASE("Brownian kernel entries match the closed form") {
    const FluidProperties water;
    const auto l = build_ladder(3, 0.1e-6, 1e-12, 3.0);
    const auto k = brownian_kernel(l, water);
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            const double ri = 0.1e-6 * std::cbrt(i + 1.0);
            const double rj = 0.1e-6 * std::cbrt(j + 1.0);
            const double expected = 2.0 * kBoltzmann * 298.15 / (3.0 * 8.9e-4) * (ri + rj) * (1.0 / ri + 1.0 / rj);
            CHECK(k.collision_rate()(i, j) == doctest::Approx(expected).epsilon(1e-13));
            CHECK(k.gamma()(i, j) == k.gamma()(j, i));
            CHECK(k.efficiency()(i, j) == 1.0);
        }
    }
}

TEST_CASE("kernel validation") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Ones(2, 2);
    Eigen::MatrixXd b = Eigen::MatrixXd::Ones(2, 2);
    b(0, 1) = 2.0;
    CHECK_THROWS_AS(AggregationKernel(a, b, KernelKind::Constant), ParameterError);
    b(0, 1) = 1.0;
    a(0, 0) = 1.5;
    CHECK_THROWS_AS(AggregationKernel(a, b, KernelKind::Constant), ParameterError);
    a(0, 0) = 1.0;
    b(1, 1) = -1.0;
    CHECK_THROWS_AS(AggregationKernel(a, b, KernelKind::Constant), ParameterError);
    CHECK_THROWS_AS(AggregationKernel(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(3, 3), KernelKind::Constant),
                    ShapeError);
}

TEST_CASE("dimerisation of pure monomers") {
    const auto k = AggregationKernel::constant(2, 1.0);
    const auto r = reaction_rates(Concentrations(std::vector<double>{1.0, 0.0}), k);
    CHECK(r[0] == doctest::Approx(-1.0));
    CHECK(r[1] == doctest::Approx(0.5));
}

TEST_CASE("empty population has no reactions") {
    const auto k = AggregationKernel::constant(4, 3.0);
    CHECK(reaction_rates(Concentrations::zeros(4), k).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("three classes against pair enumeration") {
    const auto k = AggregationKernel::constant(3, 1.0);
    const Eigen::Vector3d u(1.0, 1.0, 0.0);
    const auto r = reaction_rates(u, k);
    CHECK(r[0] == doctest::Approx(-2.0));
    CHECK(r[1] == doctest::Approx(-0.5));
    CHECK(r[2] == doctest::Approx(1.0));
    CHECK(std::abs(mass_moment(r)) <= 1e-15);
}

TEST_CASE("rates match pair enumeration for random kernels") {
    std::mt19937_64 rng(11);
    for (int draw = 0; draw < 100; ++draw) {
        const int n = 2 + draw % 9;
        const AggregationKernel k(random_symmetric(n, rng, 0.0, 1.0), random_symmetric(n, rng, 0.0, 5.0),
                                  KernelKind::Constant);
        const Eigen::VectorXd u = random_state(n, rng);
        const Eigen::VectorXd oracle = pair_enumeration_rates(u, k.gamma());
        const Eigen::VectorXd r = reaction_rates(u, k);
        CHECK((r - oracle).cwiseAbs().maxCoeff() <= 1e-13 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("conservative closure keeps the mass moment") {
    std::mt19937_64 rng(13);
    for (int draw = 0; draw < 500; ++draw) {
        const int n = 1 + draw % 15;
        const AggregationKernel k(random_symmetric(n, rng, 0.0, 1.0), random_symmetric(n, rng, 0.0, 10.0),
                                  KernelKind::Constant);
        const Eigen::VectorXd u = random_state(n, rng);
        const Eigen::VectorXd r = reaction_rates(u, k);
        double scale = 0.0;
        for (int i = 0; i < n; ++i) scale += (i + 1) * std::abs(r[i]);
        CHECK(std::abs(mass_moment(r)) <= 1e-13 * (1.0 + scale));
    }
}

TEST_CASE("lossy closure leaks mass through the top class") {
    const auto k = AggregationKernel::constant(3, 1.0);
    const Eigen::Vector3d u(0.2, 0.3, 0.5);
    const auto r = reaction_rates(u, k, Closure::Lossy);
    CHECK(mass_moment(r) < 0.0);
    // Only the loss terms differ.
    const auto c = reaction_rates(u, k, Closure::Conservative);
    CHECK(r[2] - c[2] == doctest::Approx(-0.5 * (0.2 + 0.3 + 0.5)));
}

TEST_CASE("kernel and its transpose give identical rates") {
    std::mt19937_64 rng(17);
    const int n = 6;
    const AggregationKernel k(random_symmetric(n, rng, 0.0, 1.0), random_symmetric(n, rng, 0.0, 3.0),
                              KernelKind::Constant);
    const Eigen::VectorXd u = random_state(n, rng);
    CHECK((reaction_rates(u, k) - reaction_rates(u, k.transposed())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("analytic Jacobian agrees with central differences") {
    std::mt19937_64 rng(19);
    for (auto closure : {Closure::Conservative, Closure::Lossy}) {
        for (int draw = 0; draw < 20; ++draw) {
            const int n = 2 + draw % 7;
            const AggregationKernel k(random_symmetric(n, rng, 0.0, 1.0), random_symmetric(n, rng, 0.1, 2.0),
                                      KernelKind::Constant);
            const Eigen::VectorXd u = random_state(n, rng);
            const Eigen::MatrixXd j = reaction_jacobian(u, k, closure);
            const double h = 1e-6;
            for (int m = 0; m < n; ++m) {
                Eigen::VectorXd up = u, dn = u;
                up[m] += h;
                dn[m] -= h;
                const Eigen::VectorXd fd = (reaction_rates(up, k, closure) - reaction_rates(dn, k, closure)) / (2 * h);
                for (int r = 0; r < n; ++r) {
                    CHECK(std::abs(j(r, m) - fd[r]) <= 1e-6 * std::max(1.0, std::abs(fd[r])));
                }
            }
        }
    }
}

TEST_CASE("rates reject mismatched shapes") {
    const auto k = AggregationKernel::constant(3, 1.0);
    CHECK_THROWS_AS(reaction_rates(Eigen::VectorXd::Ones(2), k), ShapeError);
    CHECK_THROWS_AS(reaction_jacobian(Eigen::VectorXd::Ones(4), k), ShapeError);
    CHECK_THROWS_AS(Concentrations(std::vector<double>{1.0, -0.1}), ParameterError);
}

TEST_CASE("implicit step of an empty state is the empty state") {
    const auto k = AggregationKernel::constant(5, 2.0);
    const auto u = step_batch(Concentrations::zeros(5), k, 0.3);
    CHECK(u.values().cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("implicit step approaches the explicit solution as dt shrinks") {
    const auto k = AggregationKernel::constant(2, 1.0);
    const Concentrations u0(std::vector<double>{1.0, 0.0});
    auto reference = [&](double t) {
        // Explicit Euler with a tiny step, independent of the solver.
        Eigen::VectorXd u = u0.values();
        const int sub = 200000;
        const double h = t / sub;
        for (int s = 0; s < sub; ++s) u += h * pair_enumeration_rates(u, k.gamma());
        return u;
    };
    double previous = 0.0;
    for (double dt : {1e-2, 1e-3}) {
        const auto u = step_batch(u0, k, dt).values();
        const double err = (u - reference(dt)).cwiseAbs().maxCoeff();
        CHECK(err <= 2.0 * dt * dt);
        if (previous > 0.0) CHECK(previous / err > 50.0);
        previous = err;
    }
}

TEST_CASE("a thousand implicit steps keep the mass moment") {
    std::mt19937_64 rng(23);
    const int n = 10;
    const auto k = AggregationKernel::constant(n, 1.0);
    Eigen::VectorXd u0 = random_state(n, rng);
    const auto traj = run_batch(Concentrations(u0), k, 0.05, 1000);
    const double m0 = mass_moment(u0);
    for (const auto& u : traj.states) CHECK(std::abs(mass_moment(u) - m0) <= 1e-12 * m0);
}

TEST_CASE("implicit steps below the bound stay nonnegative") {
    std::mt19937_64 rng(29);
    for (int draw = 0; draw < 100; ++draw) {
        const int n = 2 + draw % 8;
        const AggregationKernel k(random_symmetric(n, rng, 0.0, 1.0), random_symmetric(n, rng, 0.0, 4.0),
                                  KernelKind::Constant);
        Eigen::VectorXd v = random_state(n, rng);
        for (int i = 0; i < n; ++i) {
            if (rng() % 3 == 0) v[i] = 0.0;
        }
        const Concentrations u(v);
        const double dt = 0.9 * nonnegativity_dt_bound(u, k);
        const auto next = step_batch(u, k, std::isfinite(dt) ? dt : 1.0);
        CHECK(next.values().minCoeff() >= -kNegativityTolerance);
    }
}

TEST_CASE("Newton reports non-convergence") {
    const auto k = AggregationKernel::constant(3, 5.0);
    const Concentrations u(std::vector<double>{1.0, 0.5, 0.2});
    NewtonOptions opts;
    opts.max_iter = 1;
    opts.tol = 1e-300;
    CHECK_THROWS_AS(step_batch(u, k, 1.0, opts), ConvergenceError);
    try {
        step_batch(u, k, 1.0, opts);
    } catch (const ConvergenceError& e) {
        CHECK(e.iterations() == 1);
        CHECK(e.last_residual() > 0.0);
    }
    CHECK_THROWS_AS(step_batch(u, k, 0.0), ParameterError);
    CHECK_THROWS_AS(step_batch(Concentrations::zeros(2), k, 1.0), ShapeError);
}
