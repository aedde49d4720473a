#include "colloid/transport.hpp"

#include "colloid/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace colloid::transport {

void ColumnParams::validate() const {
    if (!(length > 0.0) || !(darcy_velocity > 0.0) || !(collector_radius > 0.0) ||
        !(particle_radius > 0.0) || !(dispersivity >= 0.0) || !(bulk_diffusivity >= 0.0) ||
        !(medium_tortuosity > 0.0) || !(kinetic_rate >= 0.0) || !(inlet_conc >= 0.0) ||
        !(pulse_duration >= 0.0)) {
        throw ParameterError("column parameters out of range");
    }
    if (!(porosity > 0.0 && porosity <= 1.0)) throw ParameterError("porosity must lie in (0,1]");
}

HydroDerived derived_hydro(const ColumnParams& params, double particle_radius,
                           double bulk_diffusivity) {
    params.validate();
    if (!(particle_radius > 0.0)) throw ParameterError("particle radius must be positive");
    HydroDerived h;
    h.pore_radius = (1.1969 * params.porosity - 0.1557) * params.collector_radius;
    if (!(h.pore_radius > particle_radius)) {
        throw GeometryError("colloid larger than pore: r_0 = " + std::to_string(h.pore_radius) +
                            " m, a_p = " + std::to_string(particle_radius) + " m");
    }
    const double gap = 1.0 - particle_radius / h.pore_radius;
    h.particle_velocity = params.darcy_velocity / params.porosity * (2.0 - gap * gap);
    h.dispersion = bulk_diffusivity / params.medium_tortuosity + params.dispersivity * h.particle_velocity;
    h.specific_surface = 3.0 * (1.0 - params.porosity) / (params.porosity * params.collector_radius);
    return h;
}

HydroDerived derived_hydro(const ColumnParams& params) {
    const double bulk = params.bulk_diffusivity > 0.0
                            ? params.bulk_diffusivity
                            : kinetics::einstein_stokes_diffusivity({}, params.particle_radius);
    return derived_hydro(params, params.particle_radius, bulk);
}

double ColumnModel::inlet_value(std::size_t s, double t) const {
    if (inlet) return inlet(s, t);
    return s == 0 && t <= pulse_duration * (1.0 + 1e-12) ? inlet_conc : 0.0;
}

double ColumnModel::deposit_factor(std::size_t s) const {
    return specific_surface / species[s].cross_section;
}

void ColumnModel::validate() const {
    if (species.empty()) throw ShapeError("column model has no species");
    if (!(length > 0.0)) throw ParameterError("column length must be positive");
    if (specific_surface < 0.0 || inlet_conc < 0.0) {
        throw ParameterError("specific surface and inlet concentration must be nonnegative");
    }
    for (const auto& s : species) {
        if (s.velocity < 0.0) throw ParameterError("upwind scheme assumes nonnegative velocity");
        if (s.dispersion < 0.0 || s.attachment < 0.0 || s.detachment < 0.0 ||
            !(s.cross_section > 0.0) || !(s.mass_weight > 0.0)) {
            throw ParameterError("species coefficients out of range");
        }
    }
    if (kernel && kernel->size() != species.size()) {
        throw ShapeError("aggregation kernel size does not match the number of species");
    }
}

ColumnModel resolve_column(const ColumnParams& params, const kinetics::SpeciesLadder& ladder,
                           const BlockingFunction& blocking,
                           std::optional<kinetics::AggregationKernel> kernel,
                           const ResolveOptions& opts) {
    params.validate();
    if (ladder.size() == 0) throw ShapeError("empty species ladder");
    ColumnModel model;
    model.length = params.length;
    model.inlet_conc = params.inlet_conc;
    model.pulse_duration = params.pulse_duration;
    model.blocking = blocking;
    model.kernel = std::move(kernel);
    model.closure = opts.closure;
    const double r1 = ladder.radii.front();
    for (std::size_t i = 0; i < ladder.size(); ++i) {
        const double ri = ladder.radii[i];
        double bulk = ladder.diffusivities[i];
        if (params.bulk_diffusivity > 0.0) bulk = params.bulk_diffusivity * r1 / ri;
        const HydroDerived h = derived_hydro(params, ri, bulk);
        model.specific_surface = h.specific_surface;
        SpeciesCoefficients c;
        c.velocity = h.particle_velocity;
        c.dispersion = h.dispersion;
        c.attachment = params.kinetic_rate * std::pow(ri / r1, opts.affinity_exponent);
        c.cross_section = std::numbers::pi * ri * ri;
        c.mass_weight = static_cast<double>(i + 1);
        model.species.push_back(c);
    }
    model.validate();
    return model;
}

ColumnState ColumnState::zero(const ColumnModel& model, int intervals) {
    if (intervals < 2) throw ParameterError("column grid needs at least two intervals");
    ColumnState s;
    s.grid.resize(static_cast<std::size_t>(intervals) + 1);
    for (int m = 0; m <= intervals; ++m) {
        s.grid[static_cast<std::size_t>(m)] = model.length * m / intervals;
    }
    s.grid.back() = model.length;
    const auto n = static_cast<Eigen::Index>(model.n_species());
    s.mobile = Eigen::MatrixXd::Zero(n, intervals + 1);
    s.coverage = Eigen::MatrixXd::Zero(n, intervals + 1);
    return s;
}

double ColumnState::volume(int m) const {
    const int M = intervals();
    const double dx = (grid.back() - grid.front()) / M;
    return (m == 0 || m == M) ? 0.5 * dx : dx;
}

namespace {

// Block-tridiagonal system with dense square blocks, solved by block Thomas.
class BlockTridiagonal {
public:
    BlockTridiagonal(int nodes, int block)
        : block_(block), diag_(nodes, Eigen::MatrixXd::Zero(block, block)),
          lower_(nodes, Eigen::MatrixXd::Zero(block, block)),
          upper_(nodes, Eigen::MatrixXd::Zero(block, block)) {}

    Eigen::MatrixXd& diag(int m) { return diag_[static_cast<std::size_t>(m)]; }
    Eigen::MatrixXd& lower(int m) { return lower_[static_cast<std::size_t>(m)]; }
    Eigen::MatrixXd& upper(int m) { return upper_[static_cast<std::size_t>(m)]; }

    void clear() {
        for (auto* v : {&diag_, &lower_, &upper_}) {
            for (auto& b : *v) b.setZero();
        }
    }

    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
        const int nodes = static_cast<int>(diag_.size());
        std::vector<Eigen::PartialPivLU<Eigen::MatrixXd>> piv;
        piv.reserve(diag_.size());
        std::vector<Eigen::VectorXd> r(diag_.size());
        Eigen::MatrixXd pivot = diag_[0];
        r[0] = rhs.segment(0, block_);
        piv.emplace_back(pivot);
        for (int m = 1; m < nodes; ++m) {
            const auto ms = static_cast<std::size_t>(m);
            const Eigen::MatrixXd w = lower_[ms] * piv.back().inverse();
            pivot = diag_[ms] - w * upper_[ms - 1];
            r[ms] = rhs.segment(m * block_, block_) - w * r[ms - 1];
            piv.emplace_back(pivot);
        }
        Eigen::VectorXd x(rhs.size());
        Eigen::VectorXd next = piv.back().solve(r.back());
        x.segment((nodes - 1) * block_, block_) = next;
        for (int m = nodes - 2; m >= 0; --m) {
            const auto ms = static_cast<std::size_t>(m);
            next = piv[ms].solve(r[ms] - upper_[ms] * next);
            x.segment(m * block_, block_) = next;
        }
        return x;
    }

private:
    int block_;
    std::vector<Eigen::MatrixXd> diag_, lower_, upper_;
};

// Scaled unknowns: x[m*B + i] = u_i(x_m) / scale, x[m*B + N + i] = theta_i(x_m).
struct StepSystem {
    const ColumnModel& model;
    const ColumnState& state;
    double dt;
    double t_new;
    int M;
    int N;
    int B;
    double dx;
    double scale;
    bool flow;
    Eigen::VectorXd old;
    Eigen::MatrixXd src_u;  // N x (M+1), scaled
    Eigen::MatrixXd src_th; // N x (M+1)

    StepSystem(const ColumnModel& mdl, const ColumnState& st, double step)
        : model(mdl), state(st), dt(step), t_new(st.time + step), M(st.intervals()),
          N(static_cast<int>(mdl.n_species())), B(2 * N), dx(mdl.length / M),
          flow(mdl.boundary == BoundaryMode::Flow) {
        scale = std::max(model.inlet_conc, st.mobile.cwiseAbs().maxCoeff());
        if (!(scale > 0.0)) scale = 1.0;
        old.resize((M + 1) * B);
        src_u = Eigen::MatrixXd::Zero(N, M + 1);
        src_th = Eigen::MatrixXd::Zero(N, M + 1);
        for (int m = 0; m <= M; ++m) {
            const double xm = st.grid[static_cast<std::size_t>(m)];
            for (int i = 0; i < N; ++i) {
                const auto is = static_cast<std::size_t>(i);
                old[m * B + i] = st.mobile(i, m) / scale;
                old[m * B + N + i] = st.coverage(i, m);
                if (model.mobile_source) src_u(i, m) = model.mobile_source(is, xm, t_new) / scale;
                if (model.coverage_source) src_th(i, m) = model.coverage_source(is, xm, t_new);
            }
        }
    }

    bool dirichlet(int m) const { return flow && m == 0; }
    double vol(int m) const { return (m == 0 || m == M) ? 0.5 * dx : dx; }
    const SpeciesCoefficients& sp(int i) const { return model.species[static_cast<std::size_t>(i)]; }
    double couple(int i) const { return model.deposit_factor(static_cast<std::size_t>(i)) / scale; }
    double deposition(int i) const { return sp(i).cross_section * sp(i).attachment * scale; }

    // Flux through the face between m and m+1, in scaled units; m = M is the outlet.
    double face_flux(const Eigen::VectorXd& x, int i, int m) const {
        const double v = sp(i).velocity;
        const double D = sp(i).dispersion;
        if (m < 0) return 0.0;
        if (m == M) return flow ? v * x[M * B + i] : 0.0;
        return v * x[m * B + i] - D * (x[(m + 1) * B + i] - x[m * B + i]) / dx;
    }

    double total_coverage(const Eigen::VectorXd& x, int m) const {
        double s = 0.0;
        for (int i = 0; i < N; ++i) s += x[m * B + N + i];
        return s;
    }

    Eigen::VectorXd node_mobile(const Eigen::VectorXd& x, int m) const {
        return x.segment(m * B, N);
    }

    void apply_inlet(Eigen::VectorXd& x) const {
        if (!flow) return;
        for (int i = 0; i < N; ++i) {
            x[i] = model.inlet_value(static_cast<std::size_t>(i), t_new) / scale;
        }
    }

    Eigen::VectorXd residual(const Eigen::VectorXd& x) const {
        Eigen::VectorXd r(x.size());
        for (int m = 0; m <= M; ++m) {
            Eigen::VectorXd rates = Eigen::VectorXd::Zero(N);
            if (model.kernel) rates = kinetics::reaction_rates(node_mobile(x, m), *model.kernel, model.closure);
            const double theta = total_coverage(x, m);
            const double block = model.blocking.value(theta);
            for (int i = 0; i < N; ++i) {
                const int ku = m * B + i;
                const int kt = m * B + N + i;
                if (dirichlet(m)) {
                    r[ku] = x[ku] - model.inlet_value(static_cast<std::size_t>(i), t_new) / scale;
                } else {
                    const double net = face_flux(x, i, m) - face_flux(x, i, m - 1);
                    r[ku] = (x[ku] - old[ku]) + couple(i) * (x[kt] - old[kt]) - dt * scale * rates[i] -
                            dt * src_u(i, m) + dt / vol(m) * net;
                }
                r[kt] = x[kt] - old[kt] -
                        dt * (deposition(i) * x[ku] * block - sp(i).detachment * x[kt] + src_th(i, m));
            }
        }
        return r;
    }

    void jacobian(const Eigen::VectorXd& x, BlockTridiagonal& J) const {
        J.clear();
        for (int m = 0; m <= M; ++m) {
            Eigen::MatrixXd& A = J.diag(m);
            Eigen::MatrixXd jr = Eigen::MatrixXd::Zero(N, N);
            if (model.kernel) jr = kinetics::reaction_jacobian(node_mobile(x, m), *model.kernel, model.closure);
            const double theta = total_coverage(x, m);
            const double block = model.blocking.value(theta);
            const double dblock = model.blocking.derivative(theta);
            for (int i = 0; i < N; ++i) {
                const double v = sp(i).velocity;
                const double D = sp(i).dispersion;
                const double w = dt / vol(m);
                if (dirichlet(m)) {
                    A(i, i) = 1.0;
                } else {
                    double dplus = 0.0;
                    if (m < M) dplus = v + D / dx;
                    else if (flow) dplus = v;
                    const double dminus = m > 0 ? -D / dx : 0.0;
                    A(i, i) += 1.0 + w * (dplus - dminus);
                    for (int j = 0; j < N; ++j) A(i, j) -= dt * scale * jr(i, j);
                    A(i, N + i) += couple(i);
                    if (m < M) J.upper(m)(i, i) = -w * D / dx;
                    if (m > 0) J.lower(m)(i, i) = -w * (v + D / dx);
                }
                const double dep = deposition(i);
                const double u = x[m * B + i];
                A(N + i, i) = -dt * dep * block;
                for (int j = 0; j < N; ++j) A(N + i, N + j) = -dt * dep * u * dblock;
                A(N + i, N + i) += 1.0 + dt * sp(i).detachment;
            }
        }
    }
};

} // namespace

ColumnState step_column(const ColumnState& state, const ColumnModel& model, double dt,
                        const StepOptions& opts, StepDiagnostics* diag) {
    model.validate();
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    const auto n = static_cast<Eigen::Index>(model.n_species());
    const int M = state.intervals();
    if (M < 2 || state.mobile.rows() != n || state.coverage.rows() != n ||
        state.mobile.cols() != M + 1 || state.coverage.cols() != M + 1) {
        throw ShapeError("column state does not match the model");
    }

    const StepSystem sys(model, state, dt);
    Eigen::VectorXd x = sys.old;
    sys.apply_inlet(x);
    BlockTridiagonal J(M + 1, sys.B);
    Eigen::VectorXd r = sys.residual(x);
    double res = r.lpNorm<Eigen::Infinity>();
    int iter = 0;
    while (res > opts.newton_tol) {
        if (iter >= opts.max_iter) {
            throw ConvergenceError("column Newton did not converge at t = " + std::to_string(sys.t_new),
                                   res, iter);
        }
        sys.jacobian(x, J);
        x -= J.solve(r);
        r = sys.residual(x);
        res = r.lpNorm<Eigen::Infinity>();
        ++iter;
    }

    StepDiagnostics d;
    d.iterations = iter;
    d.residual = res;
    d.influx.assign(model.n_species(), 0.0);
    d.outflux.assign(model.n_species(), 0.0);
    d.source.assign(model.n_species(), 0.0);
    for (int i = 0; i < sys.N; ++i) {
        const auto is = static_cast<std::size_t>(i);
        if (sys.flow) {
            d.influx[is] = dt * sys.scale * sys.face_flux(x, i, 0);
            d.outflux[is] = dt * sys.scale * sys.face_flux(x, i, M);
        }
        for (int m = sys.flow ? 1 : 0; m <= M; ++m) d.source[is] += dt * sys.scale * sys.vol(m) * sys.src_u(i, m);
    }

    ColumnState next = state;
    next.time = sys.t_new;
    for (int m = 0; m <= M; ++m) {
        for (int i = 0; i < sys.N; ++i) {
            double& u = x[m * sys.B + i];
            double& th = x[m * sys.B + sys.N + i];
            for (double* v : {&u, &th}) {
                if (*v < 0.0 && *v >= -kinetics::kNegativityTolerance) {
                    *v = 0.0;
                    ++d.clamped;
                }
            }
            next.mobile(i, m) = u * sys.scale;
            next.coverage(i, m) = th;
        }
        if (model.blocking.value(sys.total_coverage(x, m)) < 0.0) ++d.negative_blocking;
    }
    if (diag != nullptr) *diag = std::move(d);
    return next;
}

double BreakthroughCurve::plateau() const {
    return total.empty() ? 0.0 : *std::max_element(total.begin(), total.end());
}

double BreakthroughCurve::time_to_fraction(double fraction) const {
    const double level = fraction * plateau();
    for (std::size_t k = 0; k < total.size(); ++k) {
        if (total[k] >= level && level > 0.0) {
            if (k == 0) return times[0];
            const double w = (level - total[k - 1]) / (total[k] - total[k - 1]);
            return times[k - 1] + w * (times[k] - times[k - 1]);
        }
    }
    return std::numeric_limits<double>::infinity();
}

double MassLedger::relative_error() const {
    const double in = initial + injected + sourced;
    const double held = mobile + deposited + outflow;
    const double ref = std::max(std::abs(in), std::abs(held));
    return ref > 0.0 ? std::abs(in - held) / ref : 0.0;
}

MassLedger inventory(const ColumnState& state, const ColumnModel& model) {
    MassLedger ledger;
    const int M = state.intervals();
    const int first = model.boundary == BoundaryMode::Flow ? 1 : 0;
    for (std::size_t i = 0; i < model.n_species(); ++i) {
        const double w = model.species[i].mass_weight;
        const double c = model.deposit_factor(i);
        for (int m = first; m <= M; ++m) {
            const auto ii = static_cast<Eigen::Index>(i);
            ledger.mobile += w * state.volume(m) * state.mobile(ii, m);
            ledger.deposited += w * state.volume(m) * c * state.coverage(ii, m);
        }
    }
    return ledger;
}

namespace {

void record(BreakthroughCurve& curve, const ColumnState& s, const ColumnModel& model) {
    const int M = s.intervals();
    curve.times.push_back(s.time);
    double total = 0.0;
    for (std::size_t i = 0; i < model.n_species(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        curve.outlet[i].push_back(s.mobile(ii, M));
        curve.coverage[i].push_back(s.coverage(ii, M));
        total += model.species[i].mass_weight * s.mobile(ii, M);
    }
    curve.total.push_back(total);
}

double max_total_coverage(const ColumnState& s) {
    return s.coverage.rows() == 0 ? 0.0 : s.coverage.colwise().sum().maxCoeff();
}

} // namespace

ColumnRun run_column_from(const ColumnState& initial, const ColumnModel& model, double t_end,
                          double dt, const StepOptions& opts) {
    model.validate();
    if (!(dt > 0.0)) throw ParameterError("time step must be positive");
    ColumnRun run;
    run.curve.outlet.resize(model.n_species());
    run.curve.coverage.resize(model.n_species());
    const MassLedger start = inventory(initial, model);
    run.mass.initial = start.mobile + start.deposited;
    run.max_total_coverage = max_total_coverage(initial);

    ColumnState state = initial;
    record(run.curve, state, model);
    const double t0 = model.pulse_duration;
    const double eps = 1e-9 * dt;
    while (state.time < t_end - eps) {
        double next = std::min(state.time + dt, t_end);
        if (t_end - next < eps) next = t_end;
        if (!model.inlet && state.time < t0 - eps && next > t0 + eps) next = t0;
        StepDiagnostics d;
        state = step_column(state, model, next - state.time, opts, &d);
        state.time = next;
        for (std::size_t i = 0; i < model.n_species(); ++i) {
            const double w = model.species[i].mass_weight;
            run.mass.injected += w * d.influx[i];
            run.mass.outflow += w * d.outflux[i];
            run.mass.sourced += w * d.source[i];
        }
        run.clamped += d.clamped;
        run.negative_blocking += d.negative_blocking;
        run.max_total_coverage = std::max(run.max_total_coverage, max_total_coverage(state));
        ++run.steps;
        record(run.curve, state, model);
    }
    const MassLedger end = inventory(state, model);
    run.mass.mobile = end.mobile;
    run.mass.deposited = end.deposited;
    run.final_state = std::move(state);
    return run;
}

ColumnRun run_column(const ColumnModel& model, double t_end, double dt, int intervals,
                     const StepOptions& opts) {
    return run_column_from(ColumnState::zero(model, intervals), model, t_end, dt, opts);
}

ColumnModel effective_upscaled_system(const ColumnParams& params,
                                      const std::vector<homogenize::EffectiveTensors>& tensors,
                                      const std::vector<double>& attachment_rates,
                                      const std::vector<double>& detachment_rates,
                                      const kinetics::SpeciesLadder& ladder,
                                      std::optional<kinetics::AggregationKernel> kernel,
                                      const ResolveOptions& opts) {
    const std::size_t n = ladder.size();
    if (tensors.size() != n || attachment_rates.size() != n || detachment_rates.size() != n) {
        throw ShapeError("homogenized inputs must have one entry per size class");
    }
    ColumnModel model = resolve_column(params, ladder, BlockingFunction::none(), std::move(kernel), opts);
    for (std::size_t i = 0; i < n; ++i) {
        if (attachment_rates[i] < 0.0 || detachment_rates[i] < 0.0) {
            throw ParameterError("effective exchange rates must be nonnegative");
        }
        auto& c = model.species[i];
        const double molecular = tensors[i].species_diffusivity * tensors[i].tortuosity(0, 0);
        c.dispersion = molecular + params.dispersivity * c.velocity;
        c.attachment = model.specific_surface > 0.0 ? attachment_rates[i] / model.specific_surface : 0.0;
        c.detachment = detachment_rates[i];
    }
    model.validate();
    return model;
}

} // namespace colloid::transport
