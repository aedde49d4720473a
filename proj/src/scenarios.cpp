#include "colloid/scenarios.hpp"

#include "colloid/errors.hpp"
#include "colloid/homogenize.hpp"
#include "colloid/kinetics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>

namespace colloid::scenarios {

namespace fs = std::filesystem;
using transport::BlockingKind;

namespace {

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string short_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

CheckResult check(std::string name, bool ok, std::string detail) {
    return {std::move(name), ok, std::move(detail)};
}

std::vector<std::string> header_lines(const ScenarioConfig& cfg, const std::string& title) {
    std::vector<std::string> lines{title};
    std::istringstream in(to_config_text(cfg));
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.rfind("output_dir", 0) != 0) lines.push_back(line);
    }
    const auto g = nondim::dimensionless_groups(reference_of(cfg));
    lines.push_back("groups: epsilon = " + num(g.epsilon) + ", thiele = " + num(g.thiele) + ", biot = " +
                    num(g.biot));
    lines.push_back(std::string("regime: ") + (g.fast_reaction ? "fast reaction" : "moderate reaction") + ", " +
                    (g.slow_deposition ? "slow deposition" : "non-slow deposition"));
    return lines;
}

/// Collects files written by a run so a failure can remove them.
class OutputSet {
public:
    explicit OutputSet(fs::path dir) : dir_(std::move(dir)) {
        created_dir_ = !fs::exists(dir_);
        fs::create_directories(dir_);
    }
    ~OutputSet() {
        if (committed_) return;
        std::error_code ec;
        for (const auto& f : files_) fs::remove(f, ec);
        if (created_dir_ && fs::is_empty(dir_, ec)) fs::remove(dir_, ec);
    }
    std::ofstream open(const std::string& name) {
        const fs::path p = dir_ / name;
        files_.push_back(p);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
        return out;
    }
    void commit() { committed_ = true; }
    const std::vector<fs::path>& files() const { return files_; }

private:
    fs::path dir_;
    std::vector<fs::path> files_;
    bool created_dir_ = false;
    bool committed_ = false;
};

void write_comments(std::ostream& out, const std::vector<std::string>& header) {
    for (const auto& h : header) out << "# " << h << '\n';
}

transport::StepOptions step_options(const ScenarioConfig& cfg) {
    return {cfg.numerics.newton_tol, cfg.numerics.newton_max_iter};
}

struct LabeledRun {
    std::string label;
    transport::ColumnModel model;
    transport::ColumnRun run;
};

LabeledRun run_labeled(const ScenarioConfig& cfg, std::string label, transport::ColumnModel model) {
    auto run = transport::run_column(model, cfg.numerics.t_end, cfg.numerics.dt, cfg.numerics.intervals,
                                     step_options(cfg));
    return {std::move(label), std::move(model), std::move(run)};
}

/// Runs concurrently; results come back in submission order.
std::vector<LabeledRun> run_all(const ScenarioConfig& cfg,
                                std::vector<std::pair<std::string, transport::ColumnModel>> jobs) {
    std::vector<std::future<LabeledRun>> futures;
    futures.reserve(jobs.size());
    for (auto& [label, model] : jobs) {
        futures.push_back(std::async(std::launch::async, run_labeled, std::cref(cfg), label, model));
    }
    std::vector<LabeledRun> out;
    std::exception_ptr first_error;
    for (auto& f : futures) {
        try {
            out.push_back(f.get());
        } catch (...) {
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return out;
}

void column_checks(RunReport& report, const LabeledRun& r) {
    const double err = r.run.mass.relative_error();
    report.checks.push_back(check("mass balance (" + r.label + ")", err <= 1e-6,
                                  "relative error " + short_num(err) + " <= 1e-06"));
    const double cap = r.model.blocking.first_root();
    if (std::isfinite(cap)) {
        report.checks.push_back(check("coverage cap (" + r.label + ")", r.run.max_total_coverage <= cap + 1e-6,
                                      "max theta " + short_num(r.run.max_total_coverage) + " <= first root " +
                                          short_num(cap)));
    }
    report.checks.push_back(check("blocking nonnegative (" + r.label + ")", r.run.negative_blocking == 0,
                                  std::to_string(r.run.negative_blocking) + " node-steps with B < 0"));
    report.measurements.push_back(r.label + " plateau: " + num(r.run.curve.plateau()));
    report.measurements.push_back(r.label + " t50 [s]: " + num(r.run.curve.time_to_fraction(0.5)));
    report.measurements.push_back(r.label + " cumulative outflow: " + num(r.run.mass.outflow));
    report.measurements.push_back(r.label + " deposited: " + num(r.run.mass.deposited));
    report.measurements.push_back(r.label + " steps: " + std::to_string(r.run.steps));
    if (r.run.clamped > 0) {
        report.measurements.push_back(r.label + " clamped entries: " + std::to_string(r.run.clamped));
    }
}

void write_run(OutputSet& out, const ScenarioConfig& cfg, const std::string& file, const LabeledRun& r) {
    auto header = header_lines(cfg, std::string("colloidsim ") + to_string(cfg.scenario) + " run " + r.label);
    header.push_back("blocking: " + std::string(transport::to_string(r.model.blocking.kind)) +
                     ", classes: " + std::to_string(r.model.n_species()));
    for (std::size_t i = 0; i < r.model.n_species(); ++i) {
        const auto& s = r.model.species[i];
        header.push_back("class " + std::to_string(i + 1) + ": velocity = " + num(s.velocity) +
                         ", dispersion = " + num(s.dispersion) + ", attachment = " + num(s.attachment) +
                         ", cross_section = " + num(s.cross_section));
    }
    header.push_back("specific_surface = " + num(r.model.specific_surface));
    auto f = out.open(file);
    write_breakthrough_csv(f, r.run.curve, header);
}

void log(const RunOptions& opts, const std::string& msg) {
    if (opts.log) *opts.log << msg << '\n';
}

void run_cell(const ScenarioConfig& cfg, const RunOptions& opts, OutputSet& out, RunReport& report) {
    const auto& g = cfg.geometry;
    const auto geom = homogenize::UnitCellGeometry::make(g.shape, g.resolution, g.porosity);
    log(opts, "cell: resolution " + std::to_string(g.resolution) + ", porosity " + num(geom.porosity()));
    homogenize::CellSolverOptions so;
    so.tol = g.solver_tol;
    const auto sol = homogenize::solve_cell_problems(geom, 1.0, so);
    const auto ladder = kinetics::build_ladder(cfg.ladder.n_classes, cfg.ladder.monomer_radius,
                                               cfg.ladder.monomer_diffusivity, cfg.ladder.fractal_dimension);
    const auto tensors = homogenize::effective_diffusion_ladder(geom, sol, ladder.diffusivities);

    auto f = out.open("tensors.csv");
    auto header = header_lines(cfg, "colloidsim cell_tensors");
    header.push_back("realised porosity = " + num(geom.porosity()));
    write_comments(f, header);
    f << "species,D11,D12,D21,D22,T11,T12,T21,T22,porosity\n";
    bool bounds_ok = true;
    bool symmetric = true;
    bool tortuosity_ok = true;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
        const auto& t = tensors[i];
        f << (i + 1) << ',' << num(t.diffusion(0, 0)) << ',' << num(t.diffusion(0, 1)) << ','
          << num(t.diffusion(1, 0)) << ',' << num(t.diffusion(1, 1)) << ',' << num(t.tortuosity(0, 0)) << ','
          << num(t.tortuosity(0, 1)) << ',' << num(t.tortuosity(1, 0)) << ',' << num(t.tortuosity(1, 1)) << ','
          << num(t.porosity) << '\n';
        bounds_ok = bounds_ok && homogenize::tensor_bounds(geom, t).within(0.01);
        const double scale = t.diffusion.cwiseAbs().maxCoeff();
        symmetric = symmetric && std::abs(t.diffusion(0, 1) - t.diffusion(1, 0)) <= 1e-8 * scale;
        for (int d = 0; d < 2; ++d) {
            tortuosity_ok = tortuosity_ok && t.tortuosity(d, d) > 0.0 && t.tortuosity(d, d) <= 1.0 + 1e-12;
        }
    }
    const auto b = homogenize::tensor_bounds(geom, tensors.front());
    report.checks.push_back(check("bounds", bounds_ok,
                                  "eigenvalues of D/d " + short_num(b.eigenvalues[0]) + ", " +
                                      short_num(b.eigenvalues[1]) + " in [" + short_num(b.lower) + ", " +
                                      short_num(b.upper) + "] within 1%"));
    report.checks.push_back(check("symmetry", symmetric, "|D12 - D21| <= 1e-8 max|D|"));
    report.checks.push_back(check("tortuosity range", tortuosity_ok, "diagonal of T* in (0, 1]"));

    const auto dep = homogenize::effective_deposition(geom, g.surface_rate_a, g.surface_rate_b, g.biot);
    report.measurements.push_back("porosity: " + num(geom.porosity()));
    report.measurements.push_back("grain perimeter: " + num(dep.perimeter));
    report.measurements.push_back("effective attachment A: " + num(dep.attachment));
    report.measurements.push_back("effective detachment B: " + num(dep.detachment));
    report.measurements.push_back("T11: " + num(tensors.front().tortuosity(0, 0)));
    report.measurements.push_back("T22: " + num(tensors.front().tortuosity(1, 1)));
    report.measurements.push_back("cg iterations: " + std::to_string(sol.iterations[0]) + ", " +
                                  std::to_string(sol.iterations[1]));
}

void run_batch_scenario(const ScenarioConfig& cfg, const RunOptions& opts, OutputSet& out, RunReport& report) {
    const auto ladder = kinetics::build_ladder(cfg.ladder.n_classes, cfg.ladder.monomer_radius,
                                               cfg.ladder.monomer_diffusivity, cfg.ladder.fractal_dimension);
    const auto kernel = make_kernel(cfg, ladder);
    Eigen::VectorXd u0 = Eigen::VectorXd::Zero(cfg.ladder.n_classes);
    u0[0] = cfg.batch.initial_monomers;
    const kinetics::Concentrations start(u0);
    log(opts, "batch: " + std::to_string(cfg.batch.steps) + " steps of " + num(cfg.batch.dt) + " s");
    const kinetics::NewtonOptions newton{cfg.numerics.newton_tol, cfg.numerics.newton_max_iter};
    const auto traj = kinetics::run_batch(start, kernel, cfg.batch.dt, cfg.batch.steps, newton, cfg.kernel.closure);

    auto f = out.open("batch.csv");
    write_comments(f, header_lines(cfg, "colloidsim batch_aggregation"));
    f << "time_s";
    for (int i = 1; i <= cfg.ladder.n_classes; ++i) f << ",u_" << i;
    f << ",mass_moment\n";
    double min_entry = 0.0;
    double worst_drift = 0.0;
    double previous = kinetics::mass_moment(u0);
    bool nonincreasing = true;
    const double m0 = kinetics::mass_moment(u0);
    for (std::size_t k = 0; k < traj.times.size(); ++k) {
        const auto& u = traj.states[k];
        f << num(traj.times[k]);
        for (Eigen::Index i = 0; i < u.size(); ++i) f << ',' << num(u[i]);
        const double m = kinetics::mass_moment(u);
        f << ',' << num(m) << '\n';
        min_entry = std::min(min_entry, u.minCoeff());
        if (m0 > 0.0) worst_drift = std::max(worst_drift, std::abs(m - m0) / m0);
        nonincreasing = nonincreasing && m <= previous * (1.0 + 1e-12);
        previous = m;
    }
    if (cfg.kernel.closure == kinetics::Closure::Conservative) {
        report.checks.push_back(check("mass conservation", worst_drift <= 1e-10,
                                      "max relative drift " + short_num(worst_drift) + " <= 1e-10"));
    } else {
        report.checks.push_back(check("mass nonincreasing", nonincreasing, "lossy closure"));
    }
    report.checks.push_back(check("nonnegativity", min_entry >= 0.0, "min entry " + short_num(min_entry)));
    report.measurements.push_back("dt: " + num(cfg.batch.dt));
    report.measurements.push_back("nonnegativity dt bound: " +
                                  num(kinetics::nonnegativity_dt_bound(start, kernel)));
    report.measurements.push_back("final mass moment: " + num(kinetics::mass_moment(traj.states.back())));
    report.measurements.push_back("clamped entries: " + std::to_string(traj.clamped));
}

void run_column_single(const ScenarioConfig& cfg, const RunOptions& opts, OutputSet& out, RunReport& report) {
    log(opts, "column: single species, " + std::to_string(cfg.numerics.intervals) + " intervals");
    const auto r = run_labeled(cfg, "single", make_column_model(cfg, 1, cfg.blocking.kind));
    column_checks(report, r);
    if (cfg.column.params.kinetic_rate == 0.0) {
        const double n0 = cfg.column.params.inlet_conc;
        const double plateau = r.run.curve.plateau();
        report.checks.push_back(check("tracer plateau", std::abs(plateau - n0) <= 0.01 * n0,
                                      "plateau / n0 = " + short_num(plateau / n0)));
    }
    write_run(out, cfg, "breakthrough.csv", r);
}

void run_column_aggregating(const ScenarioConfig& cfg, const RunOptions& opts, OutputSet& out,
                            RunReport& report) {
    log(opts, "column: " + std::to_string(cfg.ladder.n_classes) + " classes against single species");
    auto runs = run_all(cfg, {{"aggregating", make_column_model(cfg, cfg.ladder.n_classes, cfg.blocking.kind)},
                              {"single", make_column_model(cfg, 1, cfg.blocking.kind)}});
    const auto& agg = runs[0];
    const auto& single = runs[1];
    column_checks(report, agg);
    column_checks(report, single);
    const double pa = agg.run.curve.plateau();
    const double ps = single.run.curve.plateau();
    report.checks.push_back(check("plateau ordering", pa <= ps,
                                  "aggregating " + short_num(pa) + " <= single " + short_num(ps)));
    // Pointwise ordering up to a tail allowance of 1e-6 of the single-species plateau.
    double worst = -std::numeric_limits<double>::infinity();
    double worst_time = 0.0;
    for (std::size_t k = 0; k < agg.run.curve.total.size(); ++k) {
        const double excess = agg.run.curve.total[k] - single.run.curve.total[k];
        if (excess > worst) {
            worst = excess;
            worst_time = agg.run.curve.times[k];
        }
    }
    report.checks.push_back(check("pointwise ordering", worst <= 1e-6 * ps,
                                  "max excess " + short_num(worst) + " at t = " + short_num(worst_time) +
                                      " s, allowance " + short_num(1e-6 * ps)));
    report.measurements.push_back("t50 difference aggregating - single [s]: " +
                                  num(agg.run.curve.time_to_fraction(0.5) - single.run.curve.time_to_fraction(0.5)));
    write_run(out, cfg, "breakthrough_aggregating.csv", agg);
    write_run(out, cfg, "breakthrough_single.csv", single);
}

void run_blocking_compare(const ScenarioConfig& cfg, const RunOptions& opts, OutputSet& out, RunReport& report) {
    const int n = cfg.ladder.n_classes;
    log(opts, "column: blocking comparison with " + std::to_string(n) + " class(es)");
    auto runs = run_all(cfg, {{"none", make_column_model(cfg, n, BlockingKind::None)},
                              {"langmuir", make_column_model(cfg, n, BlockingKind::Langmuir)},
                              {"rsa", make_column_model(cfg, n, BlockingKind::RSA)}});
    for (const auto& r : runs) {
        column_checks(report, r);
        write_run(out, cfg, "breakthrough_" + r.label + ".csv", r);
    }
    report.measurements.push_back("note: RSA argument is x = beta * theta");
}

void run_rate_sweep(const ScenarioConfig& cfg, const RunOptions& opts, OutputSet& out, RunReport& report) {
    std::vector<std::pair<std::string, transport::ColumnModel>> jobs;
    for (std::size_t k = 0; k < cfg.sweep.multipliers.size(); ++k) {
        const double m = cfg.sweep.multipliers[k];
        jobs.emplace_back("rate x" + short_num(m),
                          make_column_model(cfg, cfg.ladder.n_classes, cfg.blocking.kind, m));
    }
    log(opts, "column: rate sweep over " + std::to_string(jobs.size()) + " multipliers");
    auto runs = run_all(cfg, std::move(jobs));

    auto summary = out.open("sweep.csv");
    write_comments(summary, header_lines(cfg, "colloidsim rate_sweep"));
    summary << "multiplier,cumulative_outflow,deposited,plateau,t50_s\n";
    std::vector<std::pair<double, double>> outflow;
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& r = runs[k];
        column_checks(report, r);
        write_run(out, cfg, "breakthrough_rate_" + std::to_string(k + 1) + ".csv", r);
        summary << num(cfg.sweep.multipliers[k]) << ',' << num(r.run.mass.outflow) << ','
                << num(r.run.mass.deposited) << ',' << num(r.run.curve.plateau()) << ','
                << num(r.run.curve.time_to_fraction(0.5)) << '\n';
        outflow.emplace_back(cfg.sweep.multipliers[k], r.run.mass.outflow);
    }
    std::sort(outflow.begin(), outflow.end());
    bool decreasing = true;
    std::string detail;
    for (std::size_t k = 0; k < outflow.size(); ++k) {
        if (k > 0) decreasing = decreasing && outflow[k].second < outflow[k - 1].second;
        detail += (k ? " > " : "") + short_num(outflow[k].second);
    }
    report.checks.push_back(check("outflow decreases with rate", decreasing, detail));
}

} // namespace

bool RunReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string RunReport::text(const ScenarioConfig& cfg) const {
    std::ostringstream out;
    out << "scenario: " << to_string(scenario) << "\n\n";
    out << "resolved configuration:\n";
    std::istringstream in(to_config_text(cfg));
    for (std::string line; std::getline(in, line);) out << (line.empty() ? "" : "  ") << line << '\n';
    const auto ref = reference_of(cfg);
    const auto g = nondim::dimensionless_groups(ref);
    out << "\nreference scales: tau = " << num(ref.time_scale) << " s, L = " << num(ref.length_scale)
        << " m, d = " << num(ref.diffusivity_scale) << " m^2/s, u0 = " << num(ref.mobile_conc_scale)
        << ", v0 = " << num(ref.deposited_conc_scale) << ", a0 = " << num(ref.deposition_rate_scale) << '\n';
    out << "dimensionless groups: epsilon = " << num(g.epsilon) << ", thiele = " << num(g.thiele)
        << ", biot = " << num(g.biot) << '\n';
    out << "regime labels: " << (g.fast_reaction ? "fast reaction" : "moderate reaction") << ", "
        << (g.slow_deposition ? "slow deposition" : "non-slow deposition") << "\n\n";
    out << "checks:\n";
    for (const auto& c : checks) out << "  " << c.name << ": " << (c.passed ? "PASS" : "FAIL") << " (" << c.detail << ")\n";
    out << "\nmeasurements:\n";
    for (const auto& m : measurements) out << "  " << m << '\n';
    out << "\nfiles:\n";
    for (const auto& f : files) out << "  " << f.generic_string() << '\n';
    char wall[64];
    std::snprintf(wall, sizeof wall, "%.3f", wall_seconds);
    out << "\nwall time: " << wall << " s\n";
    out << "result: " << (passed() ? "PASS" : "FAIL") << '\n';
    return out.str();
}

nondim::ReferenceQuantities reference_of(const ScenarioConfig& cfg) {
    const auto& r = cfg.reference;
    return nondim::ReferenceQuantities::diffusive(r.length, r.diffusivity, r.mobile_conc, r.deposited_conc,
                                                  r.deposition_rate);
}

kinetics::AggregationKernel make_kernel(const ScenarioConfig& cfg, const kinetics::SpeciesLadder& ladder) {
    const int n = static_cast<int>(ladder.size());
    if (cfg.kernel.kind == kinetics::KernelKind::Constant) {
        return kinetics::AggregationKernel::constant(n, cfg.kernel.beta0, cfg.kernel.efficiency);
    }
    const auto brownian = kinetics::brownian_kernel(ladder, fluid_of(cfg));
    return kinetics::AggregationKernel(Eigen::MatrixXd::Constant(n, n, cfg.kernel.efficiency),
                                       brownian.collision_rate(), kinetics::KernelKind::Brownian);
}

transport::BlockingFunction make_blocking(const ScenarioConfig& cfg, BlockingKind kind) {
    switch (kind) {
    case BlockingKind::None: return transport::BlockingFunction::none();
    case BlockingKind::Langmuir: return transport::BlockingFunction::langmuir(cfg.blocking.beta);
    case BlockingKind::RSA: return transport::BlockingFunction::rsa(cfg.blocking.beta, cfg.blocking.theta_inf);
    }
    return transport::BlockingFunction::none();
}

transport::ColumnModel make_column_model(const ScenarioConfig& cfg, int n_classes, BlockingKind blocking,
                                         double rate_multiplier) {
    const auto ladder = kinetics::build_ladder(n_classes, cfg.ladder.monomer_radius,
                                               cfg.ladder.monomer_diffusivity, cfg.ladder.fractal_dimension);
    std::optional<kinetics::AggregationKernel> kernel;
    if (n_classes > 1) kernel = make_kernel(cfg, ladder).scaled(rate_multiplier);
    transport::ResolveOptions ro;
    ro.fluid = fluid_of(cfg);
    ro.affinity_exponent = cfg.column.affinity_exponent;
    ro.closure = cfg.kernel.closure;
    return transport::resolve_column(cfg.column.params, ladder, make_blocking(cfg, blocking), std::move(kernel), ro);
}

void write_breakthrough_csv(std::ostream& out, const transport::BreakthroughCurve& curve,
                            const std::vector<std::string>& header) {
    write_comments(out, header);
    const std::size_t n = curve.outlet.size();
    out << "time_s";
    for (std::size_t i = 1; i <= n; ++i) out << ",u_" << i;
    for (std::size_t i = 1; i <= n; ++i) out << ",theta_" << i;
    out << ",total_mass_weighted\n";
    for (std::size_t k = 0; k < curve.times.size(); ++k) {
        out << num(curve.times[k]);
        for (std::size_t i = 0; i < n; ++i) out << ',' << num(curve.outlet[i][k]);
        for (std::size_t i = 0; i < n; ++i) out << ',' << num(curve.coverage[i][k]);
        out << ',' << num(curve.total[k]) << '\n';
    }
}

RunReport run_scenario(const ScenarioConfig& cfg, const RunOptions& opts) {
    const auto start = std::chrono::steady_clock::now();
    RunReport report;
    report.scenario = cfg.scenario;
    OutputSet out(cfg.output_dir);
    switch (cfg.scenario) {
    case Scenario::CellTensors: run_cell(cfg, opts, out, report); break;
    case Scenario::BatchAggregation: run_batch_scenario(cfg, opts, out, report); break;
    case Scenario::ColumnSingle: run_column_single(cfg, opts, out, report); break;
    case Scenario::ColumnAggregating: run_column_aggregating(cfg, opts, out, report); break;
    case Scenario::BlockingCompare: run_blocking_compare(cfg, opts, out, report); break;
    case Scenario::RateSweep: run_rate_sweep(cfg, opts, out, report); break;
    }
    {
        auto f = out.open("resolved.cfg");
        f << to_config_text(cfg);
    }
    report.files = out.files();
    report.files.push_back(cfg.output_dir / "report.txt");
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    {
        auto f = out.open("report.txt");
        f << report.text(cfg);
    }
    out.commit();
    return report;
}

} // namespace colloid::scenarios
