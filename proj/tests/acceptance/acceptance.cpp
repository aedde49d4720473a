#include "colloid/blocking.hpp"
#include "colloid/config.hpp"
#include "colloid/homogenize.hpp"
#include "colloid/kinetics.hpp"
#include "colloid/nondim.hpp"
#include "colloid/scenarios.hpp"
#include "colloid/transport.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

using namespace colloid;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* name, double budget_s, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < budget_s;
    const bool ok = o.passed && in_time;
    if (!ok) ++failures;
    std::printf("[%s] %2d %s: %s; %.2f s (limit %.0f s)%s\n", ok ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
                budget_s, in_time ? "" : " over time");
    std::fflush(stdout);
}

double fitted_order(const std::vector<double>& h, const std::vector<double>& err) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(h.size());
    for (std::size_t k = 0; k < h.size(); ++k) {
        const double x = std::log(h[k]), y = std::log(err[k]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double table3_dt() { return transport::ColumnParams{}.pulse_duration / 500.0; }
double table3_end() { return 2.0 * transport::ColumnParams{}.pulse_duration; }

transport::ColumnModel single_species(const transport::ColumnParams& p, const transport::BlockingFunction& b) {
    const double d = kinetics::einstein_stokes_diffusivity({}, p.particle_radius);
    const auto ladder = kinetics::build_ladder(1, p.particle_radius, d, 2.5);
    return transport::resolve_column(p, ladder, b, std::nullopt);
}

scenarios::ScenarioConfig aggregating_config() {
    auto cfg = scenarios::parse_config("[scenario]\nkind = column_aggregating\noutput_dir = unused\n"
                            "[column]\n[ladder]\nn_classes = 2\n[kernel]\nkind = constant\n[numerics]\n");
    scenarios::resolve_defaults(cfg);
    return cfg;
}

Outcome mass_conservation() {
    Eigen::VectorXd init = Eigen::VectorXd::Zero(10);
    init[0] = 1.0;
    const kinetics::Concentrations u0(init);
    const auto kernel = kinetics::AggregationKernel::constant(10, 1.0);
    const auto traj = kinetics::run_batch(u0, kernel, 0.01, 1000);
    const double m0 = kinetics::mass_moment(traj.states.front());
    double worst = 0.0;
    for (const auto& s : traj.states) worst = std::max(worst, std::abs(kinetics::mass_moment(s) - m0) / m0);
    return {worst <= 1e-10 && traj.states.size() == 1001, fmt("max relative drift %.3e (<= 1e-10)", worst)};
}

Outcome empty_cell() {
    const int n = 128;
    const double d = 1.6358e-12;
    const auto g = homogenize::UnitCellGeometry::from_mask(n, std::vector<std::uint8_t>(n * n, 0));
    const auto t = homogenize::effective_diffusion(g, homogenize::solve_cell_problems(g, d), d);
    const double err = (t.diffusion - d * Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    return {err <= 1e-8 * d, fmt("|D - dI|_inf / d = %.3e (<= 1e-8)", err / d)};
}

Outcome disc_structure() {
    const auto g = homogenize::UnitCellGeometry::make(homogenize::GrainShape::IsotropicDisc, 256, 0.75);
    const auto t = homogenize::effective_diffusion(g, homogenize::solve_cell_problems(g, 1.0), 1.0);
    const auto& D = t.diffusion;
    const double aniso = std::abs(D(0, 0) - D(1, 1)) / D(0, 0);
    const double off = std::abs(D(0, 1)) / D(0, 0);
    const auto b = homogenize::tensor_bounds(g, t);
    const double t11 = t.tortuosity(0, 0), t22 = t.tortuosity(1, 1);
    const bool tort = t11 > 0.0 && t11 <= 1.0 && t22 > 0.0 && t22 <= 1.0;
    const bool ok = aniso <= 1e-3 && off <= 1e-6 && b.within(0.01) && tort;
    return {ok, fmt("D11 %.6f, |D11-D22|/D11 %.2e, |D12|/D11 %.2e, eigenvalues in [%.3f, %.4f] within 1%%: %s, "
                    "T* diagonal %.4f %.4f",
                    D(0, 0), aniso, off, b.lower, b.upper, b.within(0.01) ? "yes" : "no", t11, t22)};
}

Outcome self_convergence() {
    auto d11 = [](int res) {
        const auto g = homogenize::UnitCellGeometry::make(homogenize::GrainShape::IsotropicDisc, res, 0.75);
        homogenize::CellSolverOptions opts;
        opts.tol = 1e-10;
        return homogenize::effective_diffusion(g, homogenize::solve_cell_problems(g, 1.0, opts), 1.0).diffusion(0, 0);
    };
    const double ref = d11(1024);
    std::vector<double> h, err;
    for (int res : {64, 128, 256}) {
        h.push_back(1.0 / res);
        err.push_back(std::abs(d11(res) - ref));
    }
    const double p = fitted_order(h, err);
    return {p >= 1.0, fmt("D11 errors vs res 1024: %.3e %.3e %.3e, fitted order %.2f (>= 1)", err[0], err[1], err[2], p)};
}

Outcome nondim_identities() {
    std::mt19937_64 rng(20240611);
    std::uniform_real_distribution<double> e(-12.0, 12.0);
    auto draw = [&] { return std::pow(10.0, e(rng)); };
    double worst_formula = 0.0, worst_identity = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const auto r = nondim::ReferenceQuantities::make(draw(), draw(), draw(), draw(), draw(), draw());
        const auto g = nondim::dimensionless_groups(r);
        const double L = r.length_scale, d = r.diffusivity_scale, u0 = r.mobile_conc_scale;
        const double v0 = r.deposited_conc_scale, a0 = r.deposition_rate_scale;
        auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
        worst_formula = std::max({worst_formula, rel(g.epsilon, a0 * L / d), rel(g.thiele, L * L * u0 / d),
                                  rel(g.biot, a0 * L * L * u0 / (d * v0))});
        worst_identity = std::max(worst_identity, rel(g.biot, g.epsilon * L * u0 / v0));
    }
    return {worst_formula <= 1e-14 && worst_identity <= 1e-14,
            fmt("1000 draws, worst formula %.2e, worst Bi = eps L u0 / v0 %.2e (<= 1e-14)", worst_formula,
                worst_identity)};
}

Outcome tracer() {
    transport::ColumnParams p;
    p.kinetic_rate = 0.0;
    const auto run = transport::run_column(single_species(p, transport::BlockingFunction::none()), table3_end(),
                                           table3_dt(), 200);
    const double plateau = run.curve.plateau() / p.inlet_conc;
    const double mass = run.mass.relative_error();
    return {std::abs(plateau - 1.0) <= 0.01 && mass <= 1e-6,
            fmt("plateau / n0 = %.6f (within 1%%), mass balance %.2e (<= 1e-6)", plateau, mass)};
}

Outcome blocking_caps() {
    std::string detail;
    bool ok = true;
    for (double k : {5e-7, 5e-5}) {
        transport::ColumnParams p;
        p.kinetic_rate = k;
        const auto lang = transport::BlockingFunction::langmuir(2.9);
        const auto rsa = transport::BlockingFunction::rsa(2.9, 0.345);
        const double root = rsa.first_root();
        const auto rl = transport::run_column(single_species(p, lang), table3_end(), table3_dt(), 200);
        const auto rr = transport::run_column(single_species(p, rsa), table3_end(), table3_dt(), 200);
        ok = ok && rl.max_total_coverage <= 1.0 / 2.9 + 1e-6 && rr.max_total_coverage <= root;
        detail += fmt("%sk=%.0e: Langmuir max %.6f (cap %.6f), RSA max %.6f (root %.6f)", detail.empty() ? "" : "; ",
                      k, rl.max_total_coverage, 1.0 / 2.9 + 1e-6, rr.max_total_coverage, root);
    }
    return {ok, detail};
}

Outcome aggregation_ordering() {
    const auto cfg = aggregating_config();
    const auto agg = scenarios::make_column_model(cfg, 2, transport::BlockingKind::None);
    const auto one = scenarios::make_column_model(cfg, 1, transport::BlockingKind::None);
    bool ok = true;
    std::vector<int> orders;
    std::string detail;
    for (int M : {200, 400}) {
        const auto a = transport::run_column(agg, cfg.numerics.t_end, cfg.numerics.dt, M);
        const auto s = transport::run_column(one, cfg.numerics.t_end, cfg.numerics.dt, M);
        const double ta = a.curve.time_to_fraction(0.5), ts = s.curve.time_to_fraction(0.5);
        const bool later = ta > ts;
        const bool lower = a.curve.plateau() <= s.curve.plateau();
        ok = ok && later && lower;
        orders.push_back(later ? 1 : -1);
        detail += fmt("%sM=%d: t50 aggregating %.2f s vs single %.2f s, plateau ratio %.6f", detail.empty() ? "" : "; ",
                      M, ta, ts, a.curve.plateau() / s.curve.plateau());
    }
    ok = ok && orders[0] == orders[1];
    return {ok, detail};
}

Outcome rate_doubling() {
    const auto cfg = aggregating_config();
    const auto base = scenarios::make_column_model(cfg, 2, transport::BlockingKind::None, 1.0);
    const auto fast = scenarios::make_column_model(cfg, 2, transport::BlockingKind::None, 2.0);
    bool ok = true;
    std::string detail;
    for (int M : {200, 400}) {
        const double o1 = transport::run_column(base, cfg.numerics.t_end, cfg.numerics.dt, M).mass.outflow;
        const double o2 = transport::run_column(fast, cfg.numerics.t_end, cfg.numerics.dt, M).mass.outflow;
        ok = ok && o2 < o1;
        detail += fmt("%sM=%d: outflow ratio 2x/1x %.6f", detail.empty() ? "" : "; ", M, o2 / o1);
    }
    return {ok, detail};
}

// Smooth exact pair u, theta with zero outlet gradient; sources make it solve the column equations.
// Coefficients, grid and step are the reference column's, so the cell Peclet number is the production one.
Outcome manufactured() {
    const transport::ColumnParams p;
    auto m = single_species(p, transport::BlockingFunction::none());
    auto& s = m.species[0];
    s.detachment = 1e-3;
    const double L = m.length, v = s.velocity, D = s.dispersion, f = m.specific_surface;
    const double area = s.cross_section, k = s.attachment, b = s.detachment, T = L / v;
    const double n0 = 1.0, th0 = 0.5 * area * n0 / f;
    const double c = std::numbers::pi / L;
    auto u = [&](double x, double t) { return n0 * (1.0 + 0.5 * std::cos(c * x) * std::exp(-t / T)); };
    auto ut = [&](double x, double t) { return -n0 * 0.5 * std::cos(c * x) * std::exp(-t / T) / T; };
    auto ux = [&](double x, double t) { return -n0 * 0.5 * c * std::sin(c * x) * std::exp(-t / T); };
    auto uxx = [&](double x, double t) { return -n0 * 0.5 * c * c * std::cos(c * x) * std::exp(-t / T); };
    auto th = [&](double x, double t) { return th0 * (1.0 + 0.5 * std::cos(c * x)) * (1.0 - std::exp(-t / T)); };
    auto tht = [&](double x, double t) { return th0 * (1.0 + 0.5 * std::cos(c * x)) * std::exp(-t / T) / T; };

    m.inlet_conc = n0;
    m.pulse_duration = 1e9;
    m.inlet = [&](std::size_t, double t) { return u(0.0, t); };
    m.mobile_source = [&](std::size_t, double x, double t) {
        return ut(x, t) + f / area * tht(x, t) + v * ux(x, t) - D * uxx(x, t);
    };
    m.coverage_source = [&](std::size_t, double x, double t) {
        return tht(x, t) - area * k * u(x, t) + b * th(x, t);
    };

    const double t_end = 2.0 * T;
    std::vector<double> h, err;
    for (int level = 0; level < 3; ++level) {
        const int M = 200 << level;
        const double dt = table3_dt() / (1 << level);
        auto state = transport::ColumnState::zero(m, M);
        for (int j = 0; j <= M; ++j) {
            state.mobile(0, j) = u(state.grid[static_cast<std::size_t>(j)], 0.0);
            state.coverage(0, j) = th(state.grid[static_cast<std::size_t>(j)], 0.0);
        }
        const auto run = transport::run_column_from(state, m, t_end, dt);
        double sum = 0.0;
        for (int j = 0; j <= M; ++j) {
            const double x = run.final_state.grid[static_cast<std::size_t>(j)];
            const double e = run.final_state.mobile(0, j) - u(x, t_end);
            sum += run.final_state.volume(j) * e * e;
        }
        h.push_back(L / M);
        err.push_back(std::sqrt(sum / L) / n0);
    }
    const double order = fitted_order(h, err);
    const double p1 = std::log2(err[0] / err[1]), p2 = std::log2(err[1] / err[2]);
    return {order >= 1.0, fmt("L2 errors %.3e %.3e %.3e, pairwise orders %.3f %.3f, fitted %.3f (>= 1)", err[0],
                              err[1], err[2], p1, p2, order)};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

Outcome determinism() {
    const auto root = fs::temp_directory_path() / fmt("colloid_acceptance_%d", static_cast<int>(::getpid()));
    const char* texts[] = {
        "[scenario]\nkind = column_aggregating\n[column]\n[ladder]\nn_classes = 3\n[kernel]\nkind = brownian\n"
        "[numerics]\nintervals = 100\n",
        "[scenario]\nkind = blocking_compare\n[column]\nkinetic_rate = 5e-6\n[blocking]\n[numerics]\nintervals = 100\n",
        "[scenario]\nkind = batch_aggregation\n[ladder]\nn_classes = 6\n[kernel]\nkind = brownian\n[batch]\nsteps = 200\n",
        "[scenario]\nkind = cell_tensors\n[geometry]\nshape = anisotropic_ellipse\nresolution = 64\nporosity = 0.85\n"
        "[ladder]\nn_classes = 2\n",
    };
    int compared = 0, identical = 0;
    for (std::size_t k = 0; k < std::size(texts); ++k) {
        std::vector<std::vector<std::pair<std::string, std::string>>> runs;
        for (int rep = 0; rep < 2; ++rep) {
            scenarios::ConfigOverrides ov;
            ov.output_dir = (root / fmt("s%zu_r%d", k, rep)).string();
            const auto cfg = scenarios::parse_config(texts[k], ov);
            const auto report = scenarios::run_scenario(cfg);
            std::vector<std::pair<std::string, std::string>> files;
            for (const auto& f : report.files) {
                if (f.extension() == ".csv") files.emplace_back(f.filename().string(), slurp(f));
            }
            std::sort(files.begin(), files.end());
            runs.push_back(std::move(files));
        }
        compared += static_cast<int>(runs[0].size());
        if (runs[0] == runs[1]) identical += static_cast<int>(runs[0].size());
    }
    std::error_code ec;
    fs::remove_all(root, ec);
    return {compared > 0 && identical == compared,
            fmt("%d of %d CSV files byte-identical across repeated runs of 4 scenarios", identical, compared)};
}

} // namespace

int main() {
    criterion(1, "batch mass conservation", 1.0, mass_conservation);
    criterion(2, "empty-cell identity", 5.0, empty_cell);
    criterion(3, "isotropic disc tensor", 60.0, disc_structure);
    criterion(4, "cell self-convergence", 600.0, self_convergence);
    criterion(5, "dimensionless identities", 1.0, nondim_identities);
    criterion(6, "tracer limit", 30.0, tracer);
    criterion(7, "blocking caps", 120.0, blocking_caps);
    criterion(8, "aggregating breakthrough later than single", 300.0, aggregation_ordering);
    criterion(9, "doubled aggregation rate lowers outflow", 300.0, rate_doubling);
    criterion(10, "manufactured-solution convergence", 120.0, manufactured);
    criterion(11, "determinism", 120.0, determinism);
    std::printf("%d of 11 criteria passed\n", 11 - failures);
    return failures == 0 ? 0 : 1;
}
