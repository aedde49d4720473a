#include "colloid/config.hpp"

#include "colloid/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace colloid::scenarios {

namespace {

using homogenize::GrainShape;
using kinetics::Closure;
using kinetics::KernelKind;
using transport::BlockingKind;

// Shortest text that reads back to the same double.
std::string format_real(double x) {
    char buf[40];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(std::string_view v) {
    double x = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size() || !std::isfinite(x)) {
        throw std::invalid_argument("expected a real number, got '" + std::string(v) + "'");
    }
    return x;
}

long long parse_integer(std::string_view v) {
    long long x = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc{} || p != v.data() + v.size()) {
        throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
    }
    return x;
}

template <class E>
struct Choice {
    const char* name;
    E value;
};

template <class E, std::size_t K>
E parse_choice(std::string_view v, const Choice<E> (&choices)[K]) {
    for (const auto& c : choices) {
        if (v == c.name) return c.value;
    }
    std::string names;
    for (const auto& c : choices) names += (names.empty() ? "" : ", ") + std::string(c.name);
    throw std::invalid_argument("expected one of {" + names + "}, got '" + std::string(v) + "'");
}

template <class E, std::size_t K>
const char* choice_name(E value, const Choice<E> (&choices)[K]) {
    for (const auto& c : choices) {
        if (c.value == value) return c.name;
    }
    return "?";
}

constexpr Choice<Scenario> kScenarios[] = {
    {"cell_tensors", Scenario::CellTensors},
    {"batch_aggregation", Scenario::BatchAggregation},
    {"column_single", Scenario::ColumnSingle},
    {"column_aggregating", Scenario::ColumnAggregating},
    {"blocking_compare", Scenario::BlockingCompare},
    {"rate_sweep", Scenario::RateSweep},
};
constexpr Choice<GrainShape> kShapes[] = {
    {"isotropic_disc", GrainShape::IsotropicDisc},
    {"anisotropic_ellipse", GrainShape::AnisotropicEllipse},
};
constexpr Choice<KernelKind> kKernels[] = {
    {"constant", KernelKind::Constant},
    {"brownian", KernelKind::Brownian},
};
constexpr Choice<Closure> kClosures[] = {
    {"conservative", Closure::Conservative},
    {"lossy", Closure::Lossy},
};
constexpr Choice<BlockingKind> kBlockings[] = {
    {"none", BlockingKind::None},
    {"langmuir", BlockingKind::Langmuir},
    {"rsa", BlockingKind::RSA},
};

struct Entry {
    const char* section;
    const char* key;
    std::function<void(ScenarioConfig&, std::string_view)> set;
    std::function<std::string(const ScenarioConfig&)> get;
};

template <class F>
Entry real(const char* s, const char* k, F field) {
    return {s, k, [field](ScenarioConfig& c, std::string_view v) { field(c) = parse_real(v); },
            [field](const ScenarioConfig& c) { return format_real(field(const_cast<ScenarioConfig&>(c))); }};
}

template <class F>
Entry integer(const char* s, const char* k, F field) {
    return {s, k,
            [field](ScenarioConfig& c, std::string_view v) {
                const long long x = parse_integer(v);
                using T = std::remove_reference_t<decltype(field(c))>;
                if (x < static_cast<long long>(std::numeric_limits<T>::min()) ||
                    (x > 0 && static_cast<unsigned long long>(x) > std::numeric_limits<T>::max())) {
                    throw std::invalid_argument("integer out of range");
                }
                field(c) = static_cast<T>(x);
            },
            [field](const ScenarioConfig& c) { return std::to_string(field(const_cast<ScenarioConfig&>(c))); }};
}

template <class E, std::size_t K, class F>
Entry choice(const char* s, const char* k, const Choice<E> (&choices)[K], F field) {
    return {s, k, [&choices, field](ScenarioConfig& c, std::string_view v) { field(c) = parse_choice(v, choices); },
            [&choices, field](const ScenarioConfig& c) {
                return std::string(choice_name(field(const_cast<ScenarioConfig&>(c)), choices));
            }};
}

const std::vector<Entry>& schema() {
    using C = ScenarioConfig;
    static const std::vector<Entry> entries = {
        choice("scenario", "kind", kScenarios, [](C& c) -> Scenario& { return c.scenario; }),
        {"scenario", "output_dir", [](C& c, std::string_view v) { c.output_dir = std::string(v); },
         [](const C& c) { return c.output_dir.generic_string(); }},
        integer("scenario", "seed", [](C& c) -> std::uint64_t& { return c.seed; }),

        choice("geometry", "shape", kShapes, [](C& c) -> GrainShape& { return c.geometry.shape; }),
        integer("geometry", "resolution", [](C& c) -> int& { return c.geometry.resolution; }),
        real("geometry", "porosity", [](C& c) -> double& { return c.geometry.porosity; }),
        real("geometry", "solver_tol", [](C& c) -> double& { return c.geometry.solver_tol; }),
        real("geometry", "surface_rate_a", [](C& c) -> double& { return c.geometry.surface_rate_a; }),
        real("geometry", "surface_rate_b", [](C& c) -> double& { return c.geometry.surface_rate_b; }),
        real("geometry", "biot", [](C& c) -> double& { return c.geometry.biot; }),

        integer("ladder", "n_classes", [](C& c) -> int& { return c.ladder.n_classes; }),
        real("ladder", "monomer_radius", [](C& c) -> double& { return c.ladder.monomer_radius; }),
        real("ladder", "monomer_diffusivity", [](C& c) -> double& { return c.ladder.monomer_diffusivity; }),
        real("ladder", "fractal_dimension", [](C& c) -> double& { return c.ladder.fractal_dimension; }),
        real("ladder", "temperature", [](C& c) -> double& { return c.ladder.temperature; }),
        real("ladder", "viscosity", [](C& c) -> double& { return c.ladder.viscosity; }),

        choice("kernel", "kind", kKernels, [](C& c) -> KernelKind& { return c.kernel.kind; }),
        real("kernel", "beta0", [](C& c) -> double& { return c.kernel.beta0; }),
        real("kernel", "efficiency", [](C& c) -> double& { return c.kernel.efficiency; }),
        choice("kernel", "closure", kClosures, [](C& c) -> Closure& { return c.kernel.closure; }),

        real("column", "length", [](C& c) -> double& { return c.column.params.length; }),
        real("column", "darcy_velocity", [](C& c) -> double& { return c.column.params.darcy_velocity; }),
        real("column", "porosity", [](C& c) -> double& { return c.column.params.porosity; }),
        real("column", "collector_radius", [](C& c) -> double& { return c.column.params.collector_radius; }),
        real("column", "particle_radius", [](C& c) -> double& { return c.column.params.particle_radius; }),
        real("column", "dispersivity", [](C& c) -> double& { return c.column.params.dispersivity; }),
        real("column", "bulk_diffusivity", [](C& c) -> double& { return c.column.params.bulk_diffusivity; }),
        real("column", "medium_tortuosity", [](C& c) -> double& { return c.column.params.medium_tortuosity; }),
        real("column", "kinetic_rate", [](C& c) -> double& { return c.column.params.kinetic_rate; }),
        real("column", "inlet_conc", [](C& c) -> double& { return c.column.params.inlet_conc; }),
        real("column", "pulse_duration", [](C& c) -> double& { return c.column.params.pulse_duration; }),
        real("column", "affinity_exponent", [](C& c) -> double& { return c.column.affinity_exponent; }),

        choice("blocking", "kind", kBlockings, [](C& c) -> BlockingKind& { return c.blocking.kind; }),
        real("blocking", "beta", [](C& c) -> double& { return c.blocking.beta; }),
        real("blocking", "theta_inf", [](C& c) -> double& { return c.blocking.theta_inf; }),

        integer("numerics", "intervals", [](C& c) -> int& { return c.numerics.intervals; }),
        real("numerics", "dt", [](C& c) -> double& { return c.numerics.dt; }),
        real("numerics", "t_end", [](C& c) -> double& { return c.numerics.t_end; }),
        real("numerics", "newton_tol", [](C& c) -> double& { return c.numerics.newton_tol; }),
        integer("numerics", "newton_max_iter", [](C& c) -> int& { return c.numerics.newton_max_iter; }),

        real("batch", "initial_monomers", [](C& c) -> double& { return c.batch.initial_monomers; }),
        real("batch", "dt", [](C& c) -> double& { return c.batch.dt; }),
        integer("batch", "steps", [](C& c) -> int& { return c.batch.steps; }),

        {"sweep", "multipliers",
         [](C& c, std::string_view v) {
             c.sweep.multipliers.clear();
             std::size_t pos = 0;
             while (pos <= v.size()) {
                 const auto comma = std::min(v.find(',', pos), v.size());
                 c.sweep.multipliers.push_back(parse_real(trim(v.substr(pos, comma - pos))));
                 pos = comma + 1;
             }
         },
         [](const C& c) {
             std::string out;
             for (double m : c.sweep.multipliers) out += (out.empty() ? "" : ", ") + format_real(m);
             return out;
         }},

        real("reference", "length", [](C& c) -> double& { return c.reference.length; }),
        real("reference", "diffusivity", [](C& c) -> double& { return c.reference.diffusivity; }),
        real("reference", "mobile_conc", [](C& c) -> double& { return c.reference.mobile_conc; }),
        real("reference", "deposited_conc", [](C& c) -> double& { return c.reference.deposited_conc; }),
        real("reference", "deposition_rate", [](C& c) -> double& { return c.reference.deposition_rate; }),
    };
    return entries;
}

const char* const kSections[] = {"scenario", "geometry", "ladder",   "kernel",   "column",
                                 "blocking", "numerics", "batch",    "sweep",    "reference"};

bool is_column(Scenario s) {
    return s == Scenario::ColumnSingle || s == Scenario::ColumnAggregating ||
           s == Scenario::BlockingCompare || s == Scenario::RateSweep;
}

[[noreturn]] void invalid(const std::string& key, const std::string& why) {
    throw ConfigError("invalid value for " + key + ": " + why, 0, key);
}

void require_positive(const std::string& key, double x) {
    if (!(x > 0.0)) invalid(key, "must be positive");
}

void require_nonnegative(const std::string& key, double x) {
    if (!(x >= 0.0)) invalid(key, "must be nonnegative");
}

void validate(const ScenarioConfig& c, const std::set<std::string>& explicit_keys) {
    const auto& g = c.geometry;
    if (g.resolution < 16) invalid("geometry.resolution", "must be at least 16");
    if (!(g.porosity > 0.0 && g.porosity < 1.0)) invalid("geometry.porosity", "must lie in (0, 1)");
    require_positive("geometry.solver_tol", g.solver_tol);
    require_nonnegative("geometry.surface_rate_a", g.surface_rate_a);
    require_nonnegative("geometry.surface_rate_b", g.surface_rate_b);
    require_positive("geometry.biot", g.biot);

    const auto& l = c.ladder;
    if (l.n_classes < 1) invalid("ladder.n_classes", "must be at least 1");
    require_positive("ladder.monomer_radius", l.monomer_radius);
    require_nonnegative("ladder.monomer_diffusivity", l.monomer_diffusivity);
    if (!(l.fractal_dimension >= 1.0 && l.fractal_dimension <= 3.0)) {
        invalid("ladder.fractal_dimension", "must lie in [1, 3]");
    }
    require_positive("ladder.temperature", l.temperature);
    require_positive("ladder.viscosity", l.viscosity);

    require_nonnegative("kernel.beta0", c.kernel.beta0);
    if (!(c.kernel.efficiency >= 0.0 && c.kernel.efficiency <= 1.0)) {
        invalid("kernel.efficiency", "must lie in [0, 1]");
    }

    const auto& p = c.column.params;
    require_positive("column.length", p.length);
    require_positive("column.darcy_velocity", p.darcy_velocity);
    if (!(p.porosity > 0.0 && p.porosity <= 1.0)) invalid("column.porosity", "must lie in (0, 1]");
    require_positive("column.collector_radius", p.collector_radius);
    require_positive("column.particle_radius", p.particle_radius);
    require_nonnegative("column.dispersivity", p.dispersivity);
    require_nonnegative("column.bulk_diffusivity", p.bulk_diffusivity);
    require_positive("column.medium_tortuosity", p.medium_tortuosity);
    require_nonnegative("column.kinetic_rate", p.kinetic_rate);
    require_nonnegative("column.inlet_conc", p.inlet_conc);
    require_positive("column.pulse_duration", p.pulse_duration);
    require_nonnegative("column.affinity_exponent", c.column.affinity_exponent);
    if (is_column(c.scenario) && p.particle_radius >= (1.1969 * p.porosity - 0.1557) * p.collector_radius) {
        invalid("column.particle_radius", "colloid larger than pore");
    }

    require_positive("blocking.beta", c.blocking.beta);
    require_positive("blocking.theta_inf", c.blocking.theta_inf);

    if (c.numerics.intervals < 2) invalid("numerics.intervals", "must be at least 2");
    require_nonnegative("numerics.dt", c.numerics.dt);
    require_nonnegative("numerics.t_end", c.numerics.t_end);
    require_positive("numerics.newton_tol", c.numerics.newton_tol);
    if (c.numerics.newton_max_iter < 1) invalid("numerics.newton_max_iter", "must be at least 1");

    require_nonnegative("batch.initial_monomers", c.batch.initial_monomers);
    require_nonnegative("batch.dt", c.batch.dt);
    if (c.batch.steps < 1) invalid("batch.steps", "must be at least 1");

    if (c.sweep.multipliers.empty()) invalid("sweep.multipliers", "must not be empty");
    for (double m : c.sweep.multipliers) require_positive("sweep.multipliers", m);
    if (c.scenario == Scenario::RateSweep) {
        std::vector<double> sorted = c.sweep.multipliers;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            invalid("sweep.multipliers", "values must be distinct");
        }
    }

    require_nonnegative("reference.length", c.reference.length);
    require_nonnegative("reference.diffusivity", c.reference.diffusivity);
    require_nonnegative("reference.mobile_conc", c.reference.mobile_conc);
    require_nonnegative("reference.deposited_conc", c.reference.deposited_conc);
    require_nonnegative("reference.deposition_rate", c.reference.deposition_rate);

    if ((c.scenario == Scenario::ColumnAggregating || c.scenario == Scenario::RateSweep) && l.n_classes < 2) {
        invalid("ladder.n_classes", "aggregating scenarios need at least 2 classes");
    }
    if (is_column(c.scenario)) {
        // The monomer of a column run is the column particle.
        if (explicit_keys.count("ladder.monomer_radius") && l.monomer_radius != p.particle_radius) {
            invalid("ladder.monomer_radius", "column scenarios take the monomer radius from column.particle_radius");
        }
        if (explicit_keys.count("ladder.monomer_diffusivity") && explicit_keys.count("column.bulk_diffusivity") &&
            l.monomer_diffusivity != p.bulk_diffusivity) {
            invalid("ladder.monomer_diffusivity", "must equal column.bulk_diffusivity in column scenarios");
        }
    }
}

} // namespace

const char* to_string(Scenario s) { return choice_name(s, kScenarios); }

std::vector<std::string> required_sections(Scenario s) {
    switch (s) {
    case Scenario::CellTensors: return {"scenario", "geometry", "ladder"};
    case Scenario::BatchAggregation: return {"scenario", "ladder", "kernel", "batch"};
    case Scenario::ColumnSingle: return {"scenario", "column", "numerics"};
    case Scenario::ColumnAggregating: return {"scenario", "column", "ladder", "kernel", "numerics"};
    case Scenario::BlockingCompare: return {"scenario", "column", "blocking", "numerics"};
    case Scenario::RateSweep: return {"scenario", "column", "ladder", "kernel", "numerics", "sweep"};
    }
    return {"scenario"};
}

kinetics::FluidProperties fluid_of(const ScenarioConfig& cfg) {
    kinetics::FluidProperties f;
    f.temperature = cfg.ladder.temperature;
    f.dynamic_viscosity = cfg.ladder.viscosity;
    return f;
}

void resolve_defaults(ScenarioConfig& c) {
    const auto fluid = fluid_of(c);
    auto& p = c.column.params;
    if (p.bulk_diffusivity == 0.0) p.bulk_diffusivity = kinetics::einstein_stokes_diffusivity(fluid, p.particle_radius);
    if (is_column(c.scenario)) {
        c.ladder.monomer_radius = p.particle_radius;
        if (c.ladder.monomer_diffusivity == 0.0) c.ladder.monomer_diffusivity = p.bulk_diffusivity;
        p.bulk_diffusivity = c.ladder.monomer_diffusivity;
    }
    const auto& present = c.present_sections;
    if (c.scenario == Scenario::ColumnSingle ||
        (c.scenario == Scenario::BlockingCompare && std::find(present.begin(), present.end(), "ladder") == present.end())) {
        c.ladder.n_classes = 1;
    }
    if (c.ladder.monomer_diffusivity == 0.0) {
        c.ladder.monomer_diffusivity = kinetics::einstein_stokes_diffusivity(fluid, c.ladder.monomer_radius);
    }
    if (c.kernel.beta0 == 0.0) {
        c.kernel.beta0 = 8.0 * fluid.boltzmann_constant * fluid.temperature / (3.0 * fluid.dynamic_viscosity);
    }
    if (c.numerics.dt == 0.0) c.numerics.dt = p.pulse_duration / 500.0;
    if (c.numerics.t_end == 0.0) c.numerics.t_end = 2.0 * p.pulse_duration;
    if (c.batch.dt == 0.0) {
        double gmax = c.kernel.beta0 * c.kernel.efficiency;
        if (c.kernel.kind == KernelKind::Brownian) {
            const auto ladder = kinetics::build_ladder(c.ladder.n_classes, c.ladder.monomer_radius,
                                                       c.ladder.monomer_diffusivity, c.ladder.fractal_dimension);
            gmax = kinetics::brownian_kernel(ladder, fluid).gamma().maxCoeff();
        }
        const double load = gmax * c.batch.initial_monomers;
        c.batch.dt = load > 0.0 ? 0.1 / load : 1.0;
    }

    auto& r = c.reference;
    if (r.length == 0.0) r.length = p.length;
    if (r.diffusivity == 0.0) r.diffusivity = c.ladder.monomer_diffusivity;
    if (r.mobile_conc == 0.0) {
        r.mobile_conc = c.scenario == Scenario::BatchAggregation && c.batch.initial_monomers > 0.0
                            ? c.batch.initial_monomers
                            : (p.inlet_conc > 0.0 ? p.inlet_conc : 1.0);
    }
    if (r.deposited_conc == 0.0) {
        const double jam = c.blocking.kind == BlockingKind::None ? 1.0 : 1.0 / c.blocking.beta;
        r.deposited_conc = jam / (std::numbers::pi * c.ladder.monomer_radius * c.ladder.monomer_radius);
    }
    if (r.deposition_rate == 0.0) r.deposition_rate = p.kinetic_rate > 0.0 ? p.kinetic_rate : 1.0;
}

ScenarioConfig parse_config(std::string_view text, const ConfigOverrides& overrides) {
    std::map<std::string, const Entry*, std::less<>> index;
    for (const auto& e : schema()) index[std::string(e.section) + "." + e.key] = &e;

    ScenarioConfig cfg;
    std::set<std::string> seen_keys;
    std::set<std::string> seen_sections;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const auto end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError("malformed section header", line_no);
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (std::find(std::begin(kSections), std::end(kSections), section) == std::end(kSections)) {
                throw ConfigError("unknown section [" + section + "]", line_no, section);
            }
            if (!seen_sections.insert(section).second) {
                throw ConfigError("duplicate section [" + section + "]", line_no, section);
            }
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value'", line_no);
        const std::string key(trim(line.substr(0, eq)));
        const std::string_view value = trim(line.substr(eq + 1));
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section", line_no, key);
        if (key.empty()) throw ConfigError("missing key before '='", line_no);
        const std::string full = section + "." + key;
        const auto it = index.find(full);
        if (it == index.end()) throw ConfigError("unknown key '" + full + "'", line_no, full);
        if (!seen_keys.insert(full).second) throw ConfigError("duplicate key '" + full + "'", line_no, full);
        if (value.empty()) throw ConfigError("missing value for '" + full + "'", line_no, full);
        try {
            it->second->set(cfg, value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(full + ": " + e.what(), line_no, full);
        }
    }

    if (!seen_keys.count("scenario.kind")) {
        throw ConfigError("missing required key(s): scenario.kind (one of cell_tensors, batch_aggregation, "
                          "column_single, column_aggregating, blocking_compare, rate_sweep)",
                          0, "scenario.kind");
    }
    std::string missing;
    for (const auto& s : required_sections(cfg.scenario)) {
        if (!seen_sections.count(s)) missing += (missing.empty() ? "[" : ", [") + s + "]";
    }
    if (!missing.empty()) {
        throw ConfigError(std::string("scenario ") + to_string(cfg.scenario) + " requires section(s) " + missing);
    }
    cfg.present_sections.assign(seen_sections.begin(), seen_sections.end());
    if (overrides.output_dir) cfg.output_dir = *overrides.output_dir;
    if (overrides.resolution) {
        if (cfg.scenario == Scenario::CellTensors) {
            cfg.geometry.resolution = *overrides.resolution;
        } else if (is_column(cfg.scenario)) {
            cfg.numerics.intervals = *overrides.resolution;
        }
    }
    validate(cfg, seen_keys);
    resolve_defaults(cfg);
    validate(cfg, {});
    return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open configuration file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), overrides);
}

std::string to_config_text(const ScenarioConfig& cfg) {
    std::string out;
    const char* current = nullptr;
    for (const auto& e : schema()) {
        if (current == nullptr || std::string_view(current) != e.section) {
            if (current != nullptr) out += '\n';
            current = e.section;
            out += "[" + std::string(e.section) + "]\n";
        }
        out += std::string(e.key) + " = " + e.get(cfg) + "\n";
    }
    return out;
}

} // namespace colloid::scenarios
