#include "nhrch/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "nhrch/parallel.hpp"

namespace nhrch::cli {

Command parse_command(const std::string& name) {
    if (name == "check") return Command::check;
    if (name == "simulate") return Command::simulate;
    if (name == "hj-verify") return Command::hj_verify;
    if (name == "reduce") return Command::reduce;
    throw ConfigError("unknown command '" + name + "'");
}

std::string to_string(Command c) {
    switch (c) {
        case Command::check: return "check";
        case Command::simulate: return "simulate";
        case Command::hj_verify: return "hj-verify";
        case Command::reduce: return "reduce";
    }
    return "unknown";
}

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

double get_number(const Json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

std::size_t get_count(const Json& j, const char* key, std::size_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer() || j[key].get<long long>() < 1)
        throw ConfigError(std::string("'") + key + "' must be a positive integer");
    return j[key].get<std::size_t>();
}

Vec get_vector(const Json& j, const char* key, long size) {
    if (!j.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
    return catalog::vector(j, key, size);
}

std::vector<std::string> get_names(const Json& j, const char* key) {
    const Json& v = j[key];
    if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be a list of coordinate names");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError(std::string("'") + key + "' must be a list of coordinate names");
        out.push_back(e.get<std::string>());
    }
    return out;
}

// Constant field given as a coefficient row, or a named builtin.
VectorFn field_entry(const Json& e, const ChartSpec& chart) {
    if (e.is_array()) {
        const Vec v = catalog::vector(Json{{"v", e}}, "v", static_cast<long>(chart.dim()));
        return [v](const Vec&) { return v; };
    }
    return catalog::spanning_field(e, chart);
}

NonholonomicRCHSpec inline_system(const Json& j) {
    check_keys(j, {"chart", "mass", "potential", "distribution", "annihilators"}, "inline system");
    if (!j.contains("chart")) throw ConfigError("inline system needs a chart");
    const Json& c = j["chart"];
    check_keys(c, {"names", "periodic"}, "chart");
    NonholonomicRCHSpec s;
    s.mechanics.chart.coord_names = get_names(c, "names");
    const std::size_t n = s.mechanics.chart.coord_names.size();
    s.mechanics.chart.periodic.assign(n, false);
    if (c.contains("periodic")) {
        const Json& per = c["periodic"];
        if (!per.is_array() || per.size() != n) throw ConfigError("'periodic' must list one flag per coordinate");
        for (std::size_t i = 0; i < n; ++i) {
            if (!per[i].is_boolean()) throw ConfigError("'periodic' entries must be booleans");
            s.mechanics.chart.periodic[i] = per[i].get<bool>();
        }
    }
    s.mechanics.chart.validate();
    const ChartSpec& chart = s.mechanics.chart;
    s.mechanics.lagrangian.mass_matrix = catalog::mass_matrix(j.value("mass", Json("identity")), chart);
    s.mechanics.lagrangian.potential = catalog::potential(j.value("potential", Json("zero")), chart);
    if (!j.contains("distribution") || !j["distribution"].is_array() || j["distribution"].empty())
        throw ConfigError("inline system needs a non-empty 'distribution' list");
    for (const auto& e : j["distribution"]) s.distribution.spanning_fields.push_back(field_entry(e, chart));
    s.distribution.rank = s.distribution.spanning_fields.size();
    if (j.contains("annihilators")) {
        if (!j["annihilators"].is_array()) throw ConfigError("'annihilators' must be a list");
        for (const auto& e : j["annihilators"]) s.distribution.annihilators.push_back(field_entry(e, chart));
        if (s.distribution.annihilators.size() + s.distribution.rank != n)
            throw ConfigError("annihilator count must equal dim - rank");
    }
    if (s.distribution.rank > n) throw ConfigError("distribution rank exceeds the dimension");
    return s;
}

void parse_system(Scenario& sc, const Json& j) {
    if (j.is_string()) {
        sc.system_name = j.get<std::string>();
        sc.spec = catalog::make_system(sc.system_name);
    } else if (j.is_object() && j.contains("catalog")) {
        check_keys(j, {"catalog", "params"}, "system");
        if (!j["catalog"].is_string()) throw ConfigError("'catalog' must be a system name");
        sc.system_name = j["catalog"].get<std::string>();
        sc.spec = catalog::make_system(sc.system_name, j.value("params", Json::object()));
    } else if (j.is_object() && j.contains("inline")) {
        check_keys(j, {"inline"}, "system");
        sc.system_name = "inline";
        sc.spec = inline_system(j["inline"]);
        return;
    } else {
        throw ConfigError("'system' must be a catalog name, {\"catalog\": ...} or {\"inline\": ...}");
    }
    for (const auto& e : catalog::entries())
        if (e.name == sc.system_name) sc.reduction_supported = e.reduction_supported;
}

PhasePoint parse_initial(const Json& j, const NonholonomicRCHSpec& spec) {
    check_keys(j, {"q", "p", "v"}, "initial");
    const long n = static_cast<long>(spec.dim());
    const Vec q = get_vector(j, "q", n);
    if (j.contains("p") == j.contains("v")) throw ConfigError("initial state needs exactly one of 'p' or 'v'");
    if (j.contains("p")) return {q, get_vector(j, "p", n)};
    return legendre(spec.mechanics, q, get_vector(j, "v", n));
}

IntegrationConfig parse_integration(const Json& j, const ChartSpec& chart) {
    check_keys(j, {"step", "t_end", "projection", "drift_limit", "momentum"}, "integration");
    IntegrationConfig cfg;
    cfg.step = get_number(j, "step", cfg.step);
    cfg.t_end = get_number(j, "t_end", cfg.t_end);
    cfg.drift_limit = get_number(j, "drift_limit", cfg.drift_limit);
    if (j.contains("projection")) {
        const std::string p = j["projection"].is_string() ? j["projection"].get<std::string>() : "";
        if (p == "none") cfg.projection = Projection::none;
        else if (p == "per_step") cfg.projection = Projection::per_step;
        else throw ConfigError("'projection' must be \"none\" or \"per_step\"");
    }
    if (j.contains("momentum"))
        for (const auto& name : get_names(j, "momentum")) cfg.momentum_indices.push_back(chart.index_of(name));
    cfg.validate();
    return cfg;
}

GridSpec parse_grid(const Json& j) {
    check_keys(j, {"periodic_points", "unbounded_points", "lo", "hi"}, "grid");
    GridSpec g;
    g.periodic_points = get_count(j, "periodic_points", g.periodic_points);
    g.unbounded_points = get_count(j, "unbounded_points", g.unbounded_points);
    g.lo = get_number(j, "lo", g.lo);
    g.hi = get_number(j, "hi", g.hi);
    if (!(g.lo < g.hi)) throw ConfigError("grid needs lo < hi");
    return g;
}

}  // namespace

Scenario parse_scenario(const Json& j, const Overrides& overrides) {
    check_keys(j,
               {"name", "system", "force", "control", "symmetry", "mu", "gamma", "epsilon", "initial",
                "integration", "grid", "samples", "tolerance", "trajectory_tolerance", "max_depth", "seed"},
               "scenario");
    Scenario sc;
    if (j.contains("name")) {
        if (!j["name"].is_string() || j["name"].get<std::string>().empty())
            throw ConfigError("'name' must be a non-empty string");
        sc.name = j["name"].get<std::string>();
        if (sc.name.find_first_of("/\\") != std::string::npos) throw ConfigError("'name' must not contain slashes");
    }
    if (!j.contains("system")) throw ConfigError("scenario '" + sc.name + "' has no system");
    parse_system(sc, j["system"]);
    const ChartSpec& chart = sc.spec.chart();
    if (j.contains("force")) sc.spec.force = catalog::vertical_field(j["force"], chart);
    if (j.contains("control")) sc.spec.control = catalog::vertical_field(j["control"], chart);
    if (j.contains("symmetry")) {
        sc.symmetry = catalog::translations(chart, get_names(j, "symmetry"));
        if (sc.symmetry->dim() == 0) throw ConfigError("'symmetry' must name at least one coordinate");
    }
    if (j.contains("mu")) {
        if (!sc.symmetry) throw ConfigError("'mu' needs a symmetry");
        sc.mu = get_vector(j, "mu", static_cast<long>(sc.symmetry->dim()));
    }
    if (j.contains("gamma")) {
        sc.gamma = catalog::one_form(j["gamma"], sc.spec);
        sc.gamma_description = j["gamma"];
    }
    const SymmetrySpec G = sc.symmetry.value_or(SymmetrySpec{});
    if (j.contains("epsilon")) {
        const Json list = j["epsilon"].is_array() ? j["epsilon"] : Json::array({j["epsilon"]});
        std::set<std::string> seen;
        for (const auto& e : list) {
            sc.epsilons.push_back({e, catalog::symplectic_map(e, sc.spec, G)});
            if (!seen.insert(sc.epsilons.back().map.name).second)
                throw ConfigError("'epsilon' lists '" + sc.epsilons.back().map.name + "' twice");
        }
    } else {
        sc.epsilons.push_back({"identity", catalog::symplectic_map("identity", sc.spec, G)});
    }
    if (j.contains("initial")) sc.initial = parse_initial(j["initial"], sc.spec);
    if (j.contains("integration")) sc.integration = parse_integration(j["integration"], chart);
    if (sc.symmetry && sc.integration.momentum_indices.empty())
        sc.integration.momentum_indices = sc.symmetry->cyclic_indices;
    if (j.contains("grid")) sc.grid = parse_grid(j["grid"]);
    sc.samples = get_count(j, "samples", sc.samples);
    sc.tolerance = get_number(j, "tolerance", sc.tolerance);
    sc.trajectory_tolerance = get_number(j, "trajectory_tolerance", sc.trajectory_tolerance);
    sc.max_depth = static_cast<int>(get_count(j, "max_depth", static_cast<std::size_t>(sc.max_depth)));
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) throw ConfigError("'seed' must be a non-negative integer");
        sc.seed = j["seed"].get<std::uint64_t>();
    }
    if (overrides.tolerance) sc.tolerance = *overrides.tolerance;
    if (overrides.seed) sc.seed = *overrides.seed;
    if (!(sc.tolerance > 0) || !(sc.trajectory_tolerance > 0)) throw ConfigError("tolerances must be positive");
    return sc;
}

std::vector<Scenario> parse_config(const Json& config, const Overrides& overrides) {
    std::vector<Scenario> out;
    if (config.is_object() && config.contains("scenarios")) {
        check_keys(config, {"scenarios"}, "config");
        if (!config["scenarios"].is_array() || config["scenarios"].empty())
            throw ConfigError("'scenarios' must be a non-empty list");
        for (const auto& s : config["scenarios"]) out.push_back(parse_scenario(s, overrides));
    } else {
        out.push_back(parse_scenario(config, overrides));
    }
    std::set<std::string> names;
    for (const auto& s : out)
        if (!names.insert(s.name).second) throw ConfigError("duplicate scenario name '" + s.name + "'");
    return out;
}

std::string trajectory_csv(const Trajectory& traj, const ChartSpec& chart,
                           const std::vector<std::string>& momentum_names) {
    std::string out = "t";
    for (const auto& n : chart.coord_names) out += ",q_" + n;
    for (const auto& n : chart.coord_names) out += ",p_" + n;
    out += ",H,constraint_resid";
    for (const auto& n : momentum_names) out += ",J_" + n;
    out += '\n';
    for (std::size_t i = 0; i < traj.times.size(); ++i) {
        out += format_double(traj.times[i]);
        for (long k = 0; k < traj.states[i].q.size(); ++k) out += ',' + format_double(traj.states[i].q[k]);
        for (long k = 0; k < traj.states[i].p.size(); ++k) out += ',' + format_double(traj.states[i].p[k]);
        out += ',' + format_double(traj.energy.empty() ? 0.0 : traj.energy[i]);
        out += ',' + format_double(traj.constraint.empty() ? 0.0 : traj.constraint[i]);
        if (!traj.momentum.empty())
            for (long k = 0; k < traj.momentum[i].size(); ++k) out += ',' + format_double(traj.momentum[i][k]);
        out += '\n';
    }
    return out;
}

namespace {

Json to_json(const Vec& v) {
    Json out = Json::array();
    for (long i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

Json to_json(const GammaPreconditions& g) {
    return {{"on_constraint", g.on_constraint},
            {"tangent_in_k", g.tangent_in_k},
            {"closed_on_d", g.closed_on_d},
            {"invariance", g.invariance}};
}

// Accumulates checks in execution order. A "report" check is recorded but never fails the run.
class Recorder {
public:
    struct Entry {
        std::string name;
        bool asserted = true;
        bool pass = true;
        double residual = 0.0;
        double tolerance = 0.0;
        Json details = Json::object();
    };

    template <class F>
    void run(const std::string& name, F&& body) {
        const auto t0 = std::chrono::steady_clock::now();
        Entry e;
        e.name = name;
        try {
            body(e);
        } catch (const ConfigError&) {
            throw;
        } catch (const Unsupported&) {
            throw;
        } catch (const PreconditionError& err) {
            e.pass = false;
            e.details["error"] = err.what();
            e.details["precondition"] = err.check();
            e.residual = err.residual();
        } catch (const Error& err) {
            e.pass = false;
            e.details["error"] = err.what();
        }
        if (!e.asserted) e.pass = true;
        timings_[name] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        entries_.push_back(std::move(e));
    }

    bool pass() const {
        return std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) { return e.pass; });
    }

    Json checks() const {
        Json out = Json::array();
        for (const auto& e : entries_) {
            Json c = {{"name", e.name},
                      {"kind", e.asserted ? "verdict" : "report"},
                      {"pass", e.pass},
                      {"residual", e.residual},
                      {"tolerance", e.tolerance}};
            if (!e.details.empty()) c["details"] = e.details;
            out.push_back(std::move(c));
        }
        return out;
    }

    Json failing() const {
        Json out = Json::array();
        for (const auto& e : entries_)
            if (!e.pass) out.push_back({{"check", e.name}, {"residual", e.residual}, {"tolerance", e.tolerance}});
        return out;
    }

    const Json& timings() const { return timings_; }

private:
    std::vector<Entry> entries_;
    Json timings_ = Json::object();
};

std::vector<PhasePoint> constraint_samples(const NonholonomicRCHSpec& spec, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<PhasePoint> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(sample_on_constraint(spec, rng));
    return out;
}

// Every other sample is moved onto the image of gamma where that image is admissible for the
// system, so that both Type II verdicts occur in a sweep.
std::vector<PhasePoint> type2_samples(const DistributionalSystem& system, std::vector<PhasePoint> samples,
                                      const OneFormField& gamma, double tol) {
    for (std::size_t i = 1; i < samples.size(); i += 2) {
        const PhasePoint z = gamma.lift(samples[i].q);
        if (system.preimage_residual(z) <= tol) samples[i] = z;
    }
    return samples;
}

HJOptions hj_options(const Scenario& sc) {
    HJOptions o;
    o.tolerance = sc.tolerance;
    return o;
}

void record_type1(Recorder& rec, const std::string& name, const DistributionalSystem& system,
                  const NonholonomicSystem& base, const OneFormField& gamma, const std::vector<Vec>& grid,
                  const HJOptions& opts) {
    rec.run(name, [&](Recorder::Entry& e) {
        const Type1Report r = sweep_type1(system, base, gamma, grid, opts);
        e.pass = r.pass;
        e.residual = r.max_residual;
        e.tolerance = r.tolerance;
        e.details = {{"points", r.points.size()},
                     {"mean_residual", r.mean_residual},
                     {"preconditions_hold", r.preconditions_hold},
                     {"precondition_failures", r.precondition_failures},
                     {"worst_preconditions", to_json(r.worst)}};
        if (!r.preconditions_hold) {
            const auto [check, value] = r.worst.first_failure(opts.precondition_tol);
            e.details["failed_precondition"] = check;
            e.details["failed_precondition_residual"] = value;
        }
    });
}

void record_type2(Recorder& rec, const std::string& name, const DistributionalSystem* reduced,
                  const NonholonomicSystem& base, const OneFormField& gamma, const SymplecticMapSpec& eps,
                  const std::vector<PhasePoint>& samples, const HJOptions& opts) {
    rec.run(name, [&](Recorder::Entry& e) {
        const Type2Report r = sweep_type2(reduced, base, gamma, eps, samples, opts);
        e.pass = r.pass;
        e.tolerance = r.tolerance;
        e.residual = static_cast<double>(r.equivalence_disagreements + r.correspondence_disagreements +
                                         r.failed_preconditions);
        e.details = {{"samples", r.samples.size()},
                     {"r1_passing", r.r1_passing},
                     {"equivalence_disagreements", r.equivalence_disagreements},
                     {"correspondence_disagreements", r.correspondence_disagreements},
                     {"failed_preconditions", r.failed_preconditions},
                     {"max_r1_r2_gap", r.max_r1_r2_gap}};
        for (const auto& f : r.precondition_failures)
            if (!f.empty()) {
                e.details["first_precondition_failure"] = f;
                break;
            }
    });
}

void run_check(const Scenario& sc, Recorder& rec) {
    const NonholonomicRCHSpec& spec = sc.spec;
    const auto grid = make_grid(spec.chart(), sc.grid);
    const auto samples = constraint_samples(spec, sc.samples, sc.seed);

    rec.run("mass_matrix", [&](Recorder::Entry& e) {
        for (const auto& q : grid) check_mass_matrix(spec.mechanics, q);
        e.details = {{"points", grid.size()}};
    });
    rec.run("distribution_rank", [&](Recorder::Entry& e) {
        for (const auto& q : grid) spec.distribution.validate_at(q);
        e.details = {{"points", grid.size()}, {"rank", spec.distribution.rank}};
    });
    rec.run("completeness", [&](Recorder::Entry& e) {
        e.asserted = false;
        const auto reports = check_completeness(spec.distribution, grid, sc.max_depth);
        long min_rank = static_cast<long>(spec.dim());
        std::size_t complete = 0;
        Json depth = Json::array();
        for (const auto& r : reports) {
            min_rank = std::min(min_rank, r.rank);
            complete += r.complete ? 1 : 0;
        }
        if (!reports.empty())
            for (long d : reports.front().rank_by_depth) depth.push_back(d);
        e.details = {{"completely_nonholonomic", complete == reports.size()},
                     {"complete_points", complete},
                     {"points", reports.size()},
                     {"min_rank", min_rank},
                     {"rank_by_depth_first_point", depth},
                     {"max_depth", sc.max_depth}};
    });
    rec.run("d_regularity", [&](Recorder::Entry& e) {
        double worst = 0.0;
        bool regular = true;
        for (const auto& q : grid) {
            const RegularityReport r = check_d_regularity(spec, q);
            regular = regular && r.regular;
            worst = std::max(worst, r.condition);
        }
        e.pass = regular;
        e.details = {{"max_condition", worst}};
    });
    rec.run("admissibility_compatibility", [&](Recorder::Entry& e) {
        std::size_t admissible = 0, compatible = 0;
        for (const auto& z : samples) {
            const AdmissibilityReport r = check_admissibility_compatibility(spec, z);
            admissible += r.admissible ? 1 : 0;
            compatible += r.compatible ? 1 : 0;
        }
        e.pass = admissible == samples.size() && compatible == samples.size();
        e.details = {{"samples", samples.size()}, {"admissible", admissible}, {"compatible", compatible}};
    });
    rec.run("base_part_discrepancy", [&](Recorder::Entry& e) {
        const NonholonomicSystem sys(spec);
        double worst = 0.0;
        for (const auto& z : samples) worst = std::max(worst, sys.base_part_discrepancy(z));
        e.residual = worst;
        e.tolerance = 1e-7;
        e.asserted = spec.distribution.rank == spec.dim();
        e.pass = worst < e.tolerance;
    });
    if (sc.symmetry) {
        rec.run("invariance", [&](Recorder::Entry& e) {
            const InvarianceReport r = check_invariance(spec, *sc.symmetry, samples, 1e-8);
            e.pass = r.pass;
            e.tolerance = 1e-8;
            e.residual = std::max({r.hamiltonian, r.force, r.control, r.distribution});
            e.details = {{"hamiltonian", r.hamiltonian},
                         {"force", r.force},
                         {"control", r.control},
                         {"distribution", r.distribution}};
        });
    }
}

std::vector<std::string> momentum_names(const Scenario& sc) {
    std::vector<std::string> out;
    for (std::size_t i : sc.integration.momentum_indices) out.push_back(sc.spec.chart().coord_names[i]);
    return out;
}

void run_simulate(const Scenario& sc, Recorder& rec, RunResult& result) {
    if (!sc.initial) throw ConfigError("simulate needs an 'initial' state");
    const NonholonomicSystem sys(sc.spec);
    const double r0 = sys.membership_residual(*sc.initial);
    if (!(r0 <= kOnManifoldTol))
        throw ConfigError("initial state is off the constraint set (residual " + format_double(r0) + ")");
    rec.run("integration", [&](Recorder::Entry& e) {
        Trajectory traj;
        try {
            traj = integrate(sys, *sc.initial, sc.integration);
        } catch (const StepOffManifold& err) {
            traj = err.partial();
            e.pass = false;
            e.residual = err.residual();
            e.tolerance = sc.integration.drift_limit;
            e.details["error"] = err.what();
        } catch (const IntegrationAborted& err) {
            traj = err.partial();
            e.pass = false;
            e.details["error"] = err.what();
        }
        const std::string file = sc.name + ".trajectory.csv";
        result.artifacts.emplace_back(file, trajectory_csv(traj, sc.spec.chart(), momentum_names(sc)));
        e.details["steps"] = traj.times.empty() ? 0 : traj.times.size() - 1;
        e.details["t_final"] = traj.times.empty() ? 0.0 : traj.times.back();
        e.details["final_q"] = to_json(traj.states.back().q);
        e.details["final_p"] = to_json(traj.states.back().p);
        e.details["max_energy_drift"] = traj.max_energy_drift();
        e.details["max_constraint_residual"] = traj.max_constraint();
        if (!traj.momentum.empty()) {
            double drift = 0.0;
            for (const auto& m : traj.momentum) drift = std::max(drift, (m - traj.momentum.front()).cwiseAbs().maxCoeff());
            e.details["max_momentum_drift"] = drift;
        }
        e.details["trajectory"] = file;
    });
}

void run_hj(const Scenario& sc, Recorder& rec) {
    if (!sc.gamma) throw ConfigError("hj-verify needs a 'gamma'");
    const NonholonomicSystem base(sc.spec);
    const OneFormField& gamma = *sc.gamma;
    const auto grid = make_grid(sc.spec.chart(), sc.grid);
    const HJOptions opts = hj_options(sc);

    rec.run("closedness_hierarchy", [&](Recorder::Entry& e) {
        std::vector<double> on_d(grid.size()), full(grid.size());
        parallel_for(grid.size(), [&](std::size_t i) {
            on_d[i] = closedness_on_d_residual(gamma, sc.spec.distribution, grid[i]);
            full[i] = closedness_full_residual(gamma, grid[i]);
        });
        std::size_t violations = 0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (full[i] < opts.precondition_tol && !(on_d[i] < opts.precondition_tol)) ++violations;
        e.pass = violations == 0;
        e.residual = static_cast<double>(violations);
        e.details = {{"max_on_d", *std::max_element(on_d.begin(), on_d.end())},
                     {"max_full", *std::max_element(full.begin(), full.end())},
                     {"points", grid.size()}};
    });
    rec.run("one_form_identities", [&](Recorder::Entry& e) {
        std::mt19937_64 rng(sc.seed + 1);
        std::normal_distribution<double> normal(0.0, 1.0);
        const long n = static_cast<long>(sc.spec.dim());
        auto random_vec = [&] {
            TangentVec v{Vec(n), Vec(n)};
            for (long i = 0; i < n; ++i) v.dq[i] = normal(rng);
            for (long i = 0; i < n; ++i) v.dp[i] = normal(rng);
            return v;
        };
        double pull = 0.0, contr = 0.0, basedir = 0.0;
        std::size_t base_points = 0;
        for (std::size_t s = 0; s < sc.samples; ++s) {
            const Vec q = sample_base_point(sc.spec.chart(), rng);
            const PhasePoint z{q, gamma(q)};
            const TangentVec v = random_vec(), w = random_vec();
            const OneFormIdentityResiduals r = one_form_identity_checks(sc.spec, gamma, z, v, w);
            pull = std::max(pull, r.pullback);
            contr = std::max(contr, r.contraction);
            // The base-direction identity presumes gamma takes values in the constraint set.
            if (m_residual(sc.spec, z).norm() <= opts.precondition_tol) {
                basedir = std::max(basedir, r.base_direction);
                ++base_points;
            }
        }
        e.residual = std::max({pull, contr, basedir});
        e.tolerance = opts.tolerance;
        e.pass = e.residual < e.tolerance;
        e.details = {{"pullback", pull},
                     {"contraction", contr},
                     {"base_direction", basedir},
                     {"base_direction_points", base_points},
                     {"samples", sc.samples}};
    });

    record_type1(rec, "type1.base", base, base, gamma, grid, opts);
    const auto raw = constraint_samples(sc.spec, sc.samples, sc.seed);
    const auto base_samples = type2_samples(base, raw, gamma, opts.precondition_tol);
    for (const auto& eps : sc.epsilons)
        record_type2(rec, "type2.base." + eps.map.name, nullptr, base, gamma, eps.map, base_samples, opts);

    if (!sc.symmetry) return;
    if (!sc.reduction_supported) throw Unsupported("reduction is not available for " + sc.system_name);
    std::optional<ReducedSystem> red;
    rec.run("reduced.construct", [&](Recorder::Entry&) { red.emplace(reduced_system(base, *sc.symmetry)); });
    if (red) {
        record_type1(rec, "type1.reduced", *red, base, gamma, grid, opts);
        for (const auto& eps : sc.epsilons)
            record_type2(rec, "type2.reduced." + eps.map.name, &*red, base, gamma, eps.map, base_samples, opts);
    }
    if (!sc.mu) return;
    for (const ReductionKind kind : {ReductionKind::point, ReductionKind::orbit}) {
        const std::string tag = to_string(kind);
        std::optional<ReducedSystem> lvl;
        rec.run(tag + ".construct", [&](Recorder::Entry& e) {
            lvl.emplace(kind == ReductionKind::point ? rp_reduced_system(base, *sc.symmetry, *sc.mu)
                                                     : ro_reduced_system(base, *sc.symmetry, *sc.mu));
            e.details = {{"level_points", lvl->level_points().size()}};
        });
        if (!lvl) continue;
        record_type1(rec, "type1." + tag, *lvl, base, gamma, grid, opts);
        const auto samples =
            type2_samples(*lvl, lvl->sample_points(sc.samples, sc.seed), gamma, opts.precondition_tol);
        for (const auto& eps : sc.epsilons)
            record_type2(rec, "type2." + tag + "." + eps.map.name, &*lvl, base, gamma, eps.map, samples, opts);
    }
}

double max_field_gap(const ReducedSystem& a, const ReducedSystem& b, const std::vector<PhasePoint>& samples) {
    std::vector<double> gaps(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) {
        const Vec fa = stack(a.x_tilde(a.project_point(samples[i])));
        const Vec fb = stack(b.x_tilde(b.project_point(samples[i])));
        gaps[i] = (fa - fb).cwiseAbs().maxCoeff();
    });
    return gaps.empty() ? 0.0 : *std::max_element(gaps.begin(), gaps.end());
}

void run_reduce(const Scenario& sc, Recorder& rec) {
    if (!sc.symmetry) throw ConfigError("reduce needs a 'symmetry'");
    if (!sc.reduction_supported) throw Unsupported("reduction is not available for " + sc.system_name);
    const NonholonomicSystem base(sc.spec);
    const SymmetrySpec& G = *sc.symmetry;
    const double tol = sc.tolerance;
    const auto samples = constraint_samples(sc.spec, sc.samples, sc.seed);

    rec.run("invariance", [&](Recorder::Entry& e) {
        const InvarianceReport r = check_invariance(sc.spec, G, samples, 1e-8);
        e.pass = r.pass;
        e.tolerance = 1e-8;
        e.residual = std::max({r.hamiltonian, r.force, r.control, r.distribution});
    });

    std::optional<ReducedSystem> red;
    rec.run("quotient.construct", [&](Recorder::Entry& e) {
        red.emplace(reduced_system(base, G));
        long kmin = std::numeric_limits<long>::max(), kmax = 0;
        for (const auto& z : samples) {
            const long k = red->k_basis(red->project_point(z)).cols();
            kmin = std::min(kmin, k);
            kmax = std::max(kmax, k);
        }
        e.details = {{"ambient_dim", red->ambient_dim()},
                     {"group_dim", G.dim()},
                     {"reduced_rank_min", kmin},
                     {"reduced_rank_max", kmax}};
    });
    if (red) {
        rec.run("quotient.relatedness", [&](Recorder::Entry& e) {
            std::vector<double> r(samples.size());
            parallel_for(samples.size(), [&](std::size_t i) { r[i] = pi_relatedness_residual(base, *red, samples[i]); });
            e.residual = *std::max_element(r.begin(), r.end());
            e.tolerance = tol;
            e.pass = e.residual < tol;
        });
        rec.run("quotient.lift_consistency", [&](Recorder::Entry& e) {
            double worst = 0.0;
            for (const auto& z : samples) worst = std::max(worst, red->local(red->project_point(z)).consistency);
            e.residual = worst;
            e.tolerance = tol;
            e.pass = worst < tol;
        });
        if (sc.initial) {
            rec.run("quotient.trajectory", [&](Recorder::Entry& e) {
                const Trajectory tb = integrate(base, *sc.initial, sc.integration);
                const Trajectory tr = integrate(*red, red->project_point(*sc.initial), sc.integration);
                double worst = 0.0;
                for (std::size_t i = 0; i < tb.states.size(); ++i) {
                    const PhasePoint pb = red->project_point(tb.states[i]);
                    Vec dq = sc.spec.chart().difference(pb.q, tr.states[i].q);
                    worst = std::max({worst, dq.cwiseAbs().maxCoeff(), (pb.p - tr.states[i].p).cwiseAbs().maxCoeff()});
                }
                e.residual = worst;
                e.tolerance = sc.trajectory_tolerance;
                e.pass = worst < e.tolerance;
                e.details = {{"t_end", sc.integration.t_end}, {"step", sc.integration.step}};
            });
        }
    }
    if (!sc.mu) return;

    std::optional<ReducedSystem> rp, ro;
    rec.run("point.construct", [&](Recorder::Entry& e) {
        rp.emplace(rp_reduced_system(base, G, *sc.mu));
        e.details = {{"ambient_dim", rp->ambient_dim()}, {"level_points", rp->level_points().size()}};
        Json ranks = Json::array();
        for (const auto& z : rp->level_points()) ranks.push_back(rp->k_basis(z).cols());
        e.details["reduced_rank_at_level_points"] = ranks;
    });
    rec.run("orbit.construct", [&](Recorder::Entry& e) {
        ro.emplace(ro_reduced_system(base, G, *sc.mu));
        e.details = {{"ambient_dim", ro->ambient_dim()}, {"level_points", ro->level_points().size()}};
    });
    if (!rp || !ro) return;
    // Half of the samples carry only the minimal non-cyclic momentum, the rest a random fiber offset.
    auto level_samples = rp->sample_points(sc.samples / 2, sc.seed, 0.0);
    for (const auto& z : rp->sample_points(sc.samples - sc.samples / 2, sc.seed + 1)) level_samples.push_back(z);
    for (const ReducedSystem* sys : {&*rp, &*ro}) {
        const std::string tag = to_string(sys->kind());
        rec.run(tag + ".relatedness", [&](Recorder::Entry& e) {
            // The level set is invariant only where the momentum map is conserved; relatedness is
            // asserted there and reported elsewhere.
            std::vector<double> r(level_samples.size()), drift(level_samples.size());
            parallel_for(level_samples.size(), [&](std::size_t i) {
                r[i] = pi_relatedness_residual(base, *sys, level_samples[i]);
                drift[i] = momentum_drift(base, G, level_samples[i]);
            });
            double invariant = 0.0, elsewhere = 0.0;
            std::size_t n_invariant = 0;
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (drift[i] <= tol) {
                    invariant = std::max(invariant, r[i]);
                    ++n_invariant;
                } else {
                    elsewhere = std::max(elsewhere, r[i]);
                }
            }
            e.residual = invariant;
            e.tolerance = tol;
            e.pass = n_invariant > 0 && invariant < tol;
            e.details = {{"samples", r.size()},
                         {"invariant_samples", n_invariant},
                         {"max_residual_off_invariant_locus", elsewhere},
                         {"max_momentum_drift", *std::max_element(drift.begin(), drift.end())}};
        });
    }
    rec.run("point_orbit_agreement", [&](Recorder::Entry& e) {
        e.residual = max_field_gap(*rp, *ro, level_samples);
        e.tolerance = 1e-10;
        e.pass = e.residual < e.tolerance;
    });
    rec.run("orbit.form_term", [&](Recorder::Entry& e) {
        double worst = 0.0;
        for (const auto& z : rp->level_points()) worst = std::max(worst, ro->local(z).orbit_term);
        e.residual = worst;
        e.tolerance = tol;
        e.pass = worst < tol;
    });
}

}  // namespace

RunResult run_scenario(const Scenario& sc, Command command) {
    Recorder rec;
    RunResult result;
    switch (command) {
        case Command::check: run_check(sc, rec); break;
        case Command::simulate: run_simulate(sc, rec, result); break;
        case Command::hj_verify: run_hj(sc, rec); break;
        case Command::reduce: run_reduce(sc, rec); break;
    }
    result.pass = rec.pass();
    Json artifacts = Json::array();
    for (const auto& a : result.artifacts) artifacts.push_back(a.first);
    result.report = {{"scenario", sc.name},
                     {"command", to_string(command)},
                     {"system", sc.system_name},
                     {"seed", sc.seed},
                     {"tolerance", sc.tolerance},
                     {"checks", rec.checks()},
                     {"failing", rec.failing()},
                     {"artifacts", artifacts},
                     {"pass", result.pass}};
    result.timings = {{"scenario", sc.name}, {"command", to_string(command)}, {"seconds", rec.timings()}};
    return result;
}

}  // namespace nhrch::cli
