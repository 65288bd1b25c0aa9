#include "nhrch/catalog.hpp"

#include <cctype>
#include <cmath>
#include <regex>

namespace nhrch::catalog {

namespace {

// Accepts {"name": ..., params...}, a bare name, or call syntax "name(k=v, ...)".
Params normalize(const Params& p) {
    if (p.is_object()) {
        if (!p.contains("name") || !p["name"].is_string()) throw ConfigError("builtin needs a string 'name'");
        return p;
    }
    if (!p.is_string()) throw ConfigError("builtin must be an object or a string");
    const std::string s = p.get<std::string>();
    static const std::regex call(R"(^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:\((.*)\))?\s*$)");
    std::smatch m;
    if (!std::regex_match(s, m, call)) throw ConfigError("cannot parse builtin '" + s + "'");
    Params out = {{"name", m[1].str()}};
    const std::string args = m[2].str();
    // Values are numbers or bare identifiers (coordinate names).
    static const std::regex kv(R"(\s*([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([-+0-9.eE]+|[A-Za-z_][A-Za-z0-9_]*)\s*(,|$))");
    auto it = std::sregex_iterator(args.begin(), args.end(), kv);
    std::size_t consumed = 0;
    for (; it != std::sregex_iterator(); ++it) {
        if (static_cast<std::size_t>(it->position()) != consumed) throw ConfigError("cannot parse arguments of '" + s + "'");
        const std::string value = (*it)[2].str();
        if (std::isalpha(static_cast<unsigned char>(value[0])) || value[0] == '_') {
            out[(*it)[1].str()] = value;
        } else {
            try {
                out[(*it)[1].str()] = std::stod(value);
            } catch (const std::exception&) {
                throw ConfigError("bad number in '" + s + "'");
            }
        }
        consumed += static_cast<std::size_t>(it->length());
    }
    if (consumed != args.size() && args.find_first_not_of(" \t") != std::string::npos)
        throw ConfigError("cannot parse arguments of '" + s + "'");
    return out;
}

std::string name_of(const Params& p) { return p["name"].get<std::string>(); }

std::size_t coord(const Params& p, const char* key, const char* fallback, const ChartSpec& chart) {
    std::string name = fallback;
    if (p.contains(key)) {
        if (!p[key].is_string()) throw ConfigError(std::string("'") + key + "' must be a coordinate name");
        name = p[key].get<std::string>();
    }
    return chart.index_of(name);
}

Vec unit(long n, std::size_t i) {
    Vec v = Vec::Zero(n);
    v[static_cast<long>(i)] = 1.0;
    return v;
}

ChartSpec chart_of(std::initializer_list<std::pair<const char*, bool>> coords) {
    ChartSpec c;
    for (const auto& [name, periodic] : coords) {
        c.coord_names.emplace_back(name);
        c.periodic.push_back(periodic);
    }
    return c;
}

MatrixFn constant_mass(const Vec& diag) {
    return [diag](const Vec&) { return Mat(diag.asDiagonal()); };
}

}  // namespace

double number(const Params& p, const char* key, double fallback) {
    if (!p.is_object() || !p.contains(key)) return fallback;
    if (!p[key].is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
    return p[key].get<double>();
}

Vec vector(const Params& p, const char* key, long expected_size) {
    if (!p.is_object() || !p.contains(key)) throw ConfigError(std::string("missing '") + key + "'");
    const Params& a = p[key];
    if (!a.is_array()) throw ConfigError(std::string("'") + key + "' must be an array");
    Vec v(static_cast<long>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (!a[i].is_number()) throw ConfigError(std::string("'") + key + "' must contain numbers");
        v[static_cast<long>(i)] = a[i].get<double>();
    }
    if (expected_size >= 0 && v.size() != expected_size)
        throw ConfigError(std::string("'") + key + "' must have length " + std::to_string(expected_size));
    return v;
}

NonholonomicRCHSpec free_particle_2d(double mass) {
    NonholonomicRCHSpec s;
    s.mechanics.chart = chart_of({{"x", false}, {"y", false}});
    s.mechanics.lagrangian = {constant_mass(Vec::Constant(2, mass)), [](const Vec&) { return 0.0; }};
    s.distribution.rank = 2;
    s.distribution.spanning_fields = {[](const Vec&) { return unit(2, 0); }, [](const Vec&) { return unit(2, 1); }};
    return s;
}

NonholonomicRCHSpec knife_edge(double mass, double inertia) {
    NonholonomicRCHSpec s;
    s.mechanics.chart = chart_of({{"x", false}, {"y", false}, {"theta", true}});
    s.mechanics.lagrangian = {constant_mass(Vec((Vec(3) << mass, mass, inertia).finished())),
                              [](const Vec&) { return 0.0; }};
    s.distribution.rank = 2;
    s.distribution.spanning_fields = {
        [](const Vec& q) { return Vec((Vec(3) << std::cos(q[2]), std::sin(q[2]), 0.0).finished()); },
        [](const Vec&) { return unit(3, 2); }};
    s.distribution.annihilators = {
        [](const Vec& q) { return Vec((Vec(3) << std::sin(q[2]), -std::cos(q[2]), 0.0).finished()); }};
    return s;
}

NonholonomicRCHSpec vertical_rolling_disk(double mass, double radius, double inertia_theta, double inertia_phi) {
    NonholonomicRCHSpec s;
    s.mechanics.chart = chart_of({{"x", false}, {"y", false}, {"theta", true}, {"phi", true}});
    s.mechanics.lagrangian = {constant_mass(Vec((Vec(4) << mass, mass, inertia_theta, inertia_phi).finished())),
                              [](const Vec&) { return 0.0; }};
    s.distribution.rank = 2;
    s.distribution.spanning_fields = {
        [](const Vec&) { return unit(4, 2); },
        [radius](const Vec& q) {
            return Vec((Vec(4) << radius * std::cos(q[2]), radius * std::sin(q[2]), 0.0, 1.0).finished());
        }};
    s.distribution.annihilators = {
        [radius](const Vec& q) { return Vec((Vec(4) << 1.0, 0.0, 0.0, -radius * std::cos(q[2])).finished()); },
        [radius](const Vec& q) { return Vec((Vec(4) << 0.0, 1.0, 0.0, -radius * std::sin(q[2])).finished()); }};
    return s;
}

NonholonomicRCHSpec chaplygin_sleigh(double mass, double inertia, double offset) {
    NonholonomicRCHSpec s = knife_edge();
    s.mechanics.lagrangian.mass_matrix = [mass, inertia, offset](const Vec& q) {
        const double c = std::cos(q[2]), sn = std::sin(q[2]);
        Mat M(3, 3);
        M << mass, 0.0, -mass * offset * sn,
             0.0, mass, mass * offset * c,
             -mass * offset * sn, mass * offset * c, inertia + mass * offset * offset;
        return M;
    };
    return s;
}

NonholonomicRCHSpec planar_slider() {
    NonholonomicRCHSpec s;
    s.mechanics.chart = chart_of({{"x", false}, {"y", false}, {"z", false}});
    s.mechanics.lagrangian = {constant_mass(Vec::Ones(3)), [](const Vec&) { return 0.0; }};
    s.distribution.rank = 2;
    s.distribution.spanning_fields = {[](const Vec&) { return unit(3, 0); }, [](const Vec&) { return unit(3, 1); }};
    s.distribution.annihilators = {[](const Vec&) { return unit(3, 2); }};
    return s;
}

const std::vector<SystemEntry>& entries() {
    static const std::vector<SystemEntry> list = {
        {"free_particle_2d", "planar free particle, unconstrained", {{"mass", 1.0}}, true},
        {"knife_edge", "knife edge on the plane, no lateral slip", {{"mass", 1.0}, {"inertia", 1.0}}, true},
        {"vertical_rolling_disk", "upright disk rolling without slipping",
         {{"mass", 1.0}, {"radius", 1.0}, {"inertia_theta", 0.25}, {"inertia_phi", 0.5}}, true},
        {"chaplygin_sleigh", "sleigh with offset centre of mass; SE(2) symmetry, simulation only",
         {{"mass", 1.0}, {"inertia", 0.5}, {"offset", 0.5}}, false},
        {"planar_slider", "integrable distribution span{dx, dy} in R^3", Params::object(), true},
    };
    return list;
}

NonholonomicRCHSpec make_system(const std::string& name, const Params& params) {
    const Params p = params.is_null() ? Params::object() : params;
    if (!p.is_object()) throw ConfigError("system parameters must be an object");
    const SystemEntry* entry = nullptr;
    for (const auto& e : entries())
        if (e.name == name) entry = &e;
    if (!entry) throw ConfigError("unknown catalog system '" + name + "'");
    for (const auto& [key, value] : p.items())
        if (!entry->defaults.contains(key)) throw ConfigError("unknown parameter '" + key + "' for " + name);
    auto get = [&](const char* key) { return number(p, key, entry->defaults[key].get<double>()); };
    if (name == "free_particle_2d") return free_particle_2d(get("mass"));
    if (name == "knife_edge") return knife_edge(get("mass"), get("inertia"));
    if (name == "vertical_rolling_disk")
        return vertical_rolling_disk(get("mass"), get("radius"), get("inertia_theta"), get("inertia_phi"));
    if (name == "chaplygin_sleigh") return chaplygin_sleigh(get("mass"), get("inertia"), get("offset"));
    return planar_slider();
}

SymmetrySpec translations(const ChartSpec& chart, const std::vector<std::string>& names) {
    SymmetrySpec G;
    for (const auto& n : names) G.cyclic_indices.push_back(chart.index_of(n));
    G.validate(chart);
    return G;
}

SymmetrySpec se2(const ChartSpec& chart) {
    SymmetrySpec G = translations(chart, {"x", "y", "theta"});
    G.group_name = "se2";
    // Generators e1 = dx, e2 = dy, e3 = rotation: [e3, e1] = e2, [e3, e2] = -e1.
    G.structure_constants.assign(3, Mat::Zero(3, 3));
    G.structure_constants[1](2, 0) = 1.0;
    G.structure_constants[1](0, 2) = -1.0;
    G.structure_constants[0](2, 1) = -1.0;
    G.structure_constants[0](1, 2) = 1.0;
    return G;
}

SymmetrySpec declared_symmetry(const std::string& name, const ChartSpec& chart) {
    if (name == "chaplygin_sleigh") return se2(chart);
    return SymmetrySpec{};
}

ScalarFn potential(const Params& raw, const ChartSpec& chart) {
    const Params p = normalize(raw);
    const std::string n = name_of(p);
    const long dim = static_cast<long>(chart.dim());
    if (n == "zero") return [](const Vec&) { return 0.0; };
    if (n == "linear") {
        const Vec a = vector(p, "coeffs", dim);
        return [a](const Vec& q) { return a.dot(q); };
    }
    if (n == "quadratic") {
        const Vec k = vector(p, "stiffness", dim);
        return [k](const Vec& q) { return 0.5 * q.dot(k.asDiagonal() * q); };
    }
    if (n == "cosine") {
        const std::size_t i = coord(p, "coord", "theta", chart);
        const double a = number(p, "amplitude", 1.0);
        return [i, a](const Vec& q) { return a * (1.0 - std::cos(q[static_cast<long>(i)])); };
    }
    throw ConfigError("unknown potential '" + n + "'");
}

VerticalFieldSpec vertical_field(const Params& raw, const ChartSpec& chart) {
    const Params p = normalize(raw);
    const std::string n = name_of(p);
    const long dim = static_cast<long>(chart.dim());
    if (n == "zero") return {};
    if (n == "constant") {
        const Vec f = vector(p, "value", dim);
        return {[f](const PhasePoint&) { return f; }};
    }
    if (n == "damping") {
        const double c = number(p, "c", 0.1);
        return {[c](const PhasePoint& z) { return Vec(-c * z.p); }};
    }
    throw ConfigError("unknown force/control '" + n + "'");
}

VectorFn spanning_field(const Params& raw, const ChartSpec& chart) {
    const Params p = normalize(raw);
    const std::string n = name_of(p);
    const long dim = static_cast<long>(chart.dim());
    if (n == "coordinate") {
        const std::size_t i = coord(p, "coord", "x", chart);
        return [dim, i](const Vec&) { return unit(dim, i); };
    }
    if (n == "constant") {
        const Vec v = vector(p, "value", dim);
        return [v](const Vec&) { return v; };
    }
    if (n == "heading") {
        const std::size_t ix = coord(p, "x", "x", chart), iy = coord(p, "y", "y", chart);
        const std::size_t it = coord(p, "theta", "theta", chart);
        return [=](const Vec& q) {
            Vec v = Vec::Zero(dim);
            v[static_cast<long>(ix)] = std::cos(q[static_cast<long>(it)]);
            v[static_cast<long>(iy)] = std::sin(q[static_cast<long>(it)]);
            return v;
        };
    }
    if (n == "rolling") {
        const double R = number(p, "radius", 1.0);
        const std::size_t ix = coord(p, "x", "x", chart), iy = coord(p, "y", "y", chart);
        const std::size_t it = coord(p, "theta", "theta", chart), ip = coord(p, "phi", "phi", chart);
        return [=](const Vec& q) {
            Vec v = Vec::Zero(dim);
            v[static_cast<long>(ix)] = R * std::cos(q[static_cast<long>(it)]);
            v[static_cast<long>(iy)] = R * std::sin(q[static_cast<long>(it)]);
            v[static_cast<long>(ip)] = 1.0;
            return v;
        };
    }
    throw ConfigError("unknown spanning field '" + n + "'");
}

MatrixFn mass_matrix(const Params& raw, const ChartSpec& chart) {
    const long dim = static_cast<long>(chart.dim());
    if (raw.is_object() && raw.contains("diagonal")) {
        const Vec d = vector(raw, "diagonal", dim);
        if ((d.array() <= 0).any()) throw ConfigError("mass diagonal must be positive");
        return constant_mass(d);
    }
    const Params p = normalize(raw);
    const std::string n = name_of(p);
    if (n == "identity") return constant_mass(Vec::Ones(dim));
    if (n == "sleigh") {
        if (dim != 3) throw ConfigError("sleigh mass matrix needs a 3-dimensional chart");
        return chaplygin_sleigh(number(p, "mass", 1.0), number(p, "inertia", 0.5), number(p, "offset", 0.5))
            .mechanics.lagrangian.mass_matrix;
    }
    throw ConfigError("unknown mass matrix '" + n + "'");
}

OneFormField one_form(const Params& raw, const NonholonomicRCHSpec& spec) {
    const Params p = normalize(raw);
    const std::string n = name_of(p);
    const ChartSpec& chart = spec.chart();
    const long dim = static_cast<long>(chart.dim());
    if (n == "heading" || n == "heading_perturbed") {
        const double c = number(p, "c", 1.0);
        const double ct = number(p, "c_theta", 0.5);
        const double kx = number(p, "kx", n == "heading_perturbed" ? 0.1 : 0.0);
        const std::size_t ix = coord(p, "x", "x", chart), iy = coord(p, "y", "y", chart);
        const std::size_t it = coord(p, "theta", "theta", chart);
        return {[=](const Vec& q) {
            Vec g = Vec::Zero(dim);
            const double th = q[static_cast<long>(it)];
            g[static_cast<long>(ix)] = c * std::cos(th);
            g[static_cast<long>(iy)] = c * std::sin(th);
            g[static_cast<long>(it)] = ct + kx * q[static_cast<long>(ix)];
            return g;
        }};
    }
    if (n == "constant") {
        const Vec v = vector(p, "value", dim);
        return {[v](const Vec&) { return v; }};
    }
    if (n == "exact_quadratic") {
        // gamma = dW for W = a.q + 1/2 q^T S q.
        const Vec a = p.contains("linear") ? vector(p, "linear", dim) : Vec::Zero(dim);
        Mat S = Mat::Zero(dim, dim);
        if (p.contains("quadratic")) {
            const Params& rows = p["quadratic"];
            if (!rows.is_array() || static_cast<long>(rows.size()) != dim)
                throw ConfigError("'quadratic' must be an n x n array");
            for (long i = 0; i < dim; ++i) S.row(i) = vector(Params{{"r", rows[static_cast<std::size_t>(i)]}}, "r", dim);
        }
        const Mat Ssym = 0.5 * (S + S.transpose());
        return {[a, Ssym](const Vec& q) { return Vec(a + Ssym * q); }};
    }
    if (n == "legendre_combination") {
        const Vec c = vector(p, "coeffs", static_cast<long>(spec.distribution.rank));
        return {[spec, c](const Vec& q) {
            return Vec(spec.mechanics.lagrangian.mass_matrix(q) * spec.distribution.fields(q) * c);
        }};
    }
    if (n == "spin") {
        const std::size_t i = coord(p, "coord", "theta", chart);
        const double c = number(p, "c", 0.5), amp = number(p, "amp", 0.0);
        return {[=](const Vec& q) {
            Vec g = Vec::Zero(dim);
            g[static_cast<long>(i)] = c + amp * std::sin(q[static_cast<long>(i)]);
            return g;
        }};
    }
    throw ConfigError("unknown one-form '" + n + "'");
}

SymplecticMapSpec symplectic_map(const Params& raw, const NonholonomicRCHSpec& spec, const SymmetrySpec& G) {
    const Params p = normalize(raw);
    const std::string n = name_of(p);
    const long dim = static_cast<long>(spec.dim());
    if (n == "identity") return {"identity", [](const PhasePoint& z) { return z; }};
    if (n == "cyclic_shear") {
        // Time-s flow of 1/2 sum over cyclic a of p_a^2.
        if (G.dim() == 0) throw ConfigError("cyclic_shear needs a symmetry");
        const double s = number(p, "s", 0.3);
        const auto idx = G.cyclic_indices;
        return {"cyclic_shear", [s, idx](const PhasePoint& z) {
                    PhasePoint out = z;
                    for (std::size_t a : idx) out.q[static_cast<long>(a)] += s * z.p[static_cast<long>(a)];
                    return out;
                }};
    }
    if (n == "fiber_translation") {
        const Vec c = vector(p, "value", dim);
        return {"fiber_translation", [c](const PhasePoint& z) { return PhasePoint{z.q, z.p + c}; }};
    }
    throw ConfigError("unknown symplectic map '" + n + "'");
}

}  // namespace nhrch::catalog
