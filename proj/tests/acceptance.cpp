// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "nhrch/catalog.hpp"
#include "nhrch/integrator.hpp"
#include "nhrch/parallel.hpp"

using namespace nhrch;

namespace {

struct Verdict {
    bool pass = true;
    std::ostringstream notes;

    void require(bool ok, const std::string& what) {
        if (!ok) pass = false;
        notes << (ok ? "" : "[failed] ") << what << "; ";
    }
};

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

Vec v3(double a, double b, double c) { return (Vec(3) << a, b, c).finished(); }

double max_abs(const TangentVec& a, const TangentVec& b) { return (stack(a) - stack(b)).cwiseAbs().maxCoeff(); }

double state_error(const ChartSpec& c, const PhasePoint& a, const PhasePoint& b) {
    return std::max(c.difference(a.q, b.q).cwiseAbs().maxCoeff(), (a.p - b.p).cwiseAbs().maxCoeff());
}

std::vector<PhasePoint> samples_on(const NonholonomicRCHSpec& spec, std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<PhasePoint> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(sample_on_constraint(spec, rng));
    return out;
}

// Every other sample moved onto the image of gamma when that image is admissible.
std::vector<PhasePoint> mixed(const DistributionalSystem& sys, std::vector<PhasePoint> s, const OneFormField& g) {
    for (std::size_t i = 1; i < s.size(); i += 2)
        if (sys.preimage_residual(g.lift(s[i].q)) <= 1e-7) s[i] = g.lift(s[i].q);
    return s;
}

NonholonomicRCHSpec unconstrained_with_potential() {
    NonholonomicRCHSpec s = catalog::free_particle_2d();
    s.mechanics.lagrangian.mass_matrix = [](const Vec& q) {
        Mat M(2, 2);
        M << 2.0 + std::sin(q[0]), 0.3, 0.3, 1.0 + 0.5 * q[1] * q[1];
        return M;
    };
    s.mechanics.lagrangian.potential = [](const Vec& q) { return std::cos(q[0]) + 0.5 * q[1] * q[1] * q[0]; };
    return s;
}

Verdict criterion1() {
    Verdict v;
    double worst = 0.0;
    for (const auto& spec : {catalog::free_particle_2d(), unconstrained_with_potential()})
        for (const auto& z : samples_on(spec, 100, 101))
            worst = std::max(worst, max_abs(solve_x_k(spec, z), hamiltonian_vector_field(spec.mechanics, z)));
    v.require(worst < 1e-8, "max |X_K - X_H| = " + fmt(worst));
    const NonholonomicSystem fp(catalog::free_particle_2d());
    const PhasePoint z0{Vec::Zero(2), (Vec(2) << 1.0, -0.5).finished()};
    IntegrationConfig cfg;
    cfg.step = 1e-3;
    cfg.t_end = 1.0;
    const PhasePoint end = integrate(fp, z0, cfg).states.back();
    const double err = std::max((end.q - z0.p).cwiseAbs().maxCoeff(), (end.p - z0.p).cwiseAbs().maxCoeff());
    v.require(err <= 1e-9, "free-particle endpoint error " + fmt(err));
    return v;
}

Verdict criterion2() {
    Verdict v;
    for (const char* name : {"knife_edge", "vertical_rolling_disk"}) {
        const auto spec = catalog::make_system(name);
        const auto pts = samples_on(spec, 100, 202);
        std::vector<double> gap(pts.size());
        parallel_for(pts.size(), [&](std::size_t i) {
            gap[i] = max_abs(solve_x_k(spec, pts[i]), tau_k_project(spec, pts[i], hamiltonian_vector_field(spec.mechanics, pts[i])));
        });
        const double worst = *std::max_element(gap.begin(), gap.end());
        v.require(worst < 1e-8, std::string(name) + " solve vs projection " + fmt(worst));
    }
    return v;
}

Verdict criterion3() {
    Verdict v;
    const NonholonomicSystem sys(catalog::knife_edge());
    const PhasePoint z0{v3(0, 0, 0), v3(1, 0, 0.5)};
    IntegrationConfig cfg;
    cfg.step = 1e-3;
    cfg.t_end = M_PI;
    const double err = state_error(sys.chart(), integrate(sys, z0, cfg).states.back(), {v3(2, 2, M_PI / 2), v3(0, 1, 0.5)});
    v.require(err < 1e-6, "endpoint error at t=pi " + fmt(err));
    cfg.t_end = 10.0;
    const Trajectory tr = integrate(sys, z0, cfg);
    v.require(tr.max_energy_drift() <= 1e-8, "energy drift " + fmt(tr.max_energy_drift()));
    v.require(tr.max_constraint() <= 1e-7, "constraint drift " + fmt(tr.max_constraint()));
    return v;
}

Verdict criterion4() {
    Verdict v;
    const auto spec = catalog::knife_edge();
    const NonholonomicSystem sys(spec);
    const auto grid = make_grid(spec.chart());
    const Type1Report good = sweep_type1(sys, sys, catalog::one_form("heading(c=1, c_theta=0.5)", spec), grid);
    v.require(good.preconditions_hold, "heading preconditions (" + std::to_string(good.precondition_failures) + " failures)");
    v.require(good.max_residual < 1e-6, "heading max Type I residual " + fmt(good.max_residual));
    const Type1Report bad = sweep_type1(sys, sys, catalog::one_form("heading_perturbed(kx=0.1)", spec), grid);
    v.require(bad.worst.closed_on_d >= 0.05, "perturbed closedness-on-D residual " + fmt(bad.worst.closed_on_d));
    v.require(bad.max_residual >= 1e-3, "perturbed max Type I residual " + fmt(bad.max_residual));
    return v;
}

Verdict criterion5() {
    Verdict v;
    const auto spec = catalog::knife_edge();
    const NonholonomicSystem sys(spec);
    const auto G = catalog::translations(spec.chart(), {"x", "y"});
    const auto gamma = catalog::one_form("heading", spec);
    const auto pts = mixed(sys, samples_on(spec, 50, 505), gamma);
    for (const char* e : {"identity", "cyclic_shear(s=0.3)"}) {
        const auto eps = catalog::symplectic_map(e, spec, G);
        const Type2Report r = sweep_type2(nullptr, sys, gamma, eps, pts);
        v.require(r.failed_preconditions == 0 && r.equivalence_disagreements == 0,
                  eps.name + ": " + std::to_string(r.equivalence_disagreements) + " disagreements, " +
                      std::to_string(r.failed_preconditions) + " precondition failures, " +
                      std::to_string(r.r1_passing) + "/50 satisfy r1");
    }
    return v;
}

Verdict criterion6() {
    Verdict v;
    const auto spec = catalog::knife_edge();
    const NonholonomicSystem sys(spec);
    const auto G = catalog::translations(spec.chart(), {"x", "y"});
    const ReducedSystem red = reduced_system(sys, G);
    const auto pts = samples_on(spec, 50, 606);
    double rel = 0.0;
    for (const auto& z : pts) rel = std::max(rel, pi_relatedness_residual(sys, red, z));
    v.require(rel < 1e-6, "pi-relatedness " + fmt(rel));

    IntegrationConfig cfg;
    cfg.t_end = 5.0;
    const PhasePoint z0{v3(0.3, -0.2, 0.4), v3(std::cos(0.4), std::sin(0.4), 0.7)};
    const Trajectory tb = integrate(sys, z0, cfg);
    const Trajectory tr = integrate(red, red.project_point(z0), cfg);
    double traj = 0.0;
    for (std::size_t i = 0; i < tb.states.size(); ++i)
        traj = std::max(traj, state_error(spec.chart(), red.project_point(tb.states[i]), tr.states[i]));
    v.require(traj < 1e-5, "reduced vs projected trajectory " + fmt(traj));

    const auto gamma = catalog::one_form("heading", spec);
    const Type1Report t1 = sweep_type1(red, sys, gamma, make_grid(spec.chart()));
    v.require(t1.pass, "reduced Type I residual " + fmt(t1.max_residual));
    for (const char* e : {"identity", "cyclic_shear(s=0.3)"}) {
        const Type2Report r = sweep_type2(&red, sys, gamma, catalog::symplectic_map(e, spec, G), mixed(sys, pts, gamma));
        v.require(r.pass, std::string(e) + " base/reduced correspondence disagreements " +
                              std::to_string(r.correspondence_disagreements + r.equivalence_disagreements +
                                             r.failed_preconditions));
    }
    return v;
}

Verdict criterion7() {
    Verdict v;
    const auto spec = catalog::knife_edge();
    const NonholonomicSystem sys(spec);
    const auto G = catalog::translations(spec.chart(), {"x", "y"});
    const Vec mu = (Vec(2) << 1.0, 0.0).finished();
    const ReducedSystem rp = rp_reduced_system(sys, G, mu);
    const ReducedSystem ro = ro_reduced_system(sys, G, mu);
    v.notes << "R_p constructed, dim " << rp.ambient_dim() << " section, " << rp.level_points().size()
            << " level components; ";
    const auto pts = rp.sample_points(50, 707);
    double rel = 0.0, rel_invariant = 0.0, agree = 0.0;
    for (const auto& z : pts) {
        const double r = pi_relatedness_residual(sys, rp, z);
        rel = std::max(rel, r);
        if (momentum_drift(sys, G, z) <= 1e-8) rel_invariant = std::max(rel_invariant, r);
        agree = std::max(agree, (stack(rp.x_tilde(rp.project_point(z))) - stack(ro.x_tilde(ro.project_point(z))))
                                    .cwiseAbs()
                                    .maxCoeff());
    }
    v.require(rel < 1e-6, "pi_mu-relatedness on level-set samples " + fmt(rel) +
                              " (momentum-invariant samples " + fmt(rel_invariant) + ")");
    v.require(agree < 1e-10, "R_o vs R_p field gap " + fmt(agree));

    const auto gamma = catalog::one_form("heading", spec);
    const auto grid = make_grid(spec.chart());
    for (const ReducedSystem* sys_mu : {&rp, &ro}) {
        const std::string tag = sys_mu == &rp ? "R_p" : "R_o";
        const Type1Report t1 = sweep_type1(*sys_mu, sys, gamma, grid);
        v.require(t1.pass, tag + " Type I: max residual " + fmt(t1.max_residual) + ", " +
                               std::to_string(t1.precondition_failures) + "/" + std::to_string(grid.size()) +
                               " precondition failures (" + t1.worst.first_failure(1e-7).first + ")");
        const auto lvl = mixed(*sys_mu, sys_mu->sample_points(50, 708), gamma);
        for (const char* e : {"identity", "cyclic_shear(s=0.3)"}) {
            const Type2Report r = sweep_type2(sys_mu, sys, gamma, catalog::symplectic_map(e, spec, G), lvl);
            v.require(r.pass, tag + " Type II " + e + ": " + std::to_string(r.failed_preconditions) +
                                  " precondition failures, " + std::to_string(r.correspondence_disagreements) +
                                  " correspondence disagreements");
        }
    }

    // The same suites at mu = 0, where the level set is nondegenerate and an admissible one-form exists.
    const ReducedSystem rp0 = rp_reduced_system(sys, G, Vec::Zero(2));
    const auto spin = catalog::one_form("spin(c=0.5)", spec);
    const Type1Report t0 = sweep_type1(rp0, sys, spin, grid);
    const Type2Report s0 =
        sweep_type2(&rp0, sys, spin, catalog::symplectic_map("cyclic_shear", spec, G), mixed(rp0, rp0.sample_points(50, 709), spin));
    v.notes << "diagnostic mu=0 with spin one-form: Type I " << (t0.pass ? "pass" : "fail") << " (" << fmt(t0.max_residual)
            << "), Type II " << (s0.pass ? "pass" : "fail") << "; ";
    return v;
}

Verdict criterion8() {
    Verdict v;
    const auto spec = catalog::knife_edge();
    const std::vector<std::pair<std::string, nlohmann::json>> forms = {
        {"heading", "heading"},
        {"heading_perturbed", "heading_perturbed"},
        {"spin", "spin(amp=0.3)"},
        {"legendre_combination", {{"name", "legendre_combination"}, {"coeffs", {1.0, 0.5}}}},
        {"constant", {{"name", "constant"}, {"value", {0.3, -1.0, 2.0}}}},
        {"exact_quadratic",
         {{"name", "exact_quadratic"}, {"linear", {1, 0, 2}}, {"quadratic", {{1, 2, 0}, {0, 1, 0}, {0, 0, 3}}}}},
    };
    std::mt19937_64 rng(808);
    std::normal_distribution<double> nd;
    auto rv = [&] { return v3(nd(rng), nd(rng), nd(rng)); };
    const auto grid = make_grid(spec.chart());
    double identities = 0.0;
    std::size_t violations = 0;
    for (const auto& [name, json] : forms) {
        const OneFormField g = catalog::one_form(json, spec);
        for (int i = 0; i < 20; ++i) {
            const OneFormIdentityResiduals r = one_form_identity_checks(spec, g, g.lift(rv()), {rv(), rv()}, {rv(), rv()});
            identities = std::max({identities, r.pullback, r.contraction});
        }
        for (const auto& q : grid)
            if (closedness_full_residual(g, q) < 1e-7 && !(closedness_on_d_residual(g, spec.distribution, q) < 1e-7))
                ++violations;
    }
    v.require(identities < 1e-6, "one-form identities max residual " + fmt(identities));
    v.require(violations == 0, "closed => closed on D violations " + std::to_string(violations));
    const OneFormField h = catalog::one_form("heading", spec);
    double on_d = 0.0, full = 0.0;
    for (const auto& q : grid) {
        on_d = std::max(on_d, closedness_on_d_residual(h, spec.distribution, q));
        full = std::max(full, closedness_full_residual(h, q));
    }
    v.require(on_d < 1e-7 && std::abs(full - 1.0) < 1e-3,
              "heading witnesses strictness: on-D " + fmt(on_d) + ", full " + fmt(full));
    return v;
}

Verdict criterion9() {
    Verdict v;
    const auto knife = catalog::knife_edge();
    const auto kc = check_completeness(knife.distribution, make_grid(knife.chart()), 1);
    bool all = true;
    for (const auto& r : kc) all = all && r.complete;
    v.require(all, "knife edge bracket-generating at depth 1");
    const auto slider = catalog::planar_slider();
    const auto sc = check_completeness(slider.distribution, make_grid(slider.chart(), GridSpec{8, 3, -2, 2}), 3);
    bool none = true;
    for (const auto& r : sc) none = none && !r.complete;
    v.require(none, "integrable distribution reported not completely nonholonomic");
    bool regular = true, admissible = true;
    for (const auto& e : catalog::entries()) {
        const auto spec = catalog::make_system(e.name);
        for (const auto& q : make_grid(spec.chart(), GridSpec{4, 3, -2, 2})) regular = regular && check_d_regularity(spec, q).regular;
        for (const auto& z : samples_on(spec, 10, 909)) {
            const AdmissibilityReport r = check_admissibility_compatibility(spec, z);
            admissible = admissible && r.admissible && r.compatible;
        }
    }
    v.require(regular, "D-regularity for every catalog system");
    v.require(admissible, "admissibility and compatibility for every catalog system");
    return v;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        double budget;
        std::function<Verdict()> run;
    };
    const Criterion criteria[] = {
        {1, 1.0, criterion1},  {2, 5.0, criterion2},   {3, 5.0, criterion3},
        {4, 5.0, criterion4},  {5, 10.0, criterion5},  {6, 20.0, criterion6},
        {7, 20.0, criterion7}, {8, 5.0, criterion8},   {9, 2.0, criterion9},
    };
    bool all = true;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v.require(false, std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        v.require(secs < c.budget, "runtime " + fmt(secs) + " s (budget " + fmt(c.budget) + " s)");
        all = all && v.pass;
        std::printf("criterion %d: %s  %s\n", c.id, v.pass ? "PASS" : "FAIL", v.notes.str().c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
