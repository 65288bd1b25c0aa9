#include "nhrch/hamilton_jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nhrch/parallel.hpp"

namespace nhrch {

namespace {

double max_shift_residual(const std::vector<Vec>& shifts, const std::function<double(const Vec&)>& f) {
    double worst = 0.0;
    for (const Vec& a : shifts) worst = std::max(worst, f(a));
    return worst;
}

TangentVec tangent_lift(const Mat& dgamma, const Vec& dq) { return {dq, dgamma * dq}; }

double eps_invariance(const DistributionalSystem& system, const SymplecticMapSpec& eps, const PhasePoint& z) {
    const ChartSpec& chart = system.chart();
    const PhasePoint ez = eps(z);
    return max_shift_residual(system.sample_shifts(), [&](const Vec& a) {
        const PhasePoint shifted = eps(PhasePoint{z.q + a, z.p});
        const Vec dq = chart.difference(shifted.q, ez.q + a);
        return std::hypot(dq.norm(), (shifted.p - ez.p).norm());
    });
}

double gamma_invariance(const DistributionalSystem& system, const OneFormField& gamma, const Vec& q) {
    const Vec g = gamma(q);
    return max_shift_residual(system.sample_shifts(), [&](const Vec& a) { return (gamma(q + a) - g).norm(); });
}

}  // namespace

Mat OneFormField::lambda_jacobian(const PhasePoint& z, const FDConfig& cfg) const {
    return fd_jacobian([this](const Vec& x) {
        const PhasePoint p = unstack_point(x);
        return stack(lift(p.q));
    }, stack(z), cfg);
}

Mat SymplecticMapSpec::jacobian(const PhasePoint& z, const FDConfig& cfg) const {
    return fd_jacobian([this](const Vec& x) { return stack(map(unstack_point(x))); }, stack(z), cfg);
}

double symplecticity_residual(const SymplecticMapSpec& eps, const PhasePoint& z, const FDConfig& cfg) {
    const Mat D = eps.jacobian(z, cfg);
    const Mat J = omega_matrix(static_cast<std::size_t>(z.q.size()));
    return (D.transpose() * J * D - J).cwiseAbs().maxCoeff();
}

double closedness_on_d_residual(const OneFormField& gamma, const DistributionSpec& D, const Vec& q,
                                const FDConfig& cfg) {
    const Mat E = D.fields(q);
    double worst = 0.0;
    for (long a = 0; a < E.cols(); ++a)
        for (long b = a + 1; b < E.cols(); ++b)
            worst = std::max(worst, std::abs(exterior_d_oneform(gamma.components, q, E.col(a), E.col(b), cfg)));
    return worst;
}

double closedness_full_residual(const OneFormField& gamma, const Vec& q, const FDConfig& cfg) {
    const Mat J = fd_jacobian(gamma.components, q, cfg);
    // d gamma(e_i, e_j) = J(j, i) - J(i, j)
    return (J.transpose() - J).cwiseAbs().maxCoeff();
}

OneFormIdentityResiduals one_form_identity_checks(const NonholonomicRCHSpec& spec, const OneFormField& gamma,
                                                  const PhasePoint& z, const TangentVec& v, const TangentVec& w,
                                                  const FDConfig& cfg) {
    OneFormIdentityResiduals out;
    const Mat Tl = gamma.lambda_jacobian(z, cfg);
    const TangentVec lv = unstack_tangent(Tl * stack(v));
    const TangentVec lw = unstack_tangent(Tl * stack(w));
    const double dg = exterior_d_oneform(gamma.components, z.q, v.dq, w.dq, cfg);
    out.pullback = std::abs(canonical_omega(lv, lw) + dg);
    const TangentVec w_minus{w.dq - lw.dq, w.dp - lw.dp};
    out.contraction = std::abs(canonical_omega(lv, w) - canonical_omega(v, w_minus) + dg);
    const PhasePoint gz = gamma.lift(z.q);
    const TangentVec xh = hamiltonian_vector_field(spec.mechanics, gz, cfg);
    const Mat A = spec.distribution.annihilator(z.q);
    out.base_direction = A.rows() ? (A * xh.dq).norm() : 0.0;
    return out;
}

bool GammaPreconditions::pass(double tol) const { return first_failure(tol).first.empty(); }

std::pair<std::string, double> GammaPreconditions::first_failure(double tol) const {
    if (!(on_constraint <= tol)) return {"image of gamma on the constraint set", on_constraint};
    if (!(tangent_in_k <= tol)) return {"T gamma(D) contained in K", tangent_in_k};
    if (!(closed_on_d <= tol)) return {"gamma closed on D", closed_on_d};
    if (!(invariance <= tol)) return {"gamma invariant under the symmetry group", invariance};
    return {"", 0.0};
}

GammaPreconditions GammaPreconditions::worst(const GammaPreconditions& o) const {
    return {std::max(on_constraint, o.on_constraint), std::max(tangent_in_k, o.tangent_in_k),
            std::max(closed_on_d, o.closed_on_d), std::max(invariance, o.invariance)};
}

GammaPreconditions gamma_preconditions(const DistributionalSystem& system, const NonholonomicSystem& base,
                                       const OneFormField& gamma, const Vec& q) {
    GammaPreconditions out;
    const PhasePoint z = gamma.lift(q);
    out.on_constraint = system.preimage_residual(z);
    const Mat E = base.spec().distribution.fields(q);
    const Mat Dg = fd_jacobian(gamma.components, q, base.fd());
    for (long a = 0; a < E.cols(); ++a)
        out.tangent_in_k = std::max(out.tangent_in_k, system.lifted_k_residual(z, tangent_lift(Dg, E.col(a))));
    out.closed_on_d = closedness_on_d_residual(gamma, base.spec().distribution, q, base.fd());
    out.invariance = gamma_invariance(system, gamma, q);
    return out;
}

namespace {

double type1_value(const DistributionalSystem& system, const NonholonomicSystem& base, const OneFormField& gamma,
                   const Vec& q) {
    const PhasePoint z = gamma.lift(q);
    const Vec dq = base.x_tilde(z).dq;
    const Mat Dg = fd_jacobian(gamma.components, q, base.fd());
    const TangentVec lhs = system.push_forward(z, tangent_lift(Dg, dq));
    const TangentVec rhs = system.x_k(system.project_point(z));
    return (stack(lhs) - stack(rhs)).norm();
}

}  // namespace

double type1_residual(const DistributionalSystem& system, const NonholonomicSystem& base, const OneFormField& gamma,
                      const Vec& q, const HJOptions& opts) {
    if (opts.enforce_preconditions) {
        const auto failure = gamma_preconditions(system, base, gamma, q).first_failure(opts.precondition_tol);
        if (!failure.first.empty()) throw PreconditionError(failure.first, failure.second);
    }
    return type1_value(system, base, gamma, q);
}

double type1_reduced_residual(const DistributionalSystem& reduced, const NonholonomicSystem& base,
                              const OneFormField& gamma, const Vec& q, const HJOptions& opts) {
    return type1_residual(reduced, base, gamma, q, opts);
}

Type2Residuals type2_residuals(const DistributionalSystem& system, const NonholonomicSystem& base,
                               const OneFormField& gamma, const SymplecticMapSpec& eps, const PhasePoint& z,
                               const HJOptions& opts) {
    const PhasePoint ez = eps(z);
    if (opts.enforce_preconditions) {
        const double tol = opts.precondition_tol;
        auto require = [](const char* what, double r, double t) {
            if (!(r <= t)) throw PreconditionError(what, r);
        };
        require("sample point on the constraint set", system.preimage_residual(z), tol);
        require("epsilon symplectic", symplecticity_residual(eps, z, base.fd()), opts.symplectic_tol);
        require("epsilon preserves the constraint set", system.preimage_residual(ez), tol);
        require("image of gamma on the constraint set", system.preimage_residual(gamma.lift(ez.q)), tol);
        require("gamma closed on D", closedness_on_d_residual(gamma, base.spec().distribution, ez.q, base.fd()), tol);
        require("epsilon invariant under the symmetry group", eps_invariance(system, eps, z), tol);
        require("gamma invariant under the symmetry group", gamma_invariance(system, gamma, ez.q), tol);
    }
    Type2Residuals out;
    const TangentVec X = base.x_tilde(ez);
    const Mat Dg = fd_jacobian(gamma.components, ez.q, base.fd());
    const TangentVec lhs1 = system.push_forward(ez, tangent_lift(Dg, X.dq));
    const TangentVec xk = system.x_k(system.project_point(ez));
    out.r1 = (stack(lhs1) - stack(xk)).norm();

    const TangentVec xh_eps = hamiltonian_vector_field(
        [&](const PhasePoint& x) { return system.hamiltonian(system.project_point(eps(x))); }, z, base.fd());
    const Vec pushed = eps.jacobian(z, base.fd()) * stack(xh_eps);
    const TangentVec projected = system.tau_lifted(ez, unstack_tangent(pushed));
    const TangentVec tl = unstack_tangent(gamma.lambda_jacobian(ez, base.fd()) * stack(X));
    out.r2 = (stack(projected) - stack(system.push_forward(ez, tl))).norm();
    return out;
}

Type2Correspondence type2_reduced_residuals(const DistributionalSystem& reduced, const NonholonomicSystem& base,
                                            const OneFormField& gamma, const SymplecticMapSpec& eps,
                                            const PhasePoint& z, const HJOptions& opts) {
    Type2Correspondence out;
    const double tol = opts.tolerance;
    out.base = type2_residuals(base, base, gamma, eps, z, opts);
    out.reduced = type2_residuals(reduced, base, gamma, eps, z, opts);
    out.base_equivalence = (out.base.r1 < tol) == (out.base.r2 < tol);
    out.reduced_equivalence = (out.reduced.r1 < tol) == (out.reduced.r2 < tol);
    out.correspondence = (out.base.r1 < tol) == (out.reduced.r1 < tol);
    return out;
}

Type1Report sweep_type1(const DistributionalSystem& system, const NonholonomicSystem& base,
                        const OneFormField& gamma, const std::vector<Vec>& grid, const HJOptions& opts) {
    Type1Report rep;
    rep.tolerance = opts.tolerance;
    rep.points = grid;
    rep.residuals.assign(grid.size(), 0.0);
    rep.preconditions.assign(grid.size(), {});
    parallel_for(grid.size(), [&](std::size_t i) {
        rep.preconditions[i] = gamma_preconditions(system, base, gamma, grid[i]);
        rep.residuals[i] = type1_value(system, base, gamma, grid[i]);
    });
    double sum = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        rep.worst = rep.worst.worst(rep.preconditions[i]);
        if (!rep.preconditions[i].pass(opts.precondition_tol)) ++rep.precondition_failures;
        rep.max_residual = std::max(rep.max_residual, rep.residuals[i]);
        sum += rep.residuals[i];
    }
    rep.mean_residual = grid.empty() ? 0.0 : sum / static_cast<double>(grid.size());
    rep.preconditions_hold = rep.precondition_failures == 0;
    rep.pass = rep.preconditions_hold && rep.max_residual < opts.tolerance;
    return rep;
}

Type2Report sweep_type2(const DistributionalSystem* reduced, const NonholonomicSystem& base,
                        const OneFormField& gamma, const SymplecticMapSpec& eps,
                        const std::vector<PhasePoint>& samples, const HJOptions& opts) {
    Type2Report rep;
    rep.tolerance = opts.tolerance;
    rep.samples.assign(samples.size(), {});
    rep.precondition_failures.assign(samples.size(), "");
    parallel_for(samples.size(), [&](std::size_t i) {
        try {
            if (reduced) {
                rep.samples[i] = type2_reduced_residuals(*reduced, base, gamma, eps, samples[i], opts);
            } else {
                Type2Correspondence c;
                c.base = type2_residuals(base, base, gamma, eps, samples[i], opts);
                c.reduced = c.base;
                c.base_equivalence = (c.base.r1 < opts.tolerance) == (c.base.r2 < opts.tolerance);
                c.reduced_equivalence = c.base_equivalence;
                c.correspondence = true;
                rep.samples[i] = c;
            }
        } catch (const PreconditionError& e) {
            rep.precondition_failures[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!rep.precondition_failures[i].empty()) {
            ++rep.failed_preconditions;
            continue;
        }
        const Type2Correspondence& c = rep.samples[i];
        if (!c.base_equivalence || !c.reduced_equivalence) ++rep.equivalence_disagreements;
        if (!c.correspondence) ++rep.correspondence_disagreements;
        if (c.reduced.r1 < opts.tolerance) ++rep.r1_passing;
        rep.max_r1_r2_gap = std::max({rep.max_r1_r2_gap, std::abs(c.base.r1 - c.base.r2),
                                      std::abs(c.reduced.r1 - c.reduced.r2)});
    }
    rep.pass = rep.failed_preconditions == 0 && rep.equivalence_disagreements == 0 &&
               rep.correspondence_disagreements == 0;
    return rep;
}

}  // namespace nhrch
