#include "nhrch/controlled.hpp"

namespace nhrch {

TangentVec vertical_lift(const VerticalFieldSpec& field, const PhasePoint& z) {
    return {Vec::Zero(z.q.size()), field.evaluate(z)};
}

std::pair<TangentVec, TangentVec> f_k_and_u_k(const NonholonomicRCHSpec& spec, const PhasePoint& z,
                                              const FDConfig& cfg) {
    return {tau_k_project(spec, z, vertical_lift(spec.force, z), cfg),
            tau_k_project(spec, z, vertical_lift(spec.control, z), cfg)};
}

TangentVec x_tilde(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg) {
    k_basis(spec, z, cfg);  // on-manifold precondition
    return NonholonomicSystem(spec, cfg).x_tilde(z);
}

NonholonomicSystem::NonholonomicSystem(NonholonomicRCHSpec spec, FDConfig cfg)
    : spec_(std::move(spec)), cfg_(cfg) {
    spec_.chart().validate();
}

Vec NonholonomicSystem::grad_h(const PhasePoint& z) const {
    return phase_gradient([this](const PhasePoint& x) { return nhrch::hamiltonian(spec_.mechanics, x); }, z, cfg_);
}

NonholonomicSystem::Evaluation NonholonomicSystem::evaluate(const PhasePoint& z) const {
    Evaluation ev;
    ev.k = k_basis_unchecked(spec_, z, cfg_);
    ev.omega_k = restricted_omega(ev.k);
    ev.grad_h = grad_h(z);
    const long n = static_cast<long>(spec_.dim());
    ev.x_k = unstack_tangent(ev.k * solve_k_coefficients(ev.omega_k, ev.k.transpose() * ev.grad_h));
    ev.x_tilde = ev.x_k;
    const Mat Jt = omega_matrix(spec_.dim()).transpose();
    auto project = [&](const VerticalFieldSpec& field) {
        if (field.is_zero()) return TangentVec{Vec::Zero(n), Vec::Zero(n)};
        const Vec rhs = ev.k.transpose() * (Jt * stack(vertical_lift(field, z)));
        return unstack_tangent(ev.k * solve_k_coefficients(ev.omega_k, rhs));
    };
    ev.f_k = project(spec_.force);
    ev.u_k = project(spec_.control);
    if (!spec_.force.is_zero()) {
        ev.x_tilde.dq += ev.f_k.dq;
        ev.x_tilde.dp += ev.f_k.dp;
    }
    if (!spec_.control.is_zero()) {
        ev.x_tilde.dq += ev.u_k.dq;
        ev.x_tilde.dp += ev.u_k.dp;
    }
    return ev;
}

double NonholonomicSystem::membership_residual(const PhasePoint& z) const {
    const Vec c = m_residual(spec_, z);
    return c.size() ? c.norm() : 0.0;
}

Mat NonholonomicSystem::k_basis(const PhasePoint& z) const { return k_basis_unchecked(spec_, z, cfg_); }

double NonholonomicSystem::omega_eval(const PhasePoint&, const TangentVec& v, const TangentVec& w) const {
    return canonical_omega(v, w);
}

TangentVec NonholonomicSystem::x_k(const PhasePoint& z) const { return evaluate(z).x_k; }

TangentVec NonholonomicSystem::x_tilde(const PhasePoint& z) const { return evaluate(z).x_tilde; }

double NonholonomicSystem::hamiltonian(const PhasePoint& z) const { return nhrch::hamiltonian(spec_.mechanics, z); }

TangentVec NonholonomicSystem::tau_lifted(const PhasePoint& z, const TangentVec& w) const {
    const Mat K = k_basis(z);
    const Vec rhs = K.transpose() * (omega_matrix(spec_.dim()).transpose() * stack(w));
    return unstack_tangent(K * solve_k_coefficients(restricted_omega(K), rhs));
}

PhasePoint NonholonomicSystem::project_to_constraint(const PhasePoint& z) const { return project_momentum(spec_, z); }

double NonholonomicSystem::base_part_discrepancy(const PhasePoint& z) const {
    const Evaluation ev = evaluate(z);
    return (ev.x_tilde.dq - ev.x_k.dq).norm();
}

}  // namespace nhrch
