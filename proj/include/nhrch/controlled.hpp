#ifndef NHRCH_CONTROLLED_HPP
#define NHRCH_CONTROLLED_HPP

#include <utility>

#include "nhrch/constraints.hpp"

namespace nhrch {

TangentVec vertical_lift(const VerticalFieldSpec& field, const PhasePoint& z);

// Symplectic projections of the lifted force and control onto K.
std::pair<TangentVec, TangentVec> f_k_and_u_k(const NonholonomicRCHSpec& spec, const PhasePoint& z,
                                              const FDConfig& cfg = {});
// X_K + F_K + u_K.
TangentVec x_tilde(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg = {});

// The constrained controlled system on T*Q.
class NonholonomicSystem : public DistributionalSystem {
public:
    explicit NonholonomicSystem(NonholonomicRCHSpec spec, FDConfig cfg = {});

    struct Evaluation {
        Mat k;
        Mat omega_k;
        Vec grad_h;
        TangentVec x_k;
        TangentVec f_k;
        TangentVec u_k;
        TangentVec x_tilde;
    };

    // Every pointwise quantity at z from a single K basis; no on-manifold check.
    Evaluation evaluate(const PhasePoint& z) const;

    const NonholonomicRCHSpec& spec() const { return spec_; }
    const FDConfig& fd() const { return cfg_; }

    const ChartSpec& chart() const override { return spec_.chart(); }
    std::size_t ambient_dim() const override { return 2 * spec_.dim(); }
    double membership_residual(const PhasePoint& z) const override;
    Mat k_basis(const PhasePoint& z) const override;
    double omega_eval(const PhasePoint& z, const TangentVec& v, const TangentVec& w) const override;
    TangentVec x_k(const PhasePoint& z) const override;
    TangentVec x_tilde(const PhasePoint& z) const override;
    double hamiltonian(const PhasePoint& z) const override;
    TangentVec tau_lifted(const PhasePoint& z, const TangentVec& w) const override;
    PhasePoint project_to_constraint(const PhasePoint& z) const override;

    Vec grad_h(const PhasePoint& z) const;
    // |T pi_Q X~ - T pi_Q X_K|; nonzero when projected lifts acquire base components.
    double base_part_discrepancy(const PhasePoint& z) const;

private:
    NonholonomicRCHSpec spec_;
    FDConfig cfg_;
};

}  // namespace nhrch

#endif
