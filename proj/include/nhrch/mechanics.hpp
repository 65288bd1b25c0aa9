#ifndef NHRCH_MECHANICS_HPP
#define NHRCH_MECHANICS_HPP

#include "nhrch/geometry.hpp"

namespace nhrch {

using MatrixFn = std::function<Mat(const Vec&)>;
using ScalarFn = std::function<double(const Vec&)>;
using PhaseScalarFn = std::function<double(const PhasePoint&)>;

// Kinetic minus potential energy: L = 1/2 v^T M(q) v - V(q).
struct LagrangianSpec {
    MatrixFn mass_matrix;
    ScalarFn potential;
};

struct HamiltonianSystemSpec {
    ChartSpec chart;
    LagrangianSpec lagrangian;

    std::size_t dim() const { return chart.dim(); }
};

// Throws SingularMatrix if M(q) is not symmetric positive-definite.
void check_mass_matrix(const HamiltonianSystemSpec& spec, const Vec& q);

PhasePoint legendre(const HamiltonianSystemSpec& spec, const Vec& q, const Vec& v);
Vec inverse_legendre(const HamiltonianSystemSpec& spec, const PhasePoint& z);
double hamiltonian(const HamiltonianSystemSpec& spec, const PhasePoint& z);

// Gradient (dH/dq, dH/dp) of a phase-space function, stacked.
Vec phase_gradient(const PhaseScalarFn& f, const PhasePoint& z, const FDConfig& cfg = {});
// Canonical Hamiltonian vector field (dF/dp, -dF/dq) of an arbitrary phase-space function.
TangentVec hamiltonian_vector_field(const PhaseScalarFn& f, const PhasePoint& z, const FDConfig& cfg = {});
TangentVec hamiltonian_vector_field(const HamiltonianSystemSpec& spec, const PhasePoint& z,
                                    const FDConfig& cfg = {});

}  // namespace nhrch

#endif
