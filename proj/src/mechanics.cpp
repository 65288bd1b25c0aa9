#include "nhrch/mechanics.hpp"

#include <cmath>

namespace nhrch {

namespace {

void require_dim(const HamiltonianSystemSpec& spec, long size, const char* what) {
    if (size != static_cast<long>(spec.dim()))
        throw DimensionMismatch(std::string(what) + " has length " + std::to_string(size) + ", chart dim is " +
                                std::to_string(spec.dim()));
}

Mat mass_at(const HamiltonianSystemSpec& spec, const Vec& q) {
    Mat M = spec.lagrangian.mass_matrix(q);
    const long n = static_cast<long>(spec.dim());
    if (M.rows() != n || M.cols() != n) throw DimensionMismatch("mass matrix has wrong shape");
    return M;
}

}  // namespace

void check_mass_matrix(const HamiltonianSystemSpec& spec, const Vec& q) {
    require_dim(spec, q.size(), "q");
    const Mat M = mass_at(spec, q);
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, M.cwiseAbs().maxCoeff()))
        throw SingularMatrix("mass matrix is not symmetric", 0, M.rows());
    Eigen::SelfAdjointEigenSolver<Mat> eig(M, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() <= 0.0)
        throw SingularMatrix("mass matrix is not positive-definite", 0, M.rows());
}

PhasePoint legendre(const HamiltonianSystemSpec& spec, const Vec& q, const Vec& v) {
    require_dim(spec, q.size(), "q");
    require_dim(spec, v.size(), "velocity");
    return {q, mass_at(spec, q) * v};
}

Vec inverse_legendre(const HamiltonianSystemSpec& spec, const PhasePoint& z) {
    require_dim(spec, z.q.size(), "q");
    require_dim(spec, z.p.size(), "p");
    Eigen::LLT<Mat> llt(mass_at(spec, z.q));
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("mass matrix is not positive-definite", 0, static_cast<long>(spec.dim()));
    return llt.solve(z.p);
}

double hamiltonian(const HamiltonianSystemSpec& spec, const PhasePoint& z) {
    const Vec v = inverse_legendre(spec, z);
    const double V = spec.lagrangian.potential ? spec.lagrangian.potential(z.q) : 0.0;
    return 0.5 * z.p.dot(v) + V;
}

Vec phase_gradient(const PhaseScalarFn& f, const PhasePoint& z, const FDConfig& cfg) {
    const Mat g = fd_jacobian([&](const Vec& x) { return Vec::Constant(1, f(unstack_point(x))); }, stack(z), cfg);
    return g.row(0).transpose();
}

TangentVec hamiltonian_vector_field(const PhaseScalarFn& f, const PhasePoint& z, const FDConfig& cfg) {
    const Vec g = phase_gradient(f, z, cfg);
    const long n = z.q.size();
    return {g.tail(n), -g.head(n)};
}

TangentVec hamiltonian_vector_field(const HamiltonianSystemSpec& spec, const PhasePoint& z, const FDConfig& cfg) {
    return hamiltonian_vector_field([&](const PhasePoint& x) { return hamiltonian(spec, x); }, z, cfg);
}

}  // namespace nhrch
