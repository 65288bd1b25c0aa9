#ifndef NHRCH_CONSTRAINTS_HPP
#define NHRCH_CONSTRAINTS_HPP

#include <random>

#include "nhrch/mechanics.hpp"

namespace nhrch {

constexpr double kOnManifoldTol = 1e-8;

struct DistributionSpec {
    std::size_t rank = 0;
    std::vector<VectorFn> spanning_fields;
    // Optional; when empty the annihilator is derived from the spanning fields.
    std::vector<VectorFn> annihilators;

    Mat fields(const Vec& q) const;  // n x k, columns E_a(q)
    Mat annihilator(const Vec& q) const;
    // Derived annihilators are smooth in q for a fixed anchor: rows B^T P(q), where B spans
    // the complement of D(anchor) and P(q) projects orthogonally away from D(q).
    Mat annihilator(const Vec& q, const Vec& anchor) const;
    bool has_explicit_annihilators() const { return !annihilators.empty(); }
    // Rank and orthogonality checks at q; throws RankError / DimensionMismatch.
    void validate_at(const Vec& q) const;
};

// External force or control as a covector field on phase space; empty means zero.
struct VerticalFieldSpec {
    std::function<Vec(const PhasePoint&)> components;

    bool is_zero() const { return !components; }
    Vec evaluate(const PhasePoint& z) const;
};

struct NonholonomicRCHSpec {
    HamiltonianSystemSpec mechanics;
    DistributionSpec distribution;
    VerticalFieldSpec force;
    VerticalFieldSpec control;

    std::size_t dim() const { return mechanics.dim(); }
    const ChartSpec& chart() const { return mechanics.chart; }
};

// Common surface of the base constrained system and every reduced system. Tangent vectors of
// reduced systems are represented in full phase-space coordinates with the quotiented
// components set to zero; points are section representatives.
class DistributionalSystem {
public:
    virtual ~DistributionalSystem() = default;

    virtual const ChartSpec& chart() const = 0;
    virtual std::size_t ambient_dim() const = 0;
    virtual double membership_residual(const PhasePoint& z) const = 0;
    // Orthonormal columns (stacked dq, dp).
    virtual Mat k_basis(const PhasePoint& z) const = 0;
    virtual double omega_eval(const PhasePoint& z, const TangentVec& v, const TangentVec& w) const = 0;
    virtual TangentVec x_k(const PhasePoint& z) const = 0;
    virtual TangentVec x_tilde(const PhasePoint& z) const = 0;
    virtual double hamiltonian(const PhasePoint& z) const = 0;

    // Quotient map applied to a point / tangent vector of the parent phase space.
    virtual PhasePoint project_point(const PhasePoint& z) const { return z; }
    virtual TangentVec push_forward(const PhasePoint& z, const TangentVec& w) const;
    // Residual of a parent-space point against the set this system is a quotient of.
    virtual double preimage_residual(const PhasePoint& z) const { return membership_residual(z); }
    // Distance of push_forward(z, w) from the distribution at project_point(z), plus any
    // failure of w to be tangent to the preimage set.
    virtual double lifted_k_residual(const PhasePoint& z, const TangentVec& w) const;
    // Symplectic projection onto the distribution of a parent-space vector w at z.
    virtual TangentVec tau_lifted(const PhasePoint& z, const TangentVec& w) const = 0;
    // Group translations acting on base coordinates (empty for systems without symmetry).
    virtual std::vector<Vec> sample_shifts() const { return {}; }
    // Nearest feasible point, used by per-step projection in integration.
    virtual PhasePoint project_to_constraint(const PhasePoint& z) const = 0;
};

Vec m_residual(const NonholonomicRCHSpec& spec, const PhasePoint& z);
// Jacobian of the constraint residual (rows n-k, columns 2n) at z.
Mat constraint_jacobian(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg = {});

// Basis of K_z = {delta q in D(q)} intersected with ker Dc(z); no on-manifold check.
Mat k_basis_unchecked(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg = {});
// Same, but throws PreconditionError if z is off the constraint manifold.
Mat k_basis(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg = {});

struct CompletenessReport {
    Vec q;
    std::vector<long> rank_by_depth;
    long rank = 0;
    bool complete = false;
};

// Rank decisions use a looser relative tolerance than kRankTol: nested finite differences
// carry noise of order step^-depth * machine epsilon.
constexpr double kBracketRankTol = 1e-6;

std::vector<CompletenessReport> check_completeness(const DistributionSpec& D, const std::vector<Vec>& q_samples,
                                                   int max_depth, const FDConfig& cfg = {});

struct RegularityReport {
    bool regular = false;
    double condition = 0.0;
    Mat gram;
};

RegularityReport check_d_regularity(const NonholonomicRCHSpec& spec, const Vec& q);

struct AdmissibilityReport {
    long rank_f = 0;
    long dim_tm = 0;
    long expected = 0;
    long intersection_dim = 0;
    bool admissible = false;
    bool compatible = false;
};

AdmissibilityReport check_admissibility_compatibility(const NonholonomicRCHSpec& spec, const PhasePoint& z,
                                                      const FDConfig& cfg = {});

// Omega restricted to an orthonormal basis K: Omega_ij = omega(e_i, e_j).
Mat restricted_omega(const Mat& K);
// Coefficients a with sum_j a_j omega(e_j, e_i) = rhs_i.
Vec solve_k_coefficients(const Mat& omega_k, const Vec& rhs);

TangentVec solve_x_k(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg = {});
TangentVec tau_k_project(const NonholonomicRCHSpec& spec, const PhasePoint& z, const TangentVec& v,
                         const FDConfig& cfg = {});

// Orthogonal-projection distance of a stacked vector from the span of orthonormal columns.
double span_residual(const Mat& orthonormal, const Vec& v);

struct SampleBox {
    double lo = -2.0;
    double hi = 2.0;
    double speed = 1.0;  // scale of the random velocity coefficients
};

// Random base point in the box (periodic coordinates in [0, 2pi)).
Vec sample_base_point(const ChartSpec& chart, std::mt19937_64& rng, const SampleBox& box = {});
// Random point of the constraint manifold: p = M(q) E(q) a with normal coefficients a.
PhasePoint sample_on_constraint(const NonholonomicRCHSpec& spec, std::mt19937_64& rng, const SampleBox& box = {});

// Minimal Euclidean correction of p onto the constraint fiber at q.
PhasePoint project_momentum(const NonholonomicRCHSpec& spec, const PhasePoint& z);

}  // namespace nhrch

#endif
