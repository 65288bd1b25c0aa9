#ifndef NHRCH_REDUCTION_HPP
#define NHRCH_REDUCTION_HPP

#include <optional>

#include "nhrch/controlled.hpp"

namespace nhrch {

// Translations along cyclic coordinates, optionally tagged with Lie algebra structure
// constants (C[c](a, b) = coefficient of e_c in [e_a, e_b]) for groups that are not Abelian.
struct SymmetrySpec {
    std::vector<std::size_t> cyclic_indices;
    std::vector<Mat> structure_constants;
    std::string group_name = "translations";

    std::size_t dim() const { return cyclic_indices.size(); }
    bool abelian() const;
    void validate(const ChartSpec& chart) const;
    bool contains(std::size_t index) const;
};

struct MomentumValue {
    Vec mu;
};

MomentumValue momentum_map(const PhasePoint& z, const SymmetrySpec& G);

// Deterministic sample of group elements as coordinate shifts.
std::vector<Vec> group_shifts(const ChartSpec& chart, const SymmetrySpec& G);

struct InvarianceReport {
    double hamiltonian = 0.0;
    double force = 0.0;
    double control = 0.0;
    double distribution = 0.0;
    bool pass = false;
};

InvarianceReport check_invariance(const NonholonomicRCHSpec& spec, const SymmetrySpec& G,
                                  const std::vector<PhasePoint>& samples, double tol = 1e-8);

Mat v_cap_k_basis(const NonholonomicSystem& base, const SymmetrySpec& G, const PhasePoint& z);
Mat u_basis(const NonholonomicSystem& base, const SymmetrySpec& G, const PhasePoint& z);

// |DJ . X~(z)|: rate of change of the momentum map along the constrained flow.
double momentum_drift(const NonholonomicSystem& base, const SymmetrySpec& G, const PhasePoint& z);

// <mu, [xi, eta]> from the structure constants; identically zero for Abelian groups.
double orbit_form_term(const SymmetrySpec& G, const Vec& mu, const Vec& xi, const Vec& eta);

enum class ReductionKind { quotient, point, orbit };

std::string to_string(ReductionKind kind);

class ReducedSystem : public DistributionalSystem {
public:
    ReducedSystem(NonholonomicSystem parent, SymmetrySpec G, ReductionKind kind, std::optional<Vec> mu);

    // Pointwise reduced data at a section representative.
    struct Local {
        Mat k;               // 2n x k_full basis of K (or K intersected with the level tangent space)
        Mat v_cap_k;         // kernel of the quotient map inside k
        Mat u;               // the sub-distribution omega-orthogonal to v_cap_k
        Mat basis;           // orthonormal reduced basis (after removing the characteristic kernel)
        Mat lifts;           // lifts of basis columns into u
        Mat omega;           // omega(lift_i, lift_j)
        Mat kernel_lifts;    // characteristic directions of omega on the pushed-forward u
        double consistency = 0.0;  // max |dH| over characteristic directions
        double orbit_term = 0.0;   // max |<mu, [xi_i, xi_j]>| over lifts
        Vec grad_h;
    };

    Local local(const PhasePoint& zbar) const;

    const NonholonomicSystem& parent() const { return parent_; }
    const SymmetrySpec& symmetry() const { return G_; }
    ReductionKind kind() const { return kind_; }
    const std::optional<Vec>& mu() const { return mu_; }
    bool trivial() const { return G_.dim() == 0; }
    std::vector<std::size_t> noncyclic_indices() const;

    // Section representatives of the level set (point/orbit kinds): one per connected piece
    // found from a multi-start search over the non-cyclic coordinates.
    const std::vector<PhasePoint>& level_points() const { return level_points_; }
    // Random parent-space points of the constraint set (level set for point/orbit kinds). For
    // level sets, fiber_spread scales the random non-cyclic momentum added to the minimal one.
    std::vector<PhasePoint> sample_points(std::size_t count, std::uint64_t seed, double fiber_spread = 1.0) const;

    const ChartSpec& chart() const override { return parent_.chart(); }
    std::size_t ambient_dim() const override;
    double membership_residual(const PhasePoint& z) const override;
    Mat k_basis(const PhasePoint& z) const override;
    double omega_eval(const PhasePoint& z, const TangentVec& v, const TangentVec& w) const override;
    TangentVec x_k(const PhasePoint& z) const override;
    TangentVec x_tilde(const PhasePoint& z) const override;
    double hamiltonian(const PhasePoint& z) const override;
    PhasePoint project_point(const PhasePoint& z) const override;
    TangentVec push_forward(const PhasePoint& z, const TangentVec& w) const override;
    double preimage_residual(const PhasePoint& z) const override;
    double lifted_k_residual(const PhasePoint& z, const TangentVec& w) const override;
    TangentVec tau_lifted(const PhasePoint& z, const TangentVec& w) const override;
    std::vector<Vec> sample_shifts() const override { return shifts_; }
    PhasePoint project_to_constraint(const PhasePoint& z) const override;

private:
    bool level() const { return kind_ != ReductionKind::quotient; }
    // Rows whose kernel is the tangent space of the momentum level (or orbit preimage).
    Mat level_rows() const;
    Vec reduced_x(const PhasePoint& zbar, bool with_forces) const;
    void find_level_points();

    NonholonomicSystem parent_;
    SymmetrySpec G_;
    ReductionKind kind_;
    std::optional<Vec> mu_;
    std::vector<Vec> shifts_;
    std::vector<PhasePoint> level_points_;
};

ReducedSystem reduced_system(const NonholonomicSystem& base, const SymmetrySpec& G);
ReducedSystem rp_reduced_system(const NonholonomicSystem& base, const SymmetrySpec& G, const Vec& mu);
ReducedSystem ro_reduced_system(const NonholonomicSystem& base, const SymmetrySpec& G, const Vec& mu);

// || T pi X~(z) - X^(pi(z)) ||
double pi_relatedness_residual(const NonholonomicSystem& base, const ReducedSystem& reduced, const PhasePoint& z);

}  // namespace nhrch

#endif
