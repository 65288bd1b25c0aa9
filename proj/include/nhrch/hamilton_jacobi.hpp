#ifndef NHRCH_HAMILTON_JACOBI_HPP
#define NHRCH_HAMILTON_JACOBI_HPP

#include <string>

#include "nhrch/controlled.hpp"

namespace nhrch {

// A one-form q -> gamma(q) on the configuration space.
struct OneFormField {
    VectorFn components;

    Vec operator()(const Vec& q) const { return components(q); }
    PhasePoint lift(const Vec& q) const { return {q, components(q)}; }
    // Jacobian of the stacked map (q, p) -> (q, gamma(q)).
    Mat lambda_jacobian(const PhasePoint& z, const FDConfig& cfg = {}) const;
};

struct SymplecticMapSpec {
    std::string name;
    std::function<PhasePoint(const PhasePoint&)> map;

    PhasePoint operator()(const PhasePoint& z) const { return map(z); }
    Mat jacobian(const PhasePoint& z, const FDConfig& cfg = {}) const;
};

// max |(D eps)^T J (D eps) - J| at z.
double symplecticity_residual(const SymplecticMapSpec& eps, const PhasePoint& z, const FDConfig& cfg = {});

double closedness_on_d_residual(const OneFormField& gamma, const DistributionSpec& D, const Vec& q,
                                const FDConfig& cfg = {});
double closedness_full_residual(const OneFormField& gamma, const Vec& q, const FDConfig& cfg = {});

struct OneFormIdentityResiduals {
    double pullback = 0.0;        // |lambda^* omega(v, w) + d gamma(v, w)|
    double contraction = 0.0;     // |omega(T lambda v, w) - omega(v, w - T lambda w) + d gamma(v, w)|
    double base_direction = 0.0;  // annihilator applied to T pi_Q X_H(gamma(q))
};

OneFormIdentityResiduals one_form_identity_checks(const NonholonomicRCHSpec& spec, const OneFormField& gamma,
                                                  const PhasePoint& z, const TangentVec& v, const TangentVec& w,
                                                  const FDConfig& cfg = {});

struct GammaPreconditions {
    double on_constraint = 0.0;
    double tangent_in_k = 0.0;
    double closed_on_d = 0.0;
    double invariance = 0.0;

    bool pass(double tol) const;
    // Name and value of the first failing check ("" if none).
    std::pair<std::string, double> first_failure(double tol) const;
    GammaPreconditions worst(const GammaPreconditions& other) const;
};

struct HJOptions {
    double tolerance = 1e-6;
    double precondition_tol = 1e-7;
    double symplectic_tol = 1e-6;
    bool enforce_preconditions = true;
};

GammaPreconditions gamma_preconditions(const DistributionalSystem& system, const NonholonomicSystem& base,
                                       const OneFormField& gamma, const Vec& q);

// || T gamma_bar . X~^gamma(q) - X_K(gamma_bar(q)) || where gamma_bar is gamma followed by the
// system's quotient map (identity for the base system).
double type1_residual(const DistributionalSystem& system, const NonholonomicSystem& base, const OneFormField& gamma,
                      const Vec& q, const HJOptions& opts = {});
double type1_reduced_residual(const DistributionalSystem& reduced, const NonholonomicSystem& base,
                              const OneFormField& gamma, const Vec& q, const HJOptions& opts = {});

struct Type2Residuals {
    double r1 = 0.0;
    double r2 = 0.0;
};

Type2Residuals type2_residuals(const DistributionalSystem& system, const NonholonomicSystem& base,
                               const OneFormField& gamma, const SymplecticMapSpec& eps, const PhasePoint& z,
                               const HJOptions& opts = {});

struct Type2Correspondence {
    Type2Residuals base;
    Type2Residuals reduced;
    bool base_equivalence = false;     // (r1 < tol) == (r2 < tol) on the base
    bool reduced_equivalence = false;  // same on the reduced system
    bool correspondence = false;       // base r1 verdict == reduced r1 verdict
};

Type2Correspondence type2_reduced_residuals(const DistributionalSystem& reduced, const NonholonomicSystem& base,
                                            const OneFormField& gamma, const SymplecticMapSpec& eps,
                                            const PhasePoint& z, const HJOptions& opts = {});

struct Type1Report {
    std::vector<Vec> points;
    std::vector<double> residuals;
    std::vector<GammaPreconditions> preconditions;
    GammaPreconditions worst;
    double max_residual = 0.0;
    double mean_residual = 0.0;
    std::size_t precondition_failures = 0;
    bool preconditions_hold = false;
    bool pass = false;
    double tolerance = 0.0;
};

// Residuals are evaluated at every point regardless of preconditions; the verdict requires both.
Type1Report sweep_type1(const DistributionalSystem& system, const NonholonomicSystem& base,
                        const OneFormField& gamma, const std::vector<Vec>& grid, const HJOptions& opts = {});

struct Type2Report {
    std::vector<Type2Correspondence> samples;
    std::vector<std::string> precondition_failures;  // per sample, "" if none
    std::size_t failed_preconditions = 0;
    std::size_t equivalence_disagreements = 0;
    std::size_t correspondence_disagreements = 0;
    std::size_t r1_passing = 0;
    double max_r1_r2_gap = 0.0;
    bool pass = false;
    double tolerance = 0.0;
};

// With reduced == nullptr only the base equivalence is exercised.
Type2Report sweep_type2(const DistributionalSystem* reduced, const NonholonomicSystem& base,
                        const OneFormField& gamma, const SymplecticMapSpec& eps,
                        const std::vector<PhasePoint>& samples, const HJOptions& opts = {});

}  // namespace nhrch

#endif
