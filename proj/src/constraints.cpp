#include "nhrch/constraints.hpp"

#include <cmath>
#include <numbers>

namespace nhrch {

namespace {

Mat stacked_rows(const std::vector<VectorFn>& fns, const Vec& q, long n) {
    Mat out(static_cast<long>(fns.size()), n);
    for (std::size_t i = 0; i < fns.size(); ++i) {
        const Vec v = fns[i](q);
        if (v.size() != n) throw DimensionMismatch("field output length differs from chart dim");
        out.row(static_cast<long>(i)) = v.transpose();
    }
    return out;
}

Mat inverse_mass(const NonholonomicRCHSpec& spec, const Vec& q) {
    Eigen::LLT<Mat> llt(spec.mechanics.lagrangian.mass_matrix(q));
    if (llt.info() != Eigen::Success)
        throw SingularMatrix("mass matrix is not positive-definite", 0, static_cast<long>(spec.dim()));
    return llt.solve(Mat::Identity(static_cast<long>(spec.dim()), static_cast<long>(spec.dim())));
}

Vec constraint_value(const NonholonomicRCHSpec& spec, const PhasePoint& z, const Vec& anchor) {
    const Mat A = spec.distribution.annihilator(z.q, anchor);
    if (A.rows() == 0) return Vec(0);
    return A * inverse_mass(spec, z.q) * z.p;
}

}  // namespace

Mat DistributionSpec::fields(const Vec& q) const {
    if (spanning_fields.size() != rank) throw DimensionMismatch("spanning field count differs from rank");
    return stacked_rows(spanning_fields, q, q.size()).transpose();
}

Mat DistributionSpec::annihilator(const Vec& q) const { return annihilator(q, q); }

Mat DistributionSpec::annihilator(const Vec& q, const Vec& anchor) const {
    const long n = q.size();
    if (has_explicit_annihilators()) {
        if (annihilators.size() + rank != static_cast<std::size_t>(n))
            throw DimensionMismatch("annihilator count must be n - k");
        return stacked_rows(annihilators, q, n);
    }
    if (static_cast<long>(rank) == n) return Mat(0, n);
    const Mat Ea = fields(anchor);
    const Mat B = nullspace(Ea.transpose());
    const Mat E = fields(q);
    const Mat P = Mat::Identity(n, n) - E * (E.transpose() * E).ldlt().solve(E.transpose());
    return B.transpose() * P;
}

void DistributionSpec::validate_at(const Vec& q) const {
    const long n = q.size();
    if (rank == 0 || static_cast<long>(rank) > n) throw RankError("distribution rank out of range", n, static_cast<long>(rank));
    const Mat E = fields(q);
    const long rE = numerical_rank(E);
    if (rE != static_cast<long>(rank)) throw RankError("spanning fields are dependent", static_cast<long>(rank), rE);
    const Mat A = annihilator(q);
    if (A.rows() > 0) {
        const long rA = numerical_rank(A);
        if (rA != A.rows()) throw RankError("annihilators are dependent", A.rows(), rA);
        const double scale = std::max(1.0, A.norm() * E.norm());
        if ((A * E).cwiseAbs().maxCoeff() > 1e-10 * scale)
            throw RankError("annihilators do not vanish on the spanning fields", 0, 1);
    }
}

Vec VerticalFieldSpec::evaluate(const PhasePoint& z) const {
    if (is_zero()) return Vec::Zero(z.q.size());
    Vec f = components(z);
    if (f.size() != z.q.size()) throw DimensionMismatch("force/control output length differs from chart dim");
    return f;
}

TangentVec DistributionalSystem::push_forward(const PhasePoint&, const TangentVec& w) const { return w; }

double DistributionalSystem::lifted_k_residual(const PhasePoint& z, const TangentVec& w) const {
    return span_residual(k_basis(project_point(z)), stack(push_forward(z, w)));
}

Vec m_residual(const NonholonomicRCHSpec& spec, const PhasePoint& z) { return constraint_value(spec, z, z.q); }

Mat constraint_jacobian(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg) {
    const Vec anchor = z.q;
    const long rows = static_cast<long>(spec.dim() - spec.distribution.rank);
    if (rows == 0) return Mat(0, 2 * z.q.size());
    return fd_jacobian([&](const Vec& x) { return constraint_value(spec, unstack_point(x), anchor); }, stack(z), cfg);
}

Mat k_basis_unchecked(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg) {
    const long n = static_cast<long>(spec.dim());
    const long k = static_cast<long>(spec.distribution.rank);
    const Mat A = spec.distribution.annihilator(z.q);
    const Mat Dc = constraint_jacobian(spec, z, cfg);
    Mat S = Mat::Zero(A.rows() + Dc.rows(), 2 * n);
    S.topLeftCorner(A.rows(), n) = A;
    S.bottomRows(Dc.rows()) = Dc;
    Mat K = nullspace(S);
    if (K.cols() != 2 * k)
        throw RankError("K has dimension " + std::to_string(K.cols()) + ", expected " + std::to_string(2 * k), 2 * k,
                        K.cols());
    return K;
}

Mat k_basis(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg) {
    const Vec c = m_residual(spec, z);
    const double r = c.size() ? c.norm() : 0.0;
    if (r > kOnManifoldTol) throw PreconditionError("point on constraint manifold", r);
    return k_basis_unchecked(spec, z, cfg);
}

std::vector<CompletenessReport> check_completeness(const DistributionSpec& D, const std::vector<Vec>& q_samples,
                                                   int max_depth, const FDConfig& cfg) {
    if (max_depth < 1) throw ConfigError("max_depth must be at least 1");
    std::vector<CompletenessReport> reports;
    for (const Vec& q : q_samples) {
        const long n = q.size();
        CompletenessReport rep;
        rep.q = q;
        std::vector<VectorFn> level = D.spanning_fields;
        Mat span = D.fields(q);
        auto record = [&] {
            rep.rank = numerical_rank(span, kBracketRankTol);
            rep.rank_by_depth.push_back(rep.rank);
        };
        record();
        for (int depth = 1; depth <= max_depth && rep.rank < n; ++depth) {
            std::vector<VectorFn> next;
            if (depth == 1) {
                for (std::size_t i = 0; i < level.size(); ++i)
                    for (std::size_t j = i + 1; j < level.size(); ++j) next.push_back(
                        [X = level[i], Y = level[j], cfg](const Vec& x) { return lie_bracket(X, Y, x, cfg); });
            } else {
                for (const VectorFn& E : D.spanning_fields)
                    for (const VectorFn& Y : level)
                        next.push_back([E, Y, cfg](const Vec& x) { return lie_bracket(E, Y, x, cfg); });
            }
            if (next.empty()) break;
            Mat grown(n, span.cols() + static_cast<long>(next.size()));
            grown.leftCols(span.cols()) = span;
            for (std::size_t i = 0; i < next.size(); ++i) grown.col(span.cols() + static_cast<long>(i)) = next[i](q);
            span = grown;
            level = std::move(next);
            record();
        }
        rep.complete = rep.rank == n;
        reports.push_back(std::move(rep));
    }
    return reports;
}

RegularityReport check_d_regularity(const NonholonomicRCHSpec& spec, const Vec& q) {
    RegularityReport rep;
    const Mat E = spec.distribution.fields(q);
    const Mat M = spec.mechanics.lagrangian.mass_matrix(q);
    rep.gram = E.transpose() * M * E;
    Eigen::SelfAdjointEigenSolver<Mat> eig(0.5 * (rep.gram + rep.gram.transpose()), Eigen::EigenvaluesOnly);
    const Vec& ev = eig.eigenvalues();
    const double lo = ev.minCoeff();
    const double hi = ev.cwiseAbs().maxCoeff();
    rep.regular = hi > 0 && lo > kRankTol * hi;
    rep.condition = rep.regular ? hi / lo : std::numeric_limits<double>::infinity();
    return rep;
}

AdmissibilityReport check_admissibility_compatibility(const NonholonomicRCHSpec& spec, const PhasePoint& z,
                                                      const FDConfig& cfg) {
    const long n = static_cast<long>(spec.dim());
    const long k = static_cast<long>(spec.distribution.rank);
    AdmissibilityReport rep;
    rep.expected = n + k;
    Mat F = Mat::Zero(2 * n, k + n);
    F.topLeftCorner(n, k) = spec.distribution.fields(z.q);
    F.bottomRightCorner(n, n) = Mat::Identity(n, n);
    rep.rank_f = numerical_rank(F);
    const Mat Dc = constraint_jacobian(spec, z, cfg);
    const Mat TM = nullspace(Dc);
    rep.dim_tm = TM.cols();
    rep.admissible = rep.rank_f == rep.expected && rep.dim_tm == rep.expected;
    const Mat Fperp = nullspace(F.transpose() * omega_matrix(spec.dim()));
    Mat both(2 * n, TM.cols() + Fperp.cols());
    both << TM, Fperp;
    rep.intersection_dim = TM.cols() + Fperp.cols() - numerical_rank(both);
    rep.compatible = rep.intersection_dim == 0;
    return rep;
}

Mat restricted_omega(const Mat& K) {
    return K.transpose() * omega_matrix(static_cast<std::size_t>(K.rows() / 2)) * K;
}

Vec solve_k_coefficients(const Mat& omega_k, const Vec& rhs) {
    return solve_linear(omega_k.transpose(), rhs).x;
}

TangentVec solve_x_k(const NonholonomicRCHSpec& spec, const PhasePoint& z, const FDConfig& cfg) {
    const Mat K = k_basis(spec, z, cfg);
    const Vec grad = phase_gradient([&](const PhasePoint& x) { return hamiltonian(spec.mechanics, x); }, z, cfg);
    const Vec a = solve_k_coefficients(restricted_omega(K), K.transpose() * grad);
    return unstack_tangent(K * a);
}

TangentVec tau_k_project(const NonholonomicRCHSpec& spec, const PhasePoint& z, const TangentVec& v,
                         const FDConfig& cfg) {
    const Mat K = k_basis(spec, z, cfg);
    const Mat J = omega_matrix(spec.dim());
    const Vec rhs = K.transpose() * J.transpose() * stack(v);
    return unstack_tangent(K * solve_k_coefficients(restricted_omega(K), rhs));
}

double span_residual(const Mat& orthonormal, const Vec& v) {
    if (orthonormal.cols() == 0) return v.norm();
    return (v - orthonormal * (orthonormal.transpose() * v)).norm();
}

Vec sample_base_point(const ChartSpec& chart, std::mt19937_64& rng, const SampleBox& box) {
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> coord(box.lo, box.hi);
    Vec q(static_cast<long>(chart.dim()));
    for (std::size_t i = 0; i < chart.dim(); ++i) q[static_cast<long>(i)] = chart.periodic[i] ? angle(rng) : coord(rng);
    return q;
}

PhasePoint sample_on_constraint(const NonholonomicRCHSpec& spec, std::mt19937_64& rng, const SampleBox& box) {
    const Vec q = sample_base_point(spec.chart(), rng, box);
    std::normal_distribution<double> normal(0.0, box.speed);
    Vec a(static_cast<long>(spec.distribution.rank));
    for (long i = 0; i < a.size(); ++i) a[i] = normal(rng);
    return legendre(spec.mechanics, q, spec.distribution.fields(q) * a);
}

PhasePoint project_momentum(const NonholonomicRCHSpec& spec, const PhasePoint& z) {
    const Mat A = spec.distribution.annihilator(z.q);
    if (A.rows() == 0) return z;
    const Mat B = A * inverse_mass(spec, z.q);
    const Vec correction = B.transpose() * (B * B.transpose()).ldlt().solve(B * z.p);
    return {z.q, z.p - correction};
}

}  // namespace nhrch
