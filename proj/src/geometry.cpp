#include "nhrch/geometry.hpp"

#include <cmath>
#include <numbers>

namespace nhrch {

namespace {

void require_same(long a, long b, const char* what) {
    if (a != b) throw DimensionMismatch(std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
}

}  // namespace

void ChartSpec::validate() const {
    if (coord_names.empty()) throw ConfigError("chart must have at least one coordinate");
    if (periodic.size() != coord_names.size())
        throw ConfigError("chart periodic flags must match coordinate count");
    for (std::size_t i = 0; i < coord_names.size(); ++i)
        for (std::size_t j = i + 1; j < coord_names.size(); ++j)
            if (coord_names[i] == coord_names[j]) throw ConfigError("duplicate coordinate name " + coord_names[i]);
}

std::size_t ChartSpec::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < coord_names.size(); ++i)
        if (coord_names[i] == name) return i;
    throw ConfigError("unknown coordinate '" + name + "'");
}

double wrap_angle(double x) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double r = std::fmod(x, two_pi);
    if (r < 0) r += two_pi;
    if (r >= two_pi) r = 0.0;
    return r;
}

Vec ChartSpec::wrap(const Vec& q) const {
    require_same(q.size(), static_cast<long>(dim()), "chart wrap");
    Vec out = q;
    for (std::size_t i = 0; i < dim(); ++i)
        if (periodic[i]) out[i] = wrap_angle(q[i]);
    return out;
}

Vec ChartSpec::difference(const Vec& a, const Vec& b) const {
    require_same(a.size(), b.size(), "chart difference");
    Vec d = a - b;
    for (std::size_t i = 0; i < dim(); ++i) {
        if (!periodic[i]) continue;
        d[i] = std::remainder(d[i], 2.0 * std::numbers::pi);
    }
    return d;
}

Vec stack(const TangentVec& v) {
    require_same(v.dq.size(), v.dp.size(), "tangent vector");
    Vec out(2 * v.dq.size());
    out << v.dq, v.dp;
    return out;
}

Vec stack(const PhasePoint& z) {
    require_same(z.q.size(), z.p.size(), "phase point");
    Vec out(2 * z.q.size());
    out << z.q, z.p;
    return out;
}

TangentVec unstack_tangent(const Vec& v) {
    if (v.size() % 2 != 0) throw DimensionMismatch("odd-length phase-space vector");
    const long n = v.size() / 2;
    return {v.head(n), v.tail(n)};
}

PhasePoint unstack_point(const Vec& z) {
    if (z.size() % 2 != 0) throw DimensionMismatch("odd-length phase-space vector");
    const long n = z.size() / 2;
    return {z.head(n), z.tail(n)};
}

double canonical_omega(const TangentVec& v, const TangentVec& w) {
    require_same(v.dq.size(), w.dq.size(), "canonical_omega");
    require_same(v.dp.size(), w.dp.size(), "canonical_omega");
    require_same(v.dq.size(), v.dp.size(), "canonical_omega");
    return v.dq.dot(w.dp) - w.dq.dot(v.dp);
}

Mat omega_matrix(std::size_t n) {
    const long m = static_cast<long>(n);
    Mat J = Mat::Zero(2 * m, 2 * m);
    J.topRightCorner(m, m) = Mat::Identity(m, m);
    J.bottomLeftCorner(m, m) = -Mat::Identity(m, m);
    return J;
}

Mat fd_jacobian(const VectorFn& f, const Vec& x, const FDConfig& cfg) {
    if (!(cfg.step > 0)) throw ConfigError("finite-difference step must be positive");
    const long k = x.size();
    if (k == 0) return Mat(f(x).size(), 0);
    Mat J;
    Vec xp = x;
    for (long j = 0; j < k; ++j) {
        const double h = cfg.scale_relative ? cfg.step * std::max(1.0, std::abs(x[j])) : cfg.step;
        xp[j] = x[j] + h;
        const Vec fp = f(xp);
        xp[j] = x[j] - h;
        const Vec fm = f(xp);
        xp[j] = x[j];
        if (j == 0) J.resize(fp.size(), k);
        require_same(fp.size(), J.rows(), "fd_jacobian output");
        require_same(fm.size(), J.rows(), "fd_jacobian output");
        J.col(j) = (fp - fm) / (2.0 * h);
    }
    return J;
}

double exterior_d_oneform(const VectorFn& gamma, const Vec& q, const Vec& X, const Vec& Y, const FDConfig& cfg) {
    require_same(X.size(), q.size(), "exterior_d_oneform X");
    require_same(Y.size(), q.size(), "exterior_d_oneform Y");
    const Mat J = fd_jacobian(gamma, q, cfg);  // J(i, j) = d gamma_i / d q_j
    require_same(J.rows(), q.size(), "one-form components");
    return Y.dot(J * X) - X.dot(J * Y);
}

Vec lie_bracket(const VectorFn& X, const VectorFn& Y, const Vec& q, const FDConfig& cfg) {
    const Vec xq = X(q);
    const Vec yq = Y(q);
    require_same(xq.size(), q.size(), "lie_bracket X");
    require_same(yq.size(), q.size(), "lie_bracket Y");
    return fd_jacobian(Y, q, cfg) * xq - fd_jacobian(X, q, cfg) * yq;
}

LinearSolveResult solve_linear(const Mat& A, const Vec& b) {
    if (A.rows() != A.cols()) throw DimensionMismatch("solve_linear needs a square matrix");
    require_same(A.rows(), b.size(), "solve_linear right-hand side");
    LinearSolveResult out;
    const long m = A.rows();
    if (m == 0) {
        out.x = Vec(0);
        out.condition = 1.0;
        return out;
    }
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double tol = kRankTol * s[0];
    long rank = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s[i] > tol) ++rank;
    out.rank = rank;
    if (rank < m)
        throw SingularMatrix("matrix is numerically singular (rank " + std::to_string(rank) + " of " +
                                 std::to_string(m) + ")",
                             rank, m);
    out.x = svd.solve(b);
    out.condition = s[0] / s[m - 1];
    return out;
}

long numerical_rank(const Mat& A, double rel_tol, double floor) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<Mat> svd(A);
    const Vec& s = svd.singularValues();
    const double tol = rel_tol * std::max(s[0], floor);
    long r = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s[i] > tol) ++r;
    return r;
}

Mat canonical_basis(const Mat& orthonormal) {
    const long d = orthonormal.cols();
    const long N = orthonormal.rows();
    Mat P = orthonormal * orthonormal.transpose();
    Mat out(N, d);
    std::vector<bool> used(static_cast<std::size_t>(N), false);
    for (long c = 0; c < d; ++c) {
        long best = -1;
        double best_norm = -1.0;
        for (long j = 0; j < N; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            const double nrm = P.col(j).norm();
            if (nrm > best_norm) {
                best_norm = nrm;
                best = j;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        Vec qv = P.col(best) / best_norm;
        // Re-orthogonalize against accepted vectors to contain roundoff.
        for (long i = 0; i < c; ++i) qv -= out.col(i).dot(qv) * out.col(i);
        qv.normalize();
        out.col(c) = qv;
        P -= qv * (qv.transpose() * P);
    }
    return out;
}

Mat nullspace(const Mat& A, double rel_tol, double floor) {
    const long N = A.cols();
    if (A.rows() == 0) return Mat::Identity(N, N);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    const double tol = rel_tol * std::max(s.size() ? s[0] : 0.0, floor);
    long r = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s[i] > tol) ++r;
    if (r == N) return Mat(N, 0);
    return canonical_basis(svd.matrixV().rightCols(N - r));
}

Mat range_basis(const Mat& A, double rel_tol, double floor) {
    const long N = A.rows();
    if (A.cols() == 0) return Mat(N, 0);
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeFullU);
    const Vec& s = svd.singularValues();
    const double tol = rel_tol * std::max(s.size() ? s[0] : 0.0, floor);
    long r = 0;
    for (long i = 0; i < s.size(); ++i)
        if (s[i] > tol) ++r;
    if (r == 0) return Mat(N, 0);
    return canonical_basis(svd.matrixU().leftCols(r));
}

std::vector<Vec> make_grid(const ChartSpec& chart, const GridSpec& grid) {
    std::vector<std::vector<double>> axes;
    for (std::size_t i = 0; i < chart.dim(); ++i) {
        std::vector<double> axis;
        if (chart.periodic[i]) {
            for (std::size_t j = 0; j < grid.periodic_points; ++j)
                axis.push_back(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(grid.periodic_points));
        } else if (grid.unbounded_points == 1) {
            axis.push_back(0.5 * (grid.lo + grid.hi));
        } else {
            for (std::size_t j = 0; j < grid.unbounded_points; ++j)
                axis.push_back(grid.lo + (grid.hi - grid.lo) * static_cast<double>(j) /
                                             static_cast<double>(grid.unbounded_points - 1));
        }
        axes.push_back(std::move(axis));
    }
    std::vector<Vec> out;
    std::vector<std::size_t> idx(chart.dim(), 0);
    for (;;) {
        Vec q(static_cast<long>(chart.dim()));
        for (std::size_t i = 0; i < chart.dim(); ++i) q[static_cast<long>(i)] = axes[i][idx[i]];
        out.push_back(q);
        std::size_t d = chart.dim();
        while (d > 0) {
            --d;
            if (++idx[d] < axes[d].size()) break;
            idx[d] = 0;
            if (d == 0) return out;
        }
    }
}

double subspace_distance(const Mat& A, const Mat& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw DimensionMismatch("subspace_distance shapes differ");
    if (A.cols() == 0) return 0.0;
    const Mat Qa = Eigen::HouseholderQR<Mat>(A).householderQ() * Mat::Identity(A.rows(), A.cols());
    const Mat Qb = Eigen::HouseholderQR<Mat>(B).householderQ() * Mat::Identity(B.rows(), B.cols());
    const Mat residual = Qb - Qa * (Qa.transpose() * Qb);
    return Eigen::JacobiSVD<Mat>(residual).singularValues()[0];
}

}  // namespace nhrch
