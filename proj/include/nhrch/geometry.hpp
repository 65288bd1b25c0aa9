#ifndef NHRCH_GEOMETRY_HPP
#define NHRCH_GEOMETRY_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "nhrch/errors.hpp"

namespace nhrch {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VectorFn = std::function<Vec(const Vec&)>;

struct ChartSpec {
    std::vector<std::string> coord_names;
    std::vector<bool> periodic;

    std::size_t dim() const { return coord_names.size(); }
    void validate() const;
    // Index of a coordinate by name; throws ConfigError if absent.
    std::size_t index_of(const std::string& name) const;
    // Periodic components mapped into [0, 2pi).
    Vec wrap(const Vec& q) const;
    // Componentwise difference a - b, periodic components taken in (-pi, pi].
    Vec difference(const Vec& a, const Vec& b) const;
};

struct PhasePoint {
    Vec q;
    Vec p;
};

struct TangentVec {
    Vec dq;
    Vec dp;
};

// (dq, dp) and (q, p) stacked into one vector of length 2n.
Vec stack(const TangentVec& v);
Vec stack(const PhasePoint& z);
TangentVec unstack_tangent(const Vec& v);
PhasePoint unstack_point(const Vec& z);

struct FDConfig {
    double step = 1e-5;
    bool scale_relative = false;
};

double wrap_angle(double x);

double canonical_omega(const TangentVec& v, const TangentVec& w);
// Matrix J with omega(v, w) = stack(v)^T J stack(w).
Mat omega_matrix(std::size_t n);

Mat fd_jacobian(const VectorFn& f, const Vec& x, const FDConfig& cfg = {});

// d(gamma)(X, Y) at q for constant base vectors X, Y.
double exterior_d_oneform(const VectorFn& gamma, const Vec& q, const Vec& X, const Vec& Y,
                          const FDConfig& cfg = {});

Vec lie_bracket(const VectorFn& X, const VectorFn& Y, const Vec& q, const FDConfig& cfg = {});

struct LinearSolveResult {
    Vec x;
    long rank = 0;
    double condition = 0.0;
};

// Rank-revealing square solve; throws SingularMatrix below rank tolerance 1e-10 * ||A||.
LinearSolveResult solve_linear(const Mat& A, const Vec& b);

constexpr double kRankTol = 1e-10;

// Singular values above rel_tol * max(sigma_max, floor) are counted.
long numerical_rank(const Mat& A, double rel_tol = kRankTol, double floor = 0.0);

// Orthonormal bases with a reproducible choice of vectors: the orthogonal projector onto
// the subspace is formed and its columns are orthonormalized largest-remaining-norm first.
Mat nullspace(const Mat& A, double rel_tol = kRankTol, double floor = 0.0);
Mat range_basis(const Mat& A, double rel_tol = kRankTol, double floor = 0.0);
Mat canonical_basis(const Mat& orthonormal);

// Tensor grid: periodic coordinates sampled uniformly on [0, 2pi), others on [lo, hi].
struct GridSpec {
    std::size_t periodic_points = 8;
    std::size_t unbounded_points = 5;
    double lo = -2.0;
    double hi = 2.0;
};

std::vector<Vec> make_grid(const ChartSpec& chart, const GridSpec& grid = {});

// Largest principal-angle sine between the column spans of two full-rank matrices.
double subspace_distance(const Mat& A, const Mat& B);

}  // namespace nhrch

#endif
