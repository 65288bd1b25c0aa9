#include "nhrch/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace nhrch {

namespace {

// Zeroes quotiented components of stacked phase-space vectors (columns of V).
Mat quotient_push(const Mat& V, const SymmetrySpec& G, long n, bool drop_momenta) {
    Mat out = V;
    for (std::size_t a : G.cyclic_indices) {
        out.row(static_cast<long>(a)).setZero();
        if (drop_momenta) out.row(n + static_cast<long>(a)).setZero();
    }
    return out;
}

Mat momentum_rows(const SymmetrySpec& G, long n) {
    Mat S = Mat::Zero(static_cast<long>(G.dim()), 2 * n);
    for (std::size_t a = 0; a < G.dim(); ++a) S(static_cast<long>(a), n + static_cast<long>(G.cyclic_indices[a])) = 1.0;
    return S;
}

Mat intersect_with_kernel(const Mat& K, const Mat& P) { return K * nullspace(P, kRankTol, 1.0); }

Mat omega_orthogonal_part(const Mat& K, const Mat& VK) {
    if (VK.cols() == 0) return K;
    const Mat W = VK.transpose() * omega_matrix(static_cast<std::size_t>(K.rows() / 2)) * K;
    return K * nullspace(W, kRankTol, 1.0);
}

Vec gather(const Vec& v, const std::vector<std::size_t>& idx) {
    Vec out(static_cast<long>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out[static_cast<long>(i)] = v[static_cast<long>(idx[i])];
    return out;
}

Mat constraint_map(const NonholonomicRCHSpec& spec, const Vec& q, const Vec& anchor) {
    const Mat A = spec.distribution.annihilator(q, anchor);
    if (A.rows() == 0) return A;
    return A * spec.mechanics.lagrangian.mass_matrix(q).llt().solve(Mat::Identity(q.size(), q.size()));
}

}  // namespace

bool SymmetrySpec::abelian() const {
    for (const Mat& C : structure_constants)
        if (C.size() && C.cwiseAbs().maxCoeff() > 0.0) return false;
    return true;
}

bool SymmetrySpec::contains(std::size_t index) const {
    return std::find(cyclic_indices.begin(), cyclic_indices.end(), index) != cyclic_indices.end();
}

void SymmetrySpec::validate(const ChartSpec& chart) const {
    std::set<std::size_t> seen;
    for (std::size_t i : cyclic_indices) {
        if (i >= chart.dim()) throw ConfigError("symmetry index out of range");
        if (!seen.insert(i).second) throw ConfigError("symmetry indices must be distinct");
    }
    if (!structure_constants.empty() && structure_constants.size() != dim())
        throw ConfigError("structure constants must have one matrix per group generator");
}

MomentumValue momentum_map(const PhasePoint& z, const SymmetrySpec& G) {
    return {gather(z.p, G.cyclic_indices)};
}

std::vector<Vec> group_shifts(const ChartSpec& chart, const SymmetrySpec& G) {
    std::vector<Vec> out;
    if (G.dim() == 0) return out;
    const long n = static_cast<long>(chart.dim());
    for (std::size_t a : G.cyclic_indices)
        for (double s : {0.37, -1.21, 2.5}) {
            Vec v = Vec::Zero(n);
            v[static_cast<long>(a)] = s;
            out.push_back(v);
        }
    Vec all = Vec::Zero(n);
    double s = 0.73;
    for (std::size_t a : G.cyclic_indices) {
        all[static_cast<long>(a)] = s;
        s = -1.6 * s;
    }
    out.push_back(all);
    return out;
}

InvarianceReport check_invariance(const NonholonomicRCHSpec& spec, const SymmetrySpec& G,
                                  const std::vector<PhasePoint>& samples, double tol) {
    InvarianceReport rep;
    const auto shifts = group_shifts(spec.chart(), G);
    for (const PhasePoint& z : samples)
        for (const Vec& a : shifts) {
            const PhasePoint g{z.q + a, z.p};
            rep.hamiltonian = std::max(rep.hamiltonian,
                                       std::abs(hamiltonian(spec.mechanics, g) - hamiltonian(spec.mechanics, z)));
            rep.force = std::max(rep.force, (spec.force.evaluate(g) - spec.force.evaluate(z)).norm());
            rep.control = std::max(rep.control, (spec.control.evaluate(g) - spec.control.evaluate(z)).norm());
            rep.distribution = std::max(rep.distribution, subspace_distance(spec.distribution.fields(z.q),
                                                                            spec.distribution.fields(g.q)));
        }
    rep.pass = rep.hamiltonian < tol && rep.force < tol && rep.control < tol && rep.distribution < tol;
    return rep;
}

Mat v_cap_k_basis(const NonholonomicSystem& base, const SymmetrySpec& G, const PhasePoint& z) {
    const Mat K = base.k_basis(z);
    if (G.dim() == 0) return Mat(K.rows(), 0);
    return intersect_with_kernel(K, quotient_push(K, G, z.q.size(), false));
}

Mat u_basis(const NonholonomicSystem& base, const SymmetrySpec& G, const PhasePoint& z) {
    return omega_orthogonal_part(base.k_basis(z), v_cap_k_basis(base, G, z));
}

double momentum_drift(const NonholonomicSystem& base, const SymmetrySpec& G, const PhasePoint& z) {
    return gather(base.x_tilde(z).dp, G.cyclic_indices).norm();
}

double orbit_form_term(const SymmetrySpec& G, const Vec& mu, const Vec& xi, const Vec& eta) {
    double out = 0.0;
    for (std::size_t c = 0; c < G.structure_constants.size(); ++c)
        out += mu[static_cast<long>(c)] * xi.dot(G.structure_constants[c] * eta);
    return out;
}

std::string to_string(ReductionKind kind) {
    switch (kind) {
        case ReductionKind::quotient: return "quotient";
        case ReductionKind::point: return "point";
        case ReductionKind::orbit: return "orbit";
    }
    return "unknown";
}

ReducedSystem::ReducedSystem(NonholonomicSystem parent, SymmetrySpec G, ReductionKind kind, std::optional<Vec> mu)
    : parent_(std::move(parent)), G_(std::move(G)), kind_(kind), mu_(std::move(mu)) {
    G_.validate(parent_.chart());
    if (!G_.abelian())
        throw Unsupported("reduction by the non-Abelian group '" + G_.group_name +
                          "' needs coadjoint-orbit machinery that is not implemented");
    if (level()) {
        if (!mu_) throw ConfigError("momentum value required for level-set reduction");
        if (mu_->size() != static_cast<long>(G_.dim())) throw DimensionMismatch("momentum value length differs from group dimension");
    }
    shifts_ = group_shifts(parent_.chart(), G_);
    if (trivial()) return;
    std::mt19937_64 rng(20240601);
    std::vector<PhasePoint> samples;
    for (int i = 0; i < 8; ++i) samples.push_back(sample_on_constraint(parent_.spec(), rng));
    const InvarianceReport inv = check_invariance(parent_.spec(), G_, samples);
    if (!inv.pass)
        throw PreconditionError("system invariant under the symmetry group",
                                std::max({inv.hamiltonian, inv.force, inv.control, inv.distribution}));
    if (level()) find_level_points();
}

std::vector<std::size_t> ReducedSystem::noncyclic_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < parent_.spec().dim(); ++i)
        if (!G_.contains(i)) out.push_back(i);
    return out;
}

Mat ReducedSystem::level_rows() const {
    const long n = static_cast<long>(parent_.spec().dim());
    const Mat S = momentum_rows(G_, n);
    if (kind_ == ReductionKind::point) return S;
    // J(z) must stay on the orbit: DJ w lies in the orbit tangent {ad*_xi mu}.
    const long m = static_cast<long>(G_.dim());
    Mat ad = Mat::Zero(m, m);
    for (std::size_t c = 0; c < G_.structure_constants.size(); ++c)
        ad += (*mu_)[static_cast<long>(c)] * G_.structure_constants[c].transpose();
    const Mat T = range_basis(ad, kRankTol, 1.0);
    const Mat Q = nullspace(T.transpose());
    return Q.transpose() * S;
}

ReducedSystem::Local ReducedSystem::local(const PhasePoint& zbar) const {
    Local loc;
    const long n = static_cast<long>(parent_.spec().dim());
    loc.grad_h = parent_.grad_h(zbar);
    loc.k = parent_.k_basis(zbar);
    if (level()) loc.k = intersect_with_kernel(loc.k, level_rows() * loc.k);
    loc.v_cap_k = intersect_with_kernel(loc.k, quotient_push(loc.k, G_, n, level()));
    loc.u = omega_orthogonal_part(loc.k, loc.v_cap_k);
    const Mat ubar = quotient_push(loc.u, G_, n, level());
    Mat B = range_basis(ubar, kRankTol, 1.0);
    Mat L = loc.u * ubar.completeOrthogonalDecomposition().solve(B);
    const Mat J = omega_matrix(static_cast<std::size_t>(n));
    Mat Om = L.transpose() * J * L;
    const Mat Nk = nullspace(Om, kRankTol, 1.0);
    if (Nk.cols() > 0) {
        loc.kernel_lifts = L * Nk;
        const Mat C = nullspace(Nk.transpose());
        B = B * C;
        L = L * C;
        Om = C.transpose() * Om * C;
        loc.consistency = (loc.kernel_lifts.transpose() * loc.grad_h).cwiseAbs().maxCoeff();
    } else {
        loc.kernel_lifts = Mat(2 * n, 0);
    }
    if (kind_ == ReductionKind::orbit && L.cols() > 0) {
        const long m = static_cast<long>(G_.dim());
        Mat ad = Mat::Zero(m, m);
        for (std::size_t c = 0; c < G_.structure_constants.size(); ++c)
            ad += (*mu_)[static_cast<long>(c)] * G_.structure_constants[c].transpose();
        const Mat xi = ad.completeOrthogonalDecomposition().solve(momentum_rows(G_, n) * L);
        for (long i = 0; i < L.cols(); ++i)
            for (long j = 0; j < L.cols(); ++j) {
                const double t = orbit_form_term(G_, *mu_, xi.col(i), xi.col(j));
                Om(i, j) -= t;
                loc.orbit_term = std::max(loc.orbit_term, std::abs(t));
            }
    }
    loc.basis = B;
    loc.lifts = L;
    loc.omega = Om;
    return loc;
}

Vec ReducedSystem::reduced_x(const PhasePoint& zbar, bool with_forces) const {
    const Local loc = local(zbar);
    Vec rhs = loc.lifts.transpose() * loc.grad_h;
    if (with_forces) {
        const Mat Jt = omega_matrix(parent_.spec().dim()).transpose();
        for (const VerticalFieldSpec* f : {&parent_.spec().force, &parent_.spec().control})
            if (!f->is_zero()) rhs += loc.lifts.transpose() * (Jt * stack(vertical_lift(*f, zbar)));
    }
    return loc.basis * solve_k_coefficients(loc.omega, rhs);
}

std::size_t ReducedSystem::ambient_dim() const {
    return parent_.ambient_dim() - (level() ? 2 : 1) * G_.dim();
}

double ReducedSystem::membership_residual(const PhasePoint& z) const {
    if (trivial()) return parent_.membership_residual(z);
    return std::hypot(preimage_residual(z), gather(z.q, G_.cyclic_indices).norm());
}

double ReducedSystem::preimage_residual(const PhasePoint& z) const {
    double r = parent_.membership_residual(z);
    if (level() && !trivial()) {
        Vec offset = Vec::Zero(2 * z.q.size());
        offset.tail(z.p.size()) = z.p;
        for (std::size_t a = 0; a < G_.dim(); ++a)
            offset[z.q.size() + static_cast<long>(G_.cyclic_indices[a])] -= (*mu_)[static_cast<long>(a)];
        r = std::hypot(r, (level_rows() * offset).norm());
    }
    return r;
}

Mat ReducedSystem::k_basis(const PhasePoint& z) const {
    if (trivial()) return parent_.k_basis(z);
    return local(z).basis;
}

double ReducedSystem::omega_eval(const PhasePoint& z, const TangentVec& v, const TangentVec& w) const {
    if (trivial()) return parent_.omega_eval(z, v, w);
    const Local loc = local(z);
    const Vec cv = loc.basis.transpose() * stack(v);
    const Vec cw = loc.basis.transpose() * stack(w);
    return cv.dot(loc.omega * cw);
}

TangentVec ReducedSystem::x_k(const PhasePoint& z) const {
    if (trivial()) return parent_.x_k(z);
    return unstack_tangent(reduced_x(z, false));
}

TangentVec ReducedSystem::x_tilde(const PhasePoint& z) const {
    if (trivial()) return parent_.x_tilde(z);
    return unstack_tangent(reduced_x(z, true));
}

double ReducedSystem::hamiltonian(const PhasePoint& z) const { return parent_.hamiltonian(z); }

PhasePoint ReducedSystem::project_point(const PhasePoint& z) const {
    PhasePoint out = z;
    for (std::size_t a : G_.cyclic_indices) out.q[static_cast<long>(a)] = 0.0;
    return out;
}

TangentVec ReducedSystem::push_forward(const PhasePoint&, const TangentVec& w) const {
    TangentVec out = w;
    for (std::size_t a : G_.cyclic_indices) {
        out.dq[static_cast<long>(a)] = 0.0;
        if (level()) out.dp[static_cast<long>(a)] = 0.0;
    }
    return out;
}

double ReducedSystem::lifted_k_residual(const PhasePoint& z, const TangentVec& w) const {
    if (trivial()) return parent_.lifted_k_residual(z, w);
    double r = span_residual(local(project_point(z)).basis, stack(push_forward(z, w)));
    if (level()) r = std::hypot(r, (level_rows() * stack(w)).norm());
    return r;
}

TangentVec ReducedSystem::tau_lifted(const PhasePoint& z, const TangentVec& w) const {
    if (trivial()) return parent_.tau_lifted(z, w);
    const Local loc = local(project_point(z));
    const Mat Jt = omega_matrix(parent_.spec().dim()).transpose();
    const Vec rhs = loc.lifts.transpose() * (Jt * stack(w));
    return unstack_tangent(loc.basis * solve_k_coefficients(loc.omega, rhs));
}

PhasePoint ReducedSystem::project_to_constraint(const PhasePoint& z) const {
    if (trivial()) return parent_.project_to_constraint(z);
    PhasePoint out = project_point(z);
    if (!level()) return project_momentum(parent_.spec(), out);
    for (std::size_t a = 0; a < G_.dim(); ++a) out.p[static_cast<long>(G_.cyclic_indices[a])] = (*mu_)[static_cast<long>(a)];
    const Mat B = constraint_map(parent_.spec(), out.q, out.q);
    if (B.rows() == 0) return out;
    const auto nc = noncyclic_indices();
    Mat Bnc(B.rows(), static_cast<long>(nc.size()));
    for (std::size_t i = 0; i < nc.size(); ++i) Bnc.col(static_cast<long>(i)) = B.col(static_cast<long>(nc[i]));
    const Vec delta = Bnc.completeOrthogonalDecomposition().solve(B * out.p);
    for (std::size_t i = 0; i < nc.size(); ++i) out.p[static_cast<long>(nc[i])] -= delta[static_cast<long>(i)];
    return out;
}

void ReducedSystem::find_level_points() {
    const NonholonomicRCHSpec& spec = parent_.spec();
    const ChartSpec& chart = spec.chart();
    const long n = static_cast<long>(spec.dim());
    const auto nc = noncyclic_indices();
    const Vec& mu = *mu_;

    // Least-squares non-cyclic momenta and the remaining constraint residual at q.
    auto solve_fiber = [&](const Vec& q, const Vec& anchor, Vec& p) -> Vec {
        p = Vec::Zero(n);
        for (std::size_t a = 0; a < G_.dim(); ++a) p[static_cast<long>(G_.cyclic_indices[a])] = mu[static_cast<long>(a)];
        const Mat B = constraint_map(spec, q, anchor);
        if (B.rows() == 0) return Vec(0);
        Mat Bnc(B.rows(), static_cast<long>(nc.size()));
        for (std::size_t i = 0; i < nc.size(); ++i) Bnc.col(static_cast<long>(i)) = B.col(static_cast<long>(nc[i]));
        const Vec rhs = B * p;
        if (!nc.empty()) {
            const Vec pnc = Bnc.completeOrthogonalDecomposition().solve(-rhs);
            for (std::size_t i = 0; i < nc.size(); ++i) p[static_cast<long>(nc[i])] = pnc[static_cast<long>(i)];
        }
        return B * p;
    };
    auto embed = [&](const Vec& qnc) {
        Vec q = Vec::Zero(n);
        for (std::size_t i = 0; i < nc.size(); ++i) q[static_cast<long>(nc[i])] = qnc[static_cast<long>(i)];
        return q;
    };

    ChartSpec sub;
    for (std::size_t i : nc) {
        sub.coord_names.push_back(chart.coord_names[i]);
        sub.periodic.push_back(chart.periodic[i]);
    }
    std::vector<Vec> starts;
    if (nc.empty()) {
        starts.push_back(Vec(0));
    } else {
        starts = make_grid(sub, GridSpec{16, 5, -2.0, 2.0});
    }

    std::vector<Vec> found;
    for (const Vec& start : starts) {
        Vec qnc = start;
        const Vec anchor = embed(start);
        Vec p;
        auto rho = [&](const Vec& x) {
            Vec pp;
            return solve_fiber(embed(x), anchor, pp);
        };
        Vec r = rho(qnc);
        for (int it = 0; it < 60 && r.size() && r.norm() > 1e-14 && !nc.empty(); ++it) {
            const Mat Jr = fd_jacobian(rho, qnc, parent_.fd());
            const Vec step = Jr.completeOrthogonalDecomposition().solve(-r);
            double t = 1.0;
            bool improved = false;
            for (int ls = 0; ls < 30; ++ls, t *= 0.5) {
                const Vec trial = qnc + t * step;
                const Vec rt = rho(trial);
                if (rt.norm() < r.norm()) {
                    qnc = trial;
                    r = rt;
                    improved = true;
                    break;
                }
            }
            if (!improved) break;
        }
        if (r.size() && !(r.norm() < 1e-10)) continue;
        qnc = sub.wrap(qnc);
        bool duplicate = false;
        for (const Vec& f : found)
            if (sub.difference(f, qnc).norm() < 1e-6) duplicate = true;
        if (!duplicate) found.push_back(qnc);
    }
    if (found.empty())
        throw EmptyLevelSet("constraint manifold does not meet the momentum level set at any section point");
    std::sort(found.begin(), found.end(), [](const Vec& a, const Vec& b) {
        return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
    });
    for (const Vec& qnc : found) {
        const Vec q = embed(qnc);
        Vec p;
        solve_fiber(q, q, p);
        level_points_.push_back({q, p});
    }
}

std::vector<PhasePoint> ReducedSystem::sample_points(std::size_t count, std::uint64_t seed, double fiber_spread) const {
    std::mt19937_64 rng(seed);
    std::vector<PhasePoint> out;
    if (!level() || trivial()) {
        for (std::size_t i = 0; i < count; ++i) out.push_back(sample_on_constraint(parent_.spec(), rng));
        return out;
    }
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto nc = noncyclic_indices();
    for (std::size_t i = 0; i < count; ++i) {
        PhasePoint z = level_points_[i % level_points_.size()];
        const Mat B = constraint_map(parent_.spec(), z.q, z.q);
        Mat Bnc(B.rows(), static_cast<long>(nc.size()));
        for (std::size_t j = 0; j < nc.size(); ++j) Bnc.col(static_cast<long>(j)) = B.col(static_cast<long>(nc[j]));
        const Mat free = nullspace(Bnc, kRankTol, 1.0);
        Vec c(free.cols());
        for (long j = 0; j < c.size(); ++j) c[j] = fiber_spread * normal(rng);
        const Vec dp = free * c;
        for (std::size_t j = 0; j < nc.size(); ++j) z.p[static_cast<long>(nc[j])] += dp[static_cast<long>(j)];
        const Vec shift = sample_base_point(parent_.chart(), rng);
        for (std::size_t a : G_.cyclic_indices) z.q[static_cast<long>(a)] = shift[static_cast<long>(a)];
        out.push_back(z);
    }
    return out;
}

ReducedSystem reduced_system(const NonholonomicSystem& base, const SymmetrySpec& G) {
    return ReducedSystem(base, G, ReductionKind::quotient, std::nullopt);
}

ReducedSystem rp_reduced_system(const NonholonomicSystem& base, const SymmetrySpec& G, const Vec& mu) {
    return ReducedSystem(base, G, ReductionKind::point, mu);
}

ReducedSystem ro_reduced_system(const NonholonomicSystem& base, const SymmetrySpec& G, const Vec& mu) {
    return ReducedSystem(base, G, ReductionKind::orbit, mu);
}

double pi_relatedness_residual(const NonholonomicSystem& base, const ReducedSystem& reduced, const PhasePoint& z) {
    const TangentVec lhs = reduced.push_forward(z, base.x_tilde(z));
    const TangentVec rhs = reduced.x_tilde(reduced.project_point(z));
    return (stack(lhs) - stack(rhs)).norm();
}

}  // namespace nhrch
