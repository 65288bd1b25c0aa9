#include <doctest.h>

#include <cmath>

#include "nhrch/catalog.hpp"

using namespace nhrch;

namespace {

PhasePoint point(std::initializer_list<double> q, std::initializer_list<double> p) {
    PhasePoint z{Vec(static_cast<long>(q.size())), Vec(static_cast<long>(p.size()))};
    long i = 0;
    for (double x : q) z.q[i++] = x;
    i = 0;
    for (double x : p) z.p[i++] = x;
    return z;
}

double max_abs(const TangentVec& a, const TangentVec& b) { return (stack(a) - stack(b)).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("knife edge constraint residual") {
    const auto spec = catalog::knife_edge();
    CHECK(m_residual(spec, point({0, 0, 0}, {1, 0, 0.5})).norm() < 1e-15);
    // Sideways momentum at heading 0 violates the constraint by |p_y|.
    CHECK(m_residual(spec, point({0, 0, 0}, {0, 1, 0})).norm() == doctest::Approx(1.0));
}

TEST_CASE("K has dimension twice the distribution rank") {
    std::mt19937_64 rng(1);
    for (const char* name : {"knife_edge", "vertical_rolling_disk", "free_particle_2d", "chaplygin_sleigh"}) {
        const auto spec = catalog::make_system(name);
        for (int i = 0; i < 5; ++i) {
            const PhasePoint z = sample_on_constraint(spec, rng);
            CHECK(m_residual(spec, z).norm() < kOnManifoldTol);
            const Mat K = k_basis(spec, z);
            CHECK(K.cols() == static_cast<long>(2 * spec.distribution.rank));
            CHECK((K.transpose() * K - Mat::Identity(K.cols(), K.cols())).norm() < 1e-10);
            CHECK(std::abs(restricted_omega(K).determinant()) > 1e-6);
        }
    }
}

TEST_CASE("K basis requires a point of the constraint set") {
    const auto spec = catalog::knife_edge();
    CHECK_THROWS_AS(k_basis(spec, point({0, 0, 0}, {0, 1, 0})), PreconditionError);
}

TEST_CASE("knife edge constrained field at a closed-form point") {
    // Unit speed along heading 0 with turning rate 0.5: x' = 1, theta' = 0.5, p_y' = m v omega.
    const auto spec = catalog::knife_edge();
    const TangentVec x = solve_x_k(spec, point({0, 0, 0}, {1, 0, 0.5}));
    CHECK(x.dq[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(x.dq[1]) < 1e-9);
    CHECK(x.dq[2] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(x.dp[0]) < 1e-9);
    CHECK(x.dp[1] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(std::abs(x.dp[2]) < 1e-9);
}

TEST_CASE("unconstrained systems reproduce the hamiltonian field") {
    auto spec = catalog::free_particle_2d(2.0);
    spec.mechanics.lagrangian.potential = [](const Vec& q) { return 0.5 * q.squaredNorm() + q[0] * q[1]; };
    std::mt19937_64 rng(2);
    for (int i = 0; i < 20; ++i) {
        const PhasePoint z = sample_on_constraint(spec, rng);
        CHECK(max_abs(solve_x_k(spec, z), hamiltonian_vector_field(spec.mechanics, z)) < 1e-8);
    }
}

TEST_CASE("solve and symplectic projection agree") {
    std::mt19937_64 rng(4);
    for (const char* name : {"knife_edge", "vertical_rolling_disk", "chaplygin_sleigh"}) {
        const auto spec = catalog::make_system(name);
        for (int i = 0; i < 10; ++i) {
            const PhasePoint z = sample_on_constraint(spec, rng);
            const TangentVec xh = hamiltonian_vector_field(spec.mechanics, z);
            CHECK(max_abs(solve_x_k(spec, z), tau_k_project(spec, z, xh)) < 1e-8);
        }
    }
}

TEST_CASE("projection onto K is idempotent and lands in K") {
    const auto spec = catalog::vertical_rolling_disk();
    std::mt19937_64 rng(6);
    const PhasePoint z = sample_on_constraint(spec, rng);
    TangentVec v{Vec::LinSpaced(4, -1, 2), Vec::LinSpaced(4, 3, 0.5)};
    const TangentVec t = tau_k_project(spec, z, v);
    CHECK(span_residual(k_basis(spec, z), stack(t)) < 1e-10);
    CHECK(max_abs(tau_k_project(spec, z, t), t) < 1e-10);
}

TEST_CASE("bracket generation") {
    Vec q(3);
    q << 0.2, -0.4, 1.3;
    const auto knife = check_completeness(catalog::knife_edge().distribution, {q}, 1);
    CHECK(knife[0].complete);
    CHECK(knife[0].rank == 3);
    CHECK(knife[0].rank_by_depth.front() == 2);

    const auto slider = check_completeness(catalog::planar_slider().distribution, {q}, 3);
    CHECK_FALSE(slider[0].complete);
    CHECK(slider[0].rank == 2);

    Vec q4(4);
    q4 << 0, 0, 0.7, 0.1;
    const auto disk = check_completeness(catalog::vertical_rolling_disk().distribution, {q4}, 3);
    CHECK(disk[0].complete);
    CHECK(disk[0].rank == 4);
}

TEST_CASE("regularity and admissibility of catalog systems") {
    std::mt19937_64 rng(8);
    for (const auto& entry : catalog::entries()) {
        const auto spec = catalog::make_system(entry.name);
        for (const auto& q : make_grid(spec.chart(), GridSpec{4, 3, -1, 1})) CHECK(check_d_regularity(spec, q).regular);
        const PhasePoint z = sample_on_constraint(spec, rng);
        const AdmissibilityReport r = check_admissibility_compatibility(spec, z);
        CHECK(r.admissible);
        CHECK(r.compatible);
    }
}

TEST_CASE("derived annihilators are orthogonal to the distribution") {
    auto spec = catalog::knife_edge();
    spec.distribution.annihilators.clear();
    Vec q(3);
    q << 0.3, 0.1, 2.2;
    const Mat A = spec.distribution.annihilator(q);
    CHECK(A.rows() == 1);
    CHECK((A * spec.distribution.fields(q)).norm() < 1e-12);
    std::mt19937_64 rng(3);
    const PhasePoint z = sample_on_constraint(spec, rng);
    CHECK(k_basis(spec, z).cols() == 4);
}

TEST_CASE("distribution rank is validated") {
    auto spec = catalog::knife_edge();
    spec.distribution.spanning_fields[1] = spec.distribution.spanning_fields[0];
    CHECK_THROWS_AS(spec.distribution.validate_at(Vec::Zero(3)), RankError);
}

TEST_CASE("momentum projection returns to the constraint set") {
    const auto spec = catalog::vertical_rolling_disk();
    PhasePoint z{Vec::Zero(4), Vec::Ones(4)};
    z.q[2] = 0.4;
    CHECK(m_residual(spec, z).norm() > 0.1);
    const PhasePoint pz = project_momentum(spec, z);
    CHECK(m_residual(spec, pz).norm() < 1e-12);
    CHECK(pz.q == z.q);
}
