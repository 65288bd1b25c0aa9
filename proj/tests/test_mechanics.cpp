#include <doctest.h>

#include "nhrch/catalog.hpp"

using namespace nhrch;

namespace {

HamiltonianSystemSpec oscillator(double m, double k) {
    HamiltonianSystemSpec s;
    s.chart = {{"x"}, {false}};
    s.lagrangian.mass_matrix = [m](const Vec&) { return Mat::Constant(1, 1, m); };
    s.lagrangian.potential = [k](const Vec& q) { return 0.5 * k * q[0] * q[0]; };
    return s;
}

}  // namespace

TEST_CASE("legendre transform round trip") {
    const auto spec = catalog::vertical_rolling_disk();
    Vec q(4), v(4);
    q << 0.1, 0.2, 0.3, 0.4;
    v << 1, -2, 0.5, 3;
    const PhasePoint z = legendre(spec.mechanics, q, v);
    CHECK(z.p[0] == doctest::Approx(1.0));
    CHECK(z.p[2] == doctest::Approx(0.25 * 0.5));
    CHECK((inverse_legendre(spec.mechanics, z) - v).norm() < 1e-14);
}

TEST_CASE("hamiltonian is kinetic plus potential energy") {
    const auto s = oscillator(2.0, 3.0);
    const PhasePoint z{Vec::Constant(1, 0.5), Vec::Constant(1, 4.0)};
    CHECK(hamiltonian(s, z) == doctest::Approx(16.0 / 4.0 + 0.5 * 3.0 * 0.25));
}

TEST_CASE("hamiltonian vector field of an oscillator") {
    const auto s = oscillator(2.0, 3.0);
    const PhasePoint z{Vec::Constant(1, 0.5), Vec::Constant(1, 4.0)};
    const TangentVec x = hamiltonian_vector_field(s, z);
    CHECK(x.dq[0] == doctest::Approx(2.0).epsilon(1e-9));   // p / m
    CHECK(x.dp[0] == doctest::Approx(-1.5).epsilon(1e-9));  // -k q
}

TEST_CASE("phase gradient of an arbitrary function") {
    const PhaseScalarFn f = [](const PhasePoint& z) { return z.q[0] * z.p[1]; };
    PhasePoint z{Vec(2), Vec(2)};
    z.q << 2, 3;
    z.p << 5, 7;
    const Vec g = phase_gradient(f, z);
    CHECK(g[0] == doctest::Approx(7.0));
    CHECK(std::abs(g[1]) < 1e-9);
    CHECK(std::abs(g[2]) < 1e-9);
    CHECK(g[3] == doctest::Approx(2.0));
}

TEST_CASE("mass matrix must be symmetric positive definite") {
    auto s = oscillator(1.0, 1.0);
    CHECK_NOTHROW(check_mass_matrix(s, Vec::Zero(1)));
    s.lagrangian.mass_matrix = [](const Vec&) { return Mat::Constant(1, 1, -1.0); };
    CHECK_THROWS_AS(check_mass_matrix(s, Vec::Zero(1)), SingularMatrix);
    HamiltonianSystemSpec a;
    a.chart = {{"x", "y"}, {false, false}};
    a.lagrangian.mass_matrix = [](const Vec&) {
        Mat M(2, 2);
        M << 1, 0.5, 0, 1;
        return M;
    };
    a.lagrangian.potential = [](const Vec&) { return 0.0; };
    CHECK_THROWS_AS(check_mass_matrix(a, Vec::Zero(2)), SingularMatrix);
}

TEST_CASE("sleigh mass matrix is positive definite on the grid") {
    const auto spec = catalog::chaplygin_sleigh();
    for (const auto& q : make_grid(spec.chart())) CHECK_NOTHROW(check_mass_matrix(spec.mechanics, q));
}
