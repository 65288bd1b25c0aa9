#include <doctest.h>

#include "nhrch/catalog.hpp"

using namespace nhrch;

namespace {

double max_abs(const TangentVec& a, const TangentVec& b) { return (stack(a) - stack(b)).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("vertical lift has no base component") {
    VerticalFieldSpec c{[](const PhasePoint& z) { return Vec(2.0 * z.p); }};
    PhasePoint z{Vec::Zero(2), Vec::Ones(2)};
    const TangentVec v = vertical_lift(c, z);
    CHECK(v.dq.norm() == 0.0);
    CHECK(v.dp == 2.0 * z.p);
    CHECK(catalog::vertical_field("zero", catalog::free_particle_2d().chart()).is_zero());
}

TEST_CASE("zero force and control leave the constrained field unchanged") {
    const NonholonomicSystem sys(catalog::knife_edge());
    std::mt19937_64 rng(1);
    for (int i = 0; i < 5; ++i) {
        const PhasePoint z = sample_on_constraint(sys.spec(), rng);
        CHECK(stack(sys.x_tilde(z)) == stack(sys.x_k(z)));
    }
}

TEST_CASE("free particle under a constant force") {
    auto spec = catalog::free_particle_2d(2.0);
    Vec f(2);
    f << 0.3, -1.0;
    spec.force = {[f](const PhasePoint&) { return f; }};
    spec.control = {[](const PhasePoint&) { return Vec::Constant(2, 0.5); }};
    const NonholonomicSystem sys(spec);
    PhasePoint z{Vec::Zero(2), Vec(2)};
    z.p << 4, 2;
    const TangentVec x = sys.x_tilde(z);
    CHECK(x.dq[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(x.dq[1] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(x.dp[0] == doctest::Approx(0.8).epsilon(1e-9));
    CHECK(x.dp[1] == doctest::Approx(-0.5).epsilon(1e-9));
    CHECK(sys.base_part_discrepancy(z) < 1e-7);
}

TEST_CASE("damping dissipates energy at the rate c v.p") {
    auto spec = catalog::knife_edge(2.0, 0.5);
    const double c = 0.3;
    spec.force = catalog::vertical_field("damping(c=0.3)", spec.chart());
    const NonholonomicSystem sys(spec);
    std::mt19937_64 rng(5);
    for (int i = 0; i < 10; ++i) {
        const PhasePoint z = sample_on_constraint(spec, rng);
        const Vec v = inverse_legendre(spec.mechanics, z);
        const double rate = sys.grad_h(z).dot(stack(sys.x_tilde(z)));
        CHECK(rate == doctest::Approx(-c * v.dot(z.p)).epsilon(1e-7));
    }
}

TEST_CASE("controlled field stays in K") {
    auto spec = catalog::vertical_rolling_disk();
    spec.control = {[](const PhasePoint&) { return Vec((Vec(4) << 0.1, -0.2, 0.3, 0.4).finished()); }};
    const NonholonomicSystem sys(spec);
    std::mt19937_64 rng(9);
    for (int i = 0; i < 5; ++i) {
        const PhasePoint z = sample_on_constraint(spec, rng);
        const auto ev = sys.evaluate(z);
        CHECK(span_residual(ev.k, stack(ev.x_tilde)) < 1e-9);
        CHECK(span_residual(ev.k, stack(ev.u_k)) < 1e-9);
        CHECK(max_abs(ev.x_tilde, TangentVec{ev.x_k.dq + ev.f_k.dq + ev.u_k.dq, ev.x_k.dp + ev.f_k.dp + ev.u_k.dp}) <
              1e-14);
    }
}
