#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "conic/commutators.hpp"
#include "conic/error.hpp"

using namespace conic;

namespace {

std::vector<double> product_h0(std::size_t n) {
    std::vector<double> h(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double c = 1.0 + 0.3 * std::cos(kTwoPi * static_cast<double>(j) / static_cast<double>(n));
        h[j] = c * c;
    }
    return h;
}

void report(const CommutatorStudy& s) {
    for (std::size_t i = 0; i < s.h.size(); ++i)
        MESSAGE("h=" << s.h[i] << " lap " << s.box_lap[i] << " R " << s.box_R[i]);
}

}  // namespace

TEST_CASE("Round product cone: both identities hold to roundoff") {
    const auto m = ConicMetric::circle(4 * kPi, 1.0);
    const auto s = commutator_study(m, 32, 3);
    report(s);
    for (std::size_t i = 0; i < s.h.size(); ++i) {
        CHECK(s.box_lap[i] < 1e-9);
    }
    // The scaling identity is exact for the continuous operator only; discretely it converges at order 2.
    for (double o : s.order_R) CHECK(o == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("Non-round product cone: Delta_Y commutator converges at order 2") {
    const auto m = ConicMetric::tabulated(product_h0(64), 1.0);
    const auto s = commutator_study(m, 32, 3);
    report(s);
    for (double o : s.order_lap) CHECK(std::abs(o - 2.0) <= 0.3);
    for (double o : s.order_R) CHECK(std::abs(o - 2.0) <= 0.3);
}

TEST_CASE("Perturbed metric: the commutator stays away from zero") {
    auto m = ConicMetric::circle(kTwoPi, 1.0);
    m.perturbation = AngularPower{0.5, 2};
    const auto s = commutator_study(m, 32, 3);
    report(s);
    const double fl = s.box_lap.back();
    CHECK(fl > 1e-3);
    // Refinement settles to a floor rather than to zero.
    CHECK(s.box_lap[s.box_lap.size() - 2] / fl < 1.5);
}

TEST_CASE("Rotations commute with the wave operator on the plane") {
    const auto m = ConicMetric::circle(kTwoPi, 1.0);
    SpaceTimeGrid g;
    g.t0 = -1;
    g.nt = 33;
    g.dt = 2.0 / 32;
    g.x0 = 0.5;
    g.nx = 33;
    g.dx = 1.0 / 32;
    g.ntheta = 32;
    const auto f = sample_field(g, [](double t, double x, double th) {
        return std::exp(-t * t - (x - 1) * (x - 1)) * (std::cos(th) + 0.3 * std::sin(3 * th));
    });
    const FieldOp box = [&](const Field3D& u) { return apply_box(m, u); };
    const FieldOp dth = [](const Field3D& u) { return apply_dtheta(u); };
    const double r = commutator_residual(m, box, dth, nullptr, f);
    CHECK(r / l2_norm(m, apply_box(m, f)) < 1e-10);
}

TEST_CASE("Scaling field on exact homogeneous data") {
    SpaceTimeGrid g;
    g.t0 = -1;
    g.nt = 9;
    g.dt = 0.25;
    g.x0 = 0.5;
    g.nx = 9;
    g.dx = 0.125;
    g.ntheta = 8;
    // x^2 + t^2 is homogeneous of degree 2, so (x d_x + t d_t) f = 2 f; centred differences are exact on quadratics.
    const auto f = sample_field(g, [](double t, double x, double) { return x * x + t * t; });
    const auto r = apply_R(f, 0.0);
    for (std::size_t it = 1; it + 1 < g.nt; ++it)
        for (std::size_t ix = 1; ix + 1 < g.nx; ++ix)
            CHECK(r.at(it, ix, 0) == doctest::Approx(2 * f.at(it, ix, 0)).epsilon(1e-12));
}

TEST_CASE("Study arguments are validated") {
    const auto m = ConicMetric::circle(kTwoPi, 1.0);
    CHECK_THROWS_AS(commutator_study(m, 4, 3), ConfigError);
    CHECK_THROWS_AS(commutator_study(m, 16, 1), ConfigError);
}
