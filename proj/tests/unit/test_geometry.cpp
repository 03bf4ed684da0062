#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/special_functions/bessel.hpp>

#include "conic/error.hpp"
#include "conic/geometry.hpp"

using namespace conic;

namespace {

Field2D sample(const PolarGrid& g, const std::function<double(double, double)>& f) {
    Field2D u{g, std::vector<double>(g.size())};
    for (std::size_t i = 0; i < g.nx; ++i)
        for (std::size_t j = 0; j < g.ntheta; ++j) u.at(i, j) = f(g.x(i), g.theta(j));
    return u;
}

double max_error(const Field2D& a, const std::function<double(double, double)>& f) {
    double e = 0;
    for (std::size_t i = 0; i < a.grid.nx; ++i)
        for (std::size_t j = 0; j < a.grid.ntheta; ++j)
            e = std::max(e, std::abs(a.at(i, j) - f(a.grid.x(i), a.grid.theta(j))));
    return e;
}

}  // namespace

TEST_CASE("dual metric on diagonal cones") {
    const auto flat = ConicMetric::circle(kTwoPi);
    CHECK(dual_metric(flat, 2.0, 0.3, 1.0, 1.0) == doctest::Approx(1.25).epsilon(1e-15));
    auto m = ConicMetric::circle(kTwoPi, 2.0);
    m.perturbation = RadialPower{1.0};
    CHECK(dual_metric(m, 1.0, 0.0, 0.0, 1.0) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK_THROWS_AS(dual_metric(m, 0.0, 0.0, 1.0, 0.0), DomainError);
}

TEST_CASE("dual metric on a collar with a cross term matches dense inversion") {
    CollarMetric c;
    const double eps = 0.05;
    c.h = [eps](double rho, double v) -> std::array<double, 3> {
        return {0.1 * std::sin(v), eps, 1.0 + 0.2 * rho * std::cos(v)};
    };
    for (double rho : {0.1, 0.4, 0.9})
        for (double v : {0.0, 1.3, 4.0}) {
            const auto G = c.matrix(rho, v);
            Eigen::Matrix2d A;
            A << G[0], G[1], G[2], G[3];
            const Eigen::Vector2d p(0.7, -1.9);
            const double ref = p.dot(A.inverse() * p);
            CHECK(std::abs(dual_metric(c, rho, v, p[0], p[1]) - ref) <= 1e-12 * ref);
        }
}

TEST_CASE("Laplacian of r^2 on the plane is -4") {
    const auto m = ConicMetric::circle(kTwoPi);
    PolarGrid g{0.5, 0.01, 60, 32, kTwoPi};
    const auto out = laplacian_apply(m, sample(g, [](double x, double) { return x * x; }));
    CHECK(max_error(out, [](double, double) { return -4.0; }) < 1e-9);
}

TEST_CASE("Laplacian on Bessel and harmonic fields converges at second order") {
    const auto m = ConicMetric::circle(kTwoPi);
    const double mu = 3.0;
    auto bes = [mu](double x, double) { return boost::math::cyl_bessel_j(0, mu * x); };
    auto harm = [](double x, double th) { return x * x * x * std::cos(3 * th); };
    double eb[2], eh[2];
    for (int l = 0; l < 2; ++l) {
        const std::size_t nx = 41 << l, nt = 64 << l;
        const double dx = 1.0 / static_cast<double>(nx - 1);
        PolarGrid g{0.5, dx, nx, nt, kTwoPi};
        eb[l] = max_error(laplacian_apply(m, sample(g, bes)), [&](double x, double th) { return mu * mu * bes(x, th); });
        eh[l] = max_error(laplacian_apply(m, sample(g, harm)), [](double, double) { return 0.0; });
    }
    CHECK(std::log2(eb[0] / eb[1]) == doctest::Approx(2.0).epsilon(0.1));
    CHECK(std::log2(eh[0] / eh[1]) == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("fourth-order stencil improves accuracy") {
    auto m = ConicMetric::circle(kTwoPi);
    m.fd_order = 4;
    auto harm = [](double x, double th) { return x * x * std::sin(2 * th); };
    double e[2];
    for (int l = 0; l < 2; ++l) {
        PolarGrid g{0.5, 0.02 / (1 << l), static_cast<std::size_t>(50 << l), static_cast<std::size_t>(32 << l), kTwoPi};
        e[l] = max_error(laplacian_apply(m, sample(g, harm)), [](double, double) { return 0.0; });
    }
    CHECK(std::log2(e[0] / e[1]) > 3.5);
}

TEST_CASE("Dirichlet pairing agrees with the Laplacian pairing") {
    auto m = ConicMetric::circle(kTwoPi, 2.0);
    m.perturbation = AngularPower{0.2, 1};
    auto bump = [](double x) { return x > 0.4 && x < 1.6 ? std::exp(-1.0 / (1.0 - std::pow((x - 1.0) / 0.6, 2))) : 0.0; };
    auto u = [&](double x, double th) { return bump(x) * (1.0 + 0.5 * std::cos(th)); };
    auto v = [&](double x, double th) { return bump(x) * std::exp(std::sin(th)); };
    double err[2];
    for (int l = 0; l < 2; ++l) {
        const std::size_t nx = 161 << l, nt = 64 << l;
        PolarGrid g{0.3, 1.4 / static_cast<double>(nx - 1), nx, nt, kTwoPi};
        const auto U = sample(g, u), V = sample(g, v);
        const auto LU = laplacian_apply(m, U);
        double lhs = 0, rhs = 0;
        const double dA = g.dx * g.dtheta();
        for (std::size_t i = 1; i + 1 < g.nx; ++i)
            for (std::size_t j = 0; j < g.ntheta; ++j) {
                const double x = g.x(i);
                const auto s = m.eval(x, g.theta(j));
                const double vol = x * std::sqrt(s.h) * dA;
                const std::size_t jp = (j + 1) % nt, jm = (j + nt - 1) % nt;
                const double ux = (U.at(i + 1, j) - U.at(i - 1, j)) / (2 * g.dx);
                const double vx = (V.at(i + 1, j) - V.at(i - 1, j)) / (2 * g.dx);
                const double ut = (U.at(i, jp) - U.at(i, jm)) / (2 * g.dtheta());
                const double vt = (V.at(i, jp) - V.at(i, jm)) / (2 * g.dtheta());
                lhs += (ux * vx + ut * vt / (x * x * s.h)) * vol;
                rhs += LU.at(i - 1, j) * V.at(i, j) * vol;
            }
        err[l] = std::abs(lhs - rhs) / std::abs(lhs);
    }
    CHECK(err[1] < 1e-3);
    CHECK(err[1] < err[0]);
}

TEST_CASE("coarse grids are refused") {
    const auto m = ConicMetric::circle(kTwoPi);
    PolarGrid g{0.5, 0.1, 2, 8, kTwoPi};
    CHECK_THROWS_AS(laplacian_apply(m, sample(g, [](double, double) { return 0.0; })), ConfigError);
}

TEST_CASE("indicial data on circles") {
    for (double L : {kTwoPi, 2 * kTwoPi, 3.0}) {
        const auto m = ConicMetric::circle(L);
        const auto d = indicial_data(m, 6);
        REQUIRE(d.size() >= 7);
        CHECK(d[0].lambda == 0.0);
        CHECK(d[0].constant_admitted);
        for (std::size_t i = 0; i < d.size(); ++i) {
            if (i > 0) CHECK(d[i].lambda >= d[i - 1].lambda);
            CHECK(std::abs(indicial_polynomial(2, d[i].lambda, d[i].s_plus)) < 1e-12 * (1 + d[i].lambda));
            CHECK(std::abs(indicial_polynomial(2, d[i].lambda, d[i].s_minus)) < 1e-12 * (1 + d[i].lambda));
            // Roots of s^2 - i(n-2)s + lambda sum to i(n-2).
            CHECK(std::abs(d[i].s_plus.imag() + d[i].s_minus.imag()) < 1e-14);
        }
        // Circle spectrum (2 pi j / L)^2 with nu = 2 pi j / L.
        for (int j = 1; j <= 3; ++j) {
            const double nu = kTwoPi * j / L;
            CHECK(d[2 * j - 1].lambda == doctest::Approx(nu * nu).epsilon(1e-14));
            CHECK(d[2 * j - 1].nu == doctest::Approx(nu).epsilon(1e-14));
            CHECK(d[2 * j - 1].s_plus.imag() == doctest::Approx(nu).epsilon(1e-14));
            CHECK(d[2 * j - 1].s_plus.real() == doctest::Approx(0.0));
        }
    }
    const auto d4 = indicial_data(ConicMetric::circle(2 * kTwoPi), 2);
    CHECK(d4[1].nu == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("indicial roots in higher dimension sum to i(n-2)") {
    for (int n : {3, 4, 5})
        for (double lam : {0.0, 0.7, 6.0}) {
            const std::complex<double> i(0, 1);
            const double c = n - 2.0;
            const double nu = std::sqrt(c * c / 4 + lam);
            const auto sp = 0.5 * i * c + i * nu, sm = 0.5 * i * c - i * nu;
            CHECK(std::abs(indicial_polynomial(n, lam, sp)) < 1e-12);
            CHECK(std::abs(indicial_polynomial(n, lam, sm)) < 1e-12);
            CHECK((sp + sm).imag() == doctest::Approx(c));
        }
}

TEST_CASE("tabulated cross-section arc length and inverse") {
    std::vector<double> h0(32);
    for (std::size_t j = 0; j < h0.size(); ++j) {
        const double th = kTwoPi * j / 32.0;
        h0[j] = std::pow(2.0 + 0.3 * std::cos(th), 2);
    }
    const auto m = ConicMetric::tabulated(h0);
    CHECK(m.boundary_length() == doctest::Approx(4 * kPi).epsilon(1e-12));
    for (double s : {0.3, 2.0, 9.0, -1.5}) CHECK(m.arc_length(m.theta_at_arc(s)) == doctest::Approx(s).epsilon(1e-13));
}

TEST_CASE("nonpositive metrics are rejected") {
    auto m = ConicMetric::circle(kTwoPi, 2.0);
    m.perturbation = RadialPower{-1.0};
    CHECK_THROWS_AS(m.validate(), ConfigError);
    CHECK_THROWS_AS(ConicMetric::circle(-1.0), ConfigError);
    CHECK_THROWS_AS(ConicMetric::tabulated({1.0, -1.0, 1.0}), ConfigError);
}

TEST_CASE("normal form of a product collar is the identity") {
    const auto c = CollarMetric::from_conic(ConicMetric::circle(kTwoPi, 1.0));
    NormalFormOptions o;
    o.diagnostics = false;
    const auto r = normal_form(c, 0.3, 1.1, o);
    CHECK(std::abs(r.x - 0.3) < 1e-8);
    CHECK(std::abs(r.y - 1.1) < 1e-8);
}

TEST_CASE("normal form of a rotationally symmetric collar") {
    CollarMetric c;
    c.rho_max = 0.2;
    c.h = [](double rho, double) -> std::array<double, 3> { return {0.0, 0.0, (1 + rho) * (1 + rho)}; };
    NormalFormOptions o;
    o.diagnostics = false;
    for (double rho : {0.05, 0.15})
        for (double v : {0.0, 2.0}) {
            const auto r = normal_form(c, rho, v, o);
            CHECK(std::abs(r.x - rho) < 1e-8);
            CHECK(std::abs(r.y - v) < 1e-8);
        }
}

TEST_CASE("normal form removes a cross term") {
    CollarMetric c;
    c.rho_max = 0.1;
    const double eps = 0.1;
    // rho^2 * 2 h_ru drho dv = eps rho^3 drho dv.
    c.h = [eps](double rho, double) -> std::array<double, 3> { return {0.0, 0.5 * eps * rho, 1.0}; };
    const auto r = normal_form(c, 0.08, 0.7);
    CHECK(r.residual_cross < 1e-6);
    CHECK(r.residual_radial < 1e-6);
    CHECK(r.x < 0.08 + 1e-3);
}

TEST_CASE("normal form is invariant under reparametrization of rho") {
    const double eps = 0.1;
    CollarMetric a;
    a.rho_max = 0.1;
    a.h = [eps](double rho, double) -> std::array<double, 3> { return {0.0, 0.5 * eps * rho, 1.0}; };
    // rho = r (1 + r): d rho = (1 + 2r) dr, so
    // g = (1+2r)^2 dr^2 + eps rho^3 (1+2r) dr dv + rho^2 dv^2 = dr^2 + r^2 h~.
    CollarMetric b;
    b.rho_max = 0.09;
    b.h = [eps](double r, double) -> std::array<double, 3> {
        const double rho = r * (1 + r), q = 1 + 2 * r;
        return {4.0 * (1.0 + r) / r, 0.5 * eps * rho * rho * rho * q / (r * r), (1 + r) * (1 + r)};
    };
    NormalFormOptions o;
    o.diagnostics = false;
    o.smallness = 1e300;
    const double r = 0.07, rho = r * (1 + r);
    const auto ra = normal_form(a, rho, 0.4, o);
    const auto rb = normal_form(b, r, 0.4, o);
    CHECK(std::abs(ra.x - rb.x) < 1e-8);
    CHECK(std::abs(ra.y - rb.y) < 1e-8);
}

TEST_CASE("smallness bound shrinks the collar") {
    CollarMetric c;
    c.rho_max = 1.0;
    c.h = [](double rho, double) -> std::array<double, 3> { return {0.0, rho, 1.0}; };
    const double r = collar_smallness_radius(c, 1e-2);
    CHECK(r < 0.1 + 1e-12);
    CHECK(r > 0.05);
    CHECK_THROWS_AS(normal_form(c, 0.5, 0.0), DomainError);
}
