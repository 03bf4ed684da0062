#include "conic/commutators.hpp"

#include <cmath>

#include "conic/error.hpp"

namespace conic {

Field3D sample_field(const SpaceTimeGrid& g, const std::function<double(double, double, double)>& f) {
    Field3D out{g, std::vector<double>(g.size())};
    for (std::size_t it = 0; it < g.nt; ++it)
        for (std::size_t ix = 0; ix < g.nx; ++ix)
            for (std::size_t j = 0; j < g.ntheta; ++j) out.at(it, ix, j) = f(g.t(it), g.x(ix), g.theta(j));
    return out;
}

namespace {

void check_grid(const SpaceTimeGrid& g) {
    if (g.nt < 3 || g.nx < 3 || g.ntheta < 4) throw ConfigError("space-time grid too small");
    if (!(g.dt > 0) || !(g.dx > 0)) throw ConfigError("space-time grid steps must be positive");
}

Field3D zeros_like(const Field3D& f) { return Field3D{f.g, std::vector<double>(f.v.size(), 0.0)}; }

}  // namespace

Field3D apply_box(const ConicMetric& m, const Field3D& f) {
    const auto& g = f.g;
    check_grid(g);
    if (!(g.x0 > 0)) throw DomainError("apply_box needs x0 > 0");
    const double n1 = static_cast<double>(m.n - 1);
    const double dt2 = 1.0 / (g.dt * g.dt), dx2 = 1.0 / (g.dx * g.dx), idx = 0.5 / g.dx;
    const double dth = g.dtheta(), dth2 = 1.0 / (dth * dth), idth = 0.5 / dth;
    const std::size_t N = g.ntheta;
    // Coefficients per (ix, j): first-order x coefficient, 1/(h x^2), h_theta/(2 h^2 x^2).
    std::vector<double> cx(g.nx * N), ca(g.nx * N), cb(g.nx * N);
    for (std::size_t ix = 0; ix < g.nx; ++ix) {
        const double x = g.x(ix);
        for (std::size_t j = 0; j < N; ++j) {
            const auto s = m.eval(x, g.theta(j));
            cx[ix * N + j] = n1 / x + 0.5 * s.h_x / s.h;
            ca[ix * N + j] = 1.0 / (s.h * x * x);
            cb[ix * N + j] = 0.5 * s.h_theta / (s.h * s.h * x * x);
        }
    }
    Field3D out = zeros_like(f);
    for (std::size_t it = 1; it + 1 < g.nt; ++it)
        for (std::size_t ix = 1; ix + 1 < g.nx; ++ix)
            for (std::size_t j = 0; j < N; ++j) {
                const std::size_t jp = (j + 1) % N, jm = (j + N - 1) % N;
                const double u = f.at(it, ix, j);
                const double utt = (f.at(it + 1, ix, j) - 2 * u + f.at(it - 1, ix, j)) * dt2;
                const double uxx = (f.at(it, ix + 1, j) - 2 * u + f.at(it, ix - 1, j)) * dx2;
                const double ux = (f.at(it, ix + 1, j) - f.at(it, ix - 1, j)) * idx;
                const double uyy = (f.at(it, ix, jp) - 2 * u + f.at(it, ix, jm)) * dth2;
                const double uy = (f.at(it, ix, jp) - f.at(it, ix, jm)) * idth;
                const std::size_t c = ix * N + j;
                out.at(it, ix, j) = -utt + uxx + cx[c] * ux + ca[c] * uyy - cb[c] * uy;
            }
    return out;
}

Field3D apply_lap_y(const ConicMetric& m, const Field3D& f) {
    const auto& g = f.g;
    check_grid(g);
    const std::size_t N = g.ntheta;
    const double dth = g.dtheta();
    std::vector<double> s(N), sh(N);  // sqrt(h0) at nodes and at j + 1/2
    for (std::size_t j = 0; j < N; ++j) {
        s[j] = std::sqrt(m.h0(g.theta(j)));
        sh[j] = std::sqrt(m.h0(g.theta(j) + 0.5 * dth));
    }
    Field3D out = zeros_like(f);
    for (std::size_t it = 0; it < g.nt; ++it)
        for (std::size_t ix = 0; ix < g.nx; ++ix)
            for (std::size_t j = 0; j < N; ++j) {
                const std::size_t jp = (j + 1) % N, jm = (j + N - 1) % N;
                const double u = f.at(it, ix, j);
                const double flux_p = (f.at(it, ix, jp) - u) / sh[j];
                const double flux_m = (u - f.at(it, ix, jm)) / sh[jm];
                out.at(it, ix, j) = -(flux_p - flux_m) / (s[j] * dth * dth);
            }
    return out;
}

Field3D apply_R(const Field3D& f, double t_bar) {
    const auto& g = f.g;
    check_grid(g);
    Field3D out = zeros_like(f);
    const double it2 = 0.5 / g.dt, ix2 = 0.5 / g.dx;
    for (std::size_t it = 1; it + 1 < g.nt; ++it)
        for (std::size_t ix = 1; ix + 1 < g.nx; ++ix)
            for (std::size_t j = 0; j < g.ntheta; ++j) {
                const double ut = (f.at(it + 1, ix, j) - f.at(it - 1, ix, j)) * it2;
                const double ux = (f.at(it, ix + 1, j) - f.at(it, ix - 1, j)) * ix2;
                out.at(it, ix, j) = g.x(ix) * ux + (g.t(it) - t_bar) * ut;
            }
    return out;
}

Field3D apply_dtheta(const Field3D& f) {
    const auto& g = f.g;
    check_grid(g);
    Field3D out = zeros_like(f);
    const std::size_t N = g.ntheta;
    const double c = 0.5 / g.dtheta();
    for (std::size_t it = 0; it < g.nt; ++it)
        for (std::size_t ix = 0; ix < g.nx; ++ix)
            for (std::size_t j = 0; j < N; ++j)
                out.at(it, ix, j) = (f.at(it, ix, (j + 1) % N) - f.at(it, ix, (j + N - 1) % N)) * c;
    return out;
}

Field3D operator-(const Field3D& a, const Field3D& b) {
    if (a.v.size() != b.v.size()) throw ConfigError("field shapes differ");
    Field3D out = a;
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] -= b.v[i];
    return out;
}

Field3D operator*(double c, const Field3D& a) {
    Field3D out = a;
    for (double& v : out.v) v *= c;
    return out;
}

double l2_norm(const ConicMetric& m, const Field3D& f) {
    const auto& g = f.g;
    const std::size_t N = g.ntheta;
    std::vector<double> w(g.nx * N);
    for (std::size_t ix = 0; ix < g.nx; ++ix)
        for (std::size_t j = 0; j < N; ++j)
            w[ix * N + j] = std::abs(g.x(ix)) * std::sqrt(m.eval(g.x(ix), g.theta(j)).h) * g.dx * g.dtheta() * g.dt;
    double acc = 0;
    for (std::size_t it = 0; it < g.nt; ++it)
        for (std::size_t c = 0; c < g.nx * N; ++c) {
            const double u = f.v[it * g.nx * N + c];
            acc += u * u * w[c];
        }
    return std::sqrt(acc);
}

double commutator_residual(const ConicMetric& m, const FieldOp& A, const FieldOp& B, const FieldOp& expected,
                           const Field3D& f) {
    Field3D r = A(B(f)) - B(A(f));
    if (expected) r = r - expected(f);
    return l2_norm(m, r);
}

CommutatorStudy commutator_study(const ConicMetric& m, std::size_t n0, int levels) {
    if (n0 < 8 || levels < 2) throw ConfigError("commutator study needs n0 >= 8 and at least 2 levels");
    const double P = m.period();
    const double x_lo = 0.5 * m.x_max, x_hi = 1.5 * m.x_max;
    const double xc = 0.5 * (x_lo + x_hi), xr = 0.1 * (x_hi - x_lo);
    auto f = [&](double t, double x, double th) {
        const double w = kTwoPi * th / P;
        const double a = t / 0.2, b = (x - xc) / xr;
        return std::exp(-a * a - b * b) * (std::exp(std::sin(w)) + 0.5 * std::cos(2 * w));
    };
    CommutatorStudy st;
    for (int l = 0; l < levels; ++l) {
        const std::size_t n = n0 << l;
        SpaceTimeGrid g;
        g.nt = n + 1;
        g.t0 = -1.0;
        g.dt = 2.0 / static_cast<double>(n);
        g.nx = n + 1;
        g.x0 = x_lo;
        g.dx = (x_hi - x_lo) / static_cast<double>(n);
        g.ntheta = n;
        g.period = P;
        const Field3D u = sample_field(g, f);
        const FieldOp box = [&m](const Field3D& v) { return apply_box(m, v); };
        const FieldOp lap = [&m](const Field3D& v) { return apply_lap_y(m, v); };
        const FieldOp R = [](const Field3D& v) { return apply_R(v, 0.0); };
        const FieldOp two_box = [&m](const Field3D& v) { return 2.0 * apply_box(m, v); };
        const double ref = l2_norm(m, apply_box(m, u));
        st.h.push_back(g.dx);
        st.box_lap.push_back(commutator_residual(m, box, lap, nullptr, u) / ref);
        st.box_R.push_back(commutator_residual(m, box, R, two_box, u) / ref);
    }
    for (int l = 0; l + 1 < levels; ++l) {
        st.order_lap.push_back(std::log2(st.box_lap[l] / st.box_lap[l + 1]));
        st.order_R.push_back(std::log2(st.box_R[l] / st.box_R[l + 1]));
    }
    return st;
}

}  // namespace conic
