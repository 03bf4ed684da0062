#include "conic/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "conic/error.hpp"
#include "conic/ode.hpp"
#include "conic/spectral.hpp"

namespace conic {

// ---------------------------------------------------------------- TrigInterp

TrigInterp::TrigInterp(std::vector<double> samples, double period)
    : samples_(std::move(samples)), period_(period) {
    const std::size_t N = samples_.size();
    if (N < 3) throw ConfigError("periodic table needs at least 3 samples");
    if (!(period > 0)) throw ConfigError("period must be positive");
    const std::size_t K = N / 2;
    a_.assign(K + 1, 0.0);
    b_.assign(K + 1, 0.0);
    for (std::size_t k = 0; k <= K; ++k) {
        double sa = 0, sb = 0;
        for (std::size_t j = 0; j < N; ++j) {
            const double ph = kTwoPi * static_cast<double>(k * j % N) / static_cast<double>(N);
            sa += samples_[j] * std::cos(ph);
            sb += samples_[j] * std::sin(ph);
        }
        a_[k] = 2.0 * sa / static_cast<double>(N);
        b_[k] = 2.0 * sb / static_cast<double>(N);
    }
    if (N % 2 == 0) {
        a_[K] *= 0.5;
        b_[K] = 0.0;
    }
}

namespace {

template <class F>
void trig_loop(std::size_t K, double phase, F&& f) {
    const double c1 = std::cos(phase), s1 = std::sin(phase);
    double c = 1.0, s = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
        const double cn = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = cn;
        f(k, c, s);
    }
}

}  // namespace

double TrigInterp::operator()(double th) const {
    const double w = kTwoPi / period_;
    double acc = 0.5 * a_[0];
    trig_loop(a_.size() - 1, w * th, [&](std::size_t k, double c, double s) { acc += a_[k] * c + b_[k] * s; });
    return acc;
}

double TrigInterp::derivative(double th) const {
    const double w = kTwoPi / period_;
    double acc = 0.0;
    trig_loop(a_.size() - 1, w * th, [&](std::size_t k, double c, double s) {
        acc += static_cast<double>(k) * w * (b_[k] * c - a_[k] * s);
    });
    return acc;
}

double TrigInterp::integral(double th) const {
    const double w = kTwoPi / period_;
    double acc = 0.5 * a_[0] * th;
    trig_loop(a_.size() - 1, w * th, [&](std::size_t k, double c, double s) {
        acc += (a_[k] * s - b_[k] * (c - 1.0)) / (static_cast<double>(k) * w);
    });
    return acc;
}

Tabulated1D::Tabulated1D(std::vector<double> h0_samples, double period) {
    for (double v : h0_samples)
        if (!(v > 0)) throw ConfigError("h0 samples must be positive");
    h0 = TrigInterp(std::move(h0_samples), period);
    const std::size_t M = std::max<std::size_t>(256, 4 * h0.samples().size());
    std::vector<double> r(M);
    for (std::size_t j = 0; j < M; ++j) {
        const double v = h0(period * static_cast<double>(j) / static_cast<double>(M));
        if (!(v > 0)) throw ConfigError("interpolated h0 is not positive");
        r[j] = std::sqrt(v);
    }
    sqrt_h0 = TrigInterp(std::move(r), period);
    length = sqrt_h0.mean() * period;
}

// ---------------------------------------------------------------- ConicMetric

ConicMetric ConicMetric::circle(double L, double x_max) {
    ConicMetric m;
    m.cross_section = AnalyticCircle{L};
    m.x_max = x_max;
    m.validate();
    return m;
}

ConicMetric ConicMetric::tabulated(std::vector<double> h0, double x_max, double period) {
    ConicMetric m;
    m.cross_section = Tabulated1D(std::move(h0), period);
    m.x_max = x_max;
    m.validate();
    return m;
}

double ConicMetric::period() const {
    if (auto c = std::get_if<AnalyticCircle>(&cross_section)) return c->circumference;
    return std::get<Tabulated1D>(cross_section).h0.period();
}

double ConicMetric::boundary_length() const {
    if (auto c = std::get_if<AnalyticCircle>(&cross_section)) return c->circumference;
    return std::get<Tabulated1D>(cross_section).length;
}

double ConicMetric::h0(double th) const {
    if (std::holds_alternative<AnalyticCircle>(cross_section)) return 1.0;
    return std::get<Tabulated1D>(cross_section).h0(th);
}

double ConicMetric::h0_theta(double th) const {
    if (std::holds_alternative<AnalyticCircle>(cross_section)) return 0.0;
    return std::get<Tabulated1D>(cross_section).h0.derivative(th);
}

namespace {

// Catmull-Rom value and derivative (w.r.t. the local unit parameter).
inline void catmull(double p0, double p1, double p2, double p3, double t, double& v, double& d) {
    const double t2 = t * t, t3 = t2 * t;
    v = 0.5 * ((2 * p1) + (-p0 + p2) * t + (2 * p0 - 5 * p1 + 4 * p2 - p3) * t2 + (-p0 + 3 * p1 - 3 * p2 + p3) * t3);
    d = 0.5 * ((-p0 + p2) + 2 * (2 * p0 - 5 * p1 + 4 * p2 - p3) * t + 3 * (-p0 + 3 * p1 - 3 * p2 + p3) * t2);
}

void tabulated_factor(const TabulatedFactor& F, double period, double x, double th, double& f, double& fx,
                      double& fth) {
    const double hx = F.x_max / static_cast<double>(F.nx - 1);
    const double hth = period / static_cast<double>(F.ntheta);
    double u = std::clamp(x / hx, 0.0, static_cast<double>(F.nx - 1));
    auto ix = static_cast<long>(std::floor(u));
    if (ix >= static_cast<long>(F.nx) - 1) ix = static_cast<long>(F.nx) - 2;
    const double tx = u - static_cast<double>(ix);
    double w = std::fmod(th, period);
    if (w < 0) w += period;
    double vt = w / hth;
    auto jt = static_cast<long>(std::floor(vt));
    const double tt = vt - static_cast<double>(jt);
    const long NX = static_cast<long>(F.nx), NT = static_cast<long>(F.ntheta);
    auto sample = [&](long i, long j) {
        j = ((j % NT) + NT) % NT;
        if (i < 0) return 2.0 * F.f[static_cast<std::size_t>(j)] - F.f[static_cast<std::size_t>(NT + j)];
        if (i >= NX) {
            const auto a = static_cast<std::size_t>((NX - 1) * NT + j), b = static_cast<std::size_t>((NX - 2) * NT + j);
            return 2.0 * F.f[a] - F.f[b];
        }
        return F.f[static_cast<std::size_t>(i * NT + j)];
    };
    double rv[4], rd[4];
    for (int q = 0; q < 4; ++q) {
        const long j = jt - 1 + q;
        catmull(sample(ix - 1, j), sample(ix, j), sample(ix + 1, j), sample(ix + 2, j), tx, rv[q], rd[q]);
    }
    double dth, dummy;
    catmull(rv[0], rv[1], rv[2], rv[3], tt, f, dth);
    catmull(rd[0], rd[1], rd[2], rd[3], tt, fx, dummy);
    fx /= hx;
    fth = dth / hth;
}

}  // namespace

MetricSample ConicMetric::eval_model(double th) const { return {h0(th), 0.0, h0_theta(th)}; }

MetricSample ConicMetric::eval(double x, double th) const {
    const double b = h0(th), bt = h0_theta(th);
    double f = 1, fx = 0, ft = 0;
    if (auto r = std::get_if<RadialPower>(&perturbation)) {
        const double g = 1.0 + r->a * x;
        f = g * g;
        fx = 2.0 * g * r->a;
    } else if (auto a = std::get_if<AngularPower>(&perturbation)) {
        const double k = kTwoPi * a->m / period();
        const double c = std::cos(k * th), s = std::sin(k * th);
        const double g = 1.0 + a->a * x * c;
        f = g * g;
        fx = 2.0 * g * a->a * c;
        ft = -2.0 * g * a->a * x * k * s;
    } else if (auto t = std::get_if<TabulatedFactor>(&perturbation)) {
        tabulated_factor(*t, period(), x, th, f, fx, ft);
    }
    return {b * f, b * fx, bt * f + b * ft};
}

double ConicMetric::arc_length(double th) const {
    if (std::holds_alternative<AnalyticCircle>(cross_section)) return th;
    return std::get<Tabulated1D>(cross_section).sqrt_h0.integral(th);
}

double ConicMetric::theta_at_arc(double s) const {
    if (std::holds_alternative<AnalyticCircle>(cross_section)) return s;
    const auto& T = std::get<Tabulated1D>(cross_section);
    double th = s / T.length * period();
    for (int it = 0; it < 60; ++it) {
        const double r = T.sqrt_h0.integral(th) - s;
        th -= r / T.sqrt_h0(th);
        if (std::abs(r) < 1e-15 * (1.0 + std::abs(s))) break;
    }
    return th;
}

void ConicMetric::validate() const {
    if (n < 2) throw ConfigError("dimension n must be at least 2");
    if (!(x_max > 0)) throw ConfigError("x_max must be positive");
    if (fd_order != 2 && fd_order != 4) throw ConfigError("fd_order must be 2 or 4");
    if (auto c = std::get_if<AnalyticCircle>(&cross_section))
        if (!(c->circumference > 0)) throw ConfigError("circumference must be positive");
    if (auto t = std::get_if<TabulatedFactor>(&perturbation)) {
        if (t->nx < 2 || t->ntheta < 3 || t->f.size() != t->nx * t->ntheta)
            throw ConfigError("tabulated perturbation grid has inconsistent shape");
        for (std::size_t j = 0; j < t->ntheta; ++j)
            if (std::abs(t->f[j] - 1.0) > 1e-12) throw ConfigError("tabulated perturbation must equal 1 at x = 0");
    }
    const double P = period();
    for (int i = 0; i <= 16; ++i)
        for (int j = 0; j < 32; ++j) {
            const double x = x_max * i / 16.0, th = P * j / 32.0;
            if (!(eval(x, th).h > 0)) {
                std::ostringstream os;
                os << "metric coefficient h is not positive at x=" << x << ", theta=" << th;
                throw ConfigError(os.str());
            }
        }
}

// ---------------------------------------------------------------- CollarMetric

std::array<double, 4> CollarMetric::matrix(double rho, double v) const {
    const auto c = h(rho, v);
    const double r2 = rho * rho;
    return {1.0 + r2 * c[0], r2 * c[1], r2 * c[1], r2 * c[2]};
}

CollarMetric CollarMetric::from_conic(const ConicMetric& m) {
    CollarMetric c;
    c.period = m.period();
    c.rho_max = m.x_max;
    c.h = [m](double rho, double v) -> std::array<double, 3> { return {0.0, 0.0, m.eval(rho, v).h}; };
    return c;
}

double dual_metric(const ConicMetric& m, double x, double th, double a, double b) {
    if (!(x > 0)) throw DomainError("dual metric is singular at the tip (x <= 0)");
    return a * a + b * b / (x * x * m.eval(x, th).h);
}

double dual_metric(const CollarMetric& m, double rho, double v, double a, double b) {
    if (!(rho > 0)) throw DomainError("dual metric is singular at the tip (rho <= 0)");
    const auto G = m.matrix(rho, v);
    const double det = G[0] * G[3] - G[1] * G[2];
    if (!(det > 0)) throw DomainError("collar metric is not positive definite");
    return (a * a * G[3] - 2.0 * a * b * G[1] + b * b * G[0]) / det;
}

// ---------------------------------------------------------------- Laplacian

Field2D laplacian_apply(const ConicMetric& m, const Field2D& u) {
    if (m.n != 2) throw DomainError("laplacian_apply needs a one-dimensional cross-section (n = 2)");
    const auto& g = u.grid;
    const std::size_t k = static_cast<std::size_t>(m.fd_order / 2);
    if (g.nx < 2 * k + 1 || g.ntheta < 2 * k + 1 || u.v.size() != g.size())
        throw ConfigError("grid too coarse for the centered stencil");
    if (!(g.x0 + static_cast<double>(k) * g.dx > 0)) throw DomainError("stencil centre at or inside the tip");
    Field2D out;
    out.grid = g;
    out.grid.x0 = g.x(k);
    out.grid.nx = g.nx - 2 * k;
    out.v.assign(out.grid.size(), 0.0);
    const double hx = g.dx, ht = g.dtheta();
    const std::size_t NT = g.ntheta;
    auto wrap = [NT](long j) { return static_cast<std::size_t>((j % static_cast<long>(NT) + static_cast<long>(NT)) % static_cast<long>(NT)); };
    for (std::size_t i = k; i + k < g.nx; ++i) {
        const double x = g.x(i);
        for (std::size_t j = 0; j < NT; ++j) {
            const auto jl = static_cast<long>(j);
            double ux, uxx, ut, utt;
            if (k == 1) {
                ux = (u.at(i + 1, j) - u.at(i - 1, j)) / (2 * hx);
                uxx = (u.at(i + 1, j) - 2 * u.at(i, j) + u.at(i - 1, j)) / (hx * hx);
                ut = (u.at(i, wrap(jl + 1)) - u.at(i, wrap(jl - 1))) / (2 * ht);
                utt = (u.at(i, wrap(jl + 1)) - 2 * u.at(i, j) + u.at(i, wrap(jl - 1))) / (ht * ht);
            } else {
                ux = (-u.at(i + 2, j) + 8 * u.at(i + 1, j) - 8 * u.at(i - 1, j) + u.at(i - 2, j)) / (12 * hx);
                uxx = (-u.at(i + 2, j) + 16 * u.at(i + 1, j) - 30 * u.at(i, j) + 16 * u.at(i - 1, j) - u.at(i - 2, j)) /
                      (12 * hx * hx);
                const double p1 = u.at(i, wrap(jl + 1)), p2 = u.at(i, wrap(jl + 2));
                const double m1 = u.at(i, wrap(jl - 1)), m2 = u.at(i, wrap(jl - 2));
                ut = (-p2 + 8 * p1 - 8 * m1 + m2) / (12 * ht);
                utt = (-p2 + 16 * p1 - 30 * u.at(i, j) + 16 * m1 - m2) / (12 * ht * ht);
            }
            const auto s = m.eval(x, g.theta(j));
            const double e = 0.5 * s.h_x / s.h;
            const double lap_h = -utt / s.h + s.h_theta * ut / (2 * s.h * s.h);
            out.at(i - k, j) = -uxx - ((m.n - 1) / x + e) * ux + lap_h / (x * x);
        }
    }
    return out;
}

// ---------------------------------------------------------------- indicial data

std::complex<double> indicial_polynomial(int n, double lambda, std::complex<double> s) {
    const std::complex<double> i(0, 1);
    return lambda - i * static_cast<double>(n - 2) * s + s * s;
}

std::vector<IndicialMode> indicial_data(const ConicMetric& m, int J_max) {
    if (J_max < 1) throw ConfigError("J_max must be at least 1");
    const ModeBasis basis = boundary_modes(m, J_max);
    const double c = static_cast<double>(m.n - 2);
    const std::complex<double> i(0, 1);
    std::vector<IndicialMode> out;
    for (double lam : basis.lambda) {
        lam = std::max(lam, 0.0);
        // s^2 - i c s + lambda = 0
        const std::complex<double> disc = std::sqrt(std::complex<double>(-c * c - 4.0 * lam, 0.0));
        IndicialMode d;
        d.lambda = lam;
        d.s_plus = 0.5 * (i * c + disc);
        d.s_minus = 0.5 * (i * c - disc);
        if (d.s_plus.imag() < d.s_minus.imag()) std::swap(d.s_plus, d.s_minus);
        d.nu = std::sqrt(0.25 * c * c + lam);
        d.admitted_exponent = -0.5 * c + d.nu;
        d.constant_admitted = (m.n == 2 && lam == 0.0);
        d.friedrichs_selected = true;
        const double v = 0.5 * std::sqrt(c * c + lam * lam);
        d.variant_im_plus = 0.5 * c + v;
        d.variant_im_minus = 0.5 * c - v;
        out.push_back(d);
    }
    return out;
}

// ---------------------------------------------------------------- normal form

namespace {

using Mat2 = std::array<double, 4>;

struct BFrame {
    Mat2 M, dM_rho, dM_v;
};

Mat2 inv2(const Mat2& a) {
    const double det = a[0] * a[3] - a[1] * a[2];
    if (!(det > 0)) throw DomainError("collar metric is not positive definite");
    return {a[3] / det, -a[1] / det, -a[2] / det, a[0] / det};
}

Mat2 mul(const Mat2& a, const Mat2& b) {
    return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2], a[2] * b[1] + a[3] * b[3]};
}

Mat2 b_metric(const CollarMetric& m, double rho, double v) {
    const auto c = m.h(rho, v);
    return {1.0 + rho * rho * c[0], rho * c[1], rho * c[1], c[2]};
}

template <class F>
std::array<double, 3> fd4(F&& f, double x, double step) {
    const auto p1 = f(x + step), p2 = f(x + 2 * step), m1 = f(x - step), m2 = f(x - 2 * step);
    std::array<double, 3> d{};
    for (int k = 0; k < 3; ++k) d[k] = (-p2[k] + 8 * p1[k] - 8 * m1[k] + m2[k]) / (12 * step);
    return d;
}

BFrame b_frame(const CollarMetric& m, double rho, double v) {
    BFrame f;
    f.M = inv2(b_metric(m, rho, v));
    // Differentiate the b-metric entries, which stay smooth even when h itself is singular in rho.
    auto entries = [&](double r, double w) {
        const Mat2 g = b_metric(m, r, w);
        return std::array<double, 3>{g[0], g[1], g[3]};
    };
    const double sr = std::min(1e-3, 0.25 * rho);
    const auto er = fd4([&](double r) { return entries(r, v); }, rho, sr);
    const auto ev = fd4([&](double w) { return entries(rho, w); }, v, 1e-3);
    const Mat2 dgr = {er[0], er[1], er[1], er[2]};
    const Mat2 dgv = {ev[0], ev[1], ev[1], ev[2]};
    auto neg = [](Mat2 a) {
        for (auto& x : a) x = -x;
        return a;
    };
    f.dM_rho = neg(mul(mul(f.M, dgr), f.M));
    f.dM_v = neg(mul(mul(f.M, dgv), f.M));
    return f;
}

struct Shot {
    double objective = 0;
    double x = 0, y = 0;
    bool reached = false;
};

Shot shoot(const CollarMetric& m, double rho0, double v0, double q0, const NormalFormOptions& opt) {
    const double rho_stop = opt.rho_stop_rel * rho0;
    const BFrame f0 = b_frame(m, rho0, v0);
    const auto& M0 = f0.M;
    const double disc = M0[1] * M0[1] * q0 * q0 - M0[0] * (M0[3] * q0 * q0 - 1.0);
    if (disc < 0) throw DomainError("initial angular covector too large for a unit covector");
    const double P0 = (-M0[1] * q0 - std::sqrt(disc)) / M0[0];

    auto rhs = [&](double, const ode::State<5>& s, ode::State<5>& d) {
        const double rho = std::max(s[0], 1e-300);
        const BFrame f = b_frame(m, rho, s[1]);
        const double p0 = s[2], q = s[3];
        const double Mp0 = f.M[0] * p0 + f.M[1] * q, Mp1 = f.M[2] * p0 + f.M[3] * q;
        auto quad = [&](const Mat2& A) { return p0 * (A[0] * p0 + A[1] * q) + q * (A[2] * p0 + A[3] * q); };
        d[0] = rho * Mp0;
        d[1] = Mp1;
        d[2] = -0.5 * rho * quad(f.dM_rho) + q * Mp1;
        d[3] = -0.5 * quad(f.dM_v) - q * Mp0;
        d[4] = rho;
    };
    std::vector<ode::Event<5>> ev;
    ev.push_back({[rho_stop](double, const ode::State<5>& s) { return s[0] - rho_stop; }, -1});
    ev.push_back({[&m](double, const ode::State<5>& s) {
                      const Mat2 Mi = inv2(b_metric(m, std::max(s[0], 1e-300), s[1]));
                      return Mi[0] * s[2] + Mi[1] * s[3];
                  },
                  +1});
    ode::Options o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    o.initial_step = 1e-3;
    const auto r = ode::integrate<5>(rhs, {rho0, v0, P0, q0, 0.0}, 0.0, 400.0, o, ev);
    const auto& s = r.y.back();
    const double huu = m.h(std::max(s[0], 1e-300), s[1])[2];
    Shot out;
    out.objective = s[0] * s[3] / std::sqrt(huu);
    out.reached = (r.stop == ode::Stop::event && r.event == 0);
    const auto c = m.h(s[0], s[1]);
    const Mat2 gb = b_metric(m, s[0], s[1]);
    const Mat2 Mi = inv2(gb);
    out.x = s[4] + s[0] / std::sqrt(Mi[0]);
    out.y = s[1] + s[0] * c[1] / c[2];
    return out;
}

Shot solve_point(const CollarMetric& m, double rho, double v, const NormalFormOptions& opt, double& q_star, int& evals,
                 double q_guess) {
    auto f = [&](double q) {
        ++evals;
        return shoot(m, rho, v, q, opt);
    };
    Shot s0 = f(q_guess);
    if (s0.objective == 0.0) {
        q_star = q_guess;
        return s0;
    }
    double a = q_guess, fa = s0.objective;
    double step = -fa / rho;
    if (step == 0) step = 1e-12;
    double b = a, fb = fa;
    bool bracketed = false;
    for (int k = 0; k < 80; ++k) {
        b = a + step;
        fb = f(b).objective;
        if (fb == 0.0) {
            q_star = b;
            return f(b);
        }
        if ((fa < 0) != (fb < 0)) {
            bracketed = true;
            break;
        }
        a = b;
        fa = fb;
        step *= 2.0;
    }
    if (!bracketed) {
        std::ostringstream os;
        os << "shooting failed to bracket a tip-reaching geodesic; closest-approach proxy " << fb;
        throw ConvergenceError(os.str());
    }
    boost::uintmax_t it = 200;
    auto tol = [](double l, double h) { return std::abs(h - l) <= 2e-16 * std::max(1e-300, std::abs(l) + std::abs(h)) + 1e-300; };
    auto g = [&](double q) { return f(q).objective; };
    const auto r = boost::math::tools::toms748_solve(g, std::min(a, b), std::max(a, b), a < b ? fa : fb,
                                                     a < b ? fb : fa, tol, it);
    q_star = 0.5 * (r.first + r.second);
    return f(q_star);
}

}  // namespace

double collar_smallness_radius(const CollarMetric& m, double bound, int samples) {
    double last = 0.0;
    for (int i = 1; i <= samples; ++i) {
        const double rho = m.rho_max * i / samples;
        double worst = 0;
        for (int j = 0; j < 32; ++j) {
            const auto c = m.h(rho, m.period * j / 32.0);
            worst = std::max(worst, std::abs(rho * rho * c[0]) + std::abs(rho * c[1]));
        }
        if (worst > bound) return last;
        last = rho;
    }
    return last;
}

NormalFormResult normal_form(const CollarMetric& m, double rho, double v, const NormalFormOptions& opt) {
    if (!(rho > 0)) throw DomainError("normal_form needs rho > 0");
    NormalFormResult res;
    res.effective_rho_max = collar_smallness_radius(m, opt.smallness);
    if (rho > res.effective_rho_max * (1 + 1e-12)) {
        std::ostringstream os;
        os << "point rho=" << rho << " lies outside the effective collar rho <= " << res.effective_rho_max;
        throw DomainError(os.str());
    }
    int evals = 0;
    double q = 0;
    const Shot s = solve_point(m, rho, v, opt, q, evals, 0.0);
    res.x = s.x;
    res.y = s.y;
    res.q0 = q;
    if (opt.diagnostics) {
        const double d = opt.fd_step * rho;
        const double dv = opt.fd_step;
        auto at = [&](double r, double w) {
            double qq = 0;
            const Shot t = solve_point(m, r, w, opt, qq, evals, q);
            return std::array<double, 3>{t.x, t.y, 0.0};
        };
        const auto Jr = fd4([&](double r) { return at(r, v); }, rho, d);
        const auto Jv = fd4([&](double w) { return at(rho, w); }, v, dv);
        // J = d(x,y)/d(rho,v); metric in (x,y) is J^{-T} G J^{-1}.
        const Mat2 J = {Jr[0], Jv[0], Jr[1], Jv[1]};
        const Mat2 Ji = [&] {
            const double det = J[0] * J[3] - J[1] * J[2];
            return Mat2{J[3] / det, -J[1] / det, -J[2] / det, J[0] / det};
        }();
        const Mat2 G = m.matrix(rho, v);
        const Mat2 JiT = {Ji[0], Ji[2], Ji[1], Ji[3]};
        const Mat2 Gn = mul(mul(JiT, G), Ji);
        res.residual_cross = std::abs(Gn[1]);
        res.residual_radial = std::abs(Gn[0] - 1.0);
    }
    res.shooting_evaluations = evals;
    return res;
}

}  // namespace conic
