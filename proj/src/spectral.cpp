#include "conic/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/tools/roots.hpp>

#include "conic/error.hpp"

namespace conic {

// ---------------------------------------------------------------- Bessel

double bessel_j(double nu, double z, double tol) {
    if (!(nu >= 0) || !(z >= 0)) throw DomainError("bessel_j needs nu >= 0 and z >= 0");
    if (tol < 1e-15) throw PrecisionError("bessel_j: tolerance below 1e-15 is not attainable in double precision");
    if (z > 1e7 && tol < 1e-16 * z) {
        std::ostringstream os;
        os << "bessel_j: argument reduction at z=" << z << " limits accuracy to " << 1e-16 * z;
        throw PrecisionError(os.str());
    }
    if (z == 0.0) return nu == 0.0 ? 1.0 : 0.0;
    return boost::math::cyl_bessel_j(nu, z);
}

namespace {

double refine_zero(double nu, double a, double b, double fa, double fb) {
    auto f = [nu](double z) { return boost::math::cyl_bessel_j(nu, z); };
    boost::uintmax_t it = 100;
    const auto r = boost::math::tools::toms748_solve(f, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(52), it);
    return 0.5 * (r.first + r.second);
}

// Next zero after z_prev given the previous gap. Gaps decrease towards pi for
// nu > 1/2 and increase towards pi for nu < 1/2, so the next zero lies between
// z_prev + min(gap, pi) and z_prev + max(gap, pi).
double next_zero(double nu, double z_prev, double gap) {
    auto f = [nu](double z) { return boost::math::cyl_bessel_j(nu, z); };
    double a = z_prev + std::min(gap, kPi) - 1e-2;
    double b = z_prev + std::max(gap, kPi) + 1e-2;
    double fa = f(a), fb = f(b);
    if ((fa < 0) == (fb < 0)) {
        // Certified fallback: scan with a step below the minimal zero spacing.
        a = z_prev + 0.5;
        fa = f(a);
        for (;;) {
            b = a + 0.5;
            fb = f(b);
            if ((fa < 0) != (fb < 0)) break;
            a = b;
            fa = fb;
        }
    }
    if (fa == 0.0) return a;
    if (fb == 0.0) return b;
    return refine_zero(nu, a, b, fa, fb);
}

template <class Stop>
std::vector<double> zeros_until(double nu, Stop&& stop) {
    std::vector<double> z;
    if (!(nu >= 0)) throw DomainError("bessel zeros need nu >= 0");
    const double z1 = boost::math::cyl_bessel_j_zero(nu, 1);
    if (stop(z.size(), z1)) return z;
    z.push_back(z1);
    const double z2 = boost::math::cyl_bessel_j_zero(nu, 2);
    if (stop(z.size(), z2)) return z;
    z.push_back(z2);
    for (;;) {
        const std::size_t k = z.size();
        const double zn = next_zero(nu, z[k - 1], z[k - 1] - z[k - 2]);
        if (stop(z.size(), zn)) return z;
        z.push_back(zn);
    }
}

}  // namespace

std::vector<double> bessel_zeros(double nu, std::size_t k) {
    if (k == 0) return {};
    return zeros_until(nu, [k](std::size_t have, double) { return have >= k; });
}

std::vector<double> bessel_zeros_below(double nu, double z_max) {
    return zeros_until(nu, [z_max](std::size_t, double z) { return z >= z_max; });
}

// ---------------------------------------------------------------- boundary modes

double ModeBasis::eval(std::size_t i, double th) const {
    if (analytic) {
        const double k = kTwoPi * j[i] / period;
        if (parity[i] == 0) return 1.0 / std::sqrt(length);
        const double c = std::sqrt(2.0 / length);
        return parity[i] > 0 ? c * std::cos(k * th) : c * std::sin(k * th);
    }
    return interp[i](th);
}

ModeBasis boundary_modes(const ConicMetric& m, int J_max) {
    if (J_max < 0) throw ConfigError("J_max must be nonnegative");
    ModeBasis b;
    b.period = m.period();
    b.length = m.boundary_length();
    if (m.is_round()) {
        b.analytic = true;
        const std::size_t N = static_cast<std::size_t>(std::max(64, 4 * J_max + 4));
        for (std::size_t q = 0; q < N; ++q) b.theta.push_back(b.period * static_cast<double>(q) / static_cast<double>(N));
        auto push = [&](int j, int parity) {
            const double k = kTwoPi * j / b.period;
            b.lambda.push_back(k * k);
            b.j.push_back(j);
            b.parity.push_back(parity);
            b.samples.emplace_back();
            for (double th : b.theta) {
                double v = 1.0 / std::sqrt(b.length);
                if (parity != 0) v = std::sqrt(2.0 / b.length) * (parity > 0 ? std::cos(k * th) : std::sin(k * th));
                b.samples.back().push_back(v);
            }
        };
        push(0, 0);
        for (int j = 1; j <= J_max; ++j) {
            push(j, +1);
            push(j, -1);
        }
        return b;
    }
    // Fourier pseudo-spectral discretisation on an odd grid (no spurious Nyquist kernel).
    const auto& T = std::get<Tabulated1D>(m.cross_section);
    const std::size_t want = static_cast<std::size_t>(2 * J_max + 1);
    std::size_t M = 2 * std::max<std::size_t>(T.h0.samples().size(), 4 * want + 8) + 1;
    const double P = b.period, dth = P / static_cast<double>(M);
    std::vector<double> s(M);
    for (std::size_t q = 0; q < M; ++q) {
        b.theta.push_back(dth * static_cast<double>(q));
        s[q] = std::sqrt(m.h0(b.theta.back()));
    }
    Eigen::MatrixXd D = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(M), static_cast<Eigen::Index>(M));
    const double w = kTwoPi / P;
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t q = 0; q < M; ++q) {
            if (i == q) continue;
            const long d = static_cast<long>(i) - static_cast<long>(q);
            const double sign = (d % 2 == 0) ? 1.0 : -1.0;
            D(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q)) =
                0.5 * w * sign / std::sin(kPi * static_cast<double>(d) / static_cast<double>(M));
        }
    Eigen::VectorXd sinv(static_cast<Eigen::Index>(M)), srt(static_cast<Eigen::Index>(M));
    for (std::size_t q = 0; q < M; ++q) {
        sinv(static_cast<Eigen::Index>(q)) = 1.0 / s[q];
        srt(static_cast<Eigen::Index>(q)) = 1.0 / std::sqrt(s[q]);
    }
    const Eigen::MatrixXd K = D.transpose() * sinv.asDiagonal() * D;
    const Eigen::MatrixXd A = srt.asDiagonal() * K * srt.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    if (es.info() != Eigen::Success) throw ConvergenceError("cross-section eigensolve did not converge");
    b.analytic = false;
    double worst = 0;
    for (std::size_t i = 0; i < want && i < M; ++i) {
        Eigen::VectorXd u = srt.asDiagonal() * es.eigenvectors().col(static_cast<Eigen::Index>(i));
        u /= std::sqrt(dth);
        double lam = es.eigenvalues()(static_cast<Eigen::Index>(i));
        if (i == 0 && std::abs(lam) < 1e-10) lam = 0.0;
        if (u.sum() < 0) u = -u;
        // Residual of Delta_Y u = lambda u in the h0-weighted norm.
        const Eigen::VectorXd r = (K * u).cwiseProduct(sinv) - lam * u;
        double rn = 0;
        for (std::size_t q = 0; q < M; ++q) rn += r(static_cast<Eigen::Index>(q)) * r(static_cast<Eigen::Index>(q)) * s[q] * dth;
        worst = std::max(worst, std::sqrt(rn));
        b.lambda.push_back(lam);
        b.j.push_back(static_cast<int>(i));
        b.parity.push_back(0);
        b.samples.emplace_back(u.data(), u.data() + u.size());
        b.interp.emplace_back(b.samples.back(), P);
    }
    b.residual = worst;
    return b;
}

// ---------------------------------------------------------------- radial modes

namespace {

RadialMode finish_mode(int n, double nu, double X, std::vector<double> z) {
    RadialMode r;
    r.n = n;
    r.nu = nu;
    r.X = X;
    r.mu.reserve(z.size());
    r.norm.reserve(z.size());
    for (double zk : z) {
        r.mu.push_back(zk / X);
        r.norm.push_back(std::sqrt(2.0) / (X * std::abs(boost::math::cyl_bessel_j(nu + 1.0, zk))));
    }
    return r;
}

}  // namespace

RadialMode RadialMode::build(int n, double nu, double X, std::size_t K) {
    if (!(X > 0)) throw ConfigError("X_max must be positive");
    return finish_mode(n, nu, X, bessel_zeros(nu, K));
}

RadialMode RadialMode::build_below(int n, double nu, double X, double mu_max) {
    if (!(X > 0)) throw ConfigError("X_max must be positive");
    return finish_mode(n, nu, X, bessel_zeros_below(nu, mu_max * X));
}

double RadialMode::phi(std::size_t k, double x) const {
    const double a = 0.5 * (n - 2);
    if (x <= 0.0) {
        if (std::abs(nu - a) > 1e-15) return 0.0;
        return norm[k] * std::pow(0.5 * mu[k], nu) / std::tgamma(nu + 1.0);
    }
    const double j = boost::math::cyl_bessel_j(nu, mu[k] * x);
    return n == 2 ? norm[k] * j : norm[k] * j * std::pow(x, -a);
}

void radial_quadrature(int n, double X, std::size_t panels, std::vector<double>& x, std::vector<double>& w) {
    using G = boost::math::quadrature::gauss<double, 20>;
    const auto& a = G::abscissa();
    const auto& wt = G::weights();
    x.clear();
    w.clear();
    const double h = X / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double c = h * (static_cast<double>(p) + 0.5);
        for (std::size_t i = 0; i < a.size(); ++i)
            for (double sg : {-1.0, 1.0}) {
                const double xi = c + sg * 0.5 * h * a[i];
                x.push_back(xi);
                w.push_back(0.5 * h * wt[i] * std::pow(xi, n - 1));
            }
    }
}

double RadialEvolution::value(double t, double x) const {
    double acc = 0;
    for (std::size_t k = 0; k < mode.size(); ++k) {
        const double mu = mode.mu[k];
        acc += (a[k] * std::cos(mu * t) + b[k] * std::sin(mu * t) / mu) * mode.phi(k, x);
    }
    return acc;
}

std::vector<double> RadialEvolution::mode_energy(double t) const {
    std::vector<double> e(mode.size());
    for (std::size_t k = 0; k < mode.size(); ++k) {
        const double mu = mode.mu[k], c = std::cos(mu * t), s = std::sin(mu * t);
        const double u = a[k] * c + b[k] * s / mu, v = -a[k] * mu * s + b[k] * c;
        e[k] = 0.5 * (v * v + mu * mu * u * u);
    }
    return e;
}

double RadialEvolution::energy(double t) const {
    double acc = 0;
    for (double v : mode_energy(t)) acc += v;
    return acc;
}

RadialEvolution evolve_mode_spectral(const RadialMode& mode, const RadialFn& u0, const RadialFn& u1, double tail_tol) {
    RadialEvolution ev;
    ev.mode = mode;
    const double mu_max = mode.mu.empty() ? 1.0 : mode.mu.back();
    const auto panels = static_cast<std::size_t>(std::max(64.0, 2.0 * std::ceil(mu_max * mode.X / kPi)));
    std::vector<double> xs, ws;
    radial_quadrature(mode.n, mode.X, panels, xs, ws);
    std::vector<double> f0(xs.size()), f1(xs.size());
    double n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        f0[i] = u0 ? u0(xs[i]) : 0.0;
        f1[i] = u1 ? u1(xs[i]) : 0.0;
        n0 += ws[i] * f0[i] * f0[i];
        n1 += ws[i] * f1[i] * f1[i];
    }
    ev.a.assign(mode.size(), 0.0);
    ev.b.assign(mode.size(), 0.0);
    double s0 = 0, s1 = 0;
    for (std::size_t k = 0; k < mode.size(); ++k) {
        double ca = 0, cb = 0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double p = mode.phi(k, xs[i]) * ws[i];
            ca += f0[i] * p;
            cb += f1[i] * p;
        }
        ev.a[k] = ca;
        ev.b[k] = cb;
        s0 += ca * ca;
        s1 += cb * cb;
    }
    ev.tail_u0 = n0 > 0 ? std::max(0.0, n0 - s0) / n0 : 0.0;
    ev.tail_u1 = n1 > 0 ? std::max(0.0, n1 - s1) / n1 : 0.0;
    if (ev.tail_u0 > tail_tol || ev.tail_u1 > tail_tol) {
        std::ostringstream os;
        os << "initial data not resolved by " << mode.size() << " radial modes: relative tail mass u=" << ev.tail_u0
           << ", u_t=" << ev.tail_u1;
        throw TruncationError(os.str());
    }
    return ev;
}

// ---------------------------------------------------------------- finite differences

RadialField evolve_mode_fd(int n, double nu, const RadialFn& u0, const RadialFn& u1, const FDGrid& grid, double T,
                           std::size_t n_out) {
    if (grid.nx < 8) throw ConfigError("FD grid needs at least 8 cells");
    if (!(T > 0) || n_out < 2) throw ConfigError("FD run needs T > 0 and at least two output times");
    const double h = grid.X / static_cast<double>(grid.nx);
    const bool wform = nu >= 0.5;
    const std::size_t N = wform ? grid.nx - 1 : grid.nx;
    std::vector<double> x(N), wgt(N), diag(N), lo(N, 0.0), up(N, 0.0);
    const double p = 0.5 * (n - 1);
    if (wform) {
        // w = x^{(n-1)/2} u on vertices 1..nx-1, w = 0 at both ends.
        for (std::size_t i = 0; i < N; ++i) {
            x[i] = h * static_cast<double>(i + 1);
            wgt[i] = h;
            diag[i] = -2.0 / (h * h) - (nu * nu - 0.25) / (x[i] * x[i]);
            lo[i] = up[i] = 1.0 / (h * h);
        }
    } else {
        // v = x^{-a} u with a = nu - (n-2)/2 removes the potential: (x^{2nu+1} v')' / x^{2nu+1}.
        // Conservative cell-centred form; ghost v_N = -v_{N-1} puts v(X) = 0.
        const double q = 2.0 * nu + 1.0;
        for (std::size_t i = 0; i < N; ++i) {
            x[i] = h * (static_cast<double>(i) + 0.5);
            const double xm = h * static_cast<double>(i), xp = h * static_cast<double>(i + 1);
            const double cm = std::pow(xm, q), cp = std::pow(xp, q), c = std::pow(x[i], q);
            wgt[i] = c * h;
            lo[i] = cm / (c * h * h);
            up[i] = cp / (c * h * h);
            diag[i] = -(cm + cp) / (c * h * h);
            if (i == N - 1) {
                diag[i] -= up[i];
                up[i] = 0.0;
            }
        }
    }
    double lmax = 0;
    for (std::size_t i = 0; i < N; ++i) lmax = std::max(lmax, std::abs(diag[i]) + std::abs(lo[i]) + std::abs(up[i]));
    const double dt_max = 2.0 / std::sqrt(lmax);
    double dt = grid.dt > 0 ? grid.dt : std::min(grid.cfl * h, 0.9 * dt_max);
    if (dt > dt_max) {
        std::ostringstream os;
        os << "CFL violation: dt=" << dt << " exceeds the stability bound " << dt_max;
        throw ConfigError(os.str());
    }
    const std::size_t segs = n_out - 1;
    std::size_t per = static_cast<std::size_t>(std::ceil(T / (dt * static_cast<double>(segs))));
    dt = T / static_cast<double>(per * segs);

    auto apply = [&](const std::vector<double>& w, std::vector<double>& out) {
        for (std::size_t i = 0; i < N; ++i) {
            double v = diag[i] * w[i];
            if (i > 0) v += lo[i] * w[i - 1];
            if (i + 1 < N) v += up[i] * w[i + 1];
            out[i] = v;
        }
    };
    const double a = nu - 0.5 * (n - 2);
    auto scale = [&](std::size_t i) { return wform ? std::pow(x[i], p) : std::pow(x[i], -a); };
    std::vector<double> wprev(N), wcur(N), wnext(N), Aw(N), v0(N);
    for (std::size_t i = 0; i < N; ++i) {
        wprev[i] = scale(i) * u0(x[i]);
        v0[i] = u1 ? scale(i) * u1(x[i]) : 0.0;
    }
    apply(wprev, Aw);
    for (std::size_t i = 0; i < N; ++i) wcur[i] = wprev[i] + dt * v0[i] + 0.5 * dt * dt * Aw[i];

    RadialField out;
    out.x = x;
    out.dx = h;
    out.dt = dt;
    auto energy = [&](const std::vector<double>& wm, const std::vector<double>& w0, const std::vector<double>& wp) {
        apply(w0, Aw);
        double e = 0;
        for (std::size_t i = 0; i < N; ++i) {
            const double v = (wp[i] - wm[i]) / (2 * dt);
            e += 0.5 * wgt[i] * (v * v - w0[i] * Aw[i]);
        }
        return e;
    };
    auto record = [&](double t, const std::vector<double>& w) {
        out.t.push_back(t);
        for (std::size_t i = 0; i < N; ++i) out.u.push_back(w[i] / scale(i));
    };
    // Energy at t = 0 from the exact initial velocity.
    {
        apply(wprev, Aw);
        double e = 0;
        for (std::size_t i = 0; i < N; ++i) e += 0.5 * wgt[i] * (v0[i] * v0[i] - wprev[i] * Aw[i]);
        out.energy.push_back(e);
    }
    record(0.0, wprev);
    const std::size_t total = per * segs;
    for (std::size_t step = 1; step <= total; ++step) {
        apply(wcur, Aw);
        for (std::size_t i = 0; i < N; ++i) wnext[i] = 2.0 * wcur[i] - wprev[i] + dt * dt * Aw[i];
        if (step % per == 0) {
            record(dt * static_cast<double>(step), wcur);
            out.energy.push_back(energy(wprev, wcur, wnext));
        }
        std::swap(wprev, wcur);
        std::swap(wcur, wnext);
    }
    return out;
}

// ---------------------------------------------------------------- wave state

double WaveState::angular(const AngularComponent& c, double th) const {
    if (c.parity == 0) return 1.0 / std::sqrt(L);
    const double a = std::sqrt(2.0 / L);
    return c.parity > 0 ? a * std::cos(c.k * th) : a * std::sin(c.k * th);
}

std::size_t WaveState::terms() const {
    std::size_t t = 0;
    for (const auto& c : comps) t += c.a.size();
    return t;
}

double WaveState::value(double t, double x, double th) const {
    double acc = 0;
    for (const auto& c : comps) {
        const RadialMode& m = modes[c.radial];
        double r = 0;
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double mu = m.mu[k];
            r += (c.a[k] * std::cos(mu * t) + c.b[k] * std::sin(mu * t) / mu) * m.phi(k, x);
        }
        acc += angular(c, th) * r;
    }
    return acc;
}

std::vector<double> WaveState::time_series(double x, double th, const std::vector<double>& ts) const {
    std::vector<double> out(ts.size(), 0.0);
    if (ts.empty()) return out;
    bool uniform = ts.size() > 2;
    const double dt = ts.size() > 1 ? ts[1] - ts[0] : 0.0;
    for (std::size_t i = 1; uniform && i < ts.size(); ++i)
        if (std::abs(ts[i] - ts[0] - dt * static_cast<double>(i)) > 1e-12 * (1.0 + std::abs(ts[i]))) uniform = false;
    for (const auto& c : comps) {
        const RadialMode& m = modes[c.radial];
        const double ang = angular(c, th);
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double mu = m.mu[k];
            const double ph = ang * m.phi(k, x);
            const double A = c.a[k] * ph, B = c.b[k] * ph / mu;
            if (A == 0.0 && B == 0.0) continue;
            if (!uniform) {
                for (std::size_t i = 0; i < ts.size(); ++i) out[i] += A * std::cos(mu * ts[i]) + B * std::sin(mu * ts[i]);
                continue;
            }
            const double cr = std::cos(mu * dt), sr = std::sin(mu * dt);
            double cc = 0, ss = 0;
            for (std::size_t i = 0; i < ts.size(); ++i) {
                if (i % 256 == 0) {
                    cc = std::cos(mu * ts[i]);
                    ss = std::sin(mu * ts[i]);
                }
                out[i] += A * cc + B * ss;
                const double cn = cc * cr - ss * sr;
                ss = ss * cr + cc * sr;
                cc = cn;
            }
        }
    }
    return out;
}

std::vector<std::vector<double>> WaveState::component_profiles(double t, const std::vector<double>& xs) const {
    std::vector<std::vector<double>> out(comps.size(), std::vector<double>(xs.size(), 0.0));
    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        const auto& c = comps[ci];
        const RadialMode& m = modes[c.radial];
        std::vector<double> coef(m.size());
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double mu = m.mu[k];
            coef[k] = c.a[k] * std::cos(mu * t) + c.b[k] * std::sin(mu * t) / mu;
        }
        for (std::size_t ix = 0; ix < xs.size(); ++ix) {
            double r = 0;
            for (std::size_t k = 0; k < m.size(); ++k)
                if (coef[k] != 0.0) r += coef[k] * m.phi(k, xs[ix]);
            out[ci][ix] = r;
        }
    }
    return out;
}

Field2D WaveState::snapshot(double t, const PolarGrid& g) const {
    std::vector<double> xs(g.nx);
    for (std::size_t i = 0; i < g.nx; ++i) xs[i] = g.x(i);
    const auto prof = component_profiles(t, xs);
    Field2D f;
    f.grid = g;
    f.v.assign(g.size(), 0.0);
    for (std::size_t ci = 0; ci < comps.size(); ++ci) {
        std::vector<double> ang(g.ntheta);
        for (std::size_t j = 0; j < g.ntheta; ++j) ang[j] = angular(comps[ci], g.theta(j));
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double r = prof[ci][i];
            if (r == 0.0) continue;
            for (std::size_t j = 0; j < g.ntheta; ++j) f.at(i, j) += r * ang[j];
        }
    }
    return f;
}

double WaveState::coefficient_norm2(double t) const {
    double acc = 0;
    for (const auto& c : comps) {
        const RadialMode& m = modes[c.radial];
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double mu = m.mu[k];
            const double u = c.a[k] * std::cos(mu * t) + c.b[k] * std::sin(mu * t) / mu;
            acc += u * u;
        }
    }
    return acc;
}

std::vector<double> WaveState::mode_energies(double t) const {
    std::vector<double> e;
    for (const auto& c : comps) {
        const RadialMode& m = modes[c.radial];
        double acc = 0;
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double mu = m.mu[k], co = std::cos(mu * t), si = std::sin(mu * t);
            const double u = c.a[k] * co + c.b[k] * si / mu, v = -c.a[k] * mu * si + c.b[k] * co;
            acc += 0.5 * (v * v + mu * mu * u * u);
        }
        e.push_back(acc);
    }
    return e;
}

WaveState WaveState::time_shifted(double t0) const {
    WaveState w = *this;
    w.t_origin = t_origin - t0;
    for (auto& c : w.comps) {
        const RadialMode& m = modes[c.radial];
        for (std::size_t k = 0; k < m.size(); ++k) {
            const double mu = m.mu[k], co = std::cos(mu * t0), si = std::sin(mu * t0);
            const double a = c.a[k], b = c.b[k];
            c.a[k] = a * co + b * si / mu;
            c.b[k] = -a * mu * si + b * co;
        }
    }
    return w;
}

WaveState fundamental_solution(double L, const SourceSpec& src, const SolverGrids& grids, double T) {
    if (!(L > 0)) throw ConfigError("circumference must be positive");
    if (!(src.sigma > 0)) throw ConfigError("mollifier width sigma must be positive");
    if (!(src.x_bar >= 0)) throw ConfigError("pole must satisfy x_bar >= 0");
    if (!(T > 0)) throw ConfigError("final time must be positive");
    const double margin = grids.margin_sigmas * src.sigma;
    if (!(T < grids.X_max - src.x_bar - margin)) {
        std::ostringstream os;
        os << "causal margin violated: T=" << T << " needs X_max > " << T + src.x_bar + margin
           << "; suggested X_max=" << 1.1 * (T + src.x_bar + margin);
        throw CausalityError(os.str());
    }
    WaveState w;
    w.L = L;
    w.X = grids.X_max;
    w.source = src;
    double mu_max = std::sqrt(2.0 * std::log(1.0 / grids.tol)) / src.sigma;
    if (grids.mu_cap > 0 && grids.mu_cap < mu_max) {
        mu_max = grids.mu_cap;
        w.cert.grid_limited = true;
    }
    w.cert.mu_max = mu_max;
    w.cert.radial_tail = std::exp(-0.5 * src.sigma * src.sigma * mu_max * mu_max);
    const double s2 = src.sigma * src.sigma;
    double global = 0, prev = -1;
    for (int j = 0;; ++j) {
        const double nu = kTwoPi * j / L;
        if (src.x_bar == 0.0 && j > 0) {
            w.cert.angular_tail = 0.0;
            break;
        }
        RadialMode mode = RadialMode::build_below(2, nu, w.X, mu_max);
        if (mode.size() == 0) {
            w.cert.angular_tail = 0.0;
            break;
        }
        std::vector<double> base(mode.size());
        double mag = 0;
        for (std::size_t k = 0; k < mode.size(); ++k) {
            base[k] = mode.phi(k, src.x_bar) * std::exp(-0.5 * s2 * mode.mu[k] * mode.mu[k]);
            mag = std::max(mag, std::abs(base[k]));
        }
        global = std::max(global, mag);
        const bool past_turning = nu > mu_max * src.x_bar;
        if (j > 1 && past_turning && mag < grids.tol * global && prev < grids.tol * global) {
            w.cert.angular_tail = mag / global;
            break;
        }
        prev = mag;
        const std::size_t ri = w.modes.size();
        w.modes.push_back(std::move(mode));
        w.cert.j_max = j;
        const double k = kTwoPi * j / L;
        for (int parity : (j == 0 ? std::vector<int>{0} : std::vector<int>{+1, -1})) {
            AngularComponent c;
            c.j = j;
            c.parity = parity;
            c.k = k;
            c.radial = ri;
            double ang = 1.0 / std::sqrt(L);
            if (parity != 0) ang = std::sqrt(2.0 / L) * (parity > 0 ? std::cos(k * src.theta_bar) : std::sin(k * src.theta_bar));
            if (ang == 0.0) continue;
            c.a.assign(base.size(), 0.0);
            c.b.resize(base.size());
            for (std::size_t q = 0; q < base.size(); ++q) c.b[q] = ang * base[q];
            w.comps.push_back(std::move(c));
        }
    }
    w.cert.terms = w.terms();
    return w;
}

double source_mass(const WaveState& w) {
    double m = 0;
    for (const auto& c : w.comps) {
        if (c.parity != 0) continue;
        const RadialMode& r = w.modes[c.radial];
        // The source is u_t(0) = sum b_k phi_k; int phi_k x dx = norm X J_1(z) / mu.
        for (std::size_t k = 0; k < r.size(); ++k)
            m += c.b[k] * r.norm[k] * r.X * boost::math::cyl_bessel_j(1.0, r.mu[k] * r.X) / r.mu[k];
    }
    return m * std::sqrt(w.L);
}

WaveState tangential_smooth(const WaveState& w, int N) {
    WaveState out = w;
    for (auto& c : out.comps) {
        const double f = std::pow(1.0 + c.k * c.k, -N);
        for (auto& v : c.a) v *= f;
        for (auto& v : c.b) v *= f;
    }
    return out;
}

// ---------------------------------------------------------------- exact kernels

double free_plane_kernel(double t, double d) {
    if (!(t > d)) return 0.0;
    return 1.0 / (kTwoPi * std::sqrt((t - d) * (t + d)));
}

namespace {

double plane_distance(double x, double th, double xb, double thb) {
    return std::sqrt(std::max(0.0, x * x + xb * xb - 2 * x * xb * std::cos(th - thb)));
}

}  // namespace

double image_kernel(int k, double t, double x, double th, double xb, double thb) {
    if (k < 1) throw ConfigError("image count must be at least 1");
    double acc = 0;
    for (int m = 0; m < k; ++m) acc += free_plane_kernel(t, plane_distance(x, th, xb, thb + kTwoPi * m / k));
    return acc;
}

double bessel_i0e(double z) {
    if (z < 0) z = -z;
    if (z < 500.0) return boost::math::cyl_bessel_i(0, z) * std::exp(-z);
    const double iz = 1.0 / z;
    const double series = 1.0 + iz * (1.0 / 8 + iz * (9.0 / 128 + iz * (225.0 / 3072 + iz * 11025.0 / 98304)));
    return series / std::sqrt(kTwoPi * z);
}

double mollified_plane_kernel(double t, double rho, double sigma) {
    if (!(t > 0)) return 0.0;
    const double span = 12.0 * sigma;
    const double rlo = std::max(0.0, rho - span), rhi = std::min(t, rho + span);
    if (!(rhi > rlo)) return 0.0;
    const double s2 = sigma * sigma;
    const double plo = std::asin(std::min(1.0, rlo / t)), phi_hi = std::asin(std::min(1.0, rhi / t));
    auto f = [&](double phi) {
        const double r = t * std::sin(phi);
        const double d = rho - r;
        return r * std::exp(-0.5 * d * d / s2) * bessel_i0e(rho * r / s2);
    };
    double err = 0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, plo, phi_hi, 12, 1e-11, &err);
    return v / (kTwoPi * s2);
}

double mollified_image_kernel(int k, double t, double x, double th, double xb, double thb, double sigma) {
    if (k < 1) throw ConfigError("image count must be at least 1");
    double acc = 0;
    for (int m = 0; m < k; ++m)
        acc += mollified_plane_kernel(t, plane_distance(x, th, xb, thb + kTwoPi * m / k), sigma);
    return acc;
}

}  // namespace conic
