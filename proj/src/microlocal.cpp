#include "conic/microlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>
#include <fftw3.h>

#include "conic/error.hpp"
#include "conic/flow.hpp"

namespace conic {

namespace {

double japanese(double t) { return std::sqrt(1.0 + t * t); }

/// Smooth step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s) {
    if (s <= 0) return 0.0;
    if (s >= 1) return 1.0;
    const double a = std::exp(-1.0 / s), b = std::exp(-1.0 / (1.0 - s));
    return a / (a + b);
}

std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

/// Real-to-complex transform of length M (FFTW_ESTIMATE plans are deterministic).
std::vector<std::complex<double>> rfft(std::vector<double> in) {
    const int M = static_cast<int>(in.size());
    std::vector<std::complex<double>> out(in.size() / 2 + 1);
    fftw_plan p = fftw_plan_dft_r2c_1d(M, in.data(), reinterpret_cast<fftw_complex*>(out.data()), FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    return out;
}

/// Inverse of rfft without the 1/M factor.
std::vector<double> irfft(std::vector<std::complex<double>> in, std::size_t M) {
    std::vector<double> out(M);
    fftw_plan p = fftw_plan_dft_c2r_1d(static_cast<int>(M), reinterpret_cast<fftw_complex*>(in.data()), out.data(),
                                       FFTW_ESTIMATE);
    fftw_execute(p);
    fftw_destroy_plan(p);
    return out;
}

void fbi_row(const TimeSeries& u, double tau, const FBIFrame& fr, std::complex<double>* out) {
    const double jt = japanese(tau);
    const double amp = fr.amplitude(tau);
    const std::size_t N = u.v.size();
    std::fill(out, out + N, std::complex<double>(0.0));
    if (amp == 0.0) return;
    const auto half = static_cast<long>(std::floor(fr.support / std::sqrt(jt) / u.dt));
    std::vector<std::complex<double>> k(static_cast<std::size_t>(2 * half + 1));
    for (long m = -half; m <= half; ++m) {
        const double s = static_cast<double>(m) * u.dt;
        k[static_cast<std::size_t>(m + half)] = amp * u.dt * std::exp(-0.5 * s * s * jt) * std::polar(1.0, s * tau);
    }
    const long n = static_cast<long>(N);
    for (long i = 0; i < n; ++i) {
        std::complex<double> acc = 0;
        const long lo = std::max(-half, i - n + 1), hi = std::min(half, i);
        for (long m = lo; m <= hi; ++m) acc += k[static_cast<std::size_t>(m + half)] * u.v[static_cast<std::size_t>(i - m)];
        out[i] = acc;
    }
}

void check_frame(const FBIFrame& fr, double dt) {
    if (!(dt > 0)) throw ConfigError("time series step must be positive");
    if (fr.tau.empty() || !(fr.dtau > 0)) throw ConfigError("empty FBI frequency grid");
    const double lim = FBIFrame::max_admissible_tau(dt);
    for (double t : fr.tau)
        if (std::abs(t) > lim) {
            std::ostringstream os;
            os << "FBI frequency " << std::abs(t) << " exceeds the admissible limit " << lim << " for dt = " << dt;
            throw ResolutionError(os.str());
        }
}

}  // namespace

// ---------------------------------------------------------------- FBI

FBIFrame FBIFrame::symmetric(double tau_max, double dtau) {
    if (!(dtau > 0) || !(tau_max > 1)) throw ConfigError("FBI grid needs tau_max > 1 and dtau > 0");
    FBIFrame f;
    f.dtau = dtau;
    std::vector<double> pos;
    for (double t = f.cutoff_lo + 0.5 * dtau; t <= tau_max + 1e-12; t += dtau) pos.push_back(t);
    for (auto it = pos.rbegin(); it != pos.rend(); ++it) f.tau.push_back(-*it);
    for (double t : pos) f.tau.push_back(t);
    return f;
}

double FBIFrame::amplitude(double tau) const {
    const double a = std::abs(tau);
    const double chi = smooth_step((a - cutoff_lo) / (cutoff_hi - cutoff_lo));
    if (chi == 0.0) return 0.0;
    // a^2 <tau>^{-1/2} 2 pi^{3/2} = 1 makes T*T the identity at high frequency.
    return std::sqrt(chi * std::sqrt(japanese(tau)) / (2.0 * std::pow(kPi, 1.5)));
}

double FBIFrame::max_admissible_tau(double dt) {
    const double nyq = kPi / dt;
    auto reach = [](double t) { return t + 6.0 * std::sqrt(japanese(t)); };
    double lo = 0, hi = nyq;
    if (reach(lo) >= nyq) return 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (reach(mid) < nyq ? lo : hi) = mid;
    }
    return lo;
}

FBIData fbi_transform(const TimeSeries& u, const FBIFrame& frame) {
    check_frame(frame, u.dt);
    FBIData F;
    F.nt = u.v.size();
    F.tau = frame.tau;
    F.v.assign(F.nt * F.tau.size(), 0.0);
    for (std::size_t i = 0; i < F.tau.size(); ++i) fbi_row(u, F.tau[i], frame, F.v.data() + i * F.nt);
    return F;
}

TimeSeries fbi_adjoint(const FBIData& F, const FBIFrame& frame, const TimeSeries& like) {
    check_frame(frame, like.dt);
    if (F.nt != like.v.size()) throw ConfigError("FBI data and target series differ in length");
    TimeSeries out{like.t0, like.dt, std::vector<double>(F.nt, 0.0)};
    const long n = static_cast<long>(F.nt);
    for (std::size_t r = 0; r < F.tau.size(); ++r) {
        const double tau = F.tau[r], jt = japanese(tau), amp = frame.amplitude(tau);
        if (amp == 0.0) continue;
        const auto half = static_cast<long>(std::floor(frame.support / std::sqrt(jt) / like.dt));
        std::vector<std::complex<double>> k(static_cast<std::size_t>(2 * half + 1));
        for (long m = -half; m <= half; ++m) {
            const double s = static_cast<double>(m) * like.dt;
            k[static_cast<std::size_t>(m + half)] =
                frame.dtau * amp * like.dt * std::exp(-0.5 * s * s * jt) * std::polar(1.0, -s * tau);
        }
        const std::complex<double>* row = F.v.data() + r * F.nt;
        // (T* F)(t') = sum_m conj(k(m)) F(t' + m dt).
        for (long i = 0; i < n; ++i) {
            std::complex<double> acc = 0;
            const long lo = std::max(-half, -i), hi = std::min(half, n - 1 - i);
            for (long m = lo; m <= hi; ++m) acc += k[static_cast<std::size_t>(m + half)] * row[i + m];
            out.v[static_cast<std::size_t>(i)] += acc.real();
        }
    }
    return out;
}

FBIData fbi_transform_scaled(const std::function<TimeSeries(double)>& sampler, const FBIFrame& frame, double x_tilde,
                             double x_max) {
    if (!(x_tilde > 0) || !(x_max > 0)) throw ConfigError("scaled FBI transform needs x_tilde > 0 and x_max > 0");
    FBIData F;
    F.tau = frame.tau;
    bool init = false;
    for (std::size_t r = 0; r < frame.tau.size(); ++r) {
        const double x = x_tilde / std::abs(frame.tau[r]);
        const double chi = 1.0 - smooth_step((x - 0.5 * x_max) / (0.5 * x_max));
        if (chi == 0.0) continue;
        const TimeSeries u = sampler(x);
        if (!init) {
            check_frame(frame, u.dt);
            F.nt = u.v.size();
            F.v.assign(F.nt * F.tau.size(), 0.0);
            init = true;
        }
        if (u.v.size() != F.nt) throw ConfigError("sampler returned series of varying length");
        fbi_row(u, frame.tau[r], frame, F.v.data() + r * F.nt);
        for (std::size_t i = 0; i < F.nt; ++i) F.v[r * F.nt + i] *= chi;
    }
    return F;
}

TimeSeries theta_smooth(const TimeSeries& u, double s, double radius) {
    if (!(u.dt > 0)) throw ConfigError("time series step must be positive");
    if (!(radius > 0)) throw ConfigError("kernel radius must be positive");
    const std::size_t N = u.v.size();
    const auto R = static_cast<std::size_t>(std::ceil(radius / u.dt));
    const std::size_t M = next_pow2(std::max(N + 2 * R + 1, 8 * (2 * R + 1)));
    // Kernel of <omega>^s on the periodic grid, then truncated by a bump equal to 1 near 0.
    std::vector<std::complex<double>> mult(M / 2 + 1);
    for (std::size_t q = 0; q <= M / 2; ++q) {
        const double w = kTwoPi * static_cast<double>(q) / (static_cast<double>(M) * u.dt);
        mult[q] = std::pow(japanese(w), s);
    }
    std::vector<double> k = irfft(mult, M);
    for (std::size_t m = 0; m < M; ++m) {
        const double d = static_cast<double>(std::min(m, M - m)) * u.dt;
        k[m] *= (1.0 - smooth_step((d / radius - 0.5) / 0.5)) / static_cast<double>(M);
    }
    std::vector<double> pad(M, 0.0);
    std::copy(u.v.begin(), u.v.end(), pad.begin());
    auto U = rfft(std::move(pad));
    const auto K = rfft(std::move(k));
    for (std::size_t q = 0; q < U.size(); ++q) U[q] *= K[q];
    const auto y = irfft(std::move(U), M);
    TimeSeries out{u.t0, u.dt, std::vector<double>(N)};
    for (std::size_t i = 0; i < N; ++i) out.v[i] = y[i] / static_cast<double>(M);
    return out;
}

// ---------------------------------------------------------------- Sobolev order

RegularityEstimate sobolev_estimate(const TimeSeries& u, double t_center, double half_width, double sigma,
                                    const ShellSpec& sh) {
    if (!(u.dt > 0) || u.v.size() < 8) throw ConfigError("time series too short");
    if (!(half_width > 0)) throw ConfigError("window half-width must be positive");
    if (sh.octaves < 1 || sh.per_octave < 1 || !(sh.omega0 > 0)) throw ConfigError("invalid shell specification");
    const double t_end = u.t(u.v.size() - 1);
    if (t_center - half_width < u.t0 - 1e-12 || t_center + half_width > t_end + 1e-12) {
        std::ostringstream os;
        os << "window [" << t_center - half_width << ", " << t_center + half_width << "] outside the series ["
           << u.t0 << ", " << t_end << "]";
        throw ResolutionError(os.str());
    }
    const double top = sh.omega0 * std::pow(2.0, sh.octaves);
    if (top >= kPi / u.dt) {
        std::ostringstream os;
        os << "top shell edge " << top << " exceeds the Nyquist frequency " << kPi / u.dt;
        throw ResolutionError(os.str());
    }
    std::vector<double> win;
    for (std::size_t i = 0; i < u.v.size(); ++i) {
        const double r = (u.t(i) - t_center) / half_width;
        if (std::abs(r) >= 1.0) continue;
        win.push_back(std::pow(1.0 - r * r, 8) * u.v[i]);
    }
    const std::size_t M = next_pow2(std::max<std::size_t>(8192, 4 * win.size()));
    win.resize(M, 0.0);
    const auto Y = rfft(std::move(win));
    const double dw = kTwoPi / (static_cast<double>(M) * u.dt);
    std::vector<double> P(Y.size());
    double p_ref = 0;
    for (std::size_t q = 0; q < Y.size(); ++q) {
        P[q] = std::norm(Y[q]) * u.dt * u.dt;
        p_ref = std::max(p_ref, P[q]);
    }

    RegularityEstimate est;
    est.t = t_center;
    est.window = half_width;
    const int nsh = sh.octaves * sh.per_octave;
    const double floor_rel = 1e-24;
    const double max_gain = 1e6;  // largest admissible mollifier correction
    std::vector<double> lx, ly;
    bool dropped = false;
    for (int i = 0; i < nsh; ++i) {
        const double lo = sh.omega0 * std::pow(2.0, static_cast<double>(i) / sh.per_octave);
        const double hi = sh.omega0 * std::pow(2.0, static_cast<double>(i + 1) / sh.per_octave);
        const double mid = std::sqrt(lo * hi);
        const auto q0 = static_cast<std::size_t>(std::ceil(lo / dw));
        const auto q1 = static_cast<std::size_t>(std::ceil(hi / dw));
        if (q1 < q0 + 2) throw ResolutionError("frequency shell narrower than two bins");
        double raw = 0, corr = 0;
        bool usable = true;
        for (std::size_t q = q0; q < q1; ++q) {
            const double w = dw * static_cast<double>(q);
            const double damp = std::exp(-sigma * sigma * w * w);
            if (1.0 / damp > max_gain) usable = false;
            raw += P[q];
            corr += P[q] / damp;
        }
        raw /= static_cast<double>(q1 - q0);
        corr /= static_cast<double>(q1 - q0);
        est.shell_omega.push_back(mid);
        est.shell_energy.push_back(corr);
        if (!usable) continue;
        if (!(raw > floor_rel * p_ref)) {
            dropped = true;
            continue;
        }
        if (dropped) continue;  // only the leading run of shells above the floor is fitted
        lx.push_back(std::log2(mid));
        ly.push_back(std::log2(corr));
    }
    if (lx.size() < 3) {
        if (dropped || p_ref == 0.0) {
            // Spectrum falls below roundoff inside the band: no singular content.
            est.smooth = true;
            est.s = est.ci_low = est.ci_high = std::numeric_limits<double>::infinity();
            return est;
        }
        throw ResolutionError("fewer than 3 usable frequency shells");
    }
    const double m = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    const double b = sxy / sxx, c = my - b * mx;
    double ssr = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double r = ly[i] - (c + b * lx[i]);
        ssr += r * r;
    }
    est.s = -0.5 * b - 0.5 * sh.d;
    est.residual = std::sqrt(ssr / m);
    const double dof = m - 2.0;
    const double se = dof > 0 ? std::sqrt(ssr / dof / sxx) : std::numeric_limits<double>::infinity();
    double tq = std::numeric_limits<double>::infinity();
    if (dof > 0) tq = boost::math::quantile(boost::math::students_t(dof), 0.975);
    est.ci_low = est.s - 0.5 * tq * se;
    est.ci_high = est.s + 0.5 * tq * se;
    est.smooth = est.s >= sh.s_cap;
    return est;
}

// ---------------------------------------------------------------- wavefront scan

const char* front_name(FrontClass c) {
    switch (c) {
        case FrontClass::smooth: return "smooth";
        case FrontClass::direct: return "direct";
        case FrontClass::diffracted: return "diffracted";
        case FrontClass::overlap: return "overlap";
        case FrontClass::anomaly: return "anomaly";
    }
    return "?";
}

std::size_t RegularityReport::anomalies() const { return count(FrontClass::anomaly); }

std::size_t RegularityReport::count(FrontClass c) const {
    return static_cast<std::size_t>(
        std::count_if(entries.begin(), entries.end(), [c](const ScanEntry& e) { return e.cls == c; }));
}

RegularityReport wavefront_scan(const WaveState& w, const std::vector<ProbePoint>& probes, const ScanOptions& opt) {
    if (!(opt.dt > 0) || !(opt.half_width > 0)) throw ConfigError("scan needs positive dt and half-width");
    RegularityReport rep;
    rep.entries.resize(probes.size());
    std::map<std::pair<double, double>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < probes.size(); ++i) groups[{probes[i].x, probes[i].theta}].push_back(i);
    const double a = opt.half_width, sigma = w.source.sigma;
    for (const auto& [key, idx] : groups) {
        double t_lo = std::numeric_limits<double>::infinity(), t_hi = -t_lo;
        for (std::size_t i : idx) {
            t_lo = std::min(t_lo, probes[i].t);
            t_hi = std::max(t_hi, probes[i].t);
        }
        t_lo -= a + 4 * opt.dt;
        t_hi += a + 4 * opt.dt;
        const auto n = static_cast<std::size_t>(std::ceil((t_hi - t_lo) / opt.dt)) + 1;
        std::vector<double> ts(n);
        for (std::size_t i = 0; i < n; ++i) ts[i] = t_lo + opt.dt * static_cast<double>(i);
        const TimeSeries u{t_lo, opt.dt, w.time_series(key.first, key.second, ts)};
        const auto direct = direct_distances(w.L, key.first, key.second, w.source.x_bar, w.source.theta_bar);
        const double diffr = diffracted_distance(key.first, w.source.x_bar);
        for (std::size_t i : idx) {
            ScanEntry& e = rep.entries[i];
            double peak = 0;
            for (std::size_t k = 0; k < n; ++k)
                if (std::abs(u.t(k) - probes[i].t) < a) peak = std::max(peak, std::abs(u.v[k]));
            if (peak < opt.noise_floor) {
                // Solver noise only: nothing to fit.
                e.est.t = probes[i].t;
                e.est.window = a;
                e.est.smooth = true;
                e.est.s = e.est.ci_low = e.est.ci_high = std::numeric_limits<double>::infinity();
            } else {
                e.est = sobolev_estimate(u, probes[i].t, a, sigma, opt.shells);
            }
            e.est.x = key.first;
            e.est.theta = key.second;
            e.direct_gap = std::numeric_limits<double>::infinity();
            const double te = probes[i].t - w.t_origin;
            for (double d : direct) e.direct_gap = std::min(e.direct_gap, std::abs(te - d));
            e.diffracted_gap = std::abs(te - diffr);
            if (e.est.smooth || e.est.s >= opt.threshold) {
                e.cls = FrontClass::smooth;
                continue;
            }
            const double reach = a + 6 * sigma;
            const bool nd = e.direct_gap <= reach, nf = e.diffracted_gap <= reach;
            e.cls = nd && nf ? FrontClass::overlap
                             : nd ? FrontClass::direct : nf ? FrontClass::diffracted : FrontClass::anomaly;
        }
    }
    return rep;
}

std::vector<double> weighted_norm_profile(const WaveState& w, double t, double alpha, const std::vector<double>& radii) {
    if (!(alpha < 1.0)) throw DomainError("weight exponent must be below 1 for the mass to be finite");
    std::vector<double> out;
    for (double r : radii) {
        if (!(r > 0) || r > w.X) throw DomainError("weighted-norm radius outside (0, X]");
        const auto panels = static_cast<std::size_t>(std::max(8.0, std::ceil(r * w.cert.mu_max / kPi)));
        std::vector<double> x, wt;
        radial_quadrature(w.n, r, panels, x, wt);
        const auto prof = w.component_profiles(t, x);
        double acc = 0;
        for (const auto& p : prof)
            for (std::size_t i = 0; i < x.size(); ++i) acc += wt[i] * std::pow(x[i], -2.0 * alpha) * p[i] * p[i];
        out.push_back(acc);
    }
    return out;
}

}  // namespace conic
