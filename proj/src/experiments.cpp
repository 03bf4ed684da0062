#include "conic/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "conic/commutators.hpp"
#include "conic/error.hpp"
#include "conic/flow.hpp"
#include "conic/geometry.hpp"
#include "conic/microlocal.hpp"
#include "conic/spectral.hpp"

namespace conic {

namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

double circ_dist(double a, double b, double P) {
    const double d = reduce_angle(a - b, P);
    return std::min(d, P - d);
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void require_round_product(const ConicMetric& m, const char* what) {
    if (!m.is_round() || !m.is_product())
        throw DomainError(std::string(what) + " requires a round product cone (metric.circumference, no perturbation)");
}

// ---------------------------------------------------------------- flow-validation

ExperimentResult flow_validation(const Config& c) {
    const ConicMetric m = metric_from_config(c);
    require_round_product(m, "the closed-form flow comparison");
    const long rays = c.integer("flow.rays", 16);
    const double span = c.num("flow.s_span", 1.2), rtol = c.num("flow.rtol", 1e-11);
    const double tol = c.num("tolerance.closed_form", 1e-8);
    if (rays < 1 || !(span > 0)) throw ConfigError("flow.rays must be >= 1 and flow.s_span > 0");
    const double L = m.period();
    FlowOptions opt;
    opt.rtol = opt.atol = rtol;
    opt.stop_at_exit = false;
    ExperimentResult r;
    Table summary{"rays", {"ray", "y0", "xi0", "eta0", "s_end", "max_rel_error", "p_drift"}, {}};
    Table traj{"trajectory", {"s", "t", "x", "y", "lambda", "xi", "eta", "x_exact", "xi_exact", "t_exact"}, {}};
    double worst = 0, pmax = 0;
    for (long k = 0; k < rays; ++k) {
        const double kd = static_cast<double>(k);
        EdgeCovector q;
        q.t = 0.0;
        q.x = 1.0;
        q.y = L * kd / static_cast<double>(rays);
        q.xi = -1.0 + 2.0 * (kd + 0.5) / static_cast<double>(rays);
        q.eta = 0.5 + 0.25 * static_cast<double>(k % 4);
        q.lam = (k % 2 ? -1.0 : 1.0) * std::hypot(q.xi, q.eta);
        // Model flow: xi = C tan(Cs + th), x = E sec, lambda = D sec, t' = -lambda x.
        const double C = std::abs(q.eta) / std::sqrt(m.h0(q.y)), th = std::atan(q.xi / C);
        const double E = q.x * std::cos(th), D = q.lam * std::cos(th);
        const double s_end = std::min(span, 0.8 * (0.5 * kPi - th) / C);
        const auto seg = integrate_flow(m, q, s_end, opt);
        std::array<double, 6> sup{}, err{};
        std::vector<std::array<double, 6>> ex(seg.s.size());
        for (std::size_t i = 0; i < seg.s.size(); ++i) {
            const double a = C * seg.s[i] + th, sec = 1.0 / std::cos(a), tn = std::tan(a);
            ex[i] = {q.t - D * E / C * (tn - std::tan(th)), E * sec, q.y + q.eta / m.h0(q.y) * seg.s[i], D * sec,
                     C * tn, q.eta};
            for (int j = 0; j < 6; ++j) sup[j] = std::max(sup[j], std::abs(ex[i][j]));
        }
        for (std::size_t i = 0; i < seg.s.size(); ++i) {
            const auto got = seg.q[i].array();
            for (int j = 0; j < 6; ++j) err[j] = std::max(err[j], std::abs(got[j] - ex[i][j]) / std::max(sup[j], 1e-300));
            if (k == 0)
                traj.rows.push_back({seg.s[i], got[0], got[1], got[2], got[3], got[4], got[5], ex[i][1], ex[i][4],
                                     ex[i][0]});
        }
        const double e = *std::max_element(err.begin(), err.end());
        worst = std::max(worst, e);
        pmax = std::max(pmax, seg.p_drift);
        summary.rows.push_back({kd, q.y, q.xi, q.eta, s_end, e, seg.p_drift});
    }
    r.tables = {summary, traj};
    r.info["max_rel_error"] = worst;
    r.info["max_p_drift"] = pmax;
    r.criteria.push_back(make_criterion("flow_closed_form", "max relative error of flow vs closed form", worst, 0, tol));
    return r;
}

// ---------------------------------------------------------------- geodesics

ExperimentResult geodesics(const Config& c) {
    const auto Ls = c.list("geodesics.circumferences", {1.5, kTwoPi, 4 * kPi, 9.0});
    const auto eps = c.list("geodesics.eps", {1e-2, 1e-3, 1e-4});
    const double y = c.num("geodesics.y", 0.0), rtol = c.num("geodesics.rtol", 1e-10);
    const double tol = c.num("tolerance.straightness", 1e-8);
    FlowOptions opt;
    opt.rtol = opt.atol = rtol;
    ExperimentResult r;
    Table st{"straightness", {"circumference", "max_deviation_rel", "samples"}, {}};
    double worst = 0;
    for (double L : Ls) {
        const double R = 5.0;
        const auto m = ConicMetric::circle(L, R);
        const EdgeCovector q = characteristic_covector(m, 0.0, 2.0, 0.4, -0.8, 0.9, 1);
        const auto seg = integrate_flow(m, q, 30.0, opt);
        const double X0 = q.x * std::cos(q.y), Y0 = q.x * std::sin(q.y);
        // Unrolled direction: dx/ds = xi x, x dtheta/ds = x eta / h.
        const double vx = q.xi * std::cos(q.y) - q.eta * std::sin(q.y);
        const double vy = q.xi * std::sin(q.y) + q.eta * std::cos(q.y);
        const double nv = std::hypot(vx, vy);
        double e = 0;
        for (const auto& p : seg.q) {
            const double X = p.x * std::cos(p.y) - X0, Y = p.x * std::sin(p.y) - Y0;
            e = std::max(e, std::abs(X * vy - Y * vx) / nv / R);
        }
        worst = std::max(worst, e);
        st.rows.push_back({L, e, static_cast<double>(seg.q.size())});
    }
    ConicMetric m = metric_from_config(c);
    if (!c.has("metric.circumference") && !c.has("metric.h0_samples")) m = ConicMetric::circle(4 * kPi, 2.0);
    if (!c.has("metric.x_max")) m.x_max = 2.0;
    Table nm{"near_miss", {"eps", "exit_theta_plus", "error_plus", "exit_theta_minus", "error_minus", "closest_x"}, {}};
    double prev = kInf;
    int nonmono = 0, inconclusive = 0;
    for (double e : eps) {
        const auto rp = near_miss_deflection(m, y, e, -1, opt);
        const auto rm = near_miss_deflection(m, y, -e, -1, opt);
        inconclusive += rp.inconclusive + rm.inconclusive;
        const double ep = std::abs(rp.exit_theta - (y + kPi)), em = std::abs(rm.exit_theta - (y - kPi));
        const double cur = std::max(ep, em);
        if (!(cur < prev)) ++nonmono;
        prev = cur;
        nm.rows.push_back({e, rp.exit_theta, ep, rm.exit_theta, em, rp.closest_x});
    }
    r.tables = {st, nm};
    r.info["max_straightness_deviation"] = worst;
    r.info["final_near_miss_error"] = prev;
    r.criteria.push_back(make_criterion("developing_map", "max deviation from unrolled straight lines / collar radius",
                                        worst, 0, tol));
    r.criteria.push_back(make_criterion("near_miss_monotone", "non-monotone steps of the near-miss exit error",
                                        static_cast<double>(nonmono + inconclusive), 0, 0));
    return r;
}

// ---------------------------------------------------------------- geodesic-relation

ExperimentResult relation(const Config& c) {
    ConicMetric m = metric_from_config(c);
    if (!c.has("metric.circumference") && !c.has("metric.h0_samples")) m = ConicMetric::circle(4 * kPi);
    const double y = c.num("relation.y", 0.7), t_bar = c.num("relation.t_bar", 2.0);
    const long rays = c.integer("relation.rays", 64);
    const double tol = c.num("tolerance.relation", 1e-12);
    const double P = m.period();
    ExperimentResult r;
    const auto got = geometric_continuations(m, y);
    std::vector<double> want;
    for (double sgn : {1.0, -1.0}) {
        const double v = reduce_angle(m.theta_at_arc(m.arc_length(y) + sgn * kPi), P);
        if (std::none_of(want.begin(), want.end(), [&](double w) { return circ_dist(w, v, P) < 1e-12; }))
            want.push_back(v);
    }
    double err = got.size() == want.size() ? 0.0 : kInf;
    Table ct{"continuations", {"y", "continuation", "nearest_expected_distance"}, {}};
    for (double g : got) {
        double d = kInf;
        for (double w : want) d = std::min(d, circ_dist(g, w, P));
        err = std::max(err, d);
        ct.rows.push_back({y, g, d});
    }
    for (double w : want) {
        double d = kInf;
        for (double g : got) d = std::min(d, circ_dist(g, w, P));
        err = std::max(err, d);
    }
    Table cov{"covering", {"ray", "y_in", "covered"}, {}};
    long missing = 0;
    for (long k = 0; k < rays; ++k) {
        const double yin = P * (static_cast<double>(k) + 0.37) / static_cast<double>(rays);
        bool covered = false;
        for (double yout : geometric_continuations(m, yin))
            for (const auto& in : gamma_relation(m, {t_bar, yout, 1, false}))
                covered = covered || (circ_dist(in.y, yin, P) < 1e-12 && in.t_bar == t_bar && in.incoming);
        missing += !covered;
        cov.rows.push_back({static_cast<double>(k), yin, covered ? 1.0 : 0.0});
    }
    Table lg{"limiting_geodesic", {"arc", "y_start", "y_end", "length"}, {}};
    const auto geo = limiting_geodesic(m, y, 1, 0.5 * m.x_max);
    for (std::size_t i = 0; i < geo.arcs.size(); ++i)
        lg.rows.push_back({static_cast<double>(i), geo.arcs[i].y_start, geo.arcs[i].y_end, geo.arcs[i].length});
    r.tables = {ct, cov, lg};
    r.info["continuation_error"] = err;
    r.info["limiting_geodesic_valid"] = geo.valid();
    r.criteria.push_back(make_criterion("continuations_exact", "distance between G(y) and {y+pi, y-pi}", err, 0, tol));
    r.criteria.push_back(make_criterion("covering", "incoming rays not covered by the diffraction relation",
                                        static_cast<double>(missing), 0, 0));
    return r;
}

// ---------------------------------------------------------------- normal-form

ExperimentResult normal_form_experiment(const Config& c) {
    const std::string ex = c.str("normal_form.example", "both");
    if (ex != "both" && ex != "symmetric" && ex != "cross")
        throw ConfigError("normal_form.example must be symmetric, cross or both");
    const long npts = c.integer("normal_form.points", 3);
    if (npts < 1) throw ConfigError("normal_form.points must be >= 1");
    ExperimentResult r;
    Table t{"normal_form", {"example", "rho", "v", "x", "y", "recovery_error", "residual_cross", "residual_radial"}, {}};
    if (ex != "cross") {
        const double a = c.num("normal_form.amplitude", 1.0), rmax = c.num("normal_form.rho_max", 0.2);
        CollarMetric cm;
        cm.rho_max = rmax;
        cm.h = [a](double rho, double) -> std::array<double, 3> { return {0.0, 0.0, (1 + a * rho) * (1 + a * rho)}; };
        NormalFormOptions o;
        o.diagnostics = false;
        double worst = 0;
        for (long i = 0; i < npts; ++i)
            for (double v : {0.0, 2.0}) {
                const double rho = rmax * (static_cast<double>(i) + 1.0) / (static_cast<double>(npts) + 1.0);
                const auto res = normal_form(cm, rho, v, o);
                const double e = std::max(std::abs(res.x - rho), circ_dist(res.y, v, cm.period));
                worst = std::max(worst, e);
                t.rows.push_back({0.0, rho, v, res.x, res.y, e, kNaN, kNaN});
            }
        r.info["symmetric_recovery_error"] = worst;
        r.criteria.push_back(make_criterion("symmetric_recovery", "max |(x, y) - (rho, theta)| on a symmetric collar",
                                            worst, 0, c.num("tolerance.recovery", 1e-8)));
    }
    if (ex != "symmetric") {
        const double a = ex == "cross" ? c.num("normal_form.amplitude", 0.1) : 0.1;
        const double rmax = ex == "cross" ? c.num("normal_form.rho_max", 0.1) : 0.1;
        CollarMetric cm;
        cm.rho_max = rmax;
        // g = drho^2 + a rho^3 drho dv + rho^2 dv^2.
        cm.h = [a](double rho, double) -> std::array<double, 3> { return {0.0, 0.5 * a * rho, 1.0}; };
        double worst = 0;
        for (long i = 0; i < npts; ++i)
            for (double v : {0.7, 2.5}) {
                const double rho = 0.8 * rmax * (static_cast<double>(i) + 1.0) / static_cast<double>(npts);
                const auto res = normal_form(cm, rho, v);
                worst = std::max(worst, res.residual_cross);
                t.rows.push_back({1.0, rho, v, res.x, res.y, kNaN, res.residual_cross, res.residual_radial});
            }
        r.info["max_residual_cross"] = worst;
        r.criteria.push_back(make_criterion("cross_term", "max cross term of the transformed metric", worst, 0,
                                            c.num("tolerance.cross_term", 1e-6)));
    }
    r.tables = {t};
    return r;
}

// ---------------------------------------------------------------- solve

double gauss(double x, double c0, double w) {
    const double s = (x - c0) / w;
    return std::exp(-s * s);
}

ExperimentResult solve(const Config& c) {
    const ConicMetric m = metric_from_config(c);
    const auto nus = c.list("solve.nu", {0.0, 0.25, 1.0, 2.0});
    const double X = c.num("solve.X", 4.0), T = c.num("solve.T", 1.0);
    const long K = c.integer("solve.K", 160), nx = c.integer("solve.nx", 3200), nout = c.integer("solve.outputs", 5);
    if (!(X > 0) || !(T > 0) || K < 4 || nx < 8 || nout < 2) throw ConfigError("invalid solve grid");
    // Data sit at x ~ 1.2; the Dirichlet wall at X stays out of reach while T < X - 1.2 - 3 * 0.3.
    if (!(T < X - 2.1)) {
        std::ostringstream os;
        os << "causal margin violated: solve.T=" << T << " needs solve.X > " << T + 2.1;
        throw CausalityError(os.str());
    }
    ExperimentResult r;
    Table modes{"modes", {"nu", "energy0", "max_mode_energy_drift", "fd_rel_error", "fd_energy_drift"}, {}};
    Table prof{"profiles", {"nu", "x", "spectral", "fd"}, {}};
    double drift = 0, fd_err = 0;
    for (double nu : nus) {
        if (nu < 0) throw ConfigError("solve.nu entries must be >= 0");
        auto u0 = [nu](double x) { return std::pow(x, nu) * gauss(x, 1.2, 0.25); };
        auto u1 = [](double x) { return 0.5 * gauss(x, 1.0, 0.3); };
        const auto basis = RadialMode::build(m.n, nu, X, static_cast<std::size_t>(K));
        const auto ev = evolve_mode_spectral(basis, u0, u1, 1e-8);
        const auto e0 = ev.mode_energy(0.0);
        double d = 0;
        for (long i = 1; i < nout; ++i) {
            const double t = T * static_cast<double>(i) / static_cast<double>(nout - 1);
            const auto e = ev.mode_energy(t);
            for (std::size_t k = 0; k < e.size(); ++k) d = std::max(d, std::abs(e[k] - e0[k]) / std::max(e0[k], 1e-300));
        }
        FDGrid g;
        g.X = X;
        g.nx = static_cast<std::size_t>(nx);
        const auto f = evolve_mode_fd(m.n, nu, u0, u1, g, T, static_cast<std::size_t>(nout));
        const std::size_t last = f.t.size() - 1;
        double num = 0, den = 0;
        for (std::size_t i = 0; i < f.x.size(); ++i) {
            const double s = ev.value(T, f.x[i]);
            const double w = std::pow(f.x[i], m.n - 1);
            num += (f.at(last, i) - s) * (f.at(last, i) - s) * w;
            den += s * s * w;
            if (i % 8 == 0) prof.rows.push_back({nu, f.x[i], s, f.at(last, i)});
        }
        const double rel = std::sqrt(num / den);
        double fdd = 0;
        for (double e : f.energy) fdd = std::max(fdd, std::abs(e - f.energy.front()) / std::abs(f.energy.front()));
        modes.rows.push_back({nu, ev.energy(0.0), d, rel, fdd});
        drift = std::max(drift, d);
        fd_err = std::max(fd_err, rel);
    }
    r.tables = {modes, prof};
    r.info["max_mode_energy_drift"] = drift;
    r.info["max_fd_rel_error"] = fd_err;
    r.criteria.push_back(make_criterion("energy_drift", "max per-mode spectral energy drift (relative)", drift, 0,
                                        c.num("tolerance.energy_drift", 1e-10)));
    r.criteria.push_back(make_criterion("fd_agreement", "max L2 relative difference FD vs spectral", fd_err, 0,
                                        c.num("tolerance.fd_agreement", 1e-3)));
    return r;
}

// ---------------------------------------------------------------- shared wave setup

struct WaveSetup {
    double L;
    SourceSpec src;
    SolverGrids grids;
};

WaveSetup wave_setup(const Config& c, double sigma_default) {
    const ConicMetric m = metric_from_config(c);
    require_round_product(m, "the spectral wave solver");
    WaveSetup s;
    s.L = m.period();
    s.src.x_bar = c.num("source.x_bar", 1.0);
    s.src.theta_bar = c.num("source.theta_bar", 0.0);
    s.src.sigma = c.num("source.sigma", sigma_default);
    s.grids.X_max = c.num("grids.X_max", 4.0);
    s.grids.tol = c.num("grids.tol", 1e-8);
    s.grids.margin_sigmas = c.num("grids.margin_sigmas", 8.0);
    return s;
}

nlohmann::json certificate_json(const WaveState& w) {
    nlohmann::json j;
    j["j_max"] = w.cert.j_max;
    j["mu_max"] = w.cert.mu_max;
    j["radial_tail"] = w.cert.radial_tail;
    j["angular_tail"] = w.cert.angular_tail;
    j["terms"] = w.cert.terms;
    j["grid_limited"] = w.cert.grid_limited;
    j["convention_constant"] = w.convention_constant;
    return j;
}

/// Per-component energy drift between t = 0 and t, relative to the total.
double energy_drift(const WaveState& w, double t) {
    const auto a = w.mode_energies(0.0), b = w.mode_energies(t);
    double tot = 0, d = 0;
    for (double e : a) tot += e;
    for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return tot > 0 ? d / tot : 0.0;
}

/// Oracle value for L = 2 pi / k: k-image sum of mollified free kernels (k = 1 is the plane).
int image_count(double L) {
    const double k = kTwoPi / L;
    const double kr = std::round(k);
    return (kr >= 1 && std::abs(k - kr) < 1e-12) ? static_cast<int>(kr) : 0;
}

double l2_oracle_error(const WaveState& w, const Field2D& f, double t, int k) {
    double num = 0, den = 0;
    const auto& g = f.grid;
    for (std::size_t i = 0; i < g.nx; ++i) {
        const double x = g.x(i);
        if (x <= 0) continue;
        for (std::size_t j = 0; j < g.ntheta; ++j) {
            const double e = mollified_image_kernel(k, t, x, g.theta(j), w.source.x_bar, w.source.theta_bar,
                                                    w.source.sigma);
            const double v = f.at(i, j);
            num += (v - e) * (v - e) * x;
            den += e * e * x;
        }
    }
    return den > 0 ? std::sqrt(num / den) : kInf;
}

// ---------------------------------------------------------------- fundamental

/// Every fourth grid line; secondary checks run on this grid.
PolarGrid coarse(const PolarGrid& g) {
    PolarGrid c = g;
    c.nx = (g.nx - 1) / 4 + 1;
    c.dx = 4 * g.dx;
    c.ntheta = std::max<std::size_t>(4, g.ntheta / 4);
    return c;
}

ExperimentResult fundamental(const Config& c) {
    const WaveSetup s = wave_setup(c, 0.05);
    const double T = c.num("fundamental.T", 1.5);
    const auto times = c.list("fundamental.times", {T});
    const long nx = c.integer("fundamental.nx", 256), nth = c.integer("fundamental.ntheta", 256);
    if (nx < 2 || nth < 4) throw ConfigError("fundamental.nx >= 2 and fundamental.ntheta >= 4 required");
    for (double t : times)
        if (!(t >= 0 && t <= T)) throw ConfigError("fundamental.times must lie in [0, fundamental.T]");
    const std::string oracle = c.str("fundamental.oracle", "auto");
    if (oracle != "auto" && oracle != "none" && oracle != "plane" && oracle != "images")
        throw ConfigError("fundamental.oracle must be auto, none, plane or images");
    int k = 0;
    if (oracle != "none") {
        k = image_count(s.L);
        if (oracle == "plane" && k != 1) throw DomainError("plane oracle needs circumference 2 pi");
        if (oracle == "images" && k < 1) throw DomainError("image oracle needs circumference 2 pi / k");
    }
    const WaveState w = fundamental_solution(s.L, s.src, s.grids, T);
    ExperimentResult r;
    r.info["certificate"] = certificate_json(w);
    r.info["source_mass"] = source_mass(w);
    const double drift = energy_drift(w, T);
    r.info["energy_drift"] = drift;
    PolarGrid pg;
    pg.x0 = 0.0;
    pg.nx = static_cast<std::size_t>(nx);
    pg.dx = s.grids.X_max / static_cast<double>(nx - 1);
    pg.ntheta = static_cast<std::size_t>(nth);
    pg.period = s.L;
    Table errs{"oracle_errors", {"t", "l2_rel_error"}, {}};
    Table loci{"loci", {"t", "theta", "x_direct_near", "x_direct_far", "x_diffracted"}, {}};
    double worst = 0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const Field2D f = w.snapshot(t, pg);
        RawArray a;
        a.name = "snapshot_" + std::to_string(i);
        a.shape = {pg.nx, pg.ntheta};
        std::ostringstream ax, at;
        ax << "x in [0, " << format_double(s.grids.X_max) << "], " << pg.nx << " points";
        at << "theta in [0, " << format_double(s.L) << "), " << pg.ntheta << " points";
        a.axes = {ax.str(), at.str()};
        a.units = "field value at t = " + format_double(t);
        a.data = f.v;
        r.arrays.push_back(std::move(a));
        if (k > 0) {
            const double e = l2_oracle_error(w, f, t, k);
            errs.rows.push_back({t, e});
            worst = std::max(worst, e);
        }
        // Direct front: points at straight-line distance t from the source, one arc per image.
        const double xb = s.src.x_bar;
        for (std::size_t j = 0; j < 4 * pg.ntheta; ++j) {
            const double th = s.L * static_cast<double>(j) / static_cast<double>(4 * pg.ntheta);
            double near = kNaN, far = kNaN;
            for (int m = -8; m <= 8; ++m) {
                const double a = reduce_angle(th - s.src.theta_bar + kPi, s.L) - kPi + m * s.L;
                if (std::abs(a) > kPi) continue;
                const double disc = t * t - xb * xb * std::sin(a) * std::sin(a);
                if (disc < 0) continue;
                const double x1 = xb * std::cos(a) + std::sqrt(disc), x2 = xb * std::cos(a) - std::sqrt(disc);
                if (x1 > 0) near = std::isnan(near) ? x1 : std::min(near, x1);
                if (x2 > 0) far = x2;
            }
            loci.rows.push_back({t, th, near, far, t > xb ? t - xb : kNaN});
        }
    }
    r.tables = {errs, loci};
    r.criteria.push_back(make_criterion("energy_drift", "per-component energy drift over [0, T] relative to total",
                                        drift, 0, c.num("tolerance.energy_drift", 1e-10)));
    if (k > 0) {
        r.info["oracle_images"] = k;
        r.criteria.push_back(make_criterion(k == 1 ? "plane_oracle" : "image_oracle",
                                            "L2 relative error against the mollified exact kernel", worst, 0,
                                            c.num("tolerance.oracle", 1e-2)));
    }
    const auto tols = c.list("fundamental.refine_tols", {});
    if (!tols.empty()) {
        if (k == 0) throw ConfigError("fundamental.refine_tols needs an exact oracle (circumference 2 pi / k)");
        Table ref{"refinement", {"tol", "mu_max", "j_max", "terms", "l2_rel_error"}, {}};
        int bad = 0;
        double prev = kInf;
        const double t = times.back();
        const PolarGrid cg = coarse(pg);
        for (double tol : tols) {
            SolverGrids g = s.grids;
            g.tol = tol;
            const WaveState wr = fundamental_solution(s.L, s.src, g, T);
            const double e = l2_oracle_error(wr, wr.snapshot(t, cg), t, k);
            ref.rows.push_back({tol, wr.cert.mu_max, static_cast<double>(wr.cert.j_max),
                                static_cast<double>(wr.cert.terms), e});
            bad += !(e < prev);
            prev = e;
        }
        r.tables.push_back(ref);
        r.criteria.push_back(make_criterion("refinement_monotone",
                                            "refinement steps where the oracle error fails to decrease",
                                            static_cast<double>(bad), 0, 0));
    }
    if (c.has("fundamental.wall_X")) {
        SolverGrids g = s.grids;
        g.X_max = c.num("fundamental.wall_X");
        const WaveState w2 = fundamental_solution(s.L, s.src, g, T);
        const double X = std::min(s.grids.X_max, g.X_max), margin = s.grids.margin_sigmas * s.src.sigma;
        const PolarGrid cg = coarse(pg);
        double diff = 0, scale = 0;
        std::size_t used = 0;
        for (double t : times) {
            const Field2D f1 = w.snapshot(t, cg), f2 = w2.snapshot(t, cg);
            for (std::size_t i = 0; i < cg.nx; ++i) {
                const double x = cg.x(i);
                // Reflections from the nearer wall reach x only after 2 X - x_bar - x.
                if (!(t < 2 * X - s.src.x_bar - x - margin) || x >= X) continue;
                for (std::size_t j = 0; j < cg.ntheta; ++j) {
                    diff = std::max(diff, std::abs(f1.at(i, j) - f2.at(i, j)));
                    scale = std::max(scale, std::abs(f1.at(i, j)));
                    ++used;
                }
            }
        }
        const double rel = scale > 0 ? diff / scale : kInf;
        r.info["wall_protected_points"] = used;
        r.info["wall_difference"] = rel;
        r.criteria.push_back(make_criterion("wall_independence", "max difference between walls at protected points",
                                            rel, 0, c.num("tolerance.wall", 1e-10)));
    }
    return r;
}

// ---------------------------------------------------------------- regularity

Table report_table(const RegularityReport& rep, const std::string& name) {
    Table t{name, {"t", "x", "theta", "s", "ci_low", "ci_high", "residual", "smooth", "class", "direct_gap",
                   "diffracted_gap"}, {}};
    for (const auto& e : rep.entries)
        t.rows.push_back({e.est.t, e.est.x, e.est.theta, e.est.s, e.est.ci_low, e.est.ci_high, e.est.residual,
                          e.est.smooth ? 1.0 : 0.0, static_cast<double>(static_cast<int>(e.cls)), e.direct_gap,
                          e.diffracted_gap});
    return t;
}

Table shell_table(const RegularityReport& rep, const std::string& name) {
    Table t{name, {"probe", "omega", "corrected_energy"}, {}};
    for (std::size_t i = 0; i < rep.entries.size(); ++i)
        for (std::size_t k = 0; k < rep.entries[i].est.shell_omega.size(); ++k)
            t.rows.push_back({static_cast<double>(i), rep.entries[i].est.shell_omega[k],
                              rep.entries[i].est.shell_energy[k]});
    return t;
}

ScanOptions scan_options(const Config& c) {
    ScanOptions o;
    o.half_width = c.num("regularity.half_width", 0.4);
    o.dt = c.num("regularity.dt", 0.0025);
    o.threshold = c.num("regularity.threshold", 2.0);
    o.noise_floor = c.num("regularity.noise_floor", 1e-6);
    return o;
}

ExperimentResult regularity_probes(const Config& c) {
    const WaveSetup s = wave_setup(c, 0.02);
    const double T = c.num("regularity.T", 2.5);
    const auto xs = c.list("regularity.x", {0.5, 1.5});
    const auto ths = c.list("regularity.theta", {0.0, kPi});
    const auto ts = c.list("regularity.t", {1.0, 2.0});
    std::vector<ProbePoint> probes;
    for (double x : xs)
        for (double th : ths)
            for (double t : ts) probes.push_back({t, x, th});
    ExperimentResult r;
    RegularityReport rep;
    if (!probes.empty()) {
        const WaveState w = fundamental_solution(s.L, s.src, s.grids, T);
        rep = wavefront_scan(w, probes, scan_options(c));
        r.info["certificate"] = certificate_json(w);
    }
    r.tables = {report_table(rep, "regularity"), shell_table(rep, "shells")};
    r.info["probes"] = probes.size();
    r.criteria.push_back(make_criterion("anomalies", "singular detections off both predicted loci",
                                        static_cast<double>(rep.anomalies()), 0, 0));
    return r;
}

ExperimentResult regularity_fronts(const Config& c) {
    const WaveSetup s = wave_setup(c, 0.02);
    const double T = c.num("regularity.T", 3.0);
    const double xb = s.src.x_bar, thb = s.src.theta_bar;
    if (!(xb > 0)) throw ConfigError("front layout needs source.x_bar > 0");
    const WaveState w = fundamental_solution(s.L, s.src, s.grids, T);
    const ScanOptions opt = scan_options(c);
    const auto xs = c.list("regularity.x", {0.6, 0.9, 1.2});
    // Direct probes sit on the ray through the source; diffracted probes in the shadow opposite it.
    // On the plane the opposite ray carries the direct front too, so those probes move off it.
    const double shadow = thb + 0.5 * s.L;
    const bool diffractive = s.L > kTwoPi + 1e-9;
    std::vector<ProbePoint> dprobes, fprobes;
    for (double x : xs) {
        dprobes.push_back({std::abs(x - xb), x, thb});
        fprobes.push_back({x + xb, x, diffractive ? shadow : thb + 0.5});
    }
    for (const auto& p : fprobes)
        if (p.t + opt.half_width > T) throw ConfigError("regularity.T too small for the diffracted probes");
    const auto rd = wavefront_scan(w, dprobes, opt);
    const auto rf = wavefront_scan(w, fprobes, opt);
    ExperimentResult r;
    r.info["certificate"] = certificate_json(w);
    r.tables = {report_table(rd, "direct_front"), report_table(rf, "diffracted_front"),
                shell_table(rd, "direct_shells"), shell_table(rf, "diffracted_shells")};
    std::vector<double> sd, sf;
    for (const auto& e : rd.entries) sd.push_back(e.est.s);
    for (const auto& e : rf.entries) sf.push_back(e.est.s);
    const double s_direct = median(sd), s_diff = median(sf);
    r.info["s_direct"] = s_direct;
    r.info["s_diffracted"] = s_diff;
    r.criteria.push_back(make_criterion("anomalies", "singular detections off both predicted loci",
                                        static_cast<double>(rd.anomalies() + rf.anomalies()), 0, 0));
    if (!diffractive) {
        r.criteria.push_back(make_criterion("no_diffraction", "diffracted-locus detections on a flat plane",
                                            static_cast<double>(rf.count(FrontClass::diffracted)), 0, 0));
        return r;
    }
    r.criteria.push_back(make_criterion("s_diffracted", "median local Sobolev order on the diffracted front", s_diff,
                                        c.num("tolerance.s_diff_lo", 0.35), c.num("tolerance.s_diff_hi", 0.65)));
    r.criteria.push_back(make_criterion("regularity_gap", "s_diffracted - s_direct", s_diff - s_direct,
                                        c.num("tolerance.gap_lo", 0.3), c.num("tolerance.gap_hi", 0.7)));
    // Jump across x = t - x_bar at fixed x, along the shadow.
    const double x_j = xs.back(), t_j = x_j + xb, d = 6 * s.src.sigma;
    const auto jt = c.list("regularity.jump_theta", {-0.8, -0.4, 0.0, 0.4, 0.8});
    Table jump{"jump", {"theta", "before", "after", "jump"}, {}};
    double amax = 0, vmax = 0, amin = kInf;
    std::vector<double> amps;
    for (double dth : jt) {
        const double th = shadow + dth;
        for (double img : direct_distances(s.L, x_j, th, xb, thb))
            if (std::abs(img - t_j) < d + opt.half_width) throw ConfigError("regularity.jump_theta leaves the shadow");
        const auto v = w.time_series(x_j, th, {t_j - d, t_j + d});
        const double A = v[1] - v[0];
        jump.rows.push_back({th, v[0], v[1], A});
        amps.push_back(A);
        amax = std::max(amax, std::abs(A));
        amin = std::min(amin, std::abs(A));
    }
    for (std::size_t i = 1; i < amps.size(); ++i) vmax = std::max(vmax, std::abs(amps[i] - amps[i - 1]));
    r.tables.push_back(jump);
    r.info["jump_max"] = amax;
    r.criteria.push_back(make_criterion("jump_present", "smallest jump across the diffracted front", amin,
                                        10 * opt.noise_floor, kInf));
    r.criteria.push_back(make_criterion("jump_continuity", "largest jump change between neighbours / largest jump",
                                        amax > 0 ? vmax / amax : kInf, 0, c.num("tolerance.jump_variation", 0.25)));
    const long N = c.integer("regularity.smoothing_N", 0);
    if (N > 0) {
        // Incoming front seen off the source ray, where its conormal has an angular component.
        std::vector<ProbePoint> ip;
        for (double x : xs) {
            const double th = thb + 0.6;
            const auto dd = direct_distances(s.L, x, th, xb, thb);
            if (!dd.empty()) ip.push_back({*std::min_element(dd.begin(), dd.end()), x, th});
        }
        const auto raw = wavefront_scan(w, ip, opt);
        const auto smo = wavefront_scan(tangential_smooth(w, static_cast<int>(N)), ip, opt);
        std::vector<double> a, b;
        for (const auto& e : raw.entries) a.push_back(e.est.s);
        for (const auto& e : smo.entries) b.push_back(std::isfinite(e.est.s) ? e.est.s : 4.0);
        r.tables.push_back(report_table(raw, "incoming_raw"));
        r.tables.push_back(report_table(smo, "incoming_smoothed"));
        const double gain = median(b) - median(a);
        r.info["smoothing_gain"] = gain;
        if (c.has("tolerance.smoothing_gain"))
            r.criteria.push_back(make_criterion("smoothing_gain", "order gained by tangential smoothing", gain,
                                                c.num("tolerance.smoothing_gain"), kInf));
    }
    return r;
}

ExperimentResult regularity_diffractive(const Config& c) {
    WaveSetup s = wave_setup(c, 0.02);
    if (c.has("source.x_bar") && s.src.x_bar != 0.0) throw ConfigError("diffractive layout places the source at the tip");
    s.src.x_bar = 0.0;
    const double t0 = c.num("regularity.shift", 1.5), T = c.num("regularity.T", 2.5);
    if (!(t0 > 0)) throw ConfigError("regularity.shift must be positive");
    const ScanOptions opt = scan_options(c);
    const WaveState w = fundamental_solution(s.L, s.src, s.grids, T + t0 + opt.half_width);
    const auto xs = c.list("regularity.x", {0.1, 0.2, 0.3});
    const auto ths = c.list("regularity.theta", {0.0, 0.5 * s.L});
    std::vector<double> ts = c.list("regularity.t", {});
    if (ts.empty())
        for (int i = 0; i <= 20; ++i) ts.push_back(T * i / 20.0);
    std::vector<ProbePoint> probes;
    for (double x : xs)
        for (double th : ths)
            for (double t : ts) probes.push_back({t, x, th});
    // Outgoing: at t = 0 the front is the sphere of radius t0 moving away from the tip.
    const auto out = wavefront_scan(w.time_shifted(t0), probes, opt);
    // Incoming: the same pulse reversed, focusing on the tip at t = t0.
    const auto in = wavefront_scan(w.time_shifted(-t0), probes, opt);
    std::size_t out_singular = 0, in_detect = 0, in_stray = 0;
    const double reach = opt.half_width + 6 * s.src.sigma;
    for (const auto& e : out.entries) out_singular += !(e.est.smooth || e.est.s >= opt.shells.s_cap);
    for (std::size_t i = 0; i < in.entries.size(); ++i) {
        const auto& e = in.entries[i];
        if (e.est.smooth || e.est.s >= opt.threshold) continue;
        ++in_detect;
        const double x = probes[i].x, t = probes[i].t;
        if (std::abs(t - (t0 - x)) > reach && std::abs(t - (t0 + x)) > reach) ++in_stray;
    }
    ExperimentResult r;
    r.info["certificate"] = certificate_json(w);
    r.tables = {report_table(out, "outgoing"), report_table(in, "incoming")};
    r.info["incoming_detections"] = in_detect;
    r.criteria.push_back(make_criterion("outgoing_smooth", "near-tip probes below s_cap for the outgoing pulse",
                                        static_cast<double>(out_singular), 0, 0));
    r.criteria.push_back(make_criterion("incoming_detected", "near-tip singular detections for the incoming pulse",
                                        static_cast<double>(in_detect), 1, kInf));
    r.criteria.push_back(make_criterion("incoming_timing", "incoming detections outside arrival time +- window",
                                        static_cast<double>(in_stray), 0, 0));
    return r;
}

ExperimentResult regularity(const Config& c) {
    const std::string layout = c.str("regularity.layout", "fronts");
    if (layout == "fronts") return regularity_fronts(c);
    if (layout == "probes") return regularity_probes(c);
    if (layout == "diffractive") return regularity_diffractive(c);
    throw ConfigError("regularity.layout must be fronts, probes or diffractive");
}

// ---------------------------------------------------------------- commutators

ExperimentResult commutators(const Config& c) {
    ConicMetric m = metric_from_config(c);
    if (!c.has("metric.x_max")) m.x_max = 1.0;
    const long n0 = c.integer("commutators.n0", 32), levels = c.integer("commutators.levels", 3);
    if (n0 < 8 || levels < 2) throw ConfigError("commutators.n0 >= 8 and commutators.levels >= 2 required");
    const auto st = commutator_study(m, static_cast<std::size_t>(n0), static_cast<int>(levels));
    ExperimentResult r;
    Table t{"residuals", {"h", "box_lap", "box_R"}, {}};
    for (std::size_t i = 0; i < st.h.size(); ++i) t.rows.push_back({st.h[i], st.box_lap[i], st.box_R[i]});
    r.tables = {t};
    const double otol = c.num("tolerance.order", 0.3), round = c.num("tolerance.roundoff", 1e-10);
    auto worst_order = [](const std::vector<double>& o) {
        double w = 0;
        for (double v : o) w = std::max(w, std::abs(v - 2.0));
        return w;
    };
    const double lap_max = *std::max_element(st.box_lap.begin(), st.box_lap.end());
    r.info["orders_lap"] = st.order_lap;
    r.info["orders_R"] = st.order_R;
    if (m.is_product()) {
        r.criteria.push_back(make_criterion("order_R", "max |order - 2| of the scaling commutator residual",
                                            worst_order(st.order_R), 0, otol));
        if (lap_max <= round)
            r.criteria.push_back(make_criterion("lap_roundoff", "max [Box, Delta_Y] residual (exact commutation)",
                                                lap_max, 0, round));
        else
            r.criteria.push_back(make_criterion("order_lap", "max |order - 2| of the [Box, Delta_Y] residual",
                                                worst_order(st.order_lap), 0, otol));
    } else {
        const double last = st.box_lap.back(), ratio = st.box_lap[st.box_lap.size() - 2] / last;
        r.criteria.push_back(make_criterion("lap_floor", "finest [Box, Delta_Y] residual on the perturbed metric", last,
                                            c.num("tolerance.floor", 1e-3), kInf));
        r.criteria.push_back(make_criterion("lap_floor_stable", "ratio of the last two residuals", ratio, 1.0 / 1.5, 1.5));
    }
    return r;
}

// ---------------------------------------------------------------- persistence

nlohmann::json num_json(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

nlohmann::json criterion_json(const Criterion& c) {
    return {{"id", c.id}, {"description", c.description}, {"value", num_json(c.value)},
            {"lo", num_json(c.lo)}, {"hi", num_json(c.hi)}, {"pass", c.pass}};
}

double json_num(const nlohmann::json& j) {
    if (j.is_number()) return j.get<double>();
    const std::string s = j.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return kNaN;
}

void write_table(const std::string& dir, const Table& t, const std::string& format) {
    if (format == "csv") {
        write_csv((fs::path(dir) / (t.name + ".csv")).string(), t);
        return;
    }
    nlohmann::json j;
    j["name"] = t.name;
    j["columns"] = t.columns;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : t.rows) {
        nlohmann::json r = nlohmann::json::array();
        for (double v : row) r.push_back(num_json(v));
        j["rows"].push_back(r);
    }
    std::ofstream((fs::path(dir) / (t.name + ".json")).string()) << j.dump(1) << "\n";
}

Table read_table(const std::string& dir, const std::string& file) {
    std::ifstream in((fs::path(dir) / file).string());
    if (!in) throw IntegrityError("missing table file '" + file + "'");
    Table t;
    t.name = fs::path(file).stem().string();
    if (fs::path(file).extension() == ".json") {
        const auto j = nlohmann::json::parse(in);
        t.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& row : j.at("rows")) {
            std::vector<double> r;
            for (const auto& v : row) r.push_back(json_num(v));
            t.rows.push_back(r);
        }
        return t;
    }
    std::string line;
    std::getline(in, line);
    std::stringstream hs(line);
    for (std::string c; std::getline(hs, c, ',');) t.columns.push_back(c);
    while (std::getline(in, line)) {
        std::vector<double> r;
        std::stringstream ls(line);
        for (std::string c; std::getline(ls, c, ',');)
            r.push_back(c == "nan" ? kNaN : c == "inf" ? kInf : c == "-inf" ? -kInf : std::stod(c));
        t.rows.push_back(r);
    }
    return t;
}

void prepare_dir(const std::string& dir) {
    if (fs::exists(dir)) {
        if (!fs::is_directory(dir)) throw ConfigError("output path '" + dir + "' is not a directory");
        if (fs::is_empty(dir)) return;
        if (!fs::exists(fs::path(dir) / "manifest.json"))
            throw ConfigError("output directory '" + dir + "' is not empty and holds no earlier run");
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file()) fs::remove(e.path());
        return;
    }
    fs::create_directories(dir);
}

void write_manifest(const std::string& dir, const RunManifest& m) {
    std::ofstream((fs::path(dir) / "manifest.json").string()) << manifest_json(m).dump(2) << "\n";
}

}  // namespace

Criterion make_criterion(const std::string& id, const std::string& description, double value, double lo, double hi) {
    Criterion c{id, description, value, lo, hi, false};
    c.pass = !std::isnan(value) && value >= lo && value <= hi;
    return c;
}

bool ExperimentResult::passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

const Table* ExperimentResult::table(const std::string& name) const {
    for (const auto& t : tables)
        if (t.name == name) return &t;
    return nullptr;
}

const Criterion* ExperimentResult::criterion(const std::string& id) const {
    for (const auto& c : criteria)
        if (c.id == id) return &c;
    return nullptr;
}

bool RunManifest::passed() const {
    return std::all_of(criteria.begin(), criteria.end(), [](const Criterion& c) { return c.pass; });
}

std::string library_version() { return "1.0.0"; }

std::string kind_for_subcommand(const std::string& sub) {
    if (sub == "flow") return "flow-validation";
    if (sub == "geodesics") return "geodesics";
    if (sub == "relation") return "geodesic-relation";
    if (sub == "normal-form" || sub == "solve" || sub == "fundamental" || sub == "regularity" || sub == "commutators")
        return sub;
    return "";
}

ExperimentResult run_experiment(const Config& c) {
    validate_schema(c);
    const std::string kind = c.str("experiment.kind");
    ExperimentResult r;
    if (kind == "flow-validation") r = flow_validation(c);
    else if (kind == "geodesics") r = geodesics(c);
    else if (kind == "geodesic-relation") r = relation(c);
    else if (kind == "normal-form") r = normal_form_experiment(c);
    else if (kind == "solve") r = solve(c);
    else if (kind == "fundamental") r = fundamental(c);
    else if (kind == "regularity") r = regularity(c);
    else r = commutators(c);
    r.kind = kind;
    return r;
}

nlohmann::json manifest_json(const RunManifest& m) {
    nlohmann::json j;
    j["kind"] = m.kind;
    j["name"] = m.name;
    j["config_hash"] = m.config_hash;
    j["format"] = m.format;
    j["versions"] = {{"conic", m.version}, {"manifest_schema", 1}};
    j["files"] = nlohmann::json::array();
    for (const auto& f : m.files) j["files"].push_back({{"name", f.name}, {"sha256", f.sha256}, {"bytes", f.bytes}});
    j["criteria"] = nlohmann::json::array();
    for (const auto& c : m.criteria) j["criteria"].push_back(criterion_json(c));
    j["info"] = m.info;
    j["wall_seconds"] = m.wall_seconds;
    j["pass"] = m.passed();
    return j;
}

RunManifest read_manifest(const std::string& dir) {
    std::ifstream in((fs::path(dir) / "manifest.json").string());
    if (!in) throw IntegrityError("no manifest.json in '" + dir + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
        throw IntegrityError(std::string("unreadable manifest: ") + e.what());
    }
    RunManifest m;
    m.kind = j.at("kind");
    m.name = j.at("name");
    m.config_hash = j.at("config_hash");
    m.format = j.at("format");
    m.version = j.at("versions").at("conic");
    for (const auto& f : j.at("files")) m.files.push_back({f.at("name"), f.at("sha256"), f.at("bytes")});
    for (const auto& c : j.at("criteria"))
        m.criteria.push_back({c.at("id"), c.at("description"), json_num(c.at("value")), json_num(c.at("lo")),
                              json_num(c.at("hi")), c.at("pass")});
    m.info = j.at("info");
    m.wall_seconds = j.at("wall_seconds");
    return m;
}

RunManifest run(const Config& c, const std::string& out_dir, const std::string& format) {
    if (format != "csv" && format != "json") throw ConfigError("format must be csv or json");
    validate_schema(c);
    const auto start = std::chrono::steady_clock::now();
    const ExperimentResult res = run_experiment(c);
    prepare_dir(out_dir);
    RunManifest m;
    m.kind = res.kind;
    m.name = c.str("experiment.name", res.kind);
    m.config_hash = c.hash();
    m.format = format;
    m.version = library_version();
    std::vector<std::string> names;
    std::ofstream((fs::path(out_dir) / "config.cfg").string()) << c.serialize();
    names.push_back("config.cfg");
    for (const auto& t : res.tables) {
        write_table(out_dir, t, format);
        names.push_back(t.name + "." + format);
    }
    for (const auto& a : res.arrays)
        for (const auto& n : write_raw_array(out_dir, a)) names.push_back(n);
    nlohmann::json report;
    report["kind"] = res.kind;
    report["info"] = res.info;
    report["criteria"] = nlohmann::json::array();
    for (const auto& cr : res.criteria) report["criteria"].push_back(criterion_json(cr));
    std::ofstream((fs::path(out_dir) / "report.json").string()) << report.dump(2) << "\n";
    names.push_back("report.json");
    for (const auto& n : names) m.files.push_back(file_entry(out_dir, n));
    m.criteria = res.criteria;
    m.info = res.info;
    m.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(out_dir, m);
    return m;
}

RunManifest emit_plots(const std::string& dir) {
    RunManifest m = read_manifest(dir);
    verify_files(dir, m.files);
    std::vector<std::string> added;
    auto listed = [&](const std::string& n) {
        return std::any_of(m.files.begin(), m.files.end(), [&](const FileEntry& f) { return f.name == n; });
    };
    const Config cfg = Config::load((fs::path(dir) / "config.cfg").string());
    // Period only; a perturbation grid file named in the config need not be reachable from here.
    const double L = cfg.has("metric.h0_samples") ? cfg.num("metric.period", kTwoPi)
                                                  : cfg.num("metric.circumference", kTwoPi);
    std::vector<std::string> tables, snapshots;
    for (const auto& f : m.files) {
        const fs::path p(f.name);
        if (f.name == "config.cfg" || f.name == "report.json" || p.extension() == ".dat" || p.extension() == ".gp")
            continue;
        if (p.extension() == ".f64") snapshots.push_back(p.stem().string());
        else if ((p.extension() == ".csv" || p.extension() == ".json") && !listed(p.stem().string() + ".f64"))
            tables.push_back(f.name);
    }
    for (const auto& file : tables) {
        const Table t = read_table(dir, file);
        const std::string dat = t.name + ".dat", gp = t.name + ".gp";
        std::ofstream o((fs::path(dir) / dat).string());
        o << "#";
        for (const auto& col : t.columns) o << " " << col;
        o << "\n";
        for (const auto& r : t.rows) {
            for (std::size_t i = 0; i < r.size(); ++i) o << (i ? " " : "") << format_double(r[i]);
            o << "\n";
        }
        o.close();
        std::ofstream g((fs::path(dir) / gp).string());
        g << "set datafile missing 'nan'\nset key outside\nset xlabel '" << (t.columns.empty() ? "" : t.columns[0])
          << "'\n";
        const bool regularity = std::find(t.columns.begin(), t.columns.end(), "ci_low") != t.columns.end();
        if (regularity) {
            // Local Sobolev order with its confidence interval against time.
            g << "set ylabel 's'\nplot '" << dat << "' using 1:4:5:6 with yerrorbars title 's (CI)'\n";
        } else {
            g << "plot";
            for (std::size_t i = 1; i < t.columns.size(); ++i)
                g << (i > 1 ? ", \\\n    " : " ") << "'" << dat << "' using 1:" << i + 1 << " with linespoints title '"
                  << t.columns[i] << "'";
            g << "\n";
        }
        added.push_back(dat);
        added.push_back(gp);
    }
    const bool have_loci = listed("loci.csv") || listed("loci.json");
    Table loci;
    if (have_loci) loci = read_table(dir, listed("loci.csv") ? "loci.csv" : "loci.json");
    for (const auto& name : snapshots) {
        const RawArray a = read_raw_array(dir, name);
        if (a.shape.size() != 2) continue;
        const std::size_t nx = a.shape[0], nth = a.shape[1];
        double X = 0;
        {
            // Axis label "x in [0, X], n points".
            const auto& ax = a.axes[0];
            const auto b = ax.find(", "), e = ax.find(']');
            X = std::stod(ax.substr(b + 2, e - b - 2));
        }
        const double t = std::stod(a.units.substr(a.units.find("t = ") + 4));
        const std::string dat = name + ".dat", front = name + "_fronts.dat", gp = name + ".gp";
        std::ofstream o((fs::path(dir) / dat).string());
        o << "# X Y u (cone unrolled to angle 2 pi theta / L)\n";
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = X * static_cast<double>(i) / static_cast<double>(nx - 1);
            for (std::size_t j = 0; j <= nth; ++j) {
                const double th = kTwoPi * static_cast<double>(j % nth) / static_cast<double>(nth);
                o << format_double(x * std::cos(th)) << " " << format_double(x * std::sin(th)) << " "
                  << format_double(a.data[i * nth + j % nth]) << "\n";
            }
            o << "\n";
        }
        o.close();
        std::ofstream fo((fs::path(dir) / front).string());
        fo << "# X_direct Y_direct X_diffracted Y_diffracted\n";
        for (const auto& r : loci.rows) {
            if (r.size() < 5 || std::abs(r[0] - t) > 1e-12) continue;
            const double ang = kTwoPi * r[1] / L;
            const double xd = r[2], xf = r[4];
            fo << format_double(xd * std::cos(ang)) << " " << format_double(xd * std::sin(ang)) << " "
               << format_double(xf * std::cos(ang)) << " " << format_double(xf * std::sin(ang)) << "\n";
        }
        fo.close();
        std::ofstream g((fs::path(dir) / gp).string());
        g << "set datafile missing 'nan'\nset size ratio -1\nset view map\nset title 'field at t = " << t
          << " with direct and diffracted fronts'\n"
          << "splot '" << dat << "' using 1:2:3 with pm3d notitle, \\\n"
          << "      '" << front << "' using 1:2:(0) with points pt 7 ps 0.2 lc rgb 'white' title 'direct', \\\n"
          << "      '" << front << "' using 3:4:(0) with points pt 7 ps 0.2 lc rgb 'red' title 'diffracted'\n";
        added.push_back(dat);
        added.push_back(front);
        added.push_back(gp);
    }
    for (const auto& n : added)
        if (!listed(n)) m.files.push_back(file_entry(dir, n));
        else
            for (auto& f : m.files)
                if (f.name == n) f = file_entry(dir, n);
    write_manifest(dir, m);
    return m;
}

}  // namespace conic
