#include "conic/flow.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "conic/error.hpp"
#include "conic/ode.hpp"

namespace conic {

namespace {

double sgn(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

Tangent field_from(double x, double lam, double xi, double eta, double h, double h_x, double h_th) {
    const double he = eta * eta / h;
    return {-lam * x,
            xi * x,
            eta / h,
            lam * xi,
            xi * xi + he + 0.5 * x * eta * eta * h_x / (h * h),
            0.5 * eta * eta * h_th / (h * h)};
}

}  // namespace

EdgeCovector normalize(const ConicMetric& m, EdgeCovector q) {
    const double c = std::sqrt(q.lam * q.lam + q.xi * q.xi + model_fiber_norm(m, q));
    if (!(c > 0)) throw DomainError("cannot normalize the zero covector");
    q.lam /= c;
    q.xi /= c;
    q.eta /= c;
    q.scale *= c;
    return q;
}

EdgeCovector characteristic_covector(const ConicMetric& m, double t, double x, double y, double xi, double eta,
                                     int lambda_sign, bool normalized) {
    if (!(x > 0)) throw DomainError("covector base point must have x > 0");
    EdgeCovector q{t, x, y, 0.0, xi, eta, 1.0};
    q.lam = (lambda_sign >= 0 ? 1.0 : -1.0) * std::sqrt(xi * xi + eta * eta / m.eval(x, y).h);
    return normalized ? normalize(m, q) : q;
}

double hamiltonian(const ConicMetric& m, const EdgeCovector& q) {
    const double h = m.eval(q.x, q.y).h;
    return (q.lam * q.lam - q.xi * q.xi - q.eta * q.eta / h) / (q.x * q.x);
}

double model_fiber_norm(const ConicMetric& m, const EdgeCovector& q) { return q.eta * q.eta / m.h0(q.y); }

Tangent hamilton_field(const ConicMetric& m, const EdgeCovector& q) {
    const auto s = m.eval(q.x, q.y);
    return field_from(q.x, q.lam, q.xi, q.eta, s.h, s.h_x, s.h_theta);
}

Tangent model_field(const ConicMetric& m, const EdgeCovector& q) {
    const auto s = m.eval_model(q.y);
    return field_from(q.x, q.lam, q.xi, q.eta, s.h, 0.0, s.h_theta);
}

Tangent perturbation_field(const ConicMetric& m, const EdgeCovector& q) {
    const auto a = hamilton_field(m, q), b = model_field(m, q);
    Tangent w;
    for (int k = 0; k < 6; ++k) w[k] = a[k] - b[k];
    return w;
}

const char* endpoint_name(Endpoint e) {
    switch (e) {
        case Endpoint::interior: return "interior";
        case Endpoint::hits_tip: return "hits-tip";
        case Endpoint::leaves_collar: return "leaves-collar";
    }
    return "?";
}

namespace {

ode::Result<6> run_flow(const ConicMetric& m, const EdgeCovector& start, double s_span, const FlowOptions& opt,
                        double exit_radius, bool closest_event) {
    auto rhs = [&m](double, const ode::State<6>& y, ode::State<6>& d) {
        const EdgeCovector q = EdgeCovector::from_array(y);
        d = hamilton_field(m, q);
    };
    const double x_stop = opt.x_stop_rel * m.x_max;
    std::vector<ode::Event<6>> ev;
    ev.push_back({[x_stop](double, const ode::State<6>& y) { return y[1] - x_stop; }, -1});
    ev.push_back({[exit_radius](double, const ode::State<6>& y) { return y[1] - exit_radius; }, +1});
    if (closest_event) ev.push_back({[](double, const ode::State<6>& y) { return y[4]; }, +1});
    ode::Options o;
    o.rtol = opt.rtol;
    o.atol = opt.atol;
    o.initial_step = 1e-4;
    return ode::integrate<6>(rhs, start.array(), 0.0, s_span, o, ev);
}

void fill_segment(const ConicMetric& m, const ode::Result<6>& r, double scale, RaySegment& seg, double s_offset) {
    for (std::size_t k = 0; k < r.s.size(); ++k) {
        if (!seg.s.empty() && k == 0) continue;
        seg.s.push_back(r.s[k] + s_offset);
        seg.q.push_back(EdgeCovector::from_array(r.y[k], scale));
    }
    const double p0 = hamiltonian(m, seg.q.front());
    const double f0 = model_fiber_norm(m, seg.q.front());
    for (const auto& q : seg.q) {
        seg.p_drift = std::max(seg.p_drift, std::abs(hamiltonian(m, q) - p0));
        seg.fiber_drift = std::max(seg.fiber_drift, std::abs(model_fiber_norm(m, q) - f0));
    }
}

}  // namespace

RaySegment integrate_flow(const ConicMetric& m, const EdgeCovector& start, double s_span, const FlowOptions& opt) {
    if (!(start.x > 0)) throw DomainError("integrate_flow needs start.x > 0");
    if (!(opt.rtol > 0) || !(opt.atol > 0)) throw ConfigError("tolerances must be positive");
    const double exit_radius = opt.stop_at_exit ? m.x_max : 1e300;
    const auto r = run_flow(m, start, s_span, opt, exit_radius, opt.stop_at_closest);
    RaySegment seg;
    fill_segment(m, r, start.scale, seg, 0.0);
    if (r.stop == ode::Stop::event) {
        if (r.event == 0) seg.end = Endpoint::hits_tip;
        if (r.event == 1) seg.end = Endpoint::leaves_collar;
        if (r.event == 2) seg.closest_approach = true;
    } else if (r.stop == ode::Stop::underflow || r.stop == ode::Stop::max_steps) {
        seg.underflow = true;
        seg.end = Endpoint::hits_tip;
    }
    return seg;
}

double reduce_angle(double y, double period) {
    double r = std::fmod(y, period);
    if (r < 0) r += period;
    if (r >= period) r -= period;
    return r;
}

namespace {

double asymptote_with_branch(const ConicMetric& m, const EdgeCovector& q, double branch) {
    if (q.eta == 0.0) return q.y;
    const double C = std::sqrt(model_fiber_norm(m, q));
    const double th = q.xi / C;
    const double darc = sgn(q.eta) * (branch * 0.5 * kPi - std::atan(th));
    return m.theta_at_arc(m.arc_length(q.y) + darc);
}

}  // namespace

double asymptotic_point(const ConicMetric& m, const EdgeCovector& q, int direction) {
    if (q.eta == 0.0) return q.y;
    if (q.lam == 0.0) throw DomainError("lambda = 0: time orientation of the ray undefined");
    const double branch = direction > 0 ? -sgn(q.lam) : sgn(q.lam);
    return asymptote_with_branch(m, q, branch);
}

double upsilon(const ConicMetric& m, const EdgeCovector& q, const UpsilonOptions& opt) {
    if (q.eta == 0.0) return q.y;
    const double C = std::sqrt(model_fiber_norm(m, q));
    const double th = q.xi / C;
    double branch;
    if (std::abs(th) > opt.theta_min) {
        branch = sgn(th);
    } else {
        // On incoming components sgn(theta) = sgn(lambda); use it inside the ambiguous band.
        if (q.lam == 0.0) throw DomainError("covector outside the Upsilon domain: |xi/C| <= theta_min and lambda = 0");
        branch = sgn(q.lam);
    }
    return asymptote_with_branch(m, q, branch);
}

std::vector<double> geometric_continuations(const ConicMetric& m, double y) {
    const double P = m.period();
    const double s0 = m.arc_length(y);
    std::vector<double> out;
    for (double d : {kPi, -kPi}) {
        const double c = reduce_angle(m.theta_at_arc(s0 + d), P);
        bool dup = false;
        for (double o : out) {
            const double diff = std::abs(c - o);
            if (std::min(diff, P - diff) <= 1e-12 * P) dup = true;
        }
        if (!dup) out.push_back(c);
    }
    std::sort(out.begin(), out.end());
    return out;
}

EdgeCovector radial_covector(const RadialRay& r, double x) {
    const double lam = (r.sign >= 0 ? 1.0 : -1.0) / std::sqrt(2.0);
    // Incoming rays satisfy dx/dt = -xi/lam = -1.
    const double xi = r.incoming ? lam : -lam;
    const double t = r.incoming ? r.t_bar - x : r.t_bar + x;
    return {t, x, r.y, lam, xi, 0.0, 1.0};
}

bool on_radial_ray(const ConicMetric& m, const EdgeCovector& q, const RadialRay& r, double tol) {
    if (std::abs(q.eta) > tol) return false;
    const double P = m.period();
    const double dy = reduce_angle(q.y - r.y, P);
    if (std::min(dy, P - dy) > tol) return false;
    if ((q.lam > 0) != (r.sign > 0)) return false;
    const double ratio = q.xi / q.lam;
    if (std::abs(ratio - (r.incoming ? 1.0 : -1.0)) > tol) return false;
    const double t = r.incoming ? r.t_bar - q.x : r.t_bar + q.x;
    return std::abs(q.t - t) <= tol;
}

std::vector<RadialRay> gamma_relation(const ConicMetric& m, const RadialRay& outgoing) {
    std::vector<RadialRay> out;
    for (double y : geometric_continuations(m, outgoing.y)) out.push_back({outgoing.t_bar, y, outgoing.sign, true});
    return out;
}

bool LimitingGeodesic::valid() const {
    if (segments.size() != arcs.size() + 1) return false;
    for (const auto& a : arcs)
        if (std::abs(a.length - kPi) > 1e-10) return false;
    return true;
}

LimitingGeodesic limiting_geodesic(const ConicMetric& m, double y, int arc_direction, double radius) {
    LimitingGeodesic g;
    FlowOptions opt;
    RadialRay in{0.0, y, -1, true};
    g.segments.push_back(integrate_flow(m, radial_covector(in, radius), 1e9, opt));
    const double s0 = m.arc_length(y);
    const double y2 = m.theta_at_arc(s0 + (arc_direction >= 0 ? kPi : -kPi));
    g.arcs.push_back({y, y2, std::abs(m.arc_length(y2) - s0)});
    RadialRay out{0.0, y2, -1, false};
    FlowOptions o2;
    g.segments.push_back(integrate_flow(m, radial_covector(out, opt.x_stop_rel * m.x_max * 2), 1e9, o2));
    return g;
}

std::vector<double> direct_distances(double L, double x, double th, double xb, double thb) {
    std::vector<double> out;
    const double d = th - thb;
    const auto lo = static_cast<long>(std::ceil((-kPi - d) / L - 1e-12));
    const auto hi = static_cast<long>(std::floor((kPi - d) / L + 1e-12));
    bool boundary = false;
    for (long k = lo; k <= hi; ++k) {
        const double a = d + static_cast<double>(k) * L;
        if (std::abs(a) > kPi + 1e-12) continue;
        // Images at a = -pi and a = +pi give the same length x + xb through the tip.
        if (std::abs(a) > kPi - 1e-12) {
            if (boundary) continue;
            boundary = true;
        }
        out.push_back(std::sqrt(std::max(0.0, x * x + xb * xb - 2 * x * xb * std::cos(a))));
    }
    std::sort(out.begin(), out.end());
    return out;
}

NearMissResult near_miss_deflection(const ConicMetric& m, double y, double eps, double radius, const FlowOptions& opt) {
    const double R = radius > 0 ? radius : 0.5 * m.x_max;
    if (!(std::abs(eps) < R) || eps == 0.0) throw DomainError("near_miss_deflection needs 0 < |eps| < radius");
    NearMissResult res;
    // Start on x = R with past asymptote y and angular momentum eps (arc-length units).
    const double th_s = m.theta_at_arc(m.arc_length(y) + std::asin(eps / R));
    EdgeCovector q;
    q.x = R;
    q.y = th_s;
    q.xi = -R * std::sqrt(1.0 - eps * eps / (R * R));
    q.eta = eps * std::sqrt(m.h0(th_s));
    q.lam = -std::sqrt(q.xi * q.xi + q.eta * q.eta / m.eval(R, th_s).h);
    res.entry_theta = th_s;

    const double C = std::abs(eps);
    const double span = 4.0 * kPi / C + 100.0;
    FlowOptions o = opt;
    const auto r1 = run_flow(m, q, span, o, R, true);
    RaySegment seg;
    fill_segment(m, r1, 1.0, seg, 0.0);
    if (!(r1.stop == ode::Stop::event && r1.event == 2)) {
        res.inconclusive = true;
        res.ray = seg;
        return res;
    }
    res.closest_x = r1.y.back()[1];
    const EdgeCovector mid = EdgeCovector::from_array(r1.y.back());
    const auto r2 = run_flow(m, mid, span, o, R, false);
    fill_segment(m, r2, 1.0, seg, r1.s.back());
    seg.closest_approach = true;
    if (!(r2.stop == ode::Stop::event && r2.event == 1)) {
        res.inconclusive = true;
        res.ray = seg;
        return res;
    }
    seg.end = Endpoint::leaves_collar;
    const EdgeCovector qe = seg.q.back();
    res.exit_theta = qe.y;
    res.exit_asymptote = asymptotic_point(m, qe, +1);
    res.ray = std::move(seg);
    return res;
}

}  // namespace conic
