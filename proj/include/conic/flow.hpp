#pragma once
// Bicharacteristic flow on the edge cotangent bundle, the asymptotic map
// Upsilon, limiting geodesics and the geometric/diffractive relations.

#include <array>
#include <string>
#include <vector>

#include "conic/geometry.hpp"

namespace conic {

/// Point (t, x, y, lambda, xi, eta) of the edge cotangent bundle. `y` is kept
/// unreduced along a trajectory; `scale` records the fiber factor removed by
/// normalize().
struct EdgeCovector {
    double t = 0, x = 1, y = 0, lam = 0, xi = 0, eta = 0;
    double scale = 1.0;

    std::array<double, 6> array() const { return {t, x, y, lam, xi, eta}; }
    static EdgeCovector from_array(const std::array<double, 6>& a, double scale = 1.0) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], scale};
    }
};

/// Scales the fiber so that lambda^2 + xi^2 + h0(eta) = 1.
EdgeCovector normalize(const ConicMetric& m, EdgeCovector q);
/// Covector on the characteristic variety: lambda = sign * sqrt(xi^2 + h(eta)), normalized.
EdgeCovector characteristic_covector(const ConicMetric& m, double t, double x, double y, double xi,
                                     double eta, int lambda_sign = 1, bool normalized = true);

/// p = (lambda^2 - xi^2 - eta^2 / h) / x^2.
double hamiltonian(const ConicMetric& m, const EdgeCovector& q);
/// h0(eta) = eta^2 / h0(y).
double model_fiber_norm(const ConicMetric& m, const EdgeCovector& q);

using Tangent = std::array<double, 6>;

/// Rescaled Hamilton field (x^2/2) H_p of the full metric.
Tangent hamilton_field(const ConicMetric& m, const EdgeCovector& q);
/// Model (product) part of the field, built from h0 alone.
Tangent model_field(const ConicMetric& m, const EdgeCovector& q);
/// W = full field minus model field.
Tangent perturbation_field(const ConicMetric& m, const EdgeCovector& q);

enum class Endpoint { interior, hits_tip, leaves_collar };
const char* endpoint_name(Endpoint e);

struct FlowOptions {
    double rtol = 1e-10, atol = 1e-10;
    double x_stop_rel = 1e-6;  ///< tip truncation at x_stop_rel * x_max
    bool stop_at_closest = false;
    bool stop_at_exit = true;
};

struct RaySegment {
    std::vector<double> s;
    std::vector<EdgeCovector> q;
    Endpoint end = Endpoint::interior;
    bool underflow = false;
    double p_drift = 0;       ///< max |p(s) - p(0)|
    double fiber_drift = 0;   ///< max |h0(eta)(s) - h0(eta)(0)| (model metric only)
    bool closest_approach = false;
};

RaySegment integrate_flow(const ConicMetric& m, const EdgeCovector& start, double s_span,
                          const FlowOptions& opt = {});

struct UpsilonOptions {
    double theta_min = 1e-3;
};

/// Asymptotic boundary point of the past (direction = -1) or future (+1) end
/// of the model-cone geodesic through q.
double asymptotic_point(const ConicMetric& m, const EdgeCovector& q, int direction);
/// Upsilon(q): model-cone limit towards the end selected by sgn(xi / C).
double upsilon(const ConicMetric& m, const EdgeCovector& q, const UpsilonOptions& opt = {});

/// Points at h0 arc length exactly pi from y, reduced to [0, P).
std::vector<double> geometric_continuations(const ConicMetric& m, double y);
double reduce_angle(double y, double period);

/// Radial ray datum: departure/arrival time at the tip, boundary point, sign component.
struct RadialRay {
    double t_bar = 0;
    double y = 0;
    int sign = 1;
    bool incoming = true;
};

/// Covector on a radial ray at radius x (lambda sign given by the component).
EdgeCovector radial_covector(const RadialRay& r, double x);
bool on_radial_ray(const ConicMetric& m, const EdgeCovector& q, const RadialRay& r, double tol = 1e-9);

std::vector<RadialRay> gamma_relation(const ConicMetric& m, const RadialRay& outgoing);

struct BoundaryArc {
    double y_start, y_end;
    double length;
};

struct LimitingGeodesic {
    std::vector<RaySegment> segments;
    std::vector<BoundaryArc> arcs;
    bool valid() const;
};

/// Limiting geodesic: incoming radial ray at y, boundary arc of length pi, outgoing ray.
LimitingGeodesic limiting_geodesic(const ConicMetric& m, double y, int arc_direction, double radius);

/// Lengths of the straight (tip-avoiding) geodesics between two points of the
/// flat cone of circumference L, one per unrolled image within angle pi.
std::vector<double> direct_distances(double L, double x, double th, double xb, double thb);
/// Length of the path through the tip, x + xb.
inline double diffracted_distance(double x, double xb) { return x + xb; }

struct NearMissResult {
    double exit_theta = 0;      ///< theta where the ray leaves the collar (unreduced)
    double exit_asymptote = 0;  ///< future asymptotic boundary point (unreduced)
    double entry_theta = 0;
    double closest_x = 0;
    bool inconclusive = false;
    RaySegment ray;
};

/// Traces the ray with past asymptote y and signed impact epsilon from the collar edge.
NearMissResult near_miss_deflection(const ConicMetric& m, double y, double eps, double radius = -1,
                                    const FlowOptions& opt = {});

}  // namespace conic
