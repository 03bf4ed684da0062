#pragma once
// Conic metrics g = dx^2 + x^2 h(x, theta) dtheta^2 near the tip, their
// Laplacians, indicial data and the distance-coordinate normal form.

#include <array>
#include <complex>
#include <functional>
#include <string>
#include <variant>
#include <vector>

namespace conic {

constexpr double kPi = 3.14159265358979323846;
constexpr double kTwoPi = 2.0 * kPi;

/// Periodic trigonometric interpolant of uniformly spaced samples.
class TrigInterp {
public:
    TrigInterp() = default;
    TrigInterp(std::vector<double> samples, double period);

    double operator()(double th) const;
    double derivative(double th) const;
    /// Integral from 0 to th (th unrestricted; linear growth per period).
    double integral(double th) const;
    double mean() const { return a_.empty() ? 0.0 : 0.5 * a_[0]; }
    double period() const { return period_; }
    const std::vector<double>& samples() const { return samples_; }

private:
    std::vector<double> samples_;
    std::vector<double> a_, b_;
    double period_ = kTwoPi;
};

struct AnalyticCircle {
    double circumference = kTwoPi;
};

/// Cross-section metric h0(theta) dtheta^2 sampled on a periodic grid.
struct Tabulated1D {
    Tabulated1D() = default;
    Tabulated1D(std::vector<double> h0_samples, double period = kTwoPi);

    TrigInterp h0;
    TrigInterp sqrt_h0;
    double length = 0.0;  ///< total h0 arc length
};

using CrossSection = std::variant<AnalyticCircle, Tabulated1D>;

struct NoPerturbation {};
/// h = h0(theta) (1 + a x)^2.
struct RadialPower {
    double a = 0.0;
};
/// h = h0(theta) (1 + a x cos(2 pi m theta / P))^2.
struct AngularPower {
    double a = 0.0;
    int m = 1;
};
/// h = h0(theta) f(x, theta) with f sampled on a uniform (x, theta) grid, f(0, .) = 1.
struct TabulatedFactor {
    double x_max = 1.0;
    std::size_t nx = 0, ntheta = 0;
    std::vector<double> f;  ///< row-major [ix * ntheta + jtheta]
};

using Perturbation = std::variant<NoPerturbation, RadialPower, AngularPower, TabulatedFactor>;

/// h and its first partial derivatives at a point.
struct MetricSample {
    double h, h_x, h_theta;
};

class ConicMetric {
public:
    int n = 2;
    CrossSection cross_section = AnalyticCircle{};
    Perturbation perturbation = NoPerturbation{};
    double x_max = 1.0;
    int fd_order = 2;

    static ConicMetric circle(double L, double x_max = 10.0);
    static ConicMetric tabulated(std::vector<double> h0, double x_max = 10.0, double period = kTwoPi);

    /// Coordinate period of theta (L for the circle in arc length, P for tables).
    double period() const;
    /// Total h0 length of the cross-section.
    double boundary_length() const;
    bool is_product() const { return std::holds_alternative<NoPerturbation>(perturbation); }
    bool is_round() const { return std::holds_alternative<AnalyticCircle>(cross_section); }

    double h0(double th) const;
    double h0_theta(double th) const;
    MetricSample eval(double x, double th) const;
    MetricSample eval_model(double th) const;

    /// h0 arc length from 0 to th (signed, unreduced).
    double arc_length(double th) const;
    /// Inverse of arc_length.
    double theta_at_arc(double s) const;

    void validate() const;
};

/// General collar form g = drho^2 + rho^2 (h_rr drho^2 + 2 h_ru drho dv + h_uu dv^2).
struct CollarMetric {
    std::function<std::array<double, 3>(double rho, double v)> h;
    double period = kTwoPi;
    double rho_max = 1.0;

    /// Full metric matrix in (rho, v).
    std::array<double, 4> matrix(double rho, double v) const;
    static CollarMetric from_conic(const ConicMetric& m);
};

double dual_metric(const ConicMetric& m, double x, double th, double a, double b);
double dual_metric(const CollarMetric& m, double rho, double v, double a, double b);

/// Uniform tensor grid over x in [x0, x0 + (nx-1) dx] and a full theta period.
struct PolarGrid {
    double x0 = 0.0, dx = 0.0;
    std::size_t nx = 0, ntheta = 0;
    double period = kTwoPi;

    double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
    double theta(std::size_t j) const { return period * static_cast<double>(j) / static_cast<double>(ntheta); }
    double dtheta() const { return period / static_cast<double>(ntheta); }
    std::size_t size() const { return nx * ntheta; }
};

struct Field2D {
    PolarGrid grid;
    std::vector<double> v;  ///< row-major [ix * ntheta + j]
    double& at(std::size_t i, std::size_t j) { return v[i * grid.ntheta + j]; }
    double at(std::size_t i, std::size_t j) const { return v[i * grid.ntheta + j]; }
};

/// Nonnegative Laplace-Beltrami operator by centered differences of order
/// metric.fd_order. The result lives on the grid trimmed by the stencil
/// half-width in x.
Field2D laplacian_apply(const ConicMetric& m, const Field2D& u);

struct IndicialMode {
    double lambda;
    std::complex<double> s_plus, s_minus;
    double nu;
    /// Exponent of the admitted radial behaviour x^{-(n-2)/2 + nu}.
    double admitted_exponent;
    /// n = 2 and lambda = 0: the constant is admitted (log branch excluded).
    bool constant_admitted;
    bool friedrichs_selected;
    /// Roots obtained with sqrt((n-2)^2 + lambda^2) under the root, kept for comparison.
    double variant_im_plus, variant_im_minus;
};

std::vector<IndicialMode> indicial_data(const ConicMetric& m, int J_max);
std::complex<double> indicial_polynomial(int n, double lambda, std::complex<double> s);

struct NormalFormOptions {
    double rtol = 1e-12, atol = 1e-13;
    double rho_stop_rel = 1e-7;
    double fd_step = 1e-3;
    double smallness = 1e-2;
    bool diagnostics = true;
};

struct NormalFormResult {
    double x = 0, y = 0;
    double q0 = 0;              ///< initial angular covector of the tip-hitting geodesic
    double residual_cross = 0;  ///< |g_xy| of the metric in (x, y)
    double residual_radial = 0; ///< |g_xx - 1|
    double effective_rho_max = 0;
    int shooting_evaluations = 0;
};

/// Largest rho on which |rho^2 h_rr| + |rho h_ru| stays below `bound`.
double collar_smallness_radius(const CollarMetric& m, double bound, int samples = 64);

NormalFormResult normal_form(const CollarMetric& m, double rho, double v,
                             const NormalFormOptions& opt = {});

}  // namespace conic
