#pragma once
// Discrete wave operator, cross-section Laplacian and the scaling field R on a
// (t, x, theta) grid, with commutator residuals in the metric L^2 norm.

#include <functional>
#include <vector>

#include "conic/geometry.hpp"

namespace conic {

struct SpaceTimeGrid {
    double t0 = 0, dt = 0;
    std::size_t nt = 0;
    double x0 = 0, dx = 0;
    std::size_t nx = 0;
    std::size_t ntheta = 0;
    double period = kTwoPi;

    double t(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double x(std::size_t i) const { return x0 + dx * static_cast<double>(i); }
    double theta(std::size_t j) const { return period * static_cast<double>(j) / static_cast<double>(ntheta); }
    double dtheta() const { return period / static_cast<double>(ntheta); }
    std::size_t size() const { return nt * nx * ntheta; }
};

struct Field3D {
    SpaceTimeGrid g;
    std::vector<double> v;  ///< [(it * nx + ix) * ntheta + j]

    double& at(std::size_t it, std::size_t ix, std::size_t j) { return v[(it * g.nx + ix) * g.ntheta + j]; }
    double at(std::size_t it, std::size_t ix, std::size_t j) const { return v[(it * g.nx + ix) * g.ntheta + j]; }
};

Field3D sample_field(const SpaceTimeGrid& g, const std::function<double(double, double, double)>& f);

/// Box = D_t^2 - Delta with Delta in coefficient (non-conservative) form.
Field3D apply_box(const ConicMetric& m, const Field3D& f);
/// Cross-section Laplacian of h0 in conservative (symmetric) form.
Field3D apply_lap_y(const ConicMetric& m, const Field3D& f);
/// x d_x + (t - t_bar) d_t, i.e. i R with R = x D_x + (t - t_bar) D_t.
Field3D apply_R(const Field3D& f, double t_bar);
/// d_theta (i D_theta).
Field3D apply_dtheta(const Field3D& f);

Field3D operator-(const Field3D& a, const Field3D& b);
Field3D operator*(double c, const Field3D& a);

/// Metric L^2 norm with density x sqrt(h) dx dtheta dt.
double l2_norm(const ConicMetric& m, const Field3D& f);

using FieldOp = std::function<Field3D(const Field3D&)>;

/// || A(B f) - B(A f) - expected(f) || in the metric norm.
double commutator_residual(const ConicMetric& m, const FieldOp& A, const FieldOp& B, const FieldOp& expected,
                           const Field3D& f);

struct CommutatorStudy {
    std::vector<double> h;              ///< grid steps
    std::vector<double> box_lap;        ///< ||[Box, Delta_Y] f|| / ||Box f||
    std::vector<double> box_R;          ///< ||[Box, iR] f - 2 Box f|| / ||Box f||
    std::vector<double> order_lap, order_R;
};

/// Residuals of both commutator identities for a smooth bump on grids n0, 2 n0, ...
CommutatorStudy commutator_study(const ConicMetric& m, std::size_t n0, int levels);

}  // namespace conic
