#pragma once
// Wave evolution on the model cone by angular modes and Dirichlet Bessel
// radial bases, with a finite-difference oracle and exact plane kernels.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "conic/geometry.hpp"

namespace conic {

// ---------------------------------------------------------------- Bessel

double bessel_j(double nu, double z, double tol = 1e-14);
/// First k positive zeros of J_nu.
std::vector<double> bessel_zeros(double nu, std::size_t k);
/// All positive zeros of J_nu below z_max.
std::vector<double> bessel_zeros_below(double nu, double z_max);

// ---------------------------------------------------------------- boundary modes

/// Eigendata of the cross-section Laplacian. Circle modes are real:
/// index 0 is the constant, then cos/sin pairs with angular index j.
struct ModeBasis {
    double period = kTwoPi;
    double length = kTwoPi;
    bool analytic = true;
    std::vector<double> lambda;   ///< nondecreasing, repeated with multiplicity
    std::vector<int> j;           ///< angular index (circle) or eigen-rank (tabulated)
    std::vector<int> parity;      ///< 0 constant, +1 cos, -1 sin; 0 for tabulated
    std::vector<double> theta;    ///< sample grid
    std::vector<std::vector<double>> samples;  ///< eigenfunction samples on `theta`
    double residual = 0;          ///< max ||Delta_Y phi - lambda phi|| on the grid
    std::vector<TrigInterp> interp;  ///< tabulated eigenfunctions, interpolated

    std::size_t size() const { return lambda.size(); }
    double eval(std::size_t i, double th) const;
};

ModeBasis boundary_modes(const ConicMetric& m, int J_max);

// ---------------------------------------------------------------- radial modes

/// Dirichlet Bessel basis x^{-(n-2)/2} J_nu(mu_k x) on [0, X], orthonormal in x^{n-1} dx.
struct RadialMode {
    int n = 2;
    double nu = 0;
    double X = 1;
    std::vector<double> mu;
    std::vector<double> norm;

    static RadialMode build(int n, double nu, double X, std::size_t K);
    static RadialMode build_below(int n, double nu, double X, double mu_max);
    std::size_t size() const { return mu.size(); }
    double phi(std::size_t k, double x) const;
};

/// Composite Gauss-Legendre nodes/weights (weight includes x^{n-1}) on [0, X].
void radial_quadrature(int n, double X, std::size_t panels, std::vector<double>& x, std::vector<double>& w);

/// Mode-diagonal evolution u = sum_k (a_k cos mu_k t + b_k sin mu_k t / mu_k) phi_k.
struct RadialEvolution {
    RadialMode mode;
    std::vector<double> a, b;
    double tail_u0 = 0, tail_u1 = 0;

    double value(double t, double x) const;
    /// Per-basis energies (1/2)(udot_k^2 + mu_k^2 u_k^2) at time t.
    std::vector<double> mode_energy(double t) const;
    double energy(double t) const;
};

using RadialFn = std::function<double(double)>;

RadialEvolution evolve_mode_spectral(const RadialMode& mode, const RadialFn& u0, const RadialFn& u1,
                                     double tail_tol = 1e-8);

struct FDGrid {
    double X = 1;
    std::size_t nx = 256;
    double dt = 0;  ///< 0 selects cfl * dx
    double cfl = 0.5;
};

struct RadialField {
    std::vector<double> x;
    std::vector<double> t;
    std::vector<double> u;       ///< [it * x.size() + ix]
    std::vector<double> energy;  ///< discrete energy per output time
    double dx = 0, dt = 0;
    double at(std::size_t it, std::size_t ix) const { return u[it * x.size() + ix]; }
};

/// Leapfrog for u_tt = u_xx + ((n-1)/x) u_x - (nu^2 - (n-2)^2/4) u / x^2 with
/// Dirichlet at X. Output at `n_out` equally spaced times in [0, T].
RadialField evolve_mode_fd(int n, double nu, const RadialFn& u0, const RadialFn& u1, const FDGrid& grid,
                           double T, std::size_t n_out = 2);

// ---------------------------------------------------------------- fundamental solution

struct SourceSpec {
    double x_bar = 1.0;
    double theta_bar = 0.0;
    double sigma = 0.05;
};

struct TruncationCertificate {
    int j_max = 0;
    double mu_max = 0;
    double radial_tail = 0;   ///< largest discarded radial coefficient factor
    double angular_tail = 0;  ///< largest coefficient of the first discarded angular mode, relative
    std::size_t terms = 0;
    bool grid_limited = false;
};

struct SolverGrids {
    double X_max = 4.0;
    double margin_sigmas = 8.0;
    double tol = 1e-8;
    double mu_cap = 0;  ///< optional cap (grid Nyquist); 0 means certified truncation only
};

/// Coefficients of one angular component: cos(k theta) or sin(k theta) times a radial sum.
struct AngularComponent {
    int j = 0;
    int parity = 0;  ///< 0 constant, +1 cos, -1 sin
    double k = 0;    ///< angular wavenumber 2 pi j / L
    std::size_t radial = 0;  ///< index into WaveState::modes
    std::vector<double> a, b;
};

/// Space-time field stored as angular modes with Bessel radial coefficients.
struct WaveState {
    int n = 2;
    double L = kTwoPi;
    double X = 4.0;
    SourceSpec source;
    std::vector<RadialMode> modes;           ///< one per |j|
    std::vector<AngularComponent> comps;
    TruncationCertificate cert;
    double convention_constant = -1.0;       ///< U(t)(0, i delta) = convention_constant * (this field)
    double t_origin = 0.0;                   ///< emission time of the source on this state's clock

    double angular(const AngularComponent& c, double th) const;
    double value(double t, double x, double th) const;
    std::vector<double> time_series(double x, double th, const std::vector<double>& ts) const;
    /// Field on a (x, theta) grid at time t.
    Field2D snapshot(double t, const PolarGrid& g) const;
    /// Radial profile of each angular component at time t, [comp][ix].
    std::vector<std::vector<double>> component_profiles(double t, const std::vector<double>& xs) const;
    /// Sum of squared coefficients at time t (L^2 norm squared of u(t)).
    double coefficient_norm2(double t) const;
    /// Per-component energies at time t.
    std::vector<double> mode_energies(double t) const;
    /// State whose value at t equals this state's value at t + t0.
    WaveState time_shifted(double t0) const;
    std::size_t terms() const;
};

/// sin(t sqrt(Delta)) / sqrt(Delta) applied to the heat-mollified delta at the pole.
WaveState fundamental_solution(double L, const SourceSpec& src, const SolverGrids& grids, double T);

/// Heat-kernel mollifier mass over the truncated cone (should be 1).
double source_mass(const WaveState& w);

/// Multiplies component j by (1 + lambda_j)^{-N}.
WaveState tangential_smooth(const WaveState& w, int N);

// ---------------------------------------------------------------- exact kernels

double free_plane_kernel(double t, double d);
double image_kernel(int k, double t, double x, double th, double xb, double thb);
/// exp(-z) I_0(z) for z >= 0.
double bessel_i0e(double z);
/// Free kernel convolved with the unit Gaussian of width sigma, at distance rho from the pole.
double mollified_plane_kernel(double t, double rho, double sigma);
double mollified_image_kernel(int k, double t, double x, double th, double xb, double thb, double sigma);

}  // namespace conic
