#pragma once
// Regularity probes: rescaled FBI transform, order shifter Theta_s, local
// Sobolev-order estimation, wavefront classification, weighted norms.

#include <complex>
#include <functional>
#include <string>
#include <vector>

#include "conic/spectral.hpp"

namespace conic {

/// Uniformly sampled real signal.
struct TimeSeries {
    double t0 = 0, dt = 0;
    std::vector<double> v;
    double t(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
};

struct FBIFrame {
    std::vector<double> tau;   ///< frequency grid, |tau| > 1
    double dtau = 0;           ///< quadrature weight of the tau grid
    double support = 8.0;      ///< kernel support in units of <tau>^{-1/2}
    double cutoff_lo = 1.0, cutoff_hi = 2.0;  ///< smooth switch-on of the amplitude

    /// Symmetric grid tau in +-[1, tau_max] with step dtau.
    static FBIFrame symmetric(double tau_max, double dtau);
    double amplitude(double tau) const;
    /// Largest |tau| that the sampling step resolves.
    static double max_admissible_tau(double dt);
};

struct FBIData {
    std::size_t nt = 0;
    std::vector<double> tau;
    std::vector<std::complex<double>> v;  ///< [itau * nt + it]
    std::complex<double> at(std::size_t itau, std::size_t it) const { return v[itau * nt + it]; }
};

FBIData fbi_transform(const TimeSeries& u, const FBIFrame& frame);
TimeSeries fbi_adjoint(const FBIData& F, const FBIFrame& frame, const TimeSeries& like);

/// Scaled transform S u(t, tau, x~) = chi(x~/tau) T[u(., x~/tau)](t, tau).
FBIData fbi_transform_scaled(const std::function<TimeSeries(double)>& sampler, const FBIFrame& frame,
                             double x_tilde, double x_max);

/// Order shifter: multiplier <omega>^s with kernel truncated by a compact bump of radius `radius`.
TimeSeries theta_smooth(const TimeSeries& u, double s, double radius = 8.0);

struct ShellSpec {
    double omega0 = 18.75;
    int octaves = 3;
    int per_octave = 2;
    double s_cap = 4.0;
    double d = 1.0;
};

struct RegularityEstimate {
    double t = 0, x = 0, theta = 0;
    double window = 0;
    double s = 0;
    double ci_low = 0, ci_high = 0;
    double residual = 0;
    bool smooth = false;
    std::vector<double> shell_omega, shell_energy;
};

/// Windowed dyadic-shell fit of the local Sobolev order of a 1-D slice,
/// correcting power by exp(-sigma^2 omega^2) for a heat-mollified source.
RegularityEstimate sobolev_estimate(const TimeSeries& u, double t_center, double half_width, double sigma,
                                    const ShellSpec& shells = {});

enum class FrontClass { smooth, direct, diffracted, overlap, anomaly };
const char* front_name(FrontClass c);

struct ProbePoint {
    double t, x, theta;
};

struct ScanEntry {
    RegularityEstimate est;
    FrontClass cls = FrontClass::smooth;
    double direct_gap = 0;      ///< |t - nearest direct distance| (inf if none)
    double diffracted_gap = 0;  ///< |t - (x + x_bar)|
};

struct RegularityReport {
    std::vector<ScanEntry> entries;
    std::size_t anomalies() const;
    std::size_t count(FrontClass c) const;
};

struct ScanOptions {
    double half_width = 0.8;
    double threshold = 2.0;  ///< s below threshold counts as a singular detection
    double dt = 0.0025;
    double noise_floor = 1e-6;  ///< windows whose sup |u| stays below this are reported smooth
    ShellSpec shells;
};

RegularityReport wavefront_scan(const WaveState& w, const std::vector<ProbePoint>& probes, const ScanOptions& opt);

/// Weighted near-tip mass int_{x<r} x^{-2 alpha} |u(t)|^2 dg for each radius r.
std::vector<double> weighted_norm_profile(const WaveState& w, double t, double alpha, const std::vector<double>& radii);

}  // namespace conic
