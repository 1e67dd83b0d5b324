// estimation.hpp: exponential-fit spectroscopy and power-law post-fits
//
// At large T the spin-lock decay is exp(−S(Ω)T/2), so a fitted rate r gives
// the estimate S₀(Ω) = 2r.

#pragma once

#include "cwnoise/quantum_sim.hpp"
#include "cwnoise/spectrum.hpp"

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace cwnoise {

struct FitOptions {
    bool fixed_amplitude = false;  // a ≡ 1
    bool tail_window = false;      // only t > 2π/Ω
    double t_min = 0.0;            // explicit window start [s]
    bool weighted = true;          // use std_err when the curve carries it
    std::size_t max_iterations = 200;
};

struct ExponentialFit {
    double rate = 0.0;        // r [1/s]
    double amplitude = 1.0;   // a
    double residual_rms = 0.0;
    // Covariance of (a, r), row-major; entries for a are zero when it is fixed.
    std::array<double, 4> covariance{};
    double window_start = 0.0;
    std::size_t n_points = 0;
    std::size_t iterations = 0;
    bool fixed_amplitude = false;
    bool weighted = false;

    double s0() const { return 2.0 * rate; }
    double rate_std_err() const;
};

/// Least squares of a·exp(−r·t). Throws NumericalError when the solver fails.
ExponentialFit fit_exponential(const DecayCurve& curve, const FitOptions& options = {});

struct SweepOptions {
    FitOptions fit;
    // A probe is reliable when its fit exists, its RMS residual is at most
    // residual_factor × the median over probes, and 2π·S₀(Ω)/Ω ≤ adiabatic_limit
    // (relaxation slow compared with the drive period).
    double residual_factor = 2.0;
    double adiabatic_limit = 1.0;
    // Below the lowest reliable probe S₀ continues as the power law fitted to
    // the reliable probes within this factor of it (constant if only one).
    double extrapolation_span = 10.0;
};

struct SweepResult {
    std::vector<double> probes;                       // Ω [rad/s], ascending
    std::vector<std::optional<ExponentialFit>> fits;  // empty where the fit failed
    std::vector<double> s0;                           // 2r, NaN where the fit failed
    std::vector<bool> reliable;
    double extrapolation_span = 10.0;

    /// Indices of reliable probes.
    std::vector<std::size_t> valid() const;

    /// S₀ interpolated log-log through the reliable probes onto `grid`,
    /// power-law extrapolated on both sides (see SweepOptions).
    NoiseSpectrum to_spectrum(const FrequencyGrid& grid) const;
};

/// Fits every curve (tagged by its rabi field) and classifies the probes.
/// Individual failures are kept as empty entries.
SweepResult sweep_spectroscopy(std::span<const DecayCurve> curves, const SweepOptions& options = {},
                               std::size_t threads = 0);

/// Recomputes SweepResult::reliable from the fits.
void classify_probes(SweepResult& sweep, double residual_factor, double adiabatic_limit);

struct PowerLawFit {
    double C = 0.0;      // S = C·ω^α, C in s⁻¹ at 1 rad/s
    double alpha = 0.0;
    double omega_lo = 0.0, omega_hi = 0.0;
    double residual = 0.0;  // RMS of log-residuals
    std::size_t n_points = 0;
};

/// Least squares of log S against log ω over the grid nodes in [lo, hi].
/// Requires lo > the plateau corner and at least two positive nodes.
PowerLawFit fit_power_law(const NoiseSpectrum& spectrum, double omega_lo, double omega_hi);

}  // namespace cwnoise
