// spectrum.hpp: tabulated one-sided noise spectral densities S(ω)
//
// Frequencies are angular [rad/s]; S is stored in s⁻¹ and normalised so that
// the correlation function is C(τ) = (1/2π) ∫ S(ω) e^{iωτ} dω over the whole
// real line. With that convention white noise S₀ gives ⟨σₓ(t)⟩ = exp(−S₀t/2)
// under a spin lock. S is even in ω; only ω ≥ 0 is stored.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cwnoise {

class FrequencyGrid {
public:
    FrequencyGrid() = default;
    explicit FrequencyGrid(std::vector<double> omegas);

    /// `n` points spaced evenly in log ω over [lo, hi].
    static FrequencyGrid log_spaced(double lo, double hi, std::size_t n);
    /// `n` points spaced evenly over [lo, hi].
    static FrequencyGrid linear(double lo, double hi, std::size_t n);

    std::size_t size() const { return omegas_.size(); }
    double operator[](std::size_t i) const { return omegas_[i]; }
    double front() const { return omegas_.front(); }
    double back() const { return omegas_.back(); }
    std::span<const double> omegas() const { return omegas_; }

    /// Stable 64-bit fingerprint of the node values, used as a cache key.
    std::uint64_t fingerprint() const;

    bool operator==(const FrequencyGrid&) const = default;

private:
    std::vector<double> omegas_;
};

class NoiseSpectrum {
public:
    NoiseSpectrum() = default;
    NoiseSpectrum(FrequencyGrid grid, std::vector<double> values, double plateau_omega);

    const FrequencyGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    double plateau_omega() const { return plateau_omega_; }

    /// S(ω): constant below the plateau, log-log linear between nodes
    /// (linear where a node value is zero), clamped above the last node.
    double operator()(double omega) const;

    /// Same spectrum with every value multiplied by `factor` ≥ 0.
    NoiseSpectrum scaled(double factor) const;

private:
    double interpolate_nodes(double omega) const;

    FrequencyGrid grid_;
    std::vector<double> values_;
    double plateau_omega_ = 0.0;
};

/// S(ω) = amplitude·ω^exponent above `plateau_omega`, constant below it.
/// The plateau corner is inserted into the grid when it falls inside it.
NoiseSpectrum power_law_spectrum(double amplitude, double exponent, double plateau_omega,
                                 const FrequencyGrid& grid);

/// Free-function form of NoiseSpectrum::operator(); rejects ω < 0.
double interpolate(const NoiseSpectrum& spectrum, double omega);

/// ∫ S(ω) dω over [a, b] using the interpolant (Gauss–Legendre per grid cell).
double integrate(const NoiseSpectrum& spectrum, double a, double b);

}  // namespace cwnoise
