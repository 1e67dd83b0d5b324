// noise_gen.hpp: stationary Gaussian phase-noise synthesis
//
// Realizations are cosine series f(t) = Σ_k A_k cos(ω_k t + φ_k) with
// ω_k = (k + ½)Δω, Δω = omega_max / n_components, deterministic amplitudes
// A_k = sqrt((2/π) ∫_bin S dω) and i.i.d. uniform phases. The variance of
// every sample is Σ A_k²/2 = (1/π) ∫_0^omega_max S dω.
//
// When Δω·dt = 2π/M for an integer M ≥ n_samples the series is evaluated with
// one length-M FFT; otherwise it is summed directly.

#pragma once

#include "cwnoise/spectrum.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

namespace cwnoise {

struct NoiseGenConfig {
    std::size_t n_components = 2000;
    double omega_max = 0.0;  // rad/s
    double dt = 0.0;         // s
    double duration = 0.0;   // s
    std::uint64_t seed = 0;

    void validate() const;
    double delta_omega() const { return omega_max / static_cast<double>(n_components); }
    std::size_t n_samples() const;
};

/// Picks a configuration the FFT path serves exactly for sample spacing `dt`:
/// bin width at most `delta_omega_max` (and at most 2π/duration), cutoff at
/// least `omega_max`. omega_max is rounded up to a whole number of bins.
NoiseGenConfig make_noise_config(double omega_max, double duration, double dt,
                                 double delta_omega_max, std::uint64_t seed);

struct NoiseRealization {
    double dt = 0.0;
    std::vector<double> samples;  // f(n·dt) [rad/s]
    std::uint64_t seed = 0;

    double time(std::size_t n) const { return dt * static_cast<double>(n); }
    double duration() const { return samples.empty() ? 0.0 : time(samples.size() - 1); }
    std::vector<double> times() const;
};

/// Seed of realization `index` within an ensemble; independent of generation order.
std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t index);

class NoiseSynthesizer {
public:
    NoiseSynthesizer(const NoiseSpectrum& spectrum, const NoiseGenConfig& config);
    ~NoiseSynthesizer();
    NoiseSynthesizer(NoiseSynthesizer&&) noexcept;
    NoiseSynthesizer& operator=(NoiseSynthesizer&&) noexcept;
    NoiseSynthesizer(const NoiseSynthesizer&) = delete;
    NoiseSynthesizer& operator=(const NoiseSynthesizer&) = delete;

    const NoiseGenConfig& config() const { return config_; }
    std::span<const double> amplitudes() const { return amplitudes_; }
    bool uses_fft() const;

    /// Realization with an explicit seed. Thread-safe.
    NoiseRealization sample_seeded(std::uint64_t seed) const;
    /// Realization `index` of the ensemble rooted at config().seed. Thread-safe.
    NoiseRealization sample(std::uint64_t index) const {
        return sample_seeded(realization_seed(config_.seed, index));
    }

    /// Exact autocorrelation of the series, Σ A_k²/2 cos(ω_k τ).
    double exact_autocorrelation(double tau) const;

private:
    struct FftPlan;

    NoiseGenConfig config_;
    std::vector<double> amplitudes_;
    std::unique_ptr<FftPlan> fft_;
};

/// One realization seeded with config.seed.
NoiseRealization sample_realization(const NoiseSpectrum& spectrum, const NoiseGenConfig& config);

struct AutocorrelationCurve {
    std::vector<double> lags;    // s
    std::vector<double> values;  // (rad/s)²
};

/// ⟨f(t)f(t+τ)⟩ averaged over realizations and over t, for τ up to max_lag.
AutocorrelationCurve ensemble_autocorrelation(std::span<const NoiseRealization> realizations,
                                              double max_lag);

/// Cosine transform 2∫_0^τmax c(τ) cos(ωτ) dτ (trapezoid) of an autocorrelation
/// curve, evaluated at each ω.
std::vector<double> autocorrelation_spectrum(const AutocorrelationCurve& curve,
                                             std::span<const double> omegas);

/// Audit dump: little-endian header {u64 n_samples, f64 dt, u64 seed} then samples as f64.
void write_realization_binary(const std::filesystem::path& path, const NoiseRealization& r);
NoiseRealization read_realization_binary(const std::filesystem::path& path);

}  // namespace cwnoise
