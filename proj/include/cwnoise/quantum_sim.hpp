// quantum_sim.hpp: Monte-Carlo spin-lock simulator
//
// Rotating-frame Hamiltonian H(t) = Ω σₓ/2 + f(t) σ_z/2 with f held constant
// over each step. Every step is the exact rotation of the Bloch vector about
// (Ω, 0, f) by |B|·dt, starting from +x.

#pragma once

#include "cwnoise/noise_gen.hpp"
#include "cwnoise/spectrum.hpp"

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace cwnoise {

struct SimConfig {
    double rabi = 0.0;                 // Ω [rad/s]
    double duration = 0.0;            // T [s]
    std::size_t n_intervals = 200;    // recorded points = n_intervals + 1
    std::size_t steps_per_interval = 1;
    std::size_t n_realizations = 10000;
    std::uint64_t seed = 0;
    double noise_omega_max = 0.0;     // 0: 20·Ω
    double noise_delta_omega = 0.0;   // 0: min(π/(4T), plateau/8)

    double record_interval() const { return duration / static_cast<double>(n_intervals); }
    double dt() const { return record_interval() / static_cast<double>(steps_per_interval); }
    double effective_noise_omega_max() const { return noise_omega_max > 0.0 ? noise_omega_max : 20.0 * rabi; }
    std::vector<double> record_times() const;
    void validate() const;

    /// Chooses steps_per_interval so that Ω·dt ≤ 2π/50 and the noise cutoff
    /// stays well inside Nyquist.
    static SimConfig make(double rabi, double duration, std::size_t n_intervals,
                          std::size_t n_realizations, std::uint64_t seed,
                          double noise_omega_max = 0.0);
};

/// Noise-generator configuration used by simulate_decay for this spectrum.
NoiseGenConfig noise_config_for(const NoiseSpectrum& spectrum, const SimConfig& config);

struct DecayCurve {
    std::vector<double> times;          // s
    std::vector<double> mean_sigma_x;   // ⟨σₓ(t)⟩
    std::vector<double> std_err;        // standard error of the mean; empty when unknown
    double rabi = 0.0;
    std::uint64_t seed = 0;
    std::size_t n_realizations = 0;

    std::size_t size() const { return times.size(); }
    bool has_uncertainty() const { return std_err.size() == times.size(); }
};

/// Exact step propagator exp(−i(Ωσₓ + fσ_z)dt/2).
std::array<std::complex<double>, 4> step_unitary(double rabi, double f, double dt);

/// ⟨σₓ⟩ of one trajectory at config.record_times().
std::vector<double> evolve_single(const NoiseRealization& realization, const SimConfig& config);

/// Ensemble mean and standard error over config.n_realizations trajectories.
/// `threads` = 0 uses default_thread_count(); results do not depend on it.
DecayCurve simulate_decay(const NoiseSpectrum& spectrum, const SimConfig& config,
                          std::size_t threads = 0);

/// Model decay for one drive amplitude evaluated on a time grid.
using DecayModel = std::function<std::vector<double>(double rabi, std::span<const double> times)>;

struct ErrorMap {
    std::vector<double> omegas;  // Ω axis
    std::vector<double> times;   // t axis, shared by every Ω
    std::vector<double> error;   // |simulated − model|, row-major [Ω][t]
    std::vector<DecayCurve> simulated;

    double at(std::size_t omega_index, std::size_t time_index) const {
        return error[omega_index * times.size() + time_index];
    }
};

/// Pointwise |simulated − model| over (Ω, t). `base` supplies duration,
/// record count, ensemble size, seed and noise cutoff; Ω is taken from `omegas`.
ErrorMap error_map(const NoiseSpectrum& spectrum, std::span<const double> omegas,
                   const DecayModel& model, const SimConfig& base, std::size_t threads = 0);

/// Same, reusing curves that were already simulated (one per Ω, common times).
ErrorMap error_map(std::vector<DecayCurve> simulated, const DecayModel& model);

}  // namespace cwnoise
