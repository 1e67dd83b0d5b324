// reconstruct.hpp: gradient refinement of S(ω) against one detailed decay
//
// The estimate lives on the kernel grid as node values sᵢ. Internally the
// objective is the mean squared error between data and exp(χ₂ + χ₄); the
// reported fitness is Φ = 1 − √MSE. Each step moves the free nodes along
// −∂MSE/∂sᵢ · sᵢ / wᵢ (wᵢ = ∫φᵢ dω turns it into the functional derivative;
// the sᵢ factor makes steps relative, so decades of S move at the same pace).
// The step size is fixed after a line search at the first iterate; with
// backtracking on, a step that lowers Φ is undone and the step size halved.

#pragma once

#include "cwnoise/cumulant_decay.hpp"
#include "cwnoise/estimation.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace cwnoise {

struct ProtocolConfig {
    double rabi_probe = 0.0;          // Ω_P [rad/s]
    double duration = 0.0;            // T [s]
    double epsilon = 0.0;             // 0: line search at k = 0
    double delta = 0.005;             // stop once Φ ≥ 1 − δ
    std::size_t max_iterations = 5000;
    bool relative_step = true;        // scale step i by sᵢ (floored at 1e-6·max s)
    bool backtrack = true;            // a step that lowers Φ is undone and ε halved
    std::size_t trace_every = 0;      // keep S'_k every n iterations; 0: off
    std::vector<bool> update_mask;    // per kernel-grid node; empty = all free
    double smoothing_window = 0.0;    // rad/s; 0: 2π/T
    double artifact_lo = 0.0;         // smoothing band; 0: Ω_P/4
    double artifact_hi = 0.0;         // 0: Ω_P
    std::size_t divergence_window = 10;
    std::size_t audit_count = 5;
    double audit_step = 3e-2;         // relative finite-difference step
    double audit_tolerance = 1e-5;
    std::uint64_t audit_seed = 1;
    std::size_t threads = 0;

    void validate() const;
    double effective_window() const;
    std::pair<double, double> artifact_band() const;
};

enum class StopReason { threshold, max_iterations, diverged };
std::string to_string(StopReason r);

struct GradientAudit {
    std::size_t iteration = 0;
    double max_rel_error = 0.0;
    std::size_t worst_node = 0;
    bool passed = false;
};

struct ReconstructionState {
    std::size_t iteration = 0;
    NoiseSpectrum estimate;                                 // S'_k on the kernel grid
    double fitness = 0.0;                                   // Φ_k
    std::vector<double> gradient;                           // ∂Φ/∂sᵢ at S'_k
    std::vector<std::pair<std::size_t, double>> history;    // (k, Φ_k)
    std::vector<bool> mask;
    double epsilon = 0.0;                                   // final step size
    double initial_epsilon = 0.0;
    std::size_t clamp_events = 0;
    std::size_t rejected_steps = 0;
    StopReason stop = StopReason::max_iterations;
    std::string diagnostics;
    std::vector<GradientAudit> audits;
    std::vector<std::pair<std::size_t, std::vector<double>>> trace;   // (k, node values)

    bool audits_passed() const;
};

double mean_squared_error(const DecayCurve& data, const DecayCurve& model_curve);

/// Φ = 1 − √MSE. Throws ValidationError when the time grids differ.
double fitness(const DecayCurve& data, const DecayCurve& model_curve);

/// ∂MSE/∂sᵢ for node values s (exp(χ₂ + χ₄) model on model.times()).
std::vector<double> mse_gradient(const DecayCurve& data, std::span<const double> s, const CumulantModel& model,
                                 std::size_t threads = 0);

/// ∂Φ/∂sᵢ = −∂MSE/∂sᵢ / (2√MSE); zero vector when MSE = 0.
std::vector<double> fitness_gradient(const DecayCurve& data, const ReconstructionState& state,
                                     const CumulantModel& model, std::size_t threads = 0);

/// Analytic ∂MSE/∂sᵢ against five-point central differences at s.
GradientAudit audit_gradient(const DecayCurve& data, std::span<const double> s, const CumulantModel& model,
                             double relative_step = 3e-2, double tolerance = 1e-5, std::size_t threads = 0);

/// Nodes left free by exponential-fit spectroscopy: those below the lowest
/// reliable probe and those nearest (in log ω) to an unreliable probe.
std::vector<bool> default_update_mask(const SweepResult& sweep, const FrequencyGrid& grid);

/// Kernel grid used by reconstructions: `n` log-spaced nodes from `lo` to
/// max(4·highest probe, 20·Ω_P).
FrequencyGrid reconstruction_grid(double lo, double highest_probe, double rabi_probe, std::size_t n = 120);

/// Runs the refinement from `initial` (resampled onto model.grid()) against
/// `data`, whose times must equal model.times().
ReconstructionState run_protocol(const DecayCurve& data, const NoiseSpectrum& initial, const CumulantModel& model,
                                 const ProtocolConfig& config);

/// Sliding local log-log linear fit of half-width window/2 [rad/s], applied to
/// nodes inside [band_lo, band_hi] only. Power laws pass through unchanged.
NoiseSpectrum smooth_estimate(const NoiseSpectrum& estimate, double window, double band_lo, double band_hi);
NoiseSpectrum smooth_estimate(const ReconstructionState& state, const ProtocolConfig& config);

}  // namespace cwnoise
