// cumulant_decay.hpp: χ₂, χ₄ and the model signal exp(χ₂ + χ₄)
//
//   χ₂(T) = −(1/π) ∫₀^∞ S(ω) Re F₂(ω,Ω,T) dω
//   χ₄(T) = (1/2π²) ∫₀^∞∫₀^∞ S(ω₁) S(ω₂) F̃₄(ω₁,ω₂,Ω,T) dω₁dω₂
//
// S enters through its values at the kernel grid nodes (hat interpolation,
// constant below the first node), so both are cheap dot products against
// precomputed tables.

#pragma once

#include "cwnoise/filter_functions.hpp"
#include "cwnoise/quantum_sim.hpp"
#include "cwnoise/spectrum.hpp"

#include <memory>
#include <span>
#include <vector>

namespace cwnoise {

class CumulantModel {
public:
    explicit CumulantModel(std::shared_ptr<const KernelTables> kernels);

    /// Tabulates kernels for `rabi` at `times` on `grid`.
    static CumulantModel build(const FrequencyGrid& grid, double rabi, std::span<const double> times,
                               const KernelOptions& options = {});

    double rabi() const { return kernels_->rabi(); }
    std::span<const double> times() const { return kernels_->times(); }
    const FrequencyGrid& grid() const { return kernels_->grid(); }
    std::span<const double> weights() const { return kernels_->weights(); }
    const KernelTables& kernels() const { return *kernels_; }

    /// S sampled at the grid nodes.
    std::vector<double> node_values(const NoiseSpectrum& spectrum) const;

private:
    std::shared_ptr<const KernelTables> kernels_;
};

/// Log-spaced kernel grid from `lo` to max(omega_max, 20·Ω) with n nodes.
FrequencyGrid default_model_grid(double lo, double rabi, std::size_t n = 120, double omega_max = 0.0);

double chi2(const NoiseSpectrum& spectrum, const CumulantModel& model, double T);
double chi4(const NoiseSpectrum& spectrum, const CumulantModel& model, double T);

// Node-vector forms; `t` indexes model.times().
double chi2_nodes(std::span<const double> s, const CumulantModel& model, std::size_t t);
double chi4_nodes(std::span<const double> s, const CumulantModel& model, std::size_t t);

/// ∂χ₂/∂sᵢ and ∂χ₄/∂sᵢ at time index t, written into out (size n_nodes).
void chi2_gradient(const CumulantModel& model, std::size_t t, std::span<double> out);
void chi4_gradient(std::span<const double> s, const CumulantModel& model, std::size_t t, std::span<double> out);

/// s(t) = exp(χ₂ [+ χ₄]) at every model time; order is 2 or 4.
DecayCurve model_decay(const NoiseSpectrum& spectrum, const CumulantModel& model, int order = 4,
                       std::size_t threads = 0);
DecayCurve model_decay_nodes(std::span<const double> s, const CumulantModel& model, int order = 4,
                             std::size_t threads = 0);

/// exp(−S(Ω)t/2), the large-T single-rate limit.
DecayCurve exponential_decay(const NoiseSpectrum& spectrum, double rabi, std::span<const double> times);

}  // namespace cwnoise
