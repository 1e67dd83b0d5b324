// filter_functions.hpp: second- and fourth-order spin-lock filter kernels
//
// Re F₂(ω,Ω,T) = ∫₀ᵀdt₁∫₀^{t₁}dt₂ cos(ωτ)cos(Ωτ), τ = t₁ − t₂, in closed form.
//
// F̃₄(ω₁,ω₂,Ω,T) is the real fourth-order kernel built from the three Gaussian
// pairings of the time-ordered integral over T > t₁ > t₂ > t₃ > t₄ > 0, minus
// Re F₂(ω₁)·Re F₂(ω₂), folded onto ω₁, ω₂ ≥ 0 and symmetrized in (ω₁, ω₂).
// Every pairing term expands into exponentials e^{iΣ aₖtₖ}; the ordered
// integral of such a term equals the divided difference of x ↦ e^{xT} at the
// partial sums of the aₖ (Hermite–Genocchi), which is read off the
// exponential of a bidiagonal 5×5 matrix. Coincident nodes (the resonant
// manifolds ωᵢ = Ω, ω₁ ± ω₂ = 0, ±2Ω) need no special casing.

#pragma once

#include "cwnoise/spectrum.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace cwnoise {

/// Re F₂(ω, Ω, T) [s²]. Total in all arguments; T ≥ 0.
double re_f2(double omega, double rabi, double T);

/// Symmetrized F̃₄(ω₁, ω₂, Ω, T) [s⁴].
double f4_tilde(double omega1, double omega2, double rabi, double T);

/// Re(F₄(ω₁,ω₂) + F₄(ω₁,−ω₂)) before symmetrization. Only the symmetric part
/// contributes to χ₄.
double f4_tilde_unsymmetrized(double omega1, double omega2, double rabi, double T);

/// f4_tilde at every entry of an increasing, non-negative time list, computed
/// by propagating the matrix exponentials from one time to the next.
std::vector<double> f4_tilde_series(double omega1, double omega2, double rabi, std::span<const double> times);

struct KernelOptions {
    // Gauss–Legendre points per grid cell: min + ceil(h·T_max/π), clamped.
    std::size_t f2_min_points = 8;
    std::size_t f2_max_points = 128;
    std::size_t f4_min_points = 2;
    std::size_t f4_max_points = 4;
    double memory_budget_bytes = 2e9;
    std::size_t threads = 0;
};

/// One point of the sub-cell quadrature: S(ω) is represented by hat functions
/// on the grid (constant on [0, ω₀]), so each point touches at most two nodes.
struct QuadraturePoint {
    double omega = 0.0;
    double weight = 0.0;
    std::size_t lo = 0, hi = 0;      // node indices
    double c_lo = 0.0, c_hi = 0.0;   // hat values at this point
};

/// Quadrature over [0, grid.back()] with `points_for(cell_width)` Gauss points per cell.
std::vector<QuadraturePoint> hat_quadrature(const FrequencyGrid& grid, std::size_t min_points,
                                            std::size_t max_points, double t_max);

/// ∫ Re F₂ dω over [w, ∞) in closed form (w > Ω).
double re_f2_tail(double w, double rabi, double T);

/// Kernel view for a single T.
struct F2Kernel {
    double rabi = 0.0;
    double T = 0.0;
    std::span<const double> values;  // per node, ∫ φᵢ(ω) Re F₂ dω (+ tail on the last node)
};

struct F4Kernel {
    double rabi = 0.0;
    double T = 0.0;
    std::size_t n = 0;
    std::span<const double> values;  // row-major n×n, ∫∫ φᵢφⱼ F̃₄ dω₁dω₂
    double operator()(std::size_t i, std::size_t j) const { return values[i * n + j]; }
};

/// Precomputed kernels for one (Ω, time grid, frequency grid). The node tables
/// are product-integration weights: for node values Sᵢ,
///   ∫₀^∞ S Re F₂ dω = Σᵢ Sᵢ f2[i],  ∫∫ S S F̃₄ = Σᵢⱼ Sᵢ Sⱼ f4[i][j].
class KernelTables {
public:
    KernelTables(FrequencyGrid grid, double rabi, std::vector<double> times, std::vector<double> weights,
                 std::vector<double> f2, std::vector<double> f4);

    const FrequencyGrid& grid() const { return grid_; }
    double rabi() const { return rabi_; }
    std::span<const double> times() const { return times_; }
    std::size_t n_nodes() const { return grid_.size(); }
    std::size_t n_times() const { return times_.size(); }
    /// ∫ φᵢ dω.
    std::span<const double> weights() const { return weights_; }

    /// Index of T in times(); throws ValidationError when T was not tabulated.
    std::size_t time_index(double T) const;

    F2Kernel f2(std::size_t time_index) const;
    F4Kernel f4(std::size_t time_index) const;

private:
    FrequencyGrid grid_;
    double rabi_;
    std::vector<double> times_;
    std::vector<double> weights_;
    std::vector<double> f2_;  // [t][i]
    std::vector<double> f4_;  // [t][i][j]
};

/// Bytes tabulate_kernels will allocate for these inputs.
double kernel_table_bytes(std::size_t n_nodes, std::size_t n_times);

/// Throws ValidationError naming the required size when it exceeds the budget.
KernelTables tabulate_kernels(const FrequencyGrid& grid, double rabi, std::span<const double> times,
                              const KernelOptions& options = {});

}  // namespace cwnoise
