#include "cwnoise/spectrum.hpp"

#include "cwnoise/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace cwnoise {

using detail::require;

FrequencyGrid::FrequencyGrid(std::vector<double> omegas) : omegas_(std::move(omegas)) {
    require(omegas_.size() >= 2, "FrequencyGrid: need at least 2 points");
    for (std::size_t i = 0; i < omegas_.size(); ++i) {
        require(std::isfinite(omegas_[i]) && omegas_[i] >= 0.0,
                "FrequencyGrid: entries must be finite and >= 0");
        if (i > 0) require(omegas_[i] > omegas_[i - 1], "FrequencyGrid: must be strictly increasing");
    }
}

FrequencyGrid FrequencyGrid::log_spaced(double lo, double hi, std::size_t n) {
    require(lo > 0.0 && hi > lo && n >= 2, "log_spaced: need 0 < lo < hi and n >= 2");
    std::vector<double> w(n);
    const double a = std::log(lo), b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    w.front() = lo;
    w.back() = hi;
    return FrequencyGrid(std::move(w));
}

FrequencyGrid FrequencyGrid::linear(double lo, double hi, std::size_t n) {
    require(lo >= 0.0 && hi > lo && n >= 2, "linear: need 0 <= lo < hi and n >= 2");
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
        w[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    w.back() = hi;
    return FrequencyGrid(std::move(w));
}

std::uint64_t FrequencyGrid::fingerprint() const {
    // FNV-1a over the raw bit patterns
    std::uint64_t h = 1469598103934665603ull;
    for (double w : omegas_) {
        auto bits = std::bit_cast<std::uint64_t>(w);
        for (int k = 0; k < 8; ++k) {
            h ^= (bits >> (8 * k)) & 0xffu;
            h *= 1099511628211ull;
        }
    }
    return h;
}

NoiseSpectrum::NoiseSpectrum(FrequencyGrid grid, std::vector<double> values, double plateau_omega)
    : grid_(std::move(grid)), values_(std::move(values)), plateau_omega_(plateau_omega) {
    require(values_.size() == grid_.size(), "NoiseSpectrum: values and grid differ in length");
    for (double v : values_)
        require(std::isfinite(v) && v >= 0.0, "NoiseSpectrum: values must be finite and >= 0");
    require(std::isfinite(plateau_omega_) && plateau_omega_ > 0.0,
            "NoiseSpectrum: plateau_omega must be > 0");
}

double NoiseSpectrum::interpolate_nodes(double omega) const {
    const auto w = grid_.omegas();
    if (omega <= w.front()) return values_.front();
    if (omega >= w.back()) return values_.back();
    const auto it = std::upper_bound(w.begin(), w.end(), omega);
    const std::size_t hi = static_cast<std::size_t>(it - w.begin());
    const std::size_t lo = hi - 1;
    const double s0 = values_[lo], s1 = values_[hi];
    if (omega == w[lo]) return s0;
    if (s0 > 0.0 && s1 > 0.0 && w[lo] > 0.0) {
        const double x = std::log(omega / w[lo]) / std::log(w[hi] / w[lo]);
        return s0 * std::exp(x * std::log(s1 / s0));
    }
    const double x = (omega - w[lo]) / (w[hi] - w[lo]);
    return s0 + x * (s1 - s0);
}

double NoiseSpectrum::operator()(double omega) const {
    return interpolate_nodes(std::max(omega, plateau_omega_));
}

NoiseSpectrum NoiseSpectrum::scaled(double factor) const {
    require(factor >= 0.0, "NoiseSpectrum::scaled: factor must be >= 0");
    std::vector<double> v(values_);
    for (double& x : v) x *= factor;
    return NoiseSpectrum(grid_, std::move(v), plateau_omega_);
}

NoiseSpectrum power_law_spectrum(double amplitude, double exponent, double plateau_omega,
                                 const FrequencyGrid& grid) {
    require(std::isfinite(amplitude) && amplitude >= 0.0, "power_law_spectrum: amplitude must be >= 0");
    require(std::isfinite(exponent) && exponent <= 0.0, "power_law_spectrum: exponent must be <= 0");
    require(std::isfinite(plateau_omega) && plateau_omega > 0.0,
            "power_law_spectrum: plateau_omega must be > 0");
    // The plateau corner becomes a node so the interpolant reproduces the
    // power law exactly on both sides of it.
    std::vector<double> w(grid.omegas().begin(), grid.omegas().end());
    if (plateau_omega > w.front() && plateau_omega < w.back() &&
        !std::binary_search(w.begin(), w.end(), plateau_omega))
        w.insert(std::upper_bound(w.begin(), w.end(), plateau_omega), plateau_omega);
    std::vector<double> v(w.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        v[i] = amplitude * std::pow(std::max(w[i], plateau_omega), exponent);
    return NoiseSpectrum(FrequencyGrid(std::move(w)), std::move(v), plateau_omega);
}

double interpolate(const NoiseSpectrum& spectrum, double omega) {
    require(omega >= 0.0, "interpolate: omega must be >= 0");
    return spectrum(omega);
}

double integrate(const NoiseSpectrum& spectrum, double a, double b) {
    require(0.0 <= a && a <= b, "integrate: need 0 <= a <= b");
    // Break points: plateau and grid nodes, so each piece is smooth.
    std::vector<double> cuts{a, b};
    if (spectrum.plateau_omega() > a && spectrum.plateau_omega() < b) cuts.push_back(spectrum.plateau_omega());
    const auto w = spectrum.grid().omegas();
    auto first = std::upper_bound(w.begin(), w.end(), a);
    auto last = std::lower_bound(w.begin(), w.end(), b);
    cuts.insert(cuts.end(), first, last);
    std::sort(cuts.begin(), cuts.end());

    static constexpr double x[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                    0.8611363115940526};
    static constexpr double g[4] = {0.3478548451374538, 0.6521451548624461, 0.6521451548624461,
                                    0.3478548451374538};
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        const double lo = cuts[k], hi = cuts[k + 1];
        if (hi <= lo) continue;
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int q = 0; q < 4; ++q) total += g[q] * half * spectrum(mid + half * x[q]);
    }
    return total;
}

}  // namespace cwnoise
