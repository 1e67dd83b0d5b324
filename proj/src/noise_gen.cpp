#include "cwnoise/noise_gen.hpp"

#include "cwnoise/error.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <fstream>
#include <mutex>
#include <numbers>
#include <random>

namespace cwnoise {

using detail::require;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

// FFTW's planner is not re-entrant.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Smallest 2^a·3^b·5^c·7^d that is >= n.
std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 1);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace

void NoiseGenConfig::validate() const {
    require(n_components >= 1, "NoiseGenConfig: n_components must be >= 1");
    require(std::isfinite(omega_max) && omega_max > 0.0, "NoiseGenConfig: omega_max must be > 0");
    require(std::isfinite(dt) && dt > 0.0, "NoiseGenConfig: dt must be > 0");
    require(std::isfinite(duration) && duration > 0.0, "NoiseGenConfig: duration must be > 0");
    require(omega_max * dt < std::numbers::pi, "NoiseGenConfig: omega_max * dt must be < pi (Nyquist)");
}

std::size_t NoiseGenConfig::n_samples() const {
    return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

NoiseGenConfig make_noise_config(double omega_max, double duration, double dt,
                                 double delta_omega_max, std::uint64_t seed) {
    require(omega_max > 0.0 && duration > 0.0 && dt > 0.0 && delta_omega_max > 0.0,
            "make_noise_config: all parameters must be > 0");
    const double dw_target = std::min(delta_omega_max, two_pi / duration);
    NoiseGenConfig c;
    c.dt = dt;
    c.duration = duration;
    c.seed = seed;
    const std::size_t m = fft_friendly_size(static_cast<std::size_t>(std::ceil(two_pi / (dw_target * dt))));
    const double dw = two_pi / (static_cast<double>(m) * dt);
    c.n_components = static_cast<std::size_t>(std::ceil(omega_max / dw - 1e-9));
    c.omega_max = static_cast<double>(c.n_components) * dw;
    c.validate();
    return c;
}

std::vector<double> NoiseRealization::times() const {
    std::vector<double> t(samples.size());
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = time(n);
    return t;
}

std::uint64_t realization_seed(std::uint64_t base_seed, std::uint64_t index) {
    return splitmix64(splitmix64(base_seed) ^ (index * 0xd1b54a32d192ed03ull + 1));
}

struct NoiseSynthesizer::FftPlan {
    std::size_t size = 0;
    fftw_plan plan = nullptr;
    std::vector<std::complex<double>> twiddle;  // e^{iπn/M}
};

NoiseSynthesizer::NoiseSynthesizer(const NoiseSpectrum& spectrum, const NoiseGenConfig& config)
    : config_(config) {
    config_.validate();
    require(spectrum.grid().back() >= config_.omega_max * (1.0 - 1e-9),
            "NoiseSynthesizer: spectrum grid does not cover omega_max");

    const std::size_t n = config_.n_components;
    const double dw = config_.delta_omega();
    amplitudes_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double lo = dw * static_cast<double>(k);
        const double power = integrate(spectrum, lo, std::min(lo + dw, config_.omega_max));
        amplitudes_[k] = std::sqrt(2.0 * power / std::numbers::pi);
    }

    const double m_real = two_pi / (dw * config_.dt);
    const double m_round = std::round(m_real);
    const std::size_t n_samples = config_.n_samples();
    // Direct summation wins when the FFT would be mostly padding.
    const double fft_cost = m_round * std::log2(std::max(m_round, 2.0));
    const double direct_cost = 3.0 * static_cast<double>(n) * static_cast<double>(n_samples);
    if (std::abs(m_real - m_round) <= 1e-9 * m_real && m_round >= static_cast<double>(n_samples) &&
        m_round > 2.0 * static_cast<double>(n) && fft_cost < direct_cost) {
        auto plan = std::make_unique<FftPlan>();
        plan->size = static_cast<std::size_t>(m_round);
        auto* in = fftw_alloc_complex(plan->size);
        auto* out = fftw_alloc_complex(plan->size);
        {
            std::lock_guard lock(fftw_planner_mutex());
            plan->plan = fftw_plan_dft_1d(static_cast<int>(plan->size), in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        fftw_free(in);
        fftw_free(out);
        if (!plan->plan) throw NumericalError("NoiseSynthesizer: FFTW planning failed");
        plan->twiddle.resize(n_samples);
        for (std::size_t j = 0; j < n_samples; ++j)
            plan->twiddle[j] = std::polar(1.0, std::numbers::pi * static_cast<double>(j) / m_round);
        fft_ = std::move(plan);
    }
}

NoiseSynthesizer::~NoiseSynthesizer() {
    if (fft_ && fft_->plan) {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(fft_->plan);
    }
}

NoiseSynthesizer::NoiseSynthesizer(NoiseSynthesizer&&) noexcept = default;
NoiseSynthesizer& NoiseSynthesizer::operator=(NoiseSynthesizer&& other) noexcept {
    if (this != &other) {
        if (fft_ && fft_->plan) {
            std::lock_guard lock(fftw_planner_mutex());
            fftw_destroy_plan(fft_->plan);
        }
        config_ = std::move(other.config_);
        amplitudes_ = std::move(other.amplitudes_);
        fft_ = std::move(other.fft_);
    }
    return *this;
}

bool NoiseSynthesizer::uses_fft() const { return static_cast<bool>(fft_); }

NoiseRealization NoiseSynthesizer::sample_seeded(std::uint64_t seed) const {
    const std::size_t n = config_.n_components;
    const std::size_t n_samples = config_.n_samples();

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, two_pi);
    std::vector<double> phases(n);
    for (auto& p : phases) p = phase(rng);

    NoiseRealization r;
    r.dt = config_.dt;
    r.seed = seed;
    r.samples.assign(n_samples, 0.0);

    if (fft_) {
        const std::size_t m = fft_->size;
        auto* in = fftw_alloc_complex(m);
        auto* out = fftw_alloc_complex(m);
        for (std::size_t k = 0; k < m; ++k) in[k][0] = in[k][1] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            in[k][0] = amplitudes_[k] * std::cos(phases[k]);
            in[k][1] = amplitudes_[k] * std::sin(phases[k]);
        }
        fftw_execute_dft(fft_->plan, in, out);
        for (std::size_t j = 0; j < n_samples; ++j) {
            const auto& tw = fft_->twiddle[j];
            r.samples[j] = tw.real() * out[j][0] - tw.imag() * out[j][1];
        }
        fftw_free(in);
        fftw_free(out);
        return r;
    }

    const double dw = config_.delta_omega();
    for (std::size_t k = 0; k < n; ++k) {
        if (amplitudes_[k] == 0.0) continue;
        // Rotate e^{i(ω_k t + φ_k)} by e^{iω_k dt} per sample, re-anchored
        // every 256 samples to keep rounding drift negligible.
        const double wk = (static_cast<double>(k) + 0.5) * dw;
        const std::complex<double> step = std::polar(1.0, wk * r.dt);
        std::complex<double> z;
        for (std::size_t j = 0; j < n_samples; ++j) {
            if (j % 256 == 0) z = std::polar(amplitudes_[k], wk * r.time(j) + phases[k]);
            r.samples[j] += z.real();
            z *= step;
        }
    }
    return r;
}

double NoiseSynthesizer::exact_autocorrelation(double tau) const {
    const double dw = config_.delta_omega();
    double c = 0.0;
    for (std::size_t k = 0; k < amplitudes_.size(); ++k)
        c += 0.5 * amplitudes_[k] * amplitudes_[k] * std::cos((static_cast<double>(k) + 0.5) * dw * tau);
    return c;
}

NoiseRealization sample_realization(const NoiseSpectrum& spectrum, const NoiseGenConfig& config) {
    return NoiseSynthesizer(spectrum, config).sample_seeded(config.seed);
}

AutocorrelationCurve ensemble_autocorrelation(std::span<const NoiseRealization> realizations,
                                              double max_lag) {
    require(realizations.size() >= 2, "ensemble_autocorrelation: need at least 2 realizations");
    const auto& first = realizations.front();
    for (const auto& r : realizations)
        require(r.dt == first.dt && r.samples.size() == first.samples.size(),
                "ensemble_autocorrelation: realizations have mismatched grids");
    require(max_lag >= 0.0 && max_lag <= first.duration(),
            "ensemble_autocorrelation: max_lag must lie within the realization duration");

    const std::size_t n = first.samples.size();
    const std::size_t max_l = static_cast<std::size_t>(std::floor(max_lag / first.dt + 1e-9));
    AutocorrelationCurve curve;
    curve.lags.resize(max_l + 1);
    curve.values.assign(max_l + 1, 0.0);
    for (std::size_t l = 0; l <= max_l; ++l) {
        curve.lags[l] = first.dt * static_cast<double>(l);
        double sum = 0.0;
        for (const auto& r : realizations)
            for (std::size_t j = 0; j + l < n; ++j) sum += r.samples[j] * r.samples[j + l];
        curve.values[l] = sum / static_cast<double>(realizations.size() * (n - l));
    }
    return curve;
}

std::vector<double> autocorrelation_spectrum(const AutocorrelationCurve& curve,
                                             std::span<const double> omegas) {
    require(curve.lags.size() >= 2, "autocorrelation_spectrum: need at least two lags");
    std::vector<double> s(omegas.size(), 0.0);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
        double acc = 0.0;
        for (std::size_t l = 0; l + 1 < curve.lags.size(); ++l) {
            const double h = curve.lags[l + 1] - curve.lags[l];
            acc += 0.5 * h *
                   (curve.values[l] * std::cos(omegas[i] * curve.lags[l]) +
                    curve.values[l + 1] * std::cos(omegas[i] * curve.lags[l + 1]));
        }
        s[i] = 2.0 * acc;
    }
    return s;
}

void write_realization_binary(const std::filesystem::path& path, const NoiseRealization& r) {
    static_assert(std::endian::native == std::endian::little, "binary dump assumes a little-endian host");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    const std::uint64_t n = r.samples.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof n);
    out.write(reinterpret_cast<const char*>(&r.dt), sizeof r.dt);
    out.write(reinterpret_cast<const char*>(&r.seed), sizeof r.seed);
    out.write(reinterpret_cast<const char*>(r.samples.data()),
              static_cast<std::streamsize>(n * sizeof(double)));
}

NoiseRealization read_realization_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    NoiseRealization r;
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof n);
    in.read(reinterpret_cast<char*>(&r.dt), sizeof r.dt);
    in.read(reinterpret_cast<char*>(&r.seed), sizeof r.seed);
    r.samples.resize(n);
    in.read(reinterpret_cast<char*>(r.samples.data()), static_cast<std::streamsize>(n * sizeof(double)));
    if (!in) throw ValidationError("truncated realization dump " + path.string());
    return r;
}

}  // namespace cwnoise
