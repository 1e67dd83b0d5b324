#include "cwnoise/quantum_sim.hpp"

#include "cwnoise/error.hpp"
#include "cwnoise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cwnoise {

using detail::require;

namespace {

constexpr std::size_t chunk_size = 32;

// Running mean / sum of squared deviations (Chan et al. merge).
struct Moments {
    std::vector<double> count, mean, m2;

    explicit Moments(std::size_t n) : count(n, 0.0), mean(n, 0.0), m2(n, 0.0) {}

    void add(std::span<const double> x) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            count[j] += 1.0;
            const double d = x[j] - mean[j];
            mean[j] += d / count[j];
            m2[j] += d * (x[j] - mean[j]);
        }
    }

    void merge(const Moments& o) {
        for (std::size_t j = 0; j < mean.size(); ++j) {
            if (o.count[j] == 0.0) continue;
            const double n = count[j] + o.count[j];
            const double d = o.mean[j] - mean[j];
            mean[j] += d * o.count[j] / n;
            m2[j] += o.m2[j] + d * d * count[j] * o.count[j] / n;
            count[j] = n;
        }
    }
};

}  // namespace

std::vector<double> SimConfig::record_times() const {
    std::vector<double> t(n_intervals + 1);
    const double h = record_interval();
    for (std::size_t j = 0; j <= n_intervals; ++j) t[j] = h * static_cast<double>(j);
    return t;
}

void SimConfig::validate() const {
    require(std::isfinite(rabi) && rabi >= 0.0, "SimConfig: rabi must be >= 0");
    require(std::isfinite(duration) && duration > 0.0, "SimConfig: duration must be > 0");
    require(n_intervals >= 1 && steps_per_interval >= 1, "SimConfig: need at least one step");
    require(n_realizations >= 1, "SimConfig: n_realizations must be >= 1");
    require(effective_noise_omega_max() > 0.0, "SimConfig: noise cutoff must be > 0 (set it when rabi = 0)");
    require(rabi * dt() <= 2.0 * std::numbers::pi / 50.0 * (1.0 + 1e-9),
            "SimConfig: dt too coarse for the drive (need rabi*dt <= 2*pi/50)");
    require(effective_noise_omega_max() * dt() < std::numbers::pi,
            "SimConfig: dt violates Nyquist for the noise cutoff");
}

SimConfig SimConfig::make(double rabi, double duration, std::size_t n_intervals,
                          std::size_t n_realizations, std::uint64_t seed, double noise_omega_max) {
    SimConfig c;
    c.rabi = rabi;
    c.duration = duration;
    c.n_intervals = n_intervals;
    c.n_realizations = n_realizations;
    c.seed = seed;
    c.noise_omega_max = noise_omega_max;
    require(c.effective_noise_omega_max() > 0.0 && duration > 0.0 && n_intervals >= 1,
            "SimConfig::make: invalid parameters");
    double dt_max = 0.9 * std::numbers::pi / c.effective_noise_omega_max();
    if (rabi > 0.0) dt_max = std::min(dt_max, 2.0 * std::numbers::pi / (50.0 * rabi));
    c.steps_per_interval =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(c.record_interval() / dt_max - 1e-9)));
    c.validate();
    return c;
}

NoiseGenConfig noise_config_for(const NoiseSpectrum& spectrum, const SimConfig& config) {
    config.validate();
    double dw = config.noise_delta_omega;
    if (dw <= 0.0)
        dw = std::min(std::numbers::pi / (4.0 * config.duration), spectrum.plateau_omega() / 8.0);
    return make_noise_config(config.effective_noise_omega_max(), config.duration, config.dt(), dw,
                             config.seed);
}

std::array<std::complex<double>, 4> step_unitary(double rabi, double f, double dt) {
    const double b = std::hypot(rabi, f);
    using namespace std::complex_literals;
    if (b == 0.0) return {1.0, 0.0, 0.0, 1.0};
    const double c = std::cos(0.5 * b * dt), s = std::sin(0.5 * b * dt);
    const double nx = rabi / b, nz = f / b;
    // exp(-i θ/2 n·σ) = cos(θ/2) I − i sin(θ/2) n·σ, row-major
    return {c - 1i * s * nz, -1i * s * nx, -1i * s * nx, c + 1i * s * nz};
}

std::vector<double> evolve_single(const NoiseRealization& realization, const SimConfig& config) {
    config.validate();
    const double dt = config.dt();
    const std::size_t n_steps = config.n_intervals * config.steps_per_interval;
    require(std::abs(realization.dt - dt) <= 1e-9 * dt, "evolve_single: realization dt does not match config");
    require(realization.samples.size() >= n_steps, "evolve_single: realization shorter than the simulation");

    std::vector<double> out(config.n_intervals + 1);
    double x = 1.0, y = 0.0, z = 0.0;
    out[0] = x;
    const double omega = config.rabi;
    std::size_t step = 0;
    for (std::size_t j = 1; j <= config.n_intervals; ++j) {
        for (std::size_t k = 0; k < config.steps_per_interval; ++k, ++step) {
            const double f = realization.samples[step];
            const double b = std::hypot(omega, f);
            if (b == 0.0) continue;
            const double nx = omega / b, nz = f / b;
            const double theta = b * dt;
            const double c = std::cos(theta), s = std::sin(theta), omc = 1.0 - c;
            // Rodrigues rotation about n = (nx, 0, nz), dr/dt = B × r
            const double ndotr = nx * x + nz * z;
            const double cx = -nz * y, cy = nz * x - nx * z, cz = nx * y;
            const double x1 = x * c + cx * s + nx * ndotr * omc;
            const double y1 = y * c + cy * s;
            const double z1 = z * c + cz * s + nz * ndotr * omc;
            x = x1;
            y = y1;
            z = z1;
        }
        out[j] = x;
    }
    return out;
}

DecayCurve simulate_decay(const NoiseSpectrum& spectrum, const SimConfig& config, std::size_t threads) {
    config.validate();
    const NoiseGenConfig noise = noise_config_for(spectrum, config);
    const NoiseSynthesizer synth(spectrum, noise);

    const std::size_t n_rec = config.n_intervals + 1;
    const std::size_t n_chunks = (config.n_realizations + chunk_size - 1) / chunk_size;
    std::vector<Moments> partial(n_chunks, Moments(n_rec));
    parallel_for(
        n_chunks,
        [&](std::size_t c) {
            const std::size_t begin = c * chunk_size;
            const std::size_t end = std::min(config.n_realizations, begin + chunk_size);
            for (std::size_t r = begin; r < end; ++r) {
                const auto realization = synth.sample(r);
                partial[c].add(evolve_single(realization, config));
            }
        },
        threads);

    Moments total(n_rec);
    for (const auto& p : partial) total.merge(p);

    DecayCurve curve;
    curve.times = config.record_times();
    curve.mean_sigma_x = total.mean;
    curve.std_err.resize(n_rec);
    const double n = static_cast<double>(config.n_realizations);
    for (std::size_t j = 0; j < n_rec; ++j)
        curve.std_err[j] = n > 1.0 ? std::sqrt(std::max(0.0, total.m2[j] / (n - 1.0)) / n) : 0.0;
    curve.rabi = config.rabi;
    curve.seed = config.seed;
    curve.n_realizations = config.n_realizations;
    return curve;
}

ErrorMap error_map(std::vector<DecayCurve> simulated, const DecayModel& model) {
    require(!simulated.empty(), "error_map: no curves");
    ErrorMap map;
    map.times = simulated.front().times;
    for (const auto& c : simulated) {
        require(c.times == map.times, "error_map: curves must share one time grid");
        map.omegas.push_back(c.rabi);
        const auto m = model(c.rabi, c.times);
        require(m.size() == c.times.size(), "error_map: model returned the wrong number of points");
        for (std::size_t j = 0; j < m.size(); ++j) map.error.push_back(std::abs(c.mean_sigma_x[j] - m[j]));
    }
    map.simulated = std::move(simulated);
    return map;
}

ErrorMap error_map(const NoiseSpectrum& spectrum, std::span<const double> omegas, const DecayModel& model,
                   const SimConfig& base, std::size_t threads) {
    std::vector<DecayCurve> curves;
    for (double omega : omegas) {
        const SimConfig c = SimConfig::make(omega, base.duration, base.n_intervals, base.n_realizations,
                                            base.seed, base.noise_omega_max);
        SimConfig cfg = c;
        cfg.noise_delta_omega = base.noise_delta_omega;
        curves.push_back(simulate_decay(spectrum, cfg, threads));
    }
    return error_map(std::move(curves), model);
}

}  // namespace cwnoise
