#include "cwnoise/reconstruct.hpp"

#include "cwnoise/error.hpp"
#include "cwnoise/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace cwnoise {

using detail::require;

namespace {

constexpr double pi = std::numbers::pi;

void check_same_times(std::span<const double> a, std::span<const double> b) {
    require(a.size() == b.size(), "time grids differ in length");
    for (std::size_t j = 0; j < a.size(); ++j)
        require(std::abs(a[j] - b[j]) <= 1e-12 * std::max(1.0, std::abs(a[j])), "time grids differ");
}

// MSE of exp(χ₂ + χ₄) against the data, and optionally its gradient.
struct Evaluation {
    double mse = 0.0;
    std::vector<double> gradient;
};

Evaluation evaluate(const DecayCurve& data, std::span<const double> s, const CumulantModel& model, bool with_gradient,
                    std::size_t threads) {
    const std::size_t nt = model.times().size();
    const std::size_t m = s.size();
    require(m == model.grid().size(), "node vector does not match the kernel grid");
    std::vector<double> sq(nt);
    std::vector<double> contrib(with_gradient ? nt * m : 0);
    parallel_for(
        nt,
        [&](std::size_t t) {
            const auto f2 = model.kernels().f2(t).values;
            const auto f4 = model.kernels().f4(t);
            double c2 = 0.0;
            for (std::size_t i = 0; i < m; ++i) c2 += f2[i] * s[i];
            std::vector<double> v(m);
            double c4 = 0.0;
            for (std::size_t i = 0; i < m; ++i) {
                double row = 0.0;
                const double* k = f4.values.data() + i * m;
                for (std::size_t j = 0; j < m; ++j) row += k[j] * s[j];
                v[i] = row;
                c4 += s[i] * row;
            }
            const double chi = -c2 / pi + c4 / (2.0 * pi * pi);
            const double model_value = model.times()[t] == 0.0 ? 1.0 : std::exp(chi);
            const double r = model_value - data.mean_sigma_x[t];
            sq[t] = r * r;
            if (with_gradient) {
                const double a = 2.0 * r * model_value / static_cast<double>(nt);
                double* out = contrib.data() + t * m;
                for (std::size_t i = 0; i < m; ++i) out[i] = a * (-f2[i] / pi + v[i] / (pi * pi));
            }
        },
        threads);
    Evaluation e;
    for (double x : sq) e.mse += x;
    e.mse /= static_cast<double>(nt);
    if (with_gradient) {
        e.gradient.assign(m, 0.0);
        for (std::size_t t = 0; t < nt; ++t)
            for (std::size_t i = 0; i < m; ++i) e.gradient[i] += contrib[t * m + i];
    }
    return e;
}

double fitness_from_mse(double mse) { return 1.0 - std::sqrt(mse); }

std::vector<double> resample(const NoiseSpectrum& spectrum, const FrequencyGrid& grid) {
    std::vector<double> s(grid.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = spectrum(grid[i]);
    return s;
}

}  // namespace

void ProtocolConfig::validate() const {
    require(std::isfinite(rabi_probe) && rabi_probe > 0.0, "ProtocolConfig: rabi_probe must be > 0");
    require(std::isfinite(duration) && duration > 0.0, "ProtocolConfig: duration must be > 0");
    require(epsilon >= 0.0, "ProtocolConfig: epsilon must be >= 0 (0 selects a line search)");
    require(delta > 0.0 && delta < 1.0, "ProtocolConfig: delta must lie in (0, 1)");
    require(divergence_window >= 1, "ProtocolConfig: divergence_window must be >= 1");
    require(smoothing_window >= 0.0, "ProtocolConfig: smoothing_window must be >= 0");
    require(audit_step > 0.0 && audit_tolerance > 0.0, "ProtocolConfig: audit parameters must be > 0");
    const auto [lo, hi] = artifact_band();
    require(lo >= 0.0 && hi >= lo, "ProtocolConfig: artifact band is empty");
}

double ProtocolConfig::effective_window() const {
    return smoothing_window > 0.0 ? smoothing_window : 2.0 * pi / duration;
}

std::pair<double, double> ProtocolConfig::artifact_band() const {
    return {artifact_lo > 0.0 ? artifact_lo : 0.25 * rabi_probe, artifact_hi > 0.0 ? artifact_hi : rabi_probe};
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::threshold: return "threshold";
        case StopReason::max_iterations: return "max_iterations";
        case StopReason::diverged: return "diverged";
    }
    return "unknown";
}

bool ReconstructionState::audits_passed() const {
    return std::all_of(audits.begin(), audits.end(), [](const GradientAudit& a) { return a.passed; });
}

double mean_squared_error(const DecayCurve& data, const DecayCurve& model_curve) {
    check_same_times(data.times, model_curve.times);
    require(!data.times.empty(), "fitness: empty curves");
    require(data.mean_sigma_x.size() == data.times.size() && model_curve.mean_sigma_x.size() == data.times.size(),
            "fitness: malformed curve");
    double acc = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) {
        const double d = data.mean_sigma_x[j] - model_curve.mean_sigma_x[j];
        acc += d * d;
    }
    return acc / static_cast<double>(data.size());
}

double fitness(const DecayCurve& data, const DecayCurve& model_curve) {
    return fitness_from_mse(mean_squared_error(data, model_curve));
}

std::vector<double> mse_gradient(const DecayCurve& data, std::span<const double> s, const CumulantModel& model,
                                 std::size_t threads) {
    check_same_times(data.times, model.times());
    return evaluate(data, s, model, true, threads).gradient;
}

std::vector<double> fitness_gradient(const DecayCurve& data, const ReconstructionState& state,
                                     const CumulantModel& model, std::size_t threads) {
    check_same_times(data.times, model.times());
    const auto s = resample(state.estimate, model.grid());
    auto e = evaluate(data, s, model, true, threads);
    const double rms = std::sqrt(e.mse);
    for (double& g : e.gradient) g = rms > 0.0 ? -g / (2.0 * rms) : 0.0;
    return e.gradient;
}

GradientAudit audit_gradient(const DecayCurve& data, std::span<const double> s, const CumulantModel& model,
                             double relative_step, double tolerance, std::size_t threads) {
    check_same_times(data.times, model.times());
    const auto analytic = evaluate(data, s, model, true, threads).gradient;
    const std::size_t m = s.size();
    double s_scale = 0.0, g_scale = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        s_scale = std::max(s_scale, std::abs(s[i]));
        g_scale = std::max(g_scale, std::abs(analytic[i]));
    }
    GradientAudit a;
    std::vector<double> x(s.begin(), s.end());
    auto mse_at = [&](std::size_t i, double v) {
        x[i] = v;
        const double r = evaluate(data, x, model, false, threads).mse;
        x[i] = s[i];
        return r;
    };
    for (std::size_t i = 0; i < m; ++i) {
        // Relative step; nodes at zero borrow the spectrum's scale. Five-point
        // stencil at h and h/2 combined by one Richardson stage (error O(h⁶)):
        // the step has to stay large enough that rounding in the MSE does not
        // swamp the small high-frequency components, while nodes near Ω_P see
        // strong curvature.
        const double h = relative_step * (s[i] != 0.0 ? std::abs(s[i]) : std::max(s_scale, 1e-300));
        auto stencil = [&](double d) {
            return (mse_at(i, s[i] - 2.0 * d) - 8.0 * mse_at(i, s[i] - d) + 8.0 * mse_at(i, s[i] + d) -
                    mse_at(i, s[i] + 2.0 * d)) /
                   (12.0 * d);
        };
        const double fd = (16.0 * stencil(0.5 * h) - stencil(h)) / 15.0;
        // Components that are zero to rounding are compared on the gradient's own scale.
        const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6 * g_scale, 1e-300});
        const double rel = std::abs(fd - analytic[i]) / denom;
        if (rel > a.max_rel_error) {
            a.max_rel_error = rel;
            a.worst_node = i;
        }
    }
    a.passed = a.max_rel_error <= tolerance;
    return a;
}

std::vector<bool> default_update_mask(const SweepResult& sweep, const FrequencyGrid& grid) {
    const std::size_t np = sweep.probes.size();
    require(np > 0 && sweep.reliable.size() == np, "default_update_mask: sweep has no classification");
    const auto v = sweep.valid();
    std::vector<bool> mask(grid.size(), true);
    if (v.empty()) return mask;
    const double lowest_reliable = sweep.probes[v.front()];
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        if (w < lowest_reliable) continue;
        std::size_t nearest = 0;
        double best = INFINITY;
        for (std::size_t p = 0; p < np; ++p) {
            const double d = std::abs(std::log(w / sweep.probes[p]));
            if (d < best) {
                best = d;
                nearest = p;
            }
        }
        mask[i] = !sweep.reliable[nearest];
    }
    return mask;
}

FrequencyGrid reconstruction_grid(double lo, double highest_probe, double rabi_probe, std::size_t n) {
    require(lo > 0.0, "reconstruction_grid: lo must be > 0");
    const double hi = std::max(4.0 * highest_probe, 20.0 * rabi_probe);
    require(hi > lo, "reconstruction_grid: empty range");
    return FrequencyGrid::log_spaced(lo, hi, n);
}

ReconstructionState run_protocol(const DecayCurve& data, const NoiseSpectrum& initial, const CumulantModel& model,
                                 const ProtocolConfig& config) {
    config.validate();
    check_same_times(data.times, model.times());
    require(std::abs(model.rabi() - config.rabi_probe) <= 1e-12 * config.rabi_probe,
            "run_protocol: kernels were tabulated for a different drive frequency");
    const FrequencyGrid& grid = model.grid();
    const std::size_t m = grid.size();
    const auto w = model.weights();

    ReconstructionState st;
    st.mask = config.update_mask.empty() ? std::vector<bool>(m, true) : config.update_mask;
    require(st.mask.size() == m, "run_protocol: update mask does not match the kernel grid");
    require(std::any_of(st.mask.begin(), st.mask.end(), [](bool b) { return b; }),
            "run_protocol: update mask leaves no free node");

    std::vector<double> s = resample(initial, grid);
    for (double v : s) require(std::isfinite(v) && v >= 0.0, "run_protocol: initial estimate must be finite and >= 0");

    const std::size_t threads = config.threads;
    auto e = evaluate(data, s, model, true, threads);
    double phi = fitness_from_mse(e.mse);
    st.history.emplace_back(0, phi);

    // Iterates kept for the gradient audit (reservoir sample).
    std::mt19937_64 rng(config.audit_seed);
    std::vector<std::pair<std::size_t, std::vector<double>>> reservoir;
    auto offer = [&](std::size_t k) {
        if (config.audit_count == 0) return;
        if (reservoir.size() < config.audit_count) {
            reservoir.emplace_back(k, s);
            return;
        }
        std::uniform_int_distribution<std::size_t> pick(0, k);
        const std::size_t j = pick(rng);
        if (j < config.audit_count) reservoir[j] = {k, s};
    };
    offer(0);

    auto direction = [&](const std::vector<double>& g) {
        std::vector<double> d(m, 0.0);
        double floor = 0.0;
        if (config.relative_step) {
            for (double v : s) floor = std::max(floor, v);
            floor = floor > 0.0 ? 1e-6 * floor : 1.0;
        }
        for (std::size_t i = 0; i < m; ++i) {
            if (!st.mask[i]) continue;
            d[i] = -g[i] / w[i];
            if (config.relative_step) d[i] *= std::max(s[i], floor);
        }
        return d;
    };
    auto step = [&](const std::vector<double>& from, const std::vector<double>& d, double eps, std::size_t* clamps) {
        std::vector<double> x(from);
        for (std::size_t i = 0; i < m; ++i) {
            if (d[i] == 0.0) continue;
            x[i] = from[i] + eps * d[i];
            if (x[i] < 0.0) {
                x[i] = 0.0;
                if (clamps) ++*clamps;
            }
        }
        return x;
    };

    std::ostringstream diag;
    st.stop = StopReason::max_iterations;
    std::size_t k = 0;
    std::size_t decreasing = 0;
    double eps = config.epsilon;
    st.initial_epsilon = eps;
    while (true) {
        if (phi >= 1.0 - config.delta) {
            st.stop = StopReason::threshold;
            break;
        }
        if (k >= config.max_iterations) {
            st.stop = StopReason::max_iterations;
            break;
        }
        auto d = direction(e.gradient);
        double dmax = 0.0, slope = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            dmax = std::max(dmax, std::abs(d[i]));
            slope += e.gradient[i] * d[i];
        }
        if (dmax == 0.0) {
            diag << "gradient vanished at iteration " << k << "; ";
            st.stop = StopReason::max_iterations;
            break;
        }
        if (eps == 0.0) {
            // One-time backtracking (Armijo) from a step that changes the
            // largest free node by half its size; then held fixed.
            double scale = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                if (st.mask[i]) scale = std::max(scale, s[i]);
            if (scale == 0.0)
                for (double v : s) scale = std::max(scale, v);
            if (scale == 0.0) scale = 1.0;
            double trial = 0.5 * scale / dmax;
            bool found = false;
            for (int h = 0; h < 80; ++h, trial *= 0.5) {
                const auto x = step(s, d, trial, nullptr);
                if (evaluate(data, x, model, false, threads).mse <= e.mse + 1e-4 * trial * slope) {
                    found = true;
                    break;
                }
            }
            if (!found) {
                diag << "line search found no descent step; ";
                st.stop = StopReason::max_iterations;
                break;
            }
            eps = trial;
            st.initial_epsilon = eps;
        }
        std::size_t clamps = 0;
        auto x = step(s, d, eps, &clamps);
        ++k;
        auto ex = evaluate(data, x, model, true, threads);
        const double next = fitness_from_mse(ex.mse);
        if (config.backtrack && !(next >= phi)) {
            ++st.rejected_steps;
            eps *= 0.5;
            st.history.emplace_back(k, phi);
            if (eps < 1e-12 * st.initial_epsilon) {
                diag << "step size collapsed after " << st.rejected_steps << " rejected steps at iteration " << k
                     << "; ";
                st.stop = StopReason::diverged;
                break;
            }
            continue;
        }
        s = std::move(x);
        e = std::move(ex);
        st.clamp_events += clamps;
        decreasing = next < phi ? decreasing + 1 : 0;
        phi = next;
        st.history.emplace_back(k, phi);
        if (config.trace_every > 0 && k % config.trace_every == 0) st.trace.emplace_back(k, s);
        offer(k);
        if (!std::isfinite(phi)) {
            diag << "non-finite fitness at iteration " << k << "; ";
            st.stop = StopReason::diverged;
            break;
        }
        if (decreasing >= config.divergence_window) {
            diag << "fitness decreased for " << decreasing << " consecutive steps (epsilon " << eps
                 << ", fitness " << phi << ") at iteration " << k << "; ";
            st.stop = StopReason::diverged;
            break;
        }
    }

    st.iteration = k;
    st.epsilon = eps;
    st.fitness = phi;
    st.estimate = NoiseSpectrum(grid, s, grid.front());
    const double rms = std::sqrt(e.mse);
    st.gradient.resize(m);
    for (std::size_t i = 0; i < m; ++i) st.gradient[i] = rms > 0.0 ? -e.gradient[i] / (2.0 * rms) : 0.0;
    std::sort(reservoir.begin(), reservoir.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [iter, x] : reservoir) {
        auto a = audit_gradient(data, x, model, config.audit_step, config.audit_tolerance, threads);
        a.iteration = iter;
        st.audits.push_back(a);
    }
    if (st.clamp_events > 0) diag << st.clamp_events << " negative proposals clamped to 0; ";
    st.diagnostics = diag.str();
    return st;
}

NoiseSpectrum smooth_estimate(const NoiseSpectrum& estimate, double window, double band_lo, double band_hi) {
    require(window >= 0.0, "smooth_estimate: window must be >= 0");
    const auto& grid = estimate.grid();
    const auto v = estimate.values();
    std::vector<double> out(v.begin(), v.end());
    const double half = 0.5 * window;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double wi = grid[i];
        if (wi < band_lo || wi > band_hi) continue;
        double n = 0, sx = 0, sy = 0;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t j = 0; j < grid.size(); ++j) {
            if (std::abs(grid[j] - wi) > half || v[j] <= 0.0) continue;
            pts.emplace_back(std::log(grid[j]), std::log(v[j]));
            sx += pts.back().first;
            sy += pts.back().second;
            n += 1;
        }
        if (pts.size() < 2) continue;
        const double mx = sx / n, my = sy / n;
        double cxx = 0, cxy = 0;
        for (const auto& [x, y] : pts) {
            cxx += (x - mx) * (x - mx);
            cxy += (x - mx) * (y - my);
        }
        out[i] = std::exp(my + (cxx > 0.0 ? cxy / cxx : 0.0) * (std::log(wi) - mx));
    }
    return NoiseSpectrum(grid, std::move(out), estimate.plateau_omega());
}

NoiseSpectrum smooth_estimate(const ReconstructionState& state, const ProtocolConfig& config) {
    const auto [lo, hi] = config.artifact_band();
    return smooth_estimate(state.estimate, config.effective_window(), lo, hi);
}

}  // namespace cwnoise
