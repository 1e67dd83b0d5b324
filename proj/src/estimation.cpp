#include "cwnoise/estimation.hpp"

#include "cwnoise/error.hpp"
#include "cwnoise/parallel.hpp"

#include <gsl/gsl_blas.h>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multifit_nlinear.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace cwnoise {

using detail::require;

namespace {

struct FitData {
    std::vector<double> t, y, w;  // w = 1/σ
    bool fixed_amplitude;
};

int residuals(const gsl_vector* p, void* data, gsl_vector* f) {
    const auto& d = *static_cast<const FitData*>(data);
    const double a = d.fixed_amplitude ? 1.0 : gsl_vector_get(p, 0);
    const double r = gsl_vector_get(p, d.fixed_amplitude ? 0 : 1);
    for (std::size_t i = 0; i < d.t.size(); ++i)
        gsl_vector_set(f, i, d.w[i] * (a * std::exp(-r * d.t[i]) - d.y[i]));
    return GSL_SUCCESS;
}

int jacobian(const gsl_vector* p, void* data, gsl_matrix* J) {
    const auto& d = *static_cast<const FitData*>(data);
    const double a = d.fixed_amplitude ? 1.0 : gsl_vector_get(p, 0);
    const double r = gsl_vector_get(p, d.fixed_amplitude ? 0 : 1);
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        const double e = std::exp(-r * d.t[i]);
        if (d.fixed_amplitude) {
            gsl_matrix_set(J, i, 0, -d.w[i] * d.t[i] * e);
        } else {
            gsl_matrix_set(J, i, 0, d.w[i] * e);
            gsl_matrix_set(J, i, 1, -d.w[i] * a * d.t[i] * e);
        }
    }
    return GSL_SUCCESS;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

double ExponentialFit::rate_std_err() const {
    return std::sqrt(std::max(0.0, covariance[3]));
}

ExponentialFit fit_exponential(const DecayCurve& curve, const FitOptions& options) {
    require(curve.times.size() == curve.mean_sigma_x.size(), "fit_exponential: malformed curve");
    double start = options.t_min;
    if (options.tail_window) {
        require(curve.rabi > 0.0, "fit_exponential: tail window needs the drive frequency");
        start = std::max(start, 2.0 * std::numbers::pi / curve.rabi);
    }

    FitData d;
    d.fixed_amplitude = options.fixed_amplitude;
    const bool weighted = options.weighted && curve.has_uncertainty();
    double floor = 0.0;
    if (weighted) {
        std::vector<double> pos;
        for (double s : curve.std_err)
            if (s > 0.0) pos.push_back(s);
        // σ = 0 at t = 0 (every trajectory starts at +x); floor it so no
        // single point dominates.
        floor = pos.empty() ? 1.0 : 0.5 * median(pos);
    }
    for (std::size_t i = 0; i < curve.size(); ++i) {
        if (curve.times[i] < start) continue;
        d.t.push_back(curve.times[i]);
        d.y.push_back(curve.mean_sigma_x[i]);
        d.w.push_back(weighted ? 1.0 / std::max(curve.std_err[i], floor) : 1.0);
    }
    require(d.t.size() >= 10, "fit_exponential: need at least 10 points in the fit window (have " +
                                  std::to_string(d.t.size()) + ")");

    // Start from a log-linear fit through the positive samples.
    double r0 = 1.0 / std::max(d.t.back(), 1e-300);
    {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
        for (std::size_t i = 0; i < d.t.size(); ++i) {
            if (d.y[i] <= 0.0) continue;
            const double ly = std::log(d.y[i]);
            sx += d.t[i];
            sy += ly;
            sxx += d.t[i] * d.t[i];
            sxy += d.t[i] * ly;
            n += 1;
        }
        const double den = n * sxx - sx * sx;
        if (n >= 2 && den > 0.0) {
            const double slope = (n * sxy - sx * sy) / den;
            if (std::isfinite(slope) && slope < 0.0) r0 = -slope;
        }
    }

    const std::size_t np = options.fixed_amplitude ? 1 : 2;
    gsl_multifit_nlinear_fdf fdf;
    fdf.f = residuals;
    fdf.df = jacobian;
    fdf.fvv = nullptr;
    fdf.n = d.t.size();
    fdf.p = np;
    fdf.params = &d;

    gsl_multifit_nlinear_parameters params = gsl_multifit_nlinear_default_parameters();
    auto* w = gsl_multifit_nlinear_alloc(gsl_multifit_nlinear_trust, &params, fdf.n, np);
    if (!w) throw NumericalError("fit_exponential: solver allocation failed");
    gsl_vector* x = gsl_vector_alloc(np);
    if (options.fixed_amplitude) {
        gsl_vector_set(x, 0, r0);
    } else {
        gsl_vector_set(x, 0, 1.0);
        gsl_vector_set(x, 1, r0);
    }
    gsl_multifit_nlinear_init(x, &fdf, w);
    int info = 0;
    const int status = gsl_multifit_nlinear_driver(options.max_iterations, 1e-12, 1e-12, 1e-12, nullptr, nullptr,
                                                   &info, w);

    ExponentialFit fit;
    fit.fixed_amplitude = options.fixed_amplitude;
    fit.weighted = weighted;
    fit.window_start = start;
    fit.n_points = d.t.size();
    fit.iterations = gsl_multifit_nlinear_niter(w);
    const gsl_vector* p = gsl_multifit_nlinear_position(w);
    fit.amplitude = options.fixed_amplitude ? 1.0 : gsl_vector_get(p, 0);
    fit.rate = gsl_vector_get(p, np - 1);

    gsl_matrix* cov = gsl_matrix_alloc(np, np);
    gsl_matrix* J = gsl_multifit_nlinear_jac(w);
    gsl_multifit_nlinear_covar(J, 0.0, cov);
    const gsl_vector* f = gsl_multifit_nlinear_residual(w);
    double chisq = 0.0;
    gsl_blas_ddot(f, f, &chisq);
    // Unweighted fits scale the covariance by the residual variance.
    const double dof = static_cast<double>(fdf.n > np ? fdf.n - np : 1);
    const double scale = weighted ? 1.0 : chisq / dof;
    if (options.fixed_amplitude) {
        fit.covariance = {0.0, 0.0, 0.0, scale * gsl_matrix_get(cov, 0, 0)};
    } else {
        fit.covariance = {scale * gsl_matrix_get(cov, 0, 0), scale * gsl_matrix_get(cov, 0, 1),
                          scale * gsl_matrix_get(cov, 1, 0), scale * gsl_matrix_get(cov, 1, 1)};
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < d.t.size(); ++i) {
        const double e = fit.amplitude * std::exp(-fit.rate * d.t[i]) - d.y[i];
        ss += e * e;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(d.t.size()));

    gsl_matrix_free(cov);
    gsl_vector_free(x);
    gsl_multifit_nlinear_free(w);

    // GSL reports a first iteration that cannot lower the cost as EMAXITER
    // with info = ENOPROG; that happens when the log-linear start already
    // solves the problem.
    const bool start_optimal = status == GSL_EMAXITER && info == GSL_ENOPROG && fit.iterations <= 1;
    if ((status != GSL_SUCCESS && !start_optimal) || !std::isfinite(fit.rate) || !std::isfinite(fit.amplitude))
        throw NumericalError("fit_exponential: solver did not converge (status " + std::to_string(status) +
                             ", " + std::to_string(fit.iterations) + " iterations, rate " +
                             std::to_string(fit.rate) + ", Omega " + std::to_string(curve.rabi) + ")");
    return fit;
}

std::vector<std::size_t> SweepResult::valid() const {
    std::vector<std::size_t> v;
    for (std::size_t i = 0; i < probes.size(); ++i)
        if (i < reliable.size() && reliable[i]) v.push_back(i);
    return v;
}

void classify_probes(SweepResult& sweep, double residual_factor, double adiabatic_limit) {
    std::vector<double> residuals;
    for (const auto& f : sweep.fits)
        if (f) residuals.push_back(f->residual_rms);
    const double med = residuals.empty() ? 0.0 : median(residuals);
    sweep.reliable.assign(sweep.probes.size(), false);
    for (std::size_t p = 0; p < sweep.probes.size(); ++p) {
        if (!sweep.fits[p] || !(sweep.s0[p] > 0.0)) continue;
        const bool smooth = sweep.fits[p]->residual_rms <= residual_factor * med;
        const bool adiabatic = 2.0 * std::numbers::pi * sweep.s0[p] / sweep.probes[p] <= adiabatic_limit;
        sweep.reliable[p] = smooth && adiabatic;
    }
}

NoiseSpectrum SweepResult::to_spectrum(const FrequencyGrid& grid) const {
    const auto v = valid();
    require(!v.empty(), "sweep: no reliable probe");
    const double lowest = probes[v.front()];

    // Low-side continuation: log-log slope over the reliable probes within
    // extrapolation_span of the lowest one.
    double low_slope = 0.0;
    {
        double n = 0, sx = 0, sy = 0;
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i : v) {
            if (probes[i] > extrapolation_span * lowest * (1.0 + 1e-12)) break;
            pts.emplace_back(std::log(probes[i]), std::log(s0[i]));
            sx += pts.back().first;
            sy += pts.back().second;
            n += 1;
        }
        if (pts.size() >= 2) {
            const double mx = sx / n, my = sy / n;
            double cxx = 0, cxy = 0;
            for (const auto& [x, y] : pts) {
                cxx += (x - mx) * (x - mx);
                cxy += (x - mx) * (y - my);
            }
            if (cxx > 0.0) low_slope = cxy / cxx;
        }
    }

    std::vector<double> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double w = grid[i];
        if (w <= lowest) {
            out[i] = s0[v.front()] * std::pow(w / lowest, low_slope);
            continue;
        }
        if (v.size() == 1) {
            out[i] = s0[v.front()];
            continue;
        }
        // Segment containing w, or the last one for extrapolation.
        std::size_t k = 1;
        while (k + 1 < v.size() && probes[v[k]] < w) ++k;
        const double x0 = std::log(probes[v[k - 1]]), x1 = std::log(probes[v[k]]);
        const double y0 = std::log(s0[v[k - 1]]), y1 = std::log(s0[v[k]]);
        out[i] = std::exp(y0 + (y1 - y0) * (std::log(w) - x0) / (x1 - x0));
    }
    return NoiseSpectrum(grid, std::move(out), grid.front());
}

SweepResult sweep_spectroscopy(std::span<const DecayCurve> curves, const SweepOptions& options,
                               std::size_t threads) {
    require(!curves.empty(), "sweep_spectroscopy: no curves");
    std::vector<std::size_t> order(curves.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return curves[a].rabi < curves[b].rabi; });
    SweepResult r;
    r.extrapolation_span = options.extrapolation_span;
    r.probes.resize(curves.size());
    r.fits.resize(curves.size());
    r.s0.assign(curves.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < order.size(); ++i) {
        r.probes[i] = curves[order[i]].rabi;
        require(r.probes[i] > 0.0, "sweep_spectroscopy: every curve needs its drive frequency");
        if (i > 0) require(r.probes[i] > r.probes[i - 1], "sweep_spectroscopy: duplicate probe frequency");
    }
    parallel_for(
        order.size(),
        [&](std::size_t i) {
            try {
                r.fits[i] = fit_exponential(curves[order[i]], options.fit);
                r.s0[i] = r.fits[i]->s0();
            } catch (const std::exception&) {
                r.fits[i].reset();
            }
        },
        threads);
    classify_probes(r, options.residual_factor, options.adiabatic_limit);
    return r;
}

PowerLawFit fit_power_law(const NoiseSpectrum& spectrum, double omega_lo, double omega_hi) {
    require(omega_lo > spectrum.plateau_omega(), "fit_power_law: range must exclude the plateau");
    require(omega_hi > omega_lo, "fit_power_law: empty range");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < spectrum.grid().size(); ++i) {
        const double w = spectrum.grid()[i];
        const double s = spectrum.values()[i];
        if (w < omega_lo || w > omega_hi || s <= 0.0) continue;
        xs.push_back(std::log(w));
        ys.push_back(std::log(s));
    }
    require(xs.size() >= 2, "fit_power_law: fewer than two positive nodes in range");
    const double n = static_cast<double>(xs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sx += xs[i];
        sy += ys[i];
    }
    PowerLawFit f;
    // Centred form keeps the normal equations well conditioned.
    const double mx = sx / n, my = sy / n;
    double cxx = 0, cxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        cxx += (xs[i] - mx) * (xs[i] - mx);
        cxy += (xs[i] - mx) * (ys[i] - my);
    }
    require(cxx > 0.0, "fit_power_law: degenerate range");
    f.alpha = cxy / cxx;
    f.C = std::exp(my - f.alpha * mx);
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double e = ys[i] - (my + f.alpha * (xs[i] - mx));
        ss += e * e;
    }
    f.residual = std::sqrt(ss / n);
    f.omega_lo = omega_lo;
    f.omega_hi = omega_hi;
    f.n_points = xs.size();
    return f;
}

}  // namespace cwnoise
