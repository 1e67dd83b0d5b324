#include "cwnoise/error.hpp"
#include "cwnoise/estimation.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace cwnoise;

namespace {

DecayCurve exp_curve(double a, double r, double T, std::size_t n, double rabi = 10.0) {
    DecayCurve c;
    c.rabi = rabi;
    for (std::size_t j = 0; j <= n; ++j) {
        const double t = T * static_cast<double>(j) / static_cast<double>(n);
        c.times.push_back(t);
        c.mean_sigma_x.push_back(a * std::exp(-r * t));
    }
    return c;
}

}  // namespace

TEST_CASE("noise-free exponential is recovered exactly") {
    const auto c = exp_curve(0.97, 2.5, 2.0, 60);
    const auto fit = fit_exponential(c);
    CHECK(fit.rate == doctest::Approx(2.5).epsilon(1e-9));
    CHECK(fit.amplitude == doctest::Approx(0.97).epsilon(1e-9));
    CHECK(fit.s0() == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(fit.residual_rms < 1e-10);
    CHECK(fit.n_points == 61);
}

TEST_CASE("fixed amplitude and fit windows") {
    const auto c = exp_curve(1.0, 0.8, 3.0, 90);
    FitOptions o;
    o.fixed_amplitude = true;
    const auto fit = fit_exponential(c, o);
    CHECK(fit.fixed_amplitude);
    CHECK(fit.amplitude == 1.0);
    CHECK(fit.rate == doctest::Approx(0.8).epsilon(1e-9));
    o.t_min = 1.0;
    const auto late = fit_exponential(c, o);
    CHECK(late.window_start == doctest::Approx(1.0));
    CHECK(late.n_points < fit.n_points);
    FitOptions tail;
    tail.tail_window = true;
    CHECK(fit_exponential(c, tail).window_start == doctest::Approx(2.0 * std::numbers::pi / c.rabi));
}

TEST_CASE("weighted fit uses the standard errors") {
    auto c = exp_curve(1.0, 1.2, 2.0, 40);
    c.std_err.assign(c.size(), 1e-3);
    // one wild point with a huge error bar barely moves a weighted fit
    c.mean_sigma_x[20] += 0.2;
    c.std_err[20] = 10.0;
    const auto w = fit_exponential(c);
    CHECK(w.weighted);
    CHECK(w.rate == doctest::Approx(1.2).epsilon(1e-3));
    FitOptions o;
    o.weighted = false;
    const auto u = fit_exponential(c, o);
    CHECK_FALSE(u.weighted);
    CHECK(std::abs(u.rate - 1.2) > std::abs(w.rate - 1.2));
}

TEST_CASE("too few points is a validation error") {
    CHECK_THROWS_AS(fit_exponential(exp_curve(1.0, 1.0, 1.0, 5)), ValidationError);
}

TEST_CASE("sweep of exact exponentials reproduces a power law") {
    std::vector<DecayCurve> curves;
    for (double w : {20.0, 30.0, 45.0, 70.0, 100.0}) curves.push_back(exp_curve(1.0, 15.0 / w, 20.0, 100, w));
    const auto sweep = sweep_spectroscopy(curves, {}, 1);
    CHECK(sweep.valid().size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(sweep.s0[i] == doctest::Approx(30.0 / sweep.probes[i]).epsilon(1e-8));
    const auto grid = FrequencyGrid::log_spaced(1.0, 400.0, 40);
    const auto s = sweep.to_spectrum(grid);
    // inside, below (power-law extrapolation) and above the probes
    for (std::size_t i = 0; i < grid.size(); ++i) CHECK(s.values()[i] == doctest::Approx(30.0 / grid[i]).epsilon(1e-6));
}

TEST_CASE("fast relaxation relative to the drive marks a probe unreliable") {
    std::vector<DecayCurve> curves;
    curves.push_back(exp_curve(1.0, 2.0, 5.0, 100, 4.0));   // 2π·4/4 > 1
    curves.push_back(exp_curve(1.0, 0.2, 20.0, 100, 40.0));
    curves.push_back(exp_curve(1.0, 0.1, 20.0, 100, 80.0));
    const auto sweep = sweep_spectroscopy(curves, {}, 1);
    CHECK_FALSE(sweep.reliable[0]);
    CHECK(sweep.reliable[1]);
    CHECK(sweep.reliable[2]);
}

TEST_CASE("power-law fit") {
    const auto grid = FrequencyGrid::log_spaced(0.01, 1000.0, 200);
    const auto s = power_law_spectrum(30.0, -1.3, 1.0, grid);
    const auto p = fit_power_law(s, 2.0, 200.0);
    CHECK(p.alpha == doctest::Approx(-1.3).epsilon(1e-10));
    CHECK(p.C == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(p.residual < 1e-10);
    CHECK_THROWS_AS(fit_power_law(s, 0.5, 200.0), ValidationError);
}
