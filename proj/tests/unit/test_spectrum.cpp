#include "cwnoise/error.hpp"
#include "cwnoise/spectrum.hpp"

#include <doctest.h>

#include <cmath>

using namespace cwnoise;

TEST_CASE("log grid hits its end points and is increasing") {
    const auto g = FrequencyGrid::log_spaced(0.5, 800.0, 37);
    CHECK(g.size() == 37);
    CHECK(g.front() == 0.5);
    CHECK(g.back() == 800.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
    CHECK(g[18] == doctest::Approx(std::sqrt(0.5 * 800.0)).epsilon(1e-12));
}

TEST_CASE("grid rejects unsorted or negative nodes") {
    CHECK_THROWS_AS(FrequencyGrid({1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(FrequencyGrid({-1.0, 1.0}), ValidationError);
    CHECK_THROWS_AS(FrequencyGrid::log_spaced(0.0, 1.0, 5), ValidationError);
}

TEST_CASE("fingerprint separates grids") {
    const auto a = FrequencyGrid::log_spaced(1, 100, 20);
    const auto b = FrequencyGrid::log_spaced(1, 100, 21);
    CHECK(a.fingerprint() == FrequencyGrid::log_spaced(1, 100, 20).fingerprint());
    CHECK(a.fingerprint() != b.fingerprint());
}

TEST_CASE("power law with plateau") {
    const auto g = FrequencyGrid::log_spaced(0.01, 1000.0, 50);
    const auto s = power_law_spectrum(30.0, -1.0, 1.0, g);
    CHECK(s(0.0) == doctest::Approx(30.0));
    CHECK(s(0.3) == doctest::Approx(30.0));
    CHECK(s(1.0) == doctest::Approx(30.0));
    // log-log interpolation reproduces a power law between nodes
    for (double w : {1.7, 12.3, 35.0, 517.0}) CHECK(s(w) == doctest::Approx(30.0 / w).epsilon(1e-12));
    const auto s2 = power_law_spectrum(30.0, -2.0, 1.0, g);
    CHECK(s2(10.0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("interpolation is clamped above the grid and rejects negative frequency") {
    const FrequencyGrid g({1.0, 2.0, 4.0});
    const NoiseSpectrum s(g, {4.0, 2.0, 1.0}, 1.0);
    CHECK(s(100.0) == doctest::Approx(1.0));
    CHECK(interpolate(s, 3.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-12));
    CHECK_THROWS_AS(interpolate(s, -1.0), ValidationError);
}

TEST_CASE("zero nodes switch to linear interpolation") {
    const FrequencyGrid g({1.0, 2.0});
    const NoiseSpectrum s(g, {2.0, 0.0}, 1.0);
    CHECK(s(1.5) == doctest::Approx(1.0));
}

TEST_CASE("integral of a power law") {
    const auto g = FrequencyGrid::log_spaced(0.01, 1000.0, 80);
    const auto s = power_law_spectrum(30.0, -1.0, 1.0, g);
    // 30 on [0,1] plus 30 ln(100) on [1,100]
    CHECK(integrate(s, 0.0, 100.0) == doctest::Approx(30.0 + 30.0 * std::log(100.0)).epsilon(1e-9));
    const auto flat = power_law_spectrum(5.0, 0.0, 1.0, g);
    CHECK(integrate(flat, 2.0, 7.0) == doctest::Approx(25.0).epsilon(1e-12));
}

TEST_CASE("scaling") {
    const auto g = FrequencyGrid::log_spaced(1, 10, 5);
    const auto s = power_law_spectrum(2.0, -1.0, 1.0, g).scaled(3.0);
    CHECK(s(2.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(s.scaled(-1.0), ValidationError);
}
