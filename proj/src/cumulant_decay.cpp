#include "cwnoise/cumulant_decay.hpp"

#include "cwnoise/error.hpp"
#include "cwnoise/parallel.hpp"

#include <cmath>
#include <numbers>

namespace cwnoise {

using detail::require;

namespace {

constexpr double pi = std::numbers::pi;

void check_nodes(std::span<const double> s, const CumulantModel& model) {
    require(s.size() == model.grid().size(), "node vector does not match the kernel grid");
}

}  // namespace

CumulantModel::CumulantModel(std::shared_ptr<const KernelTables> kernels) : kernels_(std::move(kernels)) {
    require(kernels_ != nullptr, "CumulantModel: null kernels");
    for (double w : kernels_->weights()) require(w > 0.0, "CumulantModel: quadrature weights must be positive");
}

CumulantModel CumulantModel::build(const FrequencyGrid& grid, double rabi, std::span<const double> times,
                                   const KernelOptions& options) {
    return CumulantModel(std::make_shared<const KernelTables>(tabulate_kernels(grid, rabi, times, options)));
}

std::vector<double> CumulantModel::node_values(const NoiseSpectrum& spectrum) const {
    std::vector<double> s(grid().size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = spectrum(grid()[i]);
    return s;
}

FrequencyGrid default_model_grid(double lo, double rabi, std::size_t n, double omega_max) {
    require(lo > 0.0, "default_model_grid: lo must be > 0");
    const double hi = std::max(omega_max, 20.0 * rabi);
    require(hi > lo, "default_model_grid: empty range");
    return FrequencyGrid::log_spaced(lo, hi, n);
}

double chi2_nodes(std::span<const double> s, const CumulantModel& model, std::size_t t) {
    check_nodes(s, model);
    const auto k = model.kernels().f2(t).values;
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += s[i] * k[i];
    return -acc / pi;
}

double chi4_nodes(std::span<const double> s, const CumulantModel& model, std::size_t t) {
    check_nodes(s, model);
    const auto k = model.kernels().f4(t);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == 0.0) continue;
        double row = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) row += k(i, j) * s[j];
        acc += s[i] * row;
    }
    return acc / (2.0 * pi * pi);
}

void chi2_gradient(const CumulantModel& model, std::size_t t, std::span<double> out) {
    require(out.size() == model.grid().size(), "chi2_gradient: output size mismatch");
    const auto k = model.kernels().f2(t).values;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = -k[i] / pi;
}

void chi4_gradient(std::span<const double> s, const CumulantModel& model, std::size_t t, std::span<double> out) {
    check_nodes(s, model);
    require(out.size() == s.size(), "chi4_gradient: output size mismatch");
    const auto k = model.kernels().f4(t);
    for (std::size_t i = 0; i < s.size(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < s.size(); ++j) row += k(i, j) * s[j];
        out[i] = row / (pi * pi);
    }
}

double chi2(const NoiseSpectrum& spectrum, const CumulantModel& model, double T) {
    return chi2_nodes(model.node_values(spectrum), model, model.kernels().time_index(T));
}

double chi4(const NoiseSpectrum& spectrum, const CumulantModel& model, double T) {
    return chi4_nodes(model.node_values(spectrum), model, model.kernels().time_index(T));
}

DecayCurve model_decay_nodes(std::span<const double> s, const CumulantModel& model, int order,
                             std::size_t threads) {
    require(order == 2 || order == 4, "model_decay: order must be 2 or 4");
    check_nodes(s, model);
    DecayCurve c;
    c.times.assign(model.times().begin(), model.times().end());
    c.mean_sigma_x.resize(c.times.size());
    c.rabi = model.rabi();
    parallel_for(
        c.times.size(),
        [&](std::size_t t) {
            double x = chi2_nodes(s, model, t);
            if (order == 4) x += chi4_nodes(s, model, t);
            c.mean_sigma_x[t] = c.times[t] == 0.0 ? 1.0 : std::exp(x);
        },
        threads);
    return c;
}

DecayCurve model_decay(const NoiseSpectrum& spectrum, const CumulantModel& model, int order,
                       std::size_t threads) {
    const auto s = model.node_values(spectrum);
    return model_decay_nodes(s, model, order, threads);
}

DecayCurve exponential_decay(const NoiseSpectrum& spectrum, double rabi, std::span<const double> times) {
    DecayCurve c;
    c.times.assign(times.begin(), times.end());
    c.rabi = rabi;
    const double rate = 0.5 * spectrum(rabi);
    for (double t : times) c.mean_sigma_x.push_back(std::exp(-rate * t));
    return c;
}

}  // namespace cwnoise
