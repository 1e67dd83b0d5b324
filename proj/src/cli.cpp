#include "cwnoise/cli.hpp"

#include "cwnoise/cumulant_decay.hpp"
#include "cwnoise/error.hpp"
#include "cwnoise/estimation.hpp"
#include "cwnoise/io.hpp"
#include "cwnoise/noise_gen.hpp"
#include "cwnoise/parallel.hpp"
#include "cwnoise/quantum_sim.hpp"
#include "cwnoise/reconstruct.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>

namespace cwnoise::cli {

namespace fs = std::filesystem;
using detail::require;
using nlohmann::ordered_json;

namespace {

// Visits every field of two configs in lockstep: f(name, a.field, b.field, help).
template <class F>
void fields(RunConfig& a, RunConfig& b, F&& f) {
    f("spectrum_kind", a.spectrum_kind, b.spectrum_kind, "power_law or file");
    f("spectrum_amplitude", a.spectrum_amplitude, b.spectrum_amplitude, "S = amplitude * omega^exponent [1/s]");
    f("spectrum_exponent", a.spectrum_exponent, b.spectrum_exponent, "power-law exponent");
    f("spectrum_plateau", a.spectrum_plateau, b.spectrum_plateau, "S is constant below this [rad/s]");
    f("spectrum_file", a.spectrum_file, b.spectrum_file, "spectrum CSV (omega, S)");
    f("probes", a.probes, b.probes, "sweep drive amplitudes [rad/s]");
    f("sweep_duration", a.sweep_duration, b.sweep_duration, "sweep record length [s]; 0: factor/S(omega)");
    f("duration_factor", a.duration_factor, b.duration_factor, "automatic sweep duration = factor/S(omega)");
    f("min_duration", a.min_duration, b.min_duration, "lower clamp on automatic durations [s]");
    f("max_duration", a.max_duration, b.max_duration, "upper clamp on automatic durations [s]");
    f("sweep_intervals", a.sweep_intervals, b.sweep_intervals, "recorded intervals per sweep curve");
    f("sweep_realizations", a.sweep_realizations, b.sweep_realizations, "noise realizations per sweep curve");
    f("detail_rabi", a.detail_rabi, b.detail_rabi, "drive amplitude of the detail curve [rad/s]; 0: none");
    f("detail_duration", a.detail_duration, b.detail_duration, "detail curve length T [s]");
    f("detail_intervals", a.detail_intervals, b.detail_intervals, "recorded intervals of the detail curve");
    f("detail_realizations", a.detail_realizations, b.detail_realizations, "noise realizations of the detail curve");
    f("input_dir", a.input_dir, b.input_dir, "directory written by simulate");
    f("sweep_files", a.sweep_files, b.sweep_files, "sweep curve CSVs");
    f("detail_file", a.detail_file, b.detail_file, "detail curve CSV");
    f("fit_fixed_amplitude", a.fit_fixed_amplitude, b.fit_fixed_amplitude, "fix the exponential amplitude to 1");
    f("fit_tail_window", a.fit_tail_window, b.fit_tail_window, "fit only t > 2pi/omega");
    f("residual_factor", a.residual_factor, b.residual_factor, "reliability cut on fit residuals");
    f("adiabatic_limit", a.adiabatic_limit, b.adiabatic_limit, "reliability cut on 2pi S0/omega");
    f("extrapolation_span", a.extrapolation_span, b.extrapolation_span, "span of the low-side power-law extrapolation");
    f("grid_lo", a.grid_lo, b.grid_lo, "lowest kernel node [rad/s]");
    f("grid_points", a.grid_points, b.grid_points, "kernel nodes");
    f("update_mask", a.update_mask, b.update_mask, "all or sweep");
    f("epsilon", a.epsilon, b.epsilon, "step size; 0: line search");
    f("delta", a.delta, b.delta, "stop once fitness >= 1 - delta");
    f("max_iterations", a.max_iterations, b.max_iterations, "iteration cap");
    f("relative_step", a.relative_step, b.relative_step, "scale steps by the current estimate");
    f("backtrack", a.backtrack, b.backtrack, "undo steps that lower the fitness and halve epsilon");
    f("smoothing_window", a.smoothing_window, b.smoothing_window, "[rad/s]; 0: 2pi/T");
    f("artifact_lo", a.artifact_lo, b.artifact_lo, "smoothing band start [rad/s]; 0: omega_P/4");
    f("artifact_hi", a.artifact_hi, b.artifact_hi, "smoothing band end [rad/s]; 0: omega_P");
    f("divergence_window", a.divergence_window, b.divergence_window, "consecutive fitness drops that end a run");
    f("audit_count", a.audit_count, b.audit_count, "iterates audited against finite differences");
    f("trace_every", a.trace_every, b.trace_every, "write S'_k every n iterations; 0: off");
    f("powerlaw_lo", a.powerlaw_lo, b.powerlaw_lo, "power-law fit start [rad/s]; 0: 2*grid_lo");
    f("powerlaw_hi", a.powerlaw_hi, b.powerlaw_hi, "power-law fit end [rad/s]; 0: highest reliable probe");
    f("errormap_omegas", a.errormap_omegas, b.errormap_omegas, "drive amplitudes of the error map [rad/s]");
    f("errormap_duration", a.errormap_duration, b.errormap_duration, "error map record length [s]");
    f("errormap_intervals", a.errormap_intervals, b.errormap_intervals, "recorded intervals per error-map curve");
    f("errormap_realizations", a.errormap_realizations, b.errormap_realizations, "noise realizations per curve");
    f("model_points", a.model_points, b.model_points, "kernel nodes of the error-map models");
    f("kernel_rabi", a.kernel_rabi, b.kernel_rabi, "drive amplitude of the kernel dump [rad/s]");
    f("kernel_duration", a.kernel_duration, b.kernel_duration, "last tabulated time [s]");
    f("kernel_intervals", a.kernel_intervals, b.kernel_intervals, "tabulated intervals");
    f("kernel_points", a.kernel_points, b.kernel_points, "kernel nodes");
    f("kernel_lo", a.kernel_lo, b.kernel_lo, "lowest kernel node [rad/s]");
    f("fit_files", a.fit_files, b.fit_files, "decay curve CSVs to fit");
    f("output_dir", a.output_dir, b.output_dir, "output directory");
    f("seed", a.seed, b.seed, "base random seed");
    f("threads", a.threads, b.threads, "worker threads; 0: CWNOISE_THREADS or hardware");
}

std::string flag_name(std::string name) {
    std::replace(name.begin(), name.end(), '_', '-');
    return "--" + name;
}

std::size_t thread_count(const RunConfig& c) { return c.threads > 0 ? c.threads : default_thread_count(); }

double highest_frequency(const RunConfig& c) {
    double hi = std::max({1.0, c.detail_rabi, c.kernel_rabi});
    for (double w : c.probes) hi = std::max(hi, w);
    for (double w : c.errormap_omegas) hi = std::max(hi, w);
    return hi;
}

NoiseSpectrum input_spectrum(const RunConfig& c) {
    if (c.spectrum_kind == "file") return io::read_spectrum(c.spectrum_file);
    const double lo = 1e-3 * std::min(1.0, c.spectrum_plateau);
    const auto grid = FrequencyGrid::log_spaced(lo, 100.0 * highest_frequency(c), 400);
    return power_law_spectrum(c.spectrum_amplitude, c.spectrum_exponent, c.spectrum_plateau, grid);
}

double sweep_duration(const RunConfig& c, const NoiseSpectrum& s, double rabi) {
    if (c.sweep_duration > 0.0) return c.sweep_duration;
    const double rate = s(rabi);
    if (rate <= 0.0) return c.max_duration;
    return std::clamp(c.duration_factor / rate, c.min_duration, c.max_duration);
}

std::string indexed(const std::string& stem, std::size_t k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%03zu.csv", k);
    return stem + buf;
}

// Collects output names (relative to output_dir) and finishes with the manifest.
class Outputs {
public:
    explicit Outputs(const RunConfig& c) : config_(c), dir_(c.output_dir) { fs::create_directories(dir_); }

    fs::path add(const std::string& name) {
        names_.push_back(name);
        return dir_ / name;
    }

    std::vector<std::string> finish(const ordered_json& summary = ordered_json::object()) {
        ordered_json m;
        m["schema"] = io::json_schema;
        m["kind"] = "manifest";
        m["command"] = config_.command;
        m["config"] = to_json(config_);
        m["outputs"] = names_;
        if (!summary.empty()) m["summary"] = summary;
        io::write_json(add("manifest.json"), m);
        std::vector<std::string> paths;
        for (const auto& n : names_) paths.push_back((dir_ / n).string());
        return paths;
    }

private:
    const RunConfig& config_;
    fs::path dir_;
    std::vector<std::string> names_;
};

void write_history(const fs::path& path, const ReconstructionState& st) {
    io::CsvTable t;
    t.kind = "fitness_history";
    t.columns = {"k", "phi"};
    for (const auto& [k, phi] : st.history) t.rows.push_back({static_cast<double>(k), phi});
    io::write_csv(path, t);
}

void write_trace(const fs::path& path, const ReconstructionState& st, const FrequencyGrid& grid) {
    io::CsvTable t;
    t.kind = "estimate_trace";
    t.columns = {"k", "omega", "S"};
    for (const auto& [k, s] : st.trace)
        for (std::size_t i = 0; i < grid.size(); ++i) t.rows.push_back({static_cast<double>(k), grid[i], s[i]});
    io::write_csv(path, t);
}

void write_mask(const fs::path& path, const std::vector<bool>& mask, const FrequencyGrid& grid) {
    io::CsvTable t;
    t.kind = "update_mask";
    t.columns = {"omega", "free"};
    for (std::size_t i = 0; i < grid.size(); ++i) t.rows.push_back({grid[i], mask[i] ? 1.0 : 0.0});
    io::write_csv(path, t);
}

std::vector<fs::path> sweep_inputs(const RunConfig& c) {
    std::vector<fs::path> files(c.sweep_files.begin(), c.sweep_files.end());
    if (files.empty() && !c.input_dir.empty()) {
        require(fs::is_directory(c.input_dir), "input_dir does not exist: " + c.input_dir);
        for (const auto& e : fs::directory_iterator(c.input_dir)) {
            const auto name = e.path().filename().string();
            if (name.rfind("sweep_", 0) == 0 && e.path().extension() == ".csv") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
    }
    return files;
}

fs::path detail_input(const RunConfig& c) {
    if (!c.detail_file.empty()) return c.detail_file;
    if (!c.input_dir.empty()) return fs::path(c.input_dir) / "detail.csv";
    return {};
}

}  // namespace

void RunConfig::validate() const {
    static const std::set<std::string> commands = {"simulate", "reconstruct", "errormap", "kernels", "fit"};
    require(commands.count(command) == 1, "unknown command '" + command + "'");
    require(spectrum_kind == "power_law" || spectrum_kind == "file", "spectrum_kind must be power_law or file");
    if (spectrum_kind == "file" && command != "fit" && command != "reconstruct")
        require(!spectrum_file.empty(), "spectrum_kind=file needs spectrum_file");
    if (spectrum_kind == "power_law") {
        require(std::isfinite(spectrum_amplitude) && spectrum_amplitude >= 0.0, "spectrum_amplitude must be >= 0");
        require(std::isfinite(spectrum_exponent), "spectrum_exponent must be finite");
        require(spectrum_plateau > 0.0, "spectrum_plateau must be > 0");
    }
    require(!output_dir.empty(), "output_dir must be set");
    require(update_mask == "all" || update_mask == "sweep", "update_mask must be all or sweep");
    for (double w : probes) require(std::isfinite(w) && w > 0.0, "probes must be > 0");
    for (double w : errormap_omegas) require(std::isfinite(w) && w > 0.0, "errormap_omegas must be > 0");
    require(min_duration > 0.0 && max_duration >= min_duration, "duration clamps must satisfy 0 < min <= max");
    require(duration_factor > 0.0 && sweep_duration >= 0.0, "sweep durations must be positive");

    if (command == "simulate") {
        require(!probes.empty() || detail_rabi > 0.0, "simulate needs probes or a detail curve");
        require(sweep_intervals >= 2 && sweep_realizations >= 2, "sweep curves need >= 2 intervals and realizations");
        if (detail_rabi > 0.0) {
            require(detail_duration > 0.0, "detail_duration must be > 0");
            require(detail_intervals >= 2 && detail_realizations >= 2,
                    "the detail curve needs >= 2 intervals and realizations");
        }
    } else if (command == "reconstruct") {
        require(!sweep_files.empty() || !input_dir.empty(), "reconstruct needs sweep_files or input_dir");
        require(!detail_file.empty() || !input_dir.empty(), "reconstruct needs detail_file or input_dir");
        require(grid_lo > 0.0 && grid_points >= 4, "grid_lo must be > 0 and grid_points >= 4");
        require(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
        require(epsilon >= 0.0, "epsilon must be >= 0");
        require(powerlaw_lo >= 0.0 && powerlaw_hi >= 0.0, "power-law range must be >= 0");
    } else if (command == "errormap") {
        require(!errormap_omegas.empty(), "errormap needs errormap_omegas");
        require(errormap_duration > 0.0 && errormap_intervals >= 2 && errormap_realizations >= 2,
                "errormap needs a positive duration and >= 2 intervals and realizations");
        require(grid_lo > 0.0 && model_points >= 4, "grid_lo must be > 0 and model_points >= 4");
    } else if (command == "kernels") {
        require(kernel_rabi > 0.0 && kernel_duration > 0.0, "kernel_rabi and kernel_duration must be > 0");
        require(kernel_intervals >= 1 && kernel_points >= 2 && kernel_lo > 0.0, "kernel grid settings out of range");
    } else if (command == "fit") {
        require(!fit_files.empty() || spectrum_kind == "file", "fit needs fit_files or a spectrum file");
    }
}

ordered_json to_json(const RunConfig& config) {
    ordered_json j;
    j["command"] = config.command;
    RunConfig& c = const_cast<RunConfig&>(config);
    fields(c, c, [&](const char* name, const auto& v, const auto&, const char*) { j[name] = v; });
    return j;
}

RunConfig config_from_json(const ordered_json& in) {
    require(in.is_object(), "config must be a JSON object");
    const ordered_json& j = in.contains("config") && in.contains("outputs") ? in.at("config") : in;
    require(j.is_object(), "config must be a JSON object");
    RunConfig c;
    std::set<std::string> known = {"command"};
    fields(c, c, [&](const char* name, auto& v, auto&, const char*) {
        known.insert(name);
        if (!j.contains(name)) return;
        try {
            j.at(name).get_to(v);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(std::string("config field '") + name + "': " + e.what());
        }
    });
    for (const auto& [key, value] : j.items()) require(known.count(key) == 1, "unknown config field '" + key + "'");
    if (j.contains("command")) c.command = j.at("command").get<std::string>();
    return c;
}

RunConfig load_config(const fs::path& path) { return config_from_json(io::read_json(path)); }

std::vector<std::string> cmd_simulate(const RunConfig& config) {
    config.validate();
    const auto spectrum = input_spectrum(config);
    const std::size_t threads = thread_count(config);
    Outputs out(config);

    ordered_json summary = ordered_json::array();
    for (std::size_t k = 0; k < config.probes.size(); ++k) {
        const double w = config.probes[k];
        const double T = sweep_duration(config, spectrum, w);
        const auto sim = SimConfig::make(w, T, config.sweep_intervals, config.sweep_realizations,
                                         realization_seed(config.seed, k + 1));
        const auto curve = simulate_decay(spectrum, sim, threads);
        const auto name = indexed("sweep", k);
        io::write_decay_curve(out.add(name), curve);
        summary.push_back({{"file", name}, {"rabi", w}, {"duration", T}, {"seed", sim.seed}});
    }
    if (config.detail_rabi > 0.0) {
        const auto sim = SimConfig::make(config.detail_rabi, config.detail_duration, config.detail_intervals,
                                         config.detail_realizations, realization_seed(config.seed, 0));
        io::write_decay_curve(out.add("detail.csv"), simulate_decay(spectrum, sim, threads));
        summary.push_back({{"file", "detail.csv"},
                           {"rabi", config.detail_rabi},
                           {"duration", config.detail_duration},
                           {"seed", sim.seed}});
    }
    io::write_spectrum(out.add("input_spectrum.csv"), spectrum);
    return out.finish({{"curves", summary}});
}

std::vector<std::string> cmd_reconstruct(const RunConfig& config) {
    config.validate();
    const std::size_t threads = thread_count(config);

    const auto sweep_paths = sweep_inputs(config);
    require(!sweep_paths.empty(), "reconstruct: no sweep curves found");
    std::vector<DecayCurve> curves;
    for (const auto& p : sweep_paths) curves.push_back(io::read_decay_curve(p));
    const auto detail_path = detail_input(config);
    require(fs::exists(detail_path), "reconstruct: detail curve not found: " + detail_path.string());
    const DecayCurve detail = io::read_decay_curve(detail_path);
    require(detail.rabi > 0.0 && detail.size() >= 2, "reconstruct: detail curve needs rabi > 0 and >= 2 points");

    SweepOptions so;
    so.fit.fixed_amplitude = config.fit_fixed_amplitude;
    so.fit.tail_window = config.fit_tail_window;
    so.residual_factor = config.residual_factor;
    so.adiabatic_limit = config.adiabatic_limit;
    so.extrapolation_span = config.extrapolation_span;
    const SweepResult sweep = sweep_spectroscopy(curves, so, threads);
    const auto reliable = sweep.valid();
    require(!reliable.empty(), "reconstruct: no reliable sweep probe");

    const double rabi = detail.rabi;
    const double T = detail.times.back();
    const auto grid = reconstruction_grid(config.grid_lo, sweep.probes.back(), rabi, config.grid_points);
    KernelOptions ko;
    ko.threads = threads;
    const auto model = CumulantModel::build(grid, rabi, detail.times, ko);
    const NoiseSpectrum s0 = sweep.to_spectrum(grid);

    ProtocolConfig pc;
    pc.rabi_probe = rabi;
    pc.duration = T;
    pc.epsilon = config.epsilon;
    pc.delta = config.delta;
    pc.max_iterations = config.max_iterations;
    pc.relative_step = config.relative_step;
    pc.backtrack = config.backtrack;
    pc.trace_every = config.trace_every;
    if (config.update_mask == "sweep") pc.update_mask = default_update_mask(sweep, grid);
    pc.smoothing_window = config.smoothing_window;
    pc.artifact_lo = config.artifact_lo;
    pc.artifact_hi = config.artifact_hi;
    pc.divergence_window = config.divergence_window;
    pc.audit_count = config.audit_count;
    pc.audit_seed = config.seed;
    pc.threads = threads;
    const auto state = run_protocol(detail, s0, model, pc);
    const auto smoothed = smooth_estimate(state, pc);

    const double pl_lo = config.powerlaw_lo > 0.0 ? config.powerlaw_lo : 2.0 * config.grid_lo;
    const double pl_hi = config.powerlaw_hi > 0.0 ? config.powerlaw_hi : sweep.probes[reliable.back()];

    Outputs out(config);
    io::write_spectrum(out.add("s0.csv"), s0);
    io::write_spectrum(out.add("s_final.csv"), state.estimate);
    io::write_spectrum(out.add("s_smoothed.csv"), smoothed);
    write_history(out.add("fitness_history.csv"), state);
    write_mask(out.add("update_mask.csv"), state.mask, grid);
    if (!state.trace.empty()) write_trace(out.add("trace.csv"), state, grid);

    {
        const auto m0 = model_decay(s0, model, 4, threads);
        const auto mf = model_decay(state.estimate, model, 4, threads);
        io::CsvTable t;
        t.kind = "detail_fit";
        t.meta["rabi"] = io::format_double(rabi);
        t.columns = {"t", "data", "model_s0", "model_final"};
        for (std::size_t i = 0; i < detail.size(); ++i)
            t.rows.push_back({detail.times[i], detail.mean_sigma_x[i], m0.mean_sigma_x[i], mf.mean_sigma_x[i]});
        io::write_csv(out.add("detail_fit.csv"), t);
    }

    ordered_json report;
    report["schema"] = io::json_schema;
    report["kind"] = "reconstruction_report";
    report["sweep"] = io::to_json(sweep);
    report["protocol"] = io::to_json(pc);
    report["state"] = io::to_json(state);
    auto power_law = [&](const NoiseSpectrum& s) -> ordered_json {
        try {
            return io::to_json(fit_power_law(s, pl_lo, pl_hi));
        } catch (const ValidationError& e) {
            return {{"error", e.what()}};
        }
    };
    report["power_law_smoothed"] = power_law(smoothed);
    report["power_law_final"] = power_law(state.estimate);
    io::write_json(out.add("fit_report.json"), report);

    auto paths = out.finish({{"stop", to_string(state.stop)},
                             {"iterations", state.iteration},
                             {"fitness", state.fitness},
                             {"audits_passed", state.audits_passed()}});
    if (state.stop == StopReason::diverged)
        throw ConvergenceError("reconstruct: protocol diverged: " + state.diagnostics);
    return paths;
}

std::vector<std::string> cmd_errormap(const RunConfig& config) {
    config.validate();
    const auto spectrum = input_spectrum(config);
    const std::size_t threads = thread_count(config);
    Outputs out(config);

    std::vector<DecayCurve> curves;
    std::map<double, std::vector<double>> chi2_curves, chi24_curves;
    for (std::size_t k = 0; k < config.errormap_omegas.size(); ++k) {
        const double w = config.errormap_omegas[k];
        const auto sim = SimConfig::make(w, config.errormap_duration, config.errormap_intervals,
                                         config.errormap_realizations, realization_seed(config.seed, k + 1));
        curves.push_back(simulate_decay(spectrum, sim, threads));
        io::write_decay_curve(out.add(indexed("errormap_curve", k)), curves.back());

        KernelOptions ko;
        ko.threads = threads;
        const auto model = CumulantModel::build(default_model_grid(config.grid_lo, w, config.model_points),
                                                w, curves.back().times, ko);
        chi2_curves[w] = model_decay(spectrum, model, 2, threads).mean_sigma_x;
        chi24_curves[w] = model_decay(spectrum, model, 4, threads).mean_sigma_x;
    }

    const auto exp_map = error_map(curves, [&](double w, std::span<const double> t) {
        return exponential_decay(spectrum, w, t).mean_sigma_x;
    });
    const auto chi2_map = error_map(curves, [&](double w, std::span<const double>) { return chi2_curves.at(w); });
    const auto chi24_map = error_map(curves, [&](double w, std::span<const double>) { return chi24_curves.at(w); });
    io::write_error_map(out.add("error_exp.csv"), exp_map, "exp");
    io::write_error_map(out.add("error_chi2.csv"), chi2_map, "chi2");
    io::write_error_map(out.add("error_chi24.csv"), chi24_map, "chi2+chi4");
    io::write_spectrum(out.add("input_spectrum.csv"), spectrum);

    auto max_error = [](const ErrorMap& m) { return *std::max_element(m.error.begin(), m.error.end()); };
    return out.finish({{"max_error_exp", max_error(exp_map)},
                       {"max_error_chi2", max_error(chi2_map)},
                       {"max_error_chi24", max_error(chi24_map)}});
}

std::vector<std::string> cmd_kernels(const RunConfig& config) {
    config.validate();
    const auto grid = default_model_grid(config.kernel_lo, config.kernel_rabi, config.kernel_points);
    std::vector<double> times(config.kernel_intervals + 1);
    for (std::size_t j = 0; j < times.size(); ++j)
        times[j] = config.kernel_duration * static_cast<double>(j) / static_cast<double>(config.kernel_intervals);
    KernelOptions ko;
    ko.threads = thread_count(config);
    const auto tables = tabulate_kernels(grid, config.kernel_rabi, times, ko);
    Outputs out(config);

    io::CsvTable f2;
    f2.kind = "kernel_f2";
    f2.meta["rabi"] = io::format_double(config.kernel_rabi);
    f2.columns = {"t", "omega", "weight", "f2", "re_f2_point"};
    for (std::size_t t = 0; t < times.size(); ++t) {
        const auto k = tables.f2(t);
        for (std::size_t i = 0; i < grid.size(); ++i)
            f2.rows.push_back({times[t], grid[i], tables.weights()[i], k.values[i],
                               re_f2(grid[i], config.kernel_rabi, times[t])});
    }
    io::write_csv(out.add("kernels_f2.csv"), f2);

    io::CsvTable f4;
    f4.kind = "kernel_f4";
    f4.meta["rabi"] = io::format_double(config.kernel_rabi);
    f4.meta["t"] = io::format_double(times.back());
    f4.columns = {"omega1", "omega2", "f4", "f4_tilde_point"};
    const auto k4 = tables.f4(times.size() - 1);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t j = 0; j < grid.size(); ++j)
            f4.rows.push_back(
                {grid[i], grid[j], k4(i, j), f4_tilde(grid[i], grid[j], config.kernel_rabi, times.back())});
    io::write_csv(out.add("kernels_f4.csv"), f4);
    return out.finish();
}

std::vector<std::string> cmd_fit(const RunConfig& config) {
    config.validate();
    FitOptions fo;
    fo.fixed_amplitude = config.fit_fixed_amplitude;
    fo.tail_window = config.fit_tail_window;

    ordered_json report;
    report["schema"] = io::json_schema;
    report["kind"] = "fit_report";
    report["exponential"] = ordered_json::array();
    for (const auto& f : config.fit_files) {
        const auto curve = io::read_decay_curve(f);
        auto j = io::to_json(fit_exponential(curve, fo));
        j["file"] = f;
        j["rabi"] = curve.rabi;
        report["exponential"].push_back(j);
    }
    if (config.spectrum_kind == "file") {
        const auto s = io::read_spectrum(config.spectrum_file);
        const double lo = config.powerlaw_lo > 0.0 ? config.powerlaw_lo : 2.0 * s.plateau_omega();
        const double hi = config.powerlaw_hi > 0.0 ? config.powerlaw_hi : s.grid().back();
        report["power_law"] = io::to_json(fit_power_law(s, lo, hi));
    }
    Outputs out(config);
    io::write_json(out.add("fit_report.json"), report);
    return out.finish();
}

std::vector<std::string> run_command(const RunConfig& config) {
    if (config.command == "simulate") return cmd_simulate(config);
    if (config.command == "reconstruct") return cmd_reconstruct(config);
    if (config.command == "errormap") return cmd_errormap(config);
    if (config.command == "kernels") return cmd_kernels(config);
    if (config.command == "fit") return cmd_fit(config);
    throw ValidationError("unknown command '" + config.command + "'");
}

int main(int argc, char** argv) {
    CLI::App app{"Spin-lock noise spectroscopy: simulation, cumulant models, spectrum reconstruction"};
    app.require_subcommand(1);
    RunConfig flags;
    std::string config_path;
    std::vector<std::pair<CLI::Option*, std::string>> given;

    const std::vector<std::pair<std::string, std::string>> commands = {
        {"simulate", "simulate sweep and detail decay curves"},
        {"reconstruct", "exponential-fit sweep plus cumulant refinement of S"},
        {"errormap", "error surfaces of the exp, chi2 and chi2+chi4 models"},
        {"kernels", "dump filter-function kernel tables"},
        {"fit", "exponential and power-law fits of existing files"},
    };
    for (const auto& [name, help] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "config JSON or a manifest.json");
        fields(flags, flags, [&](const char* field, auto& v, auto&, const char* h) {
            given.emplace_back(sub->add_option(flag_name(field), v, h), field);
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : validation_failure;
    }

    try {
        RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
        for (const auto* sub : app.get_subcommands()) config.command = sub->get_name();
        for (const auto& [opt, field] : given) {
            if (opt->count() == 0) continue;
            fields(config, flags, [&](const char* name, auto& dst, auto& src, const char*) {
                if (field == name) dst = src;
            });
        }
        for (const auto& path : run_command(config)) std::cout << path << "\n";
        return ok;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return validation_failure;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return numerical_failure;
    } catch (const ConvergenceError& e) {
        std::cerr << "no convergence: " << e.what() << "\n";
        return no_convergence;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return validation_failure;
    }
}

}  // namespace cwnoise::cli
