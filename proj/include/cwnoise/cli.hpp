// cli.hpp: run configuration, manifests and the five subcommands
//
// A RunConfig is a flat record. The same field names serve as JSON keys and
// (with '_' written as '-') as command-line flags. Every command writes
// manifest.json holding the resolved config, so
//   cwnoise <command> --config out/manifest.json
// reruns it.

#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cwnoise::cli {

enum ExitCode : int { ok = 0, validation_failure = 2, numerical_failure = 3, no_convergence = 4 };

struct RunConfig {
    std::string command;

    // Input spectrum: "power_law" (amplitude·ω^exponent above the plateau) or "file".
    std::string spectrum_kind = "power_law";
    double spectrum_amplitude = 30.0;
    double spectrum_exponent = -1.0;
    double spectrum_plateau = 1.0;
    std::string spectrum_file;

    // simulate: one sweep curve per probe, optional detail curve.
    std::vector<double> probes;
    double sweep_duration = 0.0;          // 0: duration_factor / S(Ω), clamped
    double duration_factor = 1.0;
    double min_duration = 0.05;
    double max_duration = 20.0;
    std::size_t sweep_intervals = 100;
    std::size_t sweep_realizations = 2000;
    double detail_rabi = 0.0;             // 0: no detail curve
    double detail_duration = 0.0;
    std::size_t detail_intervals = 100;
    std::size_t detail_realizations = 10000;

    // reconstruct
    std::string input_dir;                // holds sweep_*.csv and detail.csv
    std::vector<std::string> sweep_files;
    std::string detail_file;
    bool fit_fixed_amplitude = false;
    bool fit_tail_window = false;
    double residual_factor = 2.0;
    double adiabatic_limit = 1.0;
    double extrapolation_span = 10.0;
    double grid_lo = 1.0;                 // lowest kernel node
    std::size_t grid_points = 120;
    std::string update_mask = "all";      // "all" or "sweep"
    double epsilon = 0.0;
    double delta = 0.005;
    std::size_t max_iterations = 5000;
    bool relative_step = true;
    bool backtrack = true;
    double smoothing_window = 0.0;
    double artifact_lo = 0.0;
    double artifact_hi = 0.0;
    std::size_t divergence_window = 10;
    std::size_t audit_count = 5;
    std::size_t trace_every = 0;
    double powerlaw_lo = 0.0;             // 0: 2·grid_lo
    double powerlaw_hi = 0.0;             // 0: highest reliable probe

    // errormap
    std::vector<double> errormap_omegas;
    double errormap_duration = 1.0;
    std::size_t errormap_intervals = 50;
    std::size_t errormap_realizations = 2000;
    std::size_t model_points = 80;

    // kernels
    double kernel_rabi = 35.0;
    double kernel_duration = 1.0;
    std::size_t kernel_intervals = 10;
    std::size_t kernel_points = 40;
    double kernel_lo = 1.0;

    // fit
    std::vector<std::string> fit_files;

    std::string output_dir = "cwnoise_out";
    std::uint64_t seed = 1;
    std::size_t threads = 0;              // 0: CWNOISE_THREADS or hardware

    /// Throws ValidationError for settings the command cannot use.
    void validate() const;
};

nlohmann::ordered_json to_json(const RunConfig& config);

/// Accepts a plain config object or a manifest (its "config" member).
/// Missing keys keep their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::ordered_json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Each command validates, runs, writes into config.output_dir and returns
/// the list of files written (manifest last). Failures throw.
std::vector<std::string> cmd_simulate(const RunConfig& config);
std::vector<std::string> cmd_reconstruct(const RunConfig& config);
std::vector<std::string> cmd_errormap(const RunConfig& config);
std::vector<std::string> cmd_kernels(const RunConfig& config);
std::vector<std::string> cmd_fit(const RunConfig& config);

std::vector<std::string> run_command(const RunConfig& config);

/// Full command line: parses, merges flags over --config, runs, maps
/// exceptions to exit codes and reports them on stderr.
int main(int argc, char** argv);

}  // namespace cwnoise::cli
