// io.hpp: CSV and JSON files for curves, spectra, fits and run manifests
//
// Every CSV starts with "# schema: cwnoise-csv/1 kind=<kind>", optional
// "# key: value" metadata lines, then one header row. Numbers are written in
// shortest round-trip form, so rewriting a file reproduces it byte for byte.

#pragma once

#include "cwnoise/estimation.hpp"
#include "cwnoise/quantum_sim.hpp"
#include "cwnoise/reconstruct.hpp"
#include "cwnoise/spectrum.hpp"

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace cwnoise::io {

inline constexpr const char* csv_schema = "cwnoise-csv/1";
inline constexpr const char* json_schema = "cwnoise-json/1";

/// Shortest decimal string that parses back to exactly `x`.
std::string format_double(double x);

struct CsvTable {
    std::string kind;
    std::map<std::string, std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Values of one column; throws ValidationError if it is missing.
    std::vector<double> column(const std::string& name) const;
    bool has_column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv(const std::filesystem::path& path);

void write_decay_curve(const std::filesystem::path& path, const DecayCurve& curve);
DecayCurve read_decay_curve(const std::filesystem::path& path);

void write_spectrum(const std::filesystem::path& path, const NoiseSpectrum& spectrum);
NoiseSpectrum read_spectrum(const std::filesystem::path& path);

/// Long format: omega, t, error.
void write_error_map(const std::filesystem::path& path, const ErrorMap& map, const std::string& model_name);

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j);
nlohmann::ordered_json read_json(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const ExponentialFit& fit);
nlohmann::ordered_json to_json(const PowerLawFit& fit);
nlohmann::ordered_json to_json(const SweepResult& sweep);
nlohmann::ordered_json to_json(const ProtocolConfig& config);
/// Stop reason, fitness, iterations, step size, clamp count, audits and the Φ history.
nlohmann::ordered_json to_json(const ReconstructionState& state);

}  // namespace cwnoise::io
