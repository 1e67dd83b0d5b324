#include "cwnoise/io.hpp"

#include "cwnoise/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace cwnoise::io {

using detail::require;

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep)) out.push_back(trim(cell));
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    if (s == "nan" || s == "NaN") return NAN;
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc() || p != e)
        throw ValidationError(path.string() + ":" + std::to_string(line) + ": not a number: '" + s + "'");
    return v;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open " + path.string() + " for writing");
    return out;
}

double meta_double(const CsvTable& t, const std::string& key, double fallback) {
    auto it = t.meta.find(key);
    if (it == t.meta.end()) return fallback;
    return parse_double(it->second, "metadata", 0);
}

}  // namespace

std::string format_double(double x) {
    if (std::isnan(x)) return "nan";
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw NumericalError("format_double failed");
    return std::string(buf, p);
}

std::vector<double> CsvTable::column(const std::string& name) const {
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (columns[c] != name) continue;
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(r[c]);
        return v;
    }
    throw ValidationError("CSV (" + kind + ") has no column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
    for (const auto& c : columns)
        if (c == name) return true;
    return false;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    auto out = open_out(path);
    out << "# schema: " << csv_schema << " kind=" << table.kind << "\n";
    for (const auto& [k, v] : table.meta) out << "# " << k << ": " << v << "\n";
    for (std::size_t c = 0; c < table.columns.size(); ++c) out << (c ? "," : "") << table.columns[c];
    out << "\n";
    for (const auto& r : table.rows) {
        require(r.size() == table.columns.size(), "write_csv: row width mismatch");
        for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << format_double(r[c]);
        out << "\n";
    }
    if (!out) throw ValidationError("write failed: " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    std::size_t n = 0;
    bool have_schema = false;
    while (std::getline(in, line)) {
        ++n;
        line = trim(line);
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string body = trim(line.substr(1));
            const auto colon = body.find(':');
            if (colon == std::string::npos) continue;
            const std::string key = trim(body.substr(0, colon));
            const std::string value = trim(body.substr(colon + 1));
            if (key == "schema") {
                const auto sp = value.find(' ');
                const std::string version = value.substr(0, sp);
                if (version != csv_schema)
                    throw ValidationError(path.string() + ": unsupported schema '" + version + "'");
                have_schema = true;
                const auto kpos = value.find("kind=");
                if (kpos != std::string::npos) t.kind = trim(value.substr(kpos + 5));
            } else {
                t.meta[key] = value;
            }
            continue;
        }
        if (t.columns.empty()) {
            t.columns = split(line, ',');
            continue;
        }
        const auto cells = split(line, ',');
        if (cells.size() != t.columns.size())
            throw ValidationError(path.string() + ":" + std::to_string(n) + ": expected " +
                                  std::to_string(t.columns.size()) + " fields");
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c, path, n));
        t.rows.push_back(std::move(row));
    }
    if (!have_schema) throw ValidationError(path.string() + ": missing schema header");
    if (t.columns.empty()) throw ValidationError(path.string() + ": missing column header");
    return t;
}

void write_decay_curve(const std::filesystem::path& path, const DecayCurve& curve) {
    CsvTable t;
    t.kind = "decay_curve";
    t.meta["rabi"] = format_double(curve.rabi);
    t.meta["seed"] = std::to_string(curve.seed);
    t.meta["n_realizations"] = std::to_string(curve.n_realizations);
    t.columns = {"t", "mean_sigma_x"};
    if (curve.has_uncertainty()) t.columns.push_back("std_err");
    for (std::size_t j = 0; j < curve.size(); ++j) {
        std::vector<double> r{curve.times[j], curve.mean_sigma_x[j]};
        if (curve.has_uncertainty()) r.push_back(curve.std_err[j]);
        t.rows.push_back(std::move(r));
    }
    write_csv(path, t);
}

DecayCurve read_decay_curve(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    require(t.kind == "decay_curve", path.string() + ": not a decay curve (kind=" + t.kind + ")");
    DecayCurve c;
    c.times = t.column("t");
    c.mean_sigma_x = t.column("mean_sigma_x");
    if (t.has_column("std_err")) c.std_err = t.column("std_err");
    c.rabi = meta_double(t, "rabi", 0.0);
    if (auto it = t.meta.find("seed"); it != t.meta.end()) c.seed = std::stoull(it->second);
    if (auto it = t.meta.find("n_realizations"); it != t.meta.end()) c.n_realizations = std::stoull(it->second);
    return c;
}

void write_spectrum(const std::filesystem::path& path, const NoiseSpectrum& spectrum) {
    CsvTable t;
    t.kind = "spectrum";
    t.meta["plateau_omega"] = format_double(spectrum.plateau_omega());
    t.columns = {"omega", "S"};
    for (std::size_t i = 0; i < spectrum.grid().size(); ++i)
        t.rows.push_back({spectrum.grid()[i], spectrum.values()[i]});
    write_csv(path, t);
}

NoiseSpectrum read_spectrum(const std::filesystem::path& path) {
    const auto t = read_csv(path);
    require(t.kind == "spectrum", path.string() + ": not a spectrum (kind=" + t.kind + ")");
    auto omega = t.column("omega");
    auto s = t.column("S");
    const double plateau = meta_double(t, "plateau_omega", omega.empty() ? 0.0 : omega.front());
    return NoiseSpectrum(FrequencyGrid(std::move(omega)), std::move(s), plateau);
}

void write_error_map(const std::filesystem::path& path, const ErrorMap& map, const std::string& model_name) {
    CsvTable t;
    t.kind = "error_map";
    t.meta["model"] = model_name;
    t.columns = {"omega", "t", "error"};
    for (std::size_t i = 0; i < map.omegas.size(); ++i)
        for (std::size_t j = 0; j < map.times.size(); ++j) t.rows.push_back({map.omegas[i], map.times[j], map.at(i, j)});
    write_csv(path, t);
}

void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
    auto out = open_out(path);
    out << j.dump(2) << "\n";
    if (!out) throw ValidationError("write failed: " + path.string());
}

nlohmann::ordered_json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path.string());
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

nlohmann::ordered_json to_json(const ExponentialFit& fit) {
    nlohmann::ordered_json j;
    j["rate"] = fit.rate;
    j["rate_std_err"] = fit.rate_std_err();
    j["amplitude"] = fit.amplitude;
    j["s0"] = fit.s0();
    j["residual_rms"] = fit.residual_rms;
    j["covariance"] = fit.covariance;
    j["window_start"] = fit.window_start;
    j["n_points"] = fit.n_points;
    j["iterations"] = fit.iterations;
    j["fixed_amplitude"] = fit.fixed_amplitude;
    j["weighted"] = fit.weighted;
    return j;
}

nlohmann::ordered_json to_json(const PowerLawFit& fit) {
    nlohmann::ordered_json j;
    j["C"] = fit.C;
    j["alpha"] = fit.alpha;
    j["omega_lo"] = fit.omega_lo;
    j["omega_hi"] = fit.omega_hi;
    j["log_residual_rms"] = fit.residual;
    j["n_points"] = fit.n_points;
    return j;
}

nlohmann::ordered_json to_json(const SweepResult& sweep) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < sweep.probes.size(); ++i) {
        nlohmann::ordered_json p;
        p["omega"] = sweep.probes[i];
        p["reliable"] = i < sweep.reliable.size() && sweep.reliable[i];
        if (sweep.fits[i])
            p["fit"] = to_json(*sweep.fits[i]);
        else
            p["fit"] = nullptr;
        arr.push_back(std::move(p));
    }
    return arr;
}

nlohmann::ordered_json to_json(const ProtocolConfig& c) {
    nlohmann::ordered_json j;
    j["rabi_probe"] = c.rabi_probe;
    j["duration"] = c.duration;
    j["epsilon"] = c.epsilon;
    j["delta"] = c.delta;
    j["max_iterations"] = c.max_iterations;
    j["relative_step"] = c.relative_step;
    j["backtrack"] = c.backtrack;
    j["trace_every"] = c.trace_every;
    j["update_mask_size"] = c.update_mask.size();
    j["smoothing_window"] = c.effective_window();
    const auto [lo, hi] = c.artifact_band();
    j["artifact_band"] = {lo, hi};
    j["divergence_window"] = c.divergence_window;
    j["audit_count"] = c.audit_count;
    j["audit_step"] = c.audit_step;
    j["audit_tolerance"] = c.audit_tolerance;
    j["audit_seed"] = c.audit_seed;
    return j;
}

nlohmann::ordered_json to_json(const ReconstructionState& st) {
    nlohmann::ordered_json j;
    j["stop_reason"] = to_string(st.stop);
    j["iterations"] = st.iteration;
    j["fitness"] = st.fitness;
    j["epsilon"] = st.epsilon;
    j["initial_epsilon"] = st.initial_epsilon;
    j["rejected_steps"] = st.rejected_steps;
    j["clamp_events"] = st.clamp_events;
    j["diagnostics"] = st.diagnostics;
    std::vector<int> mask(st.mask.begin(), st.mask.end());
    j["update_mask"] = mask;
    nlohmann::ordered_json audits = nlohmann::ordered_json::array();
    for (const auto& a : st.audits)
        audits.push_back({{"iteration", a.iteration},
                          {"max_rel_error", a.max_rel_error},
                          {"worst_node", a.worst_node},
                          {"passed", a.passed}});
    j["gradient_audits"] = audits;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& [k, phi] : st.history) hist.push_back({k, phi});
    j["fitness_history"] = hist;
    return j;
}

}  // namespace cwnoise::io
