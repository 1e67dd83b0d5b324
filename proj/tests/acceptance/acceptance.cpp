// acceptance.cpp: end-to-end acceptance suite
//
// Prints one PASS/FAIL line per criterion and exits non-zero if any fails.
// Long scenarios write their command outputs under --work-dir.

#include "../oracles.hpp"

#include "cwnoise/cli.hpp"
#include "cwnoise/cumulant_decay.hpp"
#include "cwnoise/error.hpp"
#include "cwnoise/estimation.hpp"
#include "cwnoise/filter_functions.hpp"
#include "cwnoise/io.hpp"
#include "cwnoise/quantum_sim.hpp"
#include "cwnoise/reconstruct.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace cwnoise;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

fs::path g_work;
std::size_t g_threads = 0;
// Every protocol run made by the suite, for the gradient-audit criterion.
std::vector<std::pair<std::string, nlohmann::ordered_json>> g_protocol_audits;

cli::RunConfig base_config(const std::string& command, const std::string& out) {
    cli::RunConfig c;
    c.command = command;
    c.output_dir = (g_work / out).string();
    c.threads = g_threads;
    return c;
}

// ---------------------------------------------------------------- 1. kernels

Outcome kernels() {
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> uw(0.0, 150.0), ur(1.0, 150.0), ut(0.05, 2.0);
    double worst2 = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double w = uw(rng), r = ur(rng), T = ut(rng);
        const double ref = oracle::re_f2_2d(w, r, T);
        worst2 = std::max(worst2, std::abs(re_f2(w, r, T) - ref) / std::abs(ref));
    }

    // F̃₄ cases with ΩT ≤ 4π; the product rule is refined with the number of
    // oscillations and must agree with a finer copy of itself.
    std::uniform_real_distribution<double> u4(0.0, 20.0), t4(0.2, 1.5), unit(0.0, 1.0);
    double worst4 = 0.0, oracle_spread = 0.0;
    for (int k = 0; k < 30; ++k) {
        const double T = t4(rng);
        const double rabi = 0.5 + unit(rng) * (4.0 * std::numbers::pi / T - 0.5);
        const double w1 = u4(rng), w2 = u4(rng);
        // at most ~10 rad of phase per 12-point panel
        const double phase = (std::max(w1, w2) + rabi) * T;
        const int panels = 2 + static_cast<int>(std::ceil(phase / 10.0));
        const double ref = oracle::f4_tilde(w1, w2, rabi, T, panels, 12);
        const double finer = oracle::f4_tilde(w1, w2, rabi, T, panels + 1, 12);
        oracle_spread = std::max(oracle_spread, std::abs(ref - finer) / std::abs(finer));
        worst4 = std::max(worst4, std::abs(f4_tilde(w1, w2, rabi, T) - finer) / std::abs(finer));
    }
    const double secs = seconds_since(t0);
    return {worst2 < 1e-8 && worst4 < 1e-4 && oracle_spread < 1e-6 && secs < 300.0,
            fmt("re_f2 worst rel %.2e (<1e-8), f4_tilde worst rel %.2e (<1e-4), oracle self-spread %.1e, %.0f s "
                "(<300 s)",
                worst2, worst4, oracle_spread, secs)};
}

// ------------------------------------------------------------- 2. GBE limit

Outcome gbe_limit() {
    const double s0 = 2.0;
    const auto white = power_law_spectrum(s0, 0.0, 1.0, FrequencyGrid::log_spaced(0.01, 1e6, 20));
    const std::vector<std::pair<double, double>> cases = {
        {8.0 * std::numbers::pi, 1.0}, {40.0, 1.0}, {100.0, 0.5}, {35.0, 2.0}, {640.0, 0.2}, {25.0, 5.0}};
    double worst = 0.0;
    for (const auto& [rabi, T] : cases) {
        const std::vector<double> times = {0.0, T};
        const auto model = CumulantModel::build(default_model_grid(0.5, rabi, 80), rabi, times);
        worst = std::max(worst, std::abs(chi2(white, model, T) / (-s0 * T / 2.0) - 1.0));
    }
    return {worst < 0.01, fmt("worst |chi2/(-S0 T/2) - 1| = %.2e over %zu (Omega, T) with Omega T >= 8 pi (<1e-2)",
                              worst, cases.size())};
}

// ------------------------------------------------------ 3. Monte Carlo, white

Outcome white_monte_carlo() {
    const auto t0 = std::chrono::steady_clock::now();
    const double s0 = 10.0, rabi = 500.0;
    const auto white = power_law_spectrum(s0, 0.0, 1.0, FrequencyGrid::log_spaced(0.01, 1e5, 20));
    const auto sim = SimConfig::make(rabi, 0.5, 50, 10000, 31337);
    const auto curve = simulate_decay(white, sim, g_threads);
    double worst_sigma = 0.0;
    std::size_t outside = 0;
    for (std::size_t j = 0; j < curve.size(); ++j) {
        const double d = std::abs(curve.mean_sigma_x[j] - std::exp(-s0 * curve.times[j] / 2.0));
        const double se = curve.std_err[j];
        const double z = se > 0.0 ? d / se : (d == 0.0 ? 0.0 : INFINITY);
        worst_sigma = std::max(worst_sigma, z);
        if (z > 3.0) ++outside;
    }
    const double secs = seconds_since(t0);
    return {outside == 0 && secs < 600.0,
            fmt("%zu points, worst deviation %.2f standard errors (<=3), %zu outside, %.0f s (<600 s)", curve.size(),
                worst_sigma, outside, secs)};
}

// --------------------------------------------------------- 4. error map

Outcome error_map_check() {
    auto c = base_config("errormap", "errormap_1f");
    c.errormap_omegas = {20, 24, 28, 32, 36, 40};
    c.errormap_duration = 1.0;
    c.errormap_intervals = 50;
    c.errormap_realizations = 2000;
    c.seed = 7;
    cli::cmd_errormap(c);
    auto max_early = [&](const char* file) {
        const auto t = io::read_csv(fs::path(c.output_dir) / file);
        const auto om = t.column("omega"), tt = t.column("t"), e = t.column("error");
        double m = 0.0;
        for (std::size_t i = 0; i < e.size(); ++i)
            if (tt[i] < 0.5 && om[i] >= 20.0 && om[i] <= 40.0) m = std::max(m, e[i]);
        return m;
    };
    const double e_exp = max_early("error_exp.csv"), e_chi = max_early("error_chi24.csv");
    return {e_exp >= 2.0 * e_chi,
            fmt("t < 0.5 s, Omega in [20, 40]: max |err| exp %.4f, chi2+chi4 %.4f, ratio %.2f (>=2)", e_exp, e_chi,
                e_exp / e_chi)};
}

// ------------------------------------------------------ 5. standard method

Outcome standard_method() {
    auto c = base_config("simulate", "standard_method");
    c.probes = {1, 2, 4, 8, 12, 16, 20, 24, 32, 40, 64, 100, 125};
    c.seed = 11;
    cli::cmd_simulate(c);
    std::vector<DecayCurve> curves;
    for (std::size_t k = 0; k < c.probes.size(); ++k)
        curves.push_back(io::read_decay_curve(fs::path(c.output_dir) / fmt("sweep_%03zu.csv", k)));
    const auto sweep = sweep_spectroscopy(curves, {}, g_threads);
    double low_min = INFINITY, high_max = 0.0;
    std::string low_list;
    for (std::size_t k = 0; k < sweep.probes.size(); ++k) {
        const double w = sweep.probes[k];
        const double dev = std::isfinite(sweep.s0[k]) ? std::abs(sweep.s0[k] / (30.0 / w) - 1.0) : INFINITY;
        if (w <= 8.0) {
            low_min = std::min(low_min, dev);
            low_list += fmt(" %g:%.0f%%", w, 100.0 * dev);
        }
        if (w >= 100.0) high_max = std::max(high_max, dev);
    }
    return {low_min > 0.25 && high_max <= 0.10,
            fmt("deviation at Omega<=8 {%s } all >25%%, max at Omega>=100 %.1f%% (<=10%%)", low_list.c_str(),
                100.0 * high_max)};
}

// ------------------------------------------------------- 7. inverse crime

Outcome inverse_crime() {
    const double rabi = 35.0, T = 1.0;
    const auto grid = reconstruction_grid(1.0, 100.0, rabi, 30);
    std::vector<double> times;
    for (std::size_t j = 0; j <= 100; ++j) times.push_back(T * static_cast<double>(j) / 100.0);
    const auto model = CumulantModel::build(grid, rabi, times);
    const NoiseSpectrum truth(grid, model.node_values(power_law_spectrum(30.0, -1.0, 1.0, grid)), grid.front());
    const auto data = model_decay(truth, model, 4, g_threads);

    // Free nodes: the low-frequency band the sweep cannot reach; the rest
    // stays at the truth.
    std::vector<double> start(truth.values().begin(), truth.values().end());
    std::vector<bool> mask(grid.size(), false);
    std::size_t n_free = 0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (grid[i] <= 20.0) {
            mask[i] = true;
            start[i] *= 0.6;
            ++n_free;
        }
    ProtocolConfig pc;
    pc.rabi_probe = rabi;
    pc.duration = T;
    pc.update_mask = mask;
    pc.delta = 1e-7;
    pc.max_iterations = 5000;
    pc.threads = g_threads;
    const auto st = run_protocol(data, NoiseSpectrum(grid, start, grid.front()), model, pc);
    g_protocol_audits.emplace_back("inverse crime", io::to_json(st));

    std::size_t reached = SIZE_MAX;
    for (const auto& [k, phi] : st.history)
        if (phi >= 1.0 - 0.005) {
            reached = k;
            break;
        }
    double worst = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
        if (mask[i]) worst = std::max(worst, std::abs(st.estimate.values()[i] / truth.values()[i] - 1.0));
    const double phi0 = st.history.front().second;
    return {reached <= 5000 && worst <= 0.02,
            fmt("%zu free nodes from 0.6x truth (Phi_0 = %.4f): Phi >= 0.995 at iteration %zu (<=5000), worst node "
                "error after %zu iterations %.3f%% (<=2%%)",
                n_free, phi0, reached == SIZE_MAX ? st.iteration : reached, st.iteration, 100.0 * worst)};
}

// ---------------------------------------------------- 8/9. end-to-end runs

struct Scenario {
    std::string name;
    double amplitude, exponent;
    std::vector<double> probes;
    double rabi, T;
    double alpha, alpha_tol;
};

struct ScenarioResult {
    fs::path dir;
    nlohmann::ordered_json report;
    double seconds = 0.0;
    std::string error;
};

std::map<std::string, ScenarioResult> g_scenarios;

const std::vector<Scenario>& scenarios() {
    static const std::vector<Scenario> s = {
        {"one_over_f", 30.0, -1.0, {20, 24, 28, 32, 36, 40, 50, 64, 80, 100, 125}, 35.0, 1.0, -1.0, 0.15},
        {"one_over_f2", 30.0, -2.0, {1, 2, 4, 6, 8, 10, 12, 15, 20, 25, 30, 35, 40, 50, 120}, 35.0, 5.0, -2.0, 0.2},
        {"strong_one_over_f", 3000.0, -1.0, {10, 20, 40, 80, 160, 320, 640, 1000, 1250}, 640.0, 0.2, -1.0, 0.2},
    };
    return s;
}

const ScenarioResult& run_scenario(const Scenario& s) {
    if (auto it = g_scenarios.find(s.name); it != g_scenarios.end()) return it->second;
    ScenarioResult r;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        auto sim = base_config("simulate", s.name + "/data");
        sim.spectrum_amplitude = s.amplitude;
        sim.spectrum_exponent = s.exponent;
        sim.probes = s.probes;
        sim.detail_rabi = s.rabi;
        sim.detail_duration = s.T;
        sim.seed = 1;
        cli::cmd_simulate(sim);

        auto rec = base_config("reconstruct", s.name + "/reconstruction");
        rec.input_dir = sim.output_dir;
        rec.delta = 1e-3;
        cli::cmd_reconstruct(rec);
        r.dir = rec.output_dir;
        r.report = io::read_json(r.dir / "fit_report.json");
        g_protocol_audits.emplace_back(s.name, r.report["state"]);
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    r.seconds = seconds_since(t0);
    return g_scenarios[s.name] = std::move(r);
}

Outcome end_to_end() {
    bool pass = true;
    std::string detail;
    for (const auto& s : scenarios()) {
        const auto& r = run_scenario(s);
        if (!r.error.empty()) {
            pass = false;
            detail += " " + s.name + ": error " + r.error + ";";
            continue;
        }
        const double alpha = r.report["power_law_smoothed"]["alpha"].get<double>();
        bool ok = std::abs(alpha - s.alpha) <= s.alpha_tol && r.seconds < 1800.0;
        detail += fmt(" %s: alpha %.3f (%.1f +- %.2f), %.0f s", s.name.c_str(), alpha, s.alpha, s.alpha_tol, r.seconds);
        if (s.name == "one_over_f") {
            const auto sm = io::read_spectrum(r.dir / "s_smoothed.csv");
            double worst = 0.0;
            for (std::size_t i = 0; i < sm.grid().size(); ++i) {
                const double w = sm.grid()[i];
                if (w > 8.0) break;
                const double truth = s.amplitude * std::pow(std::max(w, 1.0), s.exponent);
                worst = std::max(worst, std::abs(sm.values()[i] / truth - 1.0));
            }
            ok = ok && worst <= 0.15;
            detail += fmt(", smoothed worst error at omega<=8 %.1f%% (<=15%%)", 100.0 * worst);
        }
        detail += ok ? ";" : " [fail];";
        pass = pass && ok;
    }
    return {pass, detail.substr(1)};
}

// Oscillation analysis of the unsmoothed estimate: o(ω) is ln(S_final/S_in)
// minus its local linear trend over a window of width 2π/T, defined where the
// window holds at least three nodes.
Outcome artifact_band() {
    const auto& s = scenarios().front();
    const auto& r = run_scenario(s);
    if (!r.error.empty()) return {false, "scenario failed: " + r.error};
    const auto fin = io::read_spectrum(r.dir / "s_final.csv");
    const auto& grid = fin.grid();
    const std::size_t n = grid.size();
    const double half = std::numbers::pi / s.T;

    std::vector<double> resid(n), osc(n, NAN);
    for (std::size_t i = 0; i < n; ++i)
        resid[i] = std::log(fin.values()[i] / (s.amplitude * std::pow(std::max(grid[i], 1.0), s.exponent)));
    for (std::size_t i = 0; i < n; ++i) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0, m = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (std::abs(grid[j] - grid[i]) > half) continue;
            sx += grid[j];
            sy += resid[j];
            sxx += grid[j] * grid[j];
            sxy += grid[j] * resid[j];
            m += 1;
        }
        if (m < 3) continue;
        const double b = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        osc[i] = resid[i] - (sy - b * sx) / m - b * grid[i];
    }

    const double lo = 8.0, hi = 30.0;
    double a_in = 0.0, a_below = 0.0, a_above = 0.0;
    std::vector<double> bx, by;
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(osc[i])) continue;
        const double a = std::abs(osc[i]);
        if (grid[i] < lo) {
            a_below = std::max(a_below, a);
        } else if (grid[i] > hi) {
            a_above = std::max(a_above, a);
        } else {
            a_in = std::max(a_in, a);
            bx.push_back(grid[i]);
            by.push_back(osc[i]);
        }
    }
    // Dominant period inside the band: least-squares sinusoid scan.
    double best_power = -1.0, best_period = 0.0;
    for (double p = 2.0; p <= 2.0 * (hi - lo); p += 0.01) {
        const double k = 2.0 * std::numbers::pi / p;
        double cc = 0, ss = 0, cs = 0, yc = 0, ys = 0;
        for (std::size_t i = 0; i < bx.size(); ++i) {
            const double c = std::cos(k * bx[i]), sn = std::sin(k * bx[i]);
            cc += c * c;
            ss += sn * sn;
            cs += c * sn;
            yc += by[i] * c;
            ys += by[i] * sn;
        }
        const double det = cc * ss - cs * cs;
        if (det <= 0.0) continue;
        const double a = (yc * ss - ys * cs) / det, b = (ys * cc - yc * cs) / det;
        const double power = a * yc + b * ys;
        if (power > best_power) {
            best_power = power;
            best_period = p;
        }
    }
    const double nominal = 2.0 * std::numbers::pi / s.T;
    const bool period_ok = best_period >= nominal / 2.0 && best_period <= 2.0 * nominal;
    const double outside = std::max(a_below, a_above);
    const bool confined = a_in >= 2.0 * outside;
    return {period_ok && confined,
            fmt("max |oscillation| in [8, 30] %.3f, below %.3f, above %.3f (outside must be <= half the in-band "
                "value: %s); dominant period %.2f rad/s vs 2 pi/T = %.2f (within 2x: %s)",
                a_in, a_below, a_above, confined ? "yes" : "no", best_period, nominal, period_ok ? "yes" : "no")};
}

// ---------------------------------------------------------- 6. audits

Outcome gradient_audits() {
    if (g_protocol_audits.empty()) return {false, "no protocol runs were made"};
    double worst = 0.0;
    std::size_t count = 0;
    bool all = true;
    std::string runs;
    for (const auto& [name, state] : g_protocol_audits) {
        const auto& audits = state["gradient_audits"];
        runs += " " + name + "(" + std::to_string(audits.size()) + ")";
        if (audits.empty()) all = false;
        for (const auto& a : audits) {
            ++count;
            worst = std::max(worst, a["max_rel_error"].get<double>());
            all = all && a["passed"].get<bool>();
        }
    }
    return {all && worst <= 1e-5,
            fmt("%zu audits over%s, worst rel error %.2e (<=1e-5)", count, runs.c_str(), worst)};
}

// ------------------------------------------------------- 10. determinism

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Files other than the manifest (which records the output directory).
std::vector<std::string> data_files(const fs::path& dir) {
    std::vector<std::string> v;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != "manifest.json") v.push_back(e.path().filename().string());
    std::sort(v.begin(), v.end());
    return v;
}

// Largest relative difference between two files of numbers, token by token;
// non-numeric tokens must match exactly.
double numeric_distance(const fs::path& a, const fs::path& b) {
    auto tokens = [](const std::string& text) {
        std::vector<std::string> t;
        std::string cur;
        for (char ch : text) {
            if (ch == ',' || ch == '\n' || ch == ' ' || ch == '[' || ch == ']' || ch == ':' || ch == '{' ||
                ch == '}') {
                if (!cur.empty()) t.push_back(cur);
                cur.clear();
            } else {
                cur += ch;
            }
        }
        if (!cur.empty()) t.push_back(cur);
        return t;
    };
    const auto ta = tokens(slurp(a)), tb = tokens(slurp(b));
    if (ta.size() != tb.size()) return INFINITY;
    double worst = 0.0;
    for (std::size_t i = 0; i < ta.size(); ++i) {
        if (ta[i] == tb[i]) continue;
        char* ea = nullptr;
        char* eb = nullptr;
        const double x = std::strtod(ta[i].c_str(), &ea), y = std::strtod(tb[i].c_str(), &eb);
        if (*ea != '\0' || *eb != '\0') return INFINITY;
        worst = std::max(worst, std::abs(x - y) / std::max({std::abs(x), std::abs(y), 1e-300}));
    }
    return worst;
}

Outcome determinism() {
    // One small run per command, then a rerun from its manifest with the same
    // and with a different worker count.
    std::vector<cli::RunConfig> runs;
    {
        auto c = base_config("simulate", "det/simulate");
        c.probes = {20, 40, 80};
        c.sweep_realizations = 200;
        c.detail_rabi = 35;
        c.detail_duration = 1.0;
        c.detail_intervals = 50;
        c.detail_realizations = 400;
        c.threads = 1;
        runs.push_back(c);
    }
    {
        auto c = base_config("reconstruct", "det/reconstruct");
        c.input_dir = (g_work / "det/simulate").string();
        c.grid_points = 40;
        c.max_iterations = 200;
        c.delta = 1e-4;
        c.threads = 1;
        runs.push_back(c);
    }
    {
        auto c = base_config("errormap", "det/errormap");
        c.errormap_omegas = {20, 30};
        c.errormap_realizations = 300;
        c.errormap_intervals = 20;
        c.model_points = 40;
        c.threads = 1;
        runs.push_back(c);
    }
    {
        auto c = base_config("kernels", "det/kernels");
        c.kernel_points = 20;
        c.kernel_intervals = 5;
        c.threads = 1;
        runs.push_back(c);
    }
    {
        auto c = base_config("fit", "det/fit");
        c.fit_files = {(g_work / "det/simulate/sweep_000.csv").string(),
                       (g_work / "det/simulate/sweep_001.csv").string()};
        c.threads = 1;
        runs.push_back(c);
    }

    bool identical = true;
    double cross = 0.0;
    std::string where;
    for (const auto& c : runs) {
        try {
            cli::run_command(c);
            auto again = cli::load_config(fs::path(c.output_dir) / "manifest.json");
            again.output_dir = c.output_dir + "_rerun";
            cli::run_command(again);
            auto other = again;
            other.output_dir = c.output_dir + "_threads2";
            other.threads = 2;
            cli::run_command(other);
            for (const auto& f : data_files(c.output_dir)) {
                if (slurp(fs::path(c.output_dir) / f) != slurp(fs::path(again.output_dir) / f)) {
                    identical = false;
                    where += " " + c.command + "/" + f + " differs on rerun;";
                }
                const double d = numeric_distance(fs::path(c.output_dir) / f, fs::path(other.output_dir) / f);
                if (d > cross) {
                    cross = d;
                    if (d > 1e-12) where += fmt(" %s/%s differs by %.1e across workers;", c.command.c_str(), f.c_str(), d);
                }
            }
        } catch (const std::exception& e) {
            identical = false;
            where += " " + c.command + ": " + e.what() + ";";
        }
    }
    return {identical && cross <= 1e-12,
            fmt("%zu commands rerun from manifests: bit-identical %s, worst relative difference across 1 vs 2 "
                "workers %.1e (<=1e-12)%s",
                runs.size(), identical ? "yes" : "no", cross, where.c_str())};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Acceptance suite: one PASS/FAIL line per criterion"};
    std::string work = "acceptance_runs";
    std::vector<int> only;
    app.add_option("--work-dir", work, "directory for command outputs");
    app.add_option("--only", only, "run only these criteria (6 needs 7 and 8 to have run)");
    app.add_option("--threads", g_threads, "worker threads; 0: default");
    CLI11_PARSE(app, argc, argv);
    g_work = work;
    fs::create_directories(g_work);

    // Order: criterion 6 inspects the protocol runs made by 7 and 8.
    const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
        {1, kernels},         {2, gbe_limit},     {3, white_monte_carlo}, {4, error_map_check},
        {5, standard_method}, {7, inverse_crime}, {8, end_to_end},        {9, artifact_band},
        {6, gradient_audits}, {10, determinism}};
    const std::set<int> selected(only.begin(), only.end());
    std::map<int, Outcome> results;
    for (const auto& [id, fn] : criteria) {
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        results[id] = o;
        std::fprintf(stderr, "[criterion %d done in %.0f s]\n", id, seconds_since(t0));
    }
    int failed = 0;
    for (const auto& [id, o] : results) {
        std::printf("criterion %2d %s: %s\n", id, o.pass ? "PASS" : "FAIL", o.detail.c_str());
        failed += o.pass ? 0 : 1;
    }
    std::fflush(stdout);
    return failed == 0 ? 0 : 1;
}
