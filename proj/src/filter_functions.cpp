#include "cwnoise/filter_functions.hpp"

#include "cwnoise/error.hpp"
#include "cwnoise/parallel.hpp"

#include <gsl/gsl_integration.h>
#include <gsl/gsl_sf_expint.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

namespace cwnoise {

using detail::require;

namespace {

// sin(x)/x with a Taylor branch near zero
double sinc(double x) {
    if (std::abs(x) < 1e-3) {
        const double x2 = x * x;
        return 1.0 - x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0));
    }
    return std::sin(x) / x;
}

// (1 − cos(uT))/u² = (T²/2)·sinc²(uT/2)
double one_minus_cos_over_sq(double u, double T) {
    const double s = sinc(0.5 * u * T);
    return 0.5 * T * T * s * s;
}

// ---------------------------------------------------------------------------
// Divided differences of x ↦ e^{xt} at five imaginary nodes iν₀..iν₄.
//
// For the bidiagonal matrix Z with diagonal iνₖ and unit superdiagonal,
// exp(tZ)₀₄ is that divided difference (Opitz). Upper-triangular storage.
// ---------------------------------------------------------------------------

constexpr int kN = 5;

struct Tri {
    double re[kN][kN];
    double im[kN][kN];
};

void tri_identity(Tri& a) {
    for (int i = 0; i < kN; ++i)
        for (int j = 0; j < kN; ++j) {
            a.re[i][j] = (i == j) ? 1.0 : 0.0;
            a.im[i][j] = 0.0;
        }
}

// c = a·b for upper-triangular a, b
void tri_mul(const Tri& a, const Tri& b, Tri& c) {
    for (int i = 0; i < kN; ++i)
        for (int j = i; j < kN; ++j) {
            double sr = 0.0, si = 0.0;
            for (int k = i; k <= j; ++k) {
                sr += a.re[i][k] * b.re[k][j] - a.im[i][k] * b.im[k][j];
                si += a.re[i][k] * b.im[k][j] + a.im[i][k] * b.re[k][j];
            }
            c.re[i][j] = sr;
            c.im[i][j] = si;
        }
}

// exp(t·Z) by Taylor series on t·Z/2^s followed by s squarings.
void expm_opitz(const std::array<double, kN>& nu, double t, Tri& out) {
    double norm = t;
    for (double v : nu) norm = std::max(norm, std::abs(v) * t + t);
    int s = 0;
    if (norm > 0.5) s = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
    const double h = std::ldexp(t, -s);

    Tri b{};
    for (int i = 0; i < kN; ++i)
        for (int j = 0; j < kN; ++j) b.re[i][j] = b.im[i][j] = 0.0;
    for (int i = 0; i < kN; ++i) b.im[i][i] = nu[i] * h;
    for (int i = 0; i + 1 < kN; ++i) b.re[i][i + 1] = h;

    Tri term, next;
    tri_identity(out);
    tri_identity(term);
    for (int k = 1; k <= 40; ++k) {
        tri_mul(term, b, next);
        double mag = 0.0;
        for (int i = 0; i < kN; ++i)
            for (int j = i; j < kN; ++j) {
                next.re[i][j] /= k;
                next.im[i][j] /= k;
                out.re[i][j] += next.re[i][j];
                out.im[i][j] += next.im[i][j];
                mag = std::max(mag, std::abs(next.re[i][j]) + std::abs(next.im[i][j]));
            }
        term = next;
        if (mag < 1e-20) break;
    }
    for (int k = 0; k < s; ++k) {
        tri_mul(out, out, next);
        out = next;
    }
}

// One node set of the fourth-order expansion with its weight in F̃₄.
struct NodeSet {
    std::array<double, kN> nu;
    double coeff;
};

// Node sets whose Re J, weighted, sum to the symmetrized pairing part of F̃₄
// (everything except the −Re F₂ Re F₂ subtraction). One member of every
// conjugate pair is kept (the +Ω sign on the first drive factor).
//   (12)(34): {0, u, 0, v, 0}           u = α+γ, v = β+δ
//   (13)(24): {0, α+γ, γ+δ, β+δ, 0}
//   (14)(23): {0, α+γ, γ+δ, β+γ, 0}     not symmetric in (ω₁, ω₂) by itself
// with α = Ω, β = ±Ω, γ = ±ω₁, δ = ±ω₂. The (12)(34) and (13)(24) parts are
// invariant under ω₁ ↔ ω₂ (time reversal t_k → T − t_{5−k}); the (14)(23)
// part is averaged over both orders.
int build_node_sets(double w1, double w2, double rabi, bool symmetrize, NodeSet* sets) {
    int n = 0;
    const double alpha = rabi;
    for (double beta : {rabi, -rabi})
        for (double gamma : {w1, -w1})
            for (double delta : {w2, -w2}) {
                sets[n++] = {{0.0, alpha + gamma, 0.0, beta + delta, 0.0}, 0.25};
                sets[n++] = {{0.0, alpha + gamma, gamma + delta, beta + delta, 0.0}, 0.25};
                sets[n++] = {{0.0, alpha + gamma, gamma + delta, beta + gamma, 0.0}, symmetrize ? 0.125 : 0.25};
                if (symmetrize) {
                    // (14)(23) with ω₁ and ω₂ exchanged: γ' = ±ω₂, δ' = ±ω₁
                    sets[n++] = {{0.0, alpha + delta, gamma + delta, beta + delta, 0.0}, 0.125};
                }
            }
    return n;
}

double f4_pointwise(double w1, double w2, double rabi, double T, bool symmetrize) {
    require(T >= 0.0, "f4_tilde: T must be >= 0");
    if (T == 0.0) return 0.0;
    NodeSet sets[32];
    const int n = build_node_sets(w1, w2, rabi, symmetrize, sets);
    Tri e;
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
        expm_opitz(sets[k].nu, T, e);
        total += sets[k].coeff * e.re[0][kN - 1];
    }
    return total - re_f2(w1, rabi, T) * re_f2(w2, rabi, T);
}

// Adds the pairing part of F̃₄ (no subtraction) at every time into out.
void f4_pairing_series(double w1, double w2, double rabi, std::span<const double> times, double* out) {
    NodeSet sets[32];
    const int n = build_node_sets(w1, w2, rabi, true, sets);
    Tri e;
    for (int k = 0; k < n; ++k) {
        double rr[kN] = {1.0, 0.0, 0.0, 0.0, 0.0};
        double ri[kN] = {0.0, 0.0, 0.0, 0.0, 0.0};
        double t_now = 0.0;
        double step = -1.0;
        const double coeff = sets[k].coeff;
        for (std::size_t j = 0; j < times.size(); ++j) {
            const double dt = times[j] - t_now;
            if (dt > 0.0) {
                if (std::abs(dt - step) > 1e-13 * dt) {
                    expm_opitz(sets[k].nu, dt, e);
                    step = dt;
                }
                double nr[kN], ni[kN];
                for (int c = 0; c < kN; ++c) {
                    double sr = 0.0, si = 0.0;
                    for (int m = 0; m <= c; ++m) {
                        sr += rr[m] * e.re[m][c] - ri[m] * e.im[m][c];
                        si += rr[m] * e.im[m][c] + ri[m] * e.re[m][c];
                    }
                    nr[c] = sr;
                    ni[c] = si;
                }
                for (int c = 0; c < kN; ++c) {
                    rr[c] = nr[c];
                    ri[c] = ni[c];
                }
                t_now = times[j];
            }
            out[j] += coeff * rr[kN - 1];
        }
    }
}

void check_times(std::span<const double> times) {
    for (std::size_t j = 0; j < times.size(); ++j) {
        require(std::isfinite(times[j]) && times[j] >= 0.0, "kernel times must be finite and >= 0");
        if (j > 0) require(times[j] > times[j - 1], "kernel times must be strictly increasing");
    }
}

// Cached Gauss–Legendre tables (GSL), keyed by order.
const gsl_integration_glfixed_table* gl_table(std::size_t n) {
    static std::mutex m;
    static std::map<std::size_t, std::unique_ptr<gsl_integration_glfixed_table,
                                                 decltype(&gsl_integration_glfixed_table_free)>>
        cache;
    std::lock_guard lock(m);
    auto it = cache.find(n);
    if (it == cache.end()) {
        auto* t = gsl_integration_glfixed_table_alloc(n);
        if (!t) throw NumericalError("Gauss-Legendre table allocation failed");
        it = cache.emplace(n, decltype(cache)::mapped_type(t, &gsl_integration_glfixed_table_free)).first;
    }
    return it->second.get();
}

}  // namespace

double re_f2(double omega, double rabi, double T) {
    require(T >= 0.0, "re_f2: T must be >= 0");
    return 0.5 * (one_minus_cos_over_sq(omega - rabi, T) + one_minus_cos_over_sq(omega + rabi, T));
}

double re_f2_tail(double w, double rabi, double T) {
    require(w > std::abs(rabi), "re_f2_tail: lower limit must exceed the drive frequency");
    if (T == 0.0) return 0.0;
    // ∫_a^∞ (1 − cos uT)/u² du = (1 − cos aT)/a + T(π/2 − Si(aT))
    auto piece = [T](double a) {
        return one_minus_cos_over_sq(a, T) * a + T * (0.5 * std::numbers::pi - gsl_sf_Si(a * T));
    };
    return 0.5 * (piece(w - rabi) + piece(w + rabi));
}

double f4_tilde(double omega1, double omega2, double rabi, double T) {
    return f4_pointwise(omega1, omega2, rabi, T, true);
}

double f4_tilde_unsymmetrized(double omega1, double omega2, double rabi, double T) {
    return f4_pointwise(omega1, omega2, rabi, T, false);
}

std::vector<double> f4_tilde_series(double omega1, double omega2, double rabi, std::span<const double> times) {
    check_times(times);
    std::vector<double> out(times.size(), 0.0);
    f4_pairing_series(omega1, omega2, rabi, times, out.data());
    for (std::size_t j = 0; j < times.size(); ++j)
        out[j] -= re_f2(omega1, rabi, times[j]) * re_f2(omega2, rabi, times[j]);
    return out;
}

std::vector<QuadraturePoint> hat_quadrature(const FrequencyGrid& grid, std::size_t min_points,
                                            std::size_t max_points, double t_max) {
    require(min_points >= 1 && max_points >= min_points, "hat_quadrature: bad point counts");
    std::vector<QuadraturePoint> pts;
    auto add_cell = [&](double a, double b, std::size_t lo, std::size_t hi, bool flat) {
        const double h = b - a;
        if (h <= 0.0) return;
        const double extra = std::ceil(h * t_max / std::numbers::pi);
        const std::size_t q = std::clamp<std::size_t>(min_points + static_cast<std::size_t>(extra), min_points,
                                                      max_points);
        const auto* table = gl_table(q);
        for (std::size_t i = 0; i < q; ++i) {
            double x = 0.0, w = 0.0;
            gsl_integration_glfixed_point(a, b, i, &x, &w, table);
            QuadraturePoint p;
            p.omega = x;
            p.weight = w;
            p.lo = lo;
            p.hi = hi;
            if (flat) {
                p.c_lo = 1.0;
                p.c_hi = 0.0;
            } else {
                p.c_hi = (x - a) / h;
                p.c_lo = 1.0 - p.c_hi;
            }
            pts.push_back(p);
        }
    };
    add_cell(0.0, grid.front(), 0, 0, true);
    for (std::size_t k = 1; k < grid.size(); ++k) add_cell(grid[k - 1], grid[k], k - 1, k, false);
    return pts;
}

KernelTables::KernelTables(FrequencyGrid grid, double rabi, std::vector<double> times, std::vector<double> weights,
                           std::vector<double> f2, std::vector<double> f4)
    : grid_(std::move(grid)),
      rabi_(rabi),
      times_(std::move(times)),
      weights_(std::move(weights)),
      f2_(std::move(f2)),
      f4_(std::move(f4)) {
    const std::size_t m = grid_.size();
    require(weights_.size() == m, "KernelTables: weights size mismatch");
    require(f2_.size() == m * times_.size(), "KernelTables: f2 size mismatch");
    require(f4_.size() == m * m * times_.size(), "KernelTables: f4 size mismatch");
}

std::size_t KernelTables::time_index(double T) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), T - 1e-12 * std::max(1.0, std::abs(T)));
    if (it != times_.end() && std::abs(*it - T) <= 1e-12 * std::max(1.0, std::abs(T)))
        return static_cast<std::size_t>(it - times_.begin());
    throw ValidationError("no kernel tabulated for T = " + std::to_string(T));
}

F2Kernel KernelTables::f2(std::size_t t) const {
    require(t < times_.size(), "KernelTables::f2: time index out of range");
    const std::size_t m = grid_.size();
    return {rabi_, times_[t], std::span<const double>(f2_).subspan(t * m, m)};
}

F4Kernel KernelTables::f4(std::size_t t) const {
    require(t < times_.size(), "KernelTables::f4: time index out of range");
    const std::size_t m = grid_.size();
    return {rabi_, times_[t], m, std::span<const double>(f4_).subspan(t * m * m, m * m)};
}

double kernel_table_bytes(std::size_t n_nodes, std::size_t n_times) {
    const double m = static_cast<double>(n_nodes), t = static_cast<double>(n_times);
    return 8.0 * t * (m * m + m) + 8.0 * m;
}

KernelTables tabulate_kernels(const FrequencyGrid& grid, double rabi, std::span<const double> times,
                              const KernelOptions& options) {
    require(grid.size() >= 2, "tabulate_kernels: grid too small");
    require(rabi >= 0.0, "tabulate_kernels: rabi must be >= 0");
    require(!times.empty(), "tabulate_kernels: no times");
    check_times(times);
    require(grid.back() > rabi, "tabulate_kernels: grid must extend beyond the drive frequency");
    const double bytes = kernel_table_bytes(grid.size(), times.size());
    if (bytes > options.memory_budget_bytes)
        throw ValidationError("tabulate_kernels: tables need " + std::to_string(bytes / 1e6) +
                              " MB, budget is " + std::to_string(options.memory_budget_bytes / 1e6) + " MB");

    const std::size_t m = grid.size();
    const std::size_t nt = times.size();
    const double t_max = times.back();

    // Second order: fine 1D product integration plus the closed-form tail.
    const auto q2 = hat_quadrature(grid, options.f2_min_points, options.f2_max_points, t_max);
    std::vector<double> weights(m, 0.0);
    for (const auto& p : q2) {
        weights[p.lo] += p.weight * p.c_lo;
        weights[p.hi] += p.weight * p.c_hi;
    }
    std::vector<double> f2(nt * m, 0.0);
    parallel_for(
        nt,
        [&](std::size_t t) {
            double* row = f2.data() + t * m;
            for (const auto& p : q2) {
                const double k = p.weight * re_f2(p.omega, rabi, times[t]);
                row[p.lo] += k * p.c_lo;
                row[p.hi] += k * p.c_hi;
            }
            row[m - 1] += re_f2_tail(grid.back(), rabi, times[t]);
        },
        options.threads);

    // Fourth order: tensor product integration over unordered point pairs.
    const auto q4 = hat_quadrature(grid, options.f4_min_points, options.f4_max_points, t_max);
    const std::size_t np = q4.size();
    std::vector<double> rf2(np * nt);
    for (std::size_t a = 0; a < np; ++a)
        for (std::size_t t = 0; t < nt; ++t) rf2[a * nt + t] = re_f2(q4[a].omega, rabi, times[t]);

    // Points are grouped by cell; a cell's points write only the rows of its
    // own nodes, so cells of equal parity never touch the same row.
    std::vector<std::size_t> cell_begin{0};
    for (std::size_t a = 1; a < np; ++a)
        if (q4[a].lo != q4[a - 1].lo || q4[a].hi != q4[a - 1].hi) cell_begin.push_back(a);
    cell_begin.push_back(np);
    const std::size_t n_cells = cell_begin.size() - 1;

    std::vector<double> f4(nt * m * m, 0.0);  // holds H, then H + Hᵀ
    for (std::size_t parity = 0; parity < 2; ++parity) {
        std::vector<std::size_t> cells;
        for (std::size_t c = parity; c < n_cells; c += 2) cells.push_back(c);
        parallel_for(
            cells.size(),
            [&](std::size_t idx) {
                const std::size_t c = cells[idx];
                std::vector<double> series(nt);
                for (std::size_t a = cell_begin[c]; a < cell_begin[c + 1]; ++a) {
                    const auto& pa = q4[a];
                    for (std::size_t b = a; b < np; ++b) {
                        const auto& pb = q4[b];
                        std::fill(series.begin(), series.end(), 0.0);
                        f4_pairing_series(pa.omega, pb.omega, rabi, times, series.data());
                        const double w = pa.weight * pb.weight * (a == b ? 0.5 : 1.0);
                        const std::size_t ri[2] = {pa.lo, pa.hi};
                        const double rc[2] = {pa.c_lo, pa.c_hi};
                        const std::size_t ci[2] = {pb.lo, pb.hi};
                        const double cc[2] = {pb.c_lo, pb.c_hi};
                        for (std::size_t t = 0; t < nt; ++t) {
                            const double v = w * (series[t] - rf2[a * nt + t] * rf2[b * nt + t]);
                            double* h = f4.data() + t * m * m;
                            for (int x = 0; x < 2; ++x) {
                                if (rc[x] == 0.0) continue;
                                for (int y = 0; y < 2; ++y) {
                                    if (cc[y] == 0.0) continue;
                                    h[ri[x] * m + ci[y]] += rc[x] * cc[y] * v;
                                }
                            }
                        }
                    }
                }
            },
            options.threads);
    }
    parallel_for(
        nt,
        [&](std::size_t t) {
            double* h = f4.data() + t * m * m;
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = i; j < m; ++j) {
                    const double s = h[i * m + j] + h[j * m + i];
                    h[i * m + j] = s;
                    h[j * m + i] = s;
                }
        },
        options.threads);

    return KernelTables(grid, rabi, std::vector<double>(times.begin(), times.end()), std::move(weights),
                        std::move(f2), std::move(f4));
}

}  // namespace cwnoise
