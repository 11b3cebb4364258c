#pragma once

// Residual checks of the change-of-variables formulas and the limit
// theorems for local time.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltsi/error.hpp"
#include "ltsi/localtime.hpp"
#include "ltsi/ltspace.hpp"
#include "ltsi/measure.hpp"
#include "ltsi/path.hpp"
#include "ltsi/roots.hpp"

namespace ltsi {

struct Resolution {
    double dt = 0.0;
    double level_spacing = 0.0;
    double eps = 0.0;
};

/// A residual process that should vanish as resolution increases.
struct ResidualReport {
    std::vector<double> times;
    std::vector<double> residual;
    double sup_abs = 0.0;
    double terminal_abs = 0.0;
    Resolution resolution;
    std::size_t paths_used = 1;

    void finish() {
        sup_abs = 0.0;
        for (double r : residual) sup_abs = std::max(sup_abs, std::abs(r));
        terminal_abs = residual.empty() ? 0.0 : std::abs(residual.back());
    }
};

inline nlohmann::json to_json(const ResidualReport& r) {
    return {{"sup_abs", r.sup_abs},
            {"terminal_abs", r.terminal_abs},
            {"dt", r.resolution.dt},
            {"level_spacing", r.resolution.level_spacing},
            {"eps", r.resolution.eps},
            {"paths_used", r.paths_used},
            {"nodes", r.residual.size()}};
}

/// One time-derivative term F_t dμ of a change-of-variables function.
struct TimeTerm {
    TimeSpaceFn density;
    RadonMeasure mu;
};

/// F with its left space derivative F_x (carrying the structure needed for
/// Λ(F_x)) and a finite list of time terms.
struct CovFunction {
    TimeSpaceFn F;
    TimeSpaceFunction F_x;
    std::vector<TimeTerm> F_t;
};

namespace detail {

/// Cumulative Σ_{i<k} ∫_{[t_i,t_{i+1})} density(s, X_i) dμ(s): left-point
/// density times the cell mass for the continuous part, atoms charged to
/// the cell containing them.
inline std::vector<double> time_term_process(const TimeTerm& term, const SamplePath& X) {
    const auto& g = X.grid;
    const std::size_t n = g.n_steps();
    std::vector<double> out(n + 1, 0.0);
    std::vector<double> inc(n, 0.0);
    if (term.mu.has_density()) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = g.time(i);
            inc[i] += term.density(t, X.values[i]) * term.mu.density(t) * g.dt();
        }
    }
    for (const auto& a : term.mu.atoms()) {
        if (a.location < g.t0() || a.location >= g.T()) continue;
        const auto i = std::min(n - 1, static_cast<std::size_t>(std::floor((a.location - g.t0()) / g.dt())));
        inc[i] += term.density(a.location, X.values[i]) * a.weight;
    }
    for (std::size_t i = 0; i < n; ++i) out[i + 1] = out[i] + inc[i];
    return out;
}

}  // namespace detail

/// residual_t = F(t,X_t) − F(0,X_0) − Σ∫F_t dμ − Σ F_x(t_i,X_i)ΔX_i + ½Λ_t(F_x).
/// Λ_t comes from the space-density representation at every node when F_x
/// declares one; otherwise from the time-density or Vitali representation
/// on `coarse_nodes` equally spaced nodes.
inline ResidualReport cov_residual(const CovFunction& F, const SamplePath& X, double T,
                                   const LtsOptions& opt = {}, std::size_t coarse_nodes = 64) {
    const auto& g = X.grid;
    const auto kT = node_of(g, T);
    const std::size_t n = g.n_steps();
    std::vector<double> At(n + 1, 0.0);
    for (const auto& term : F.F_t) {
        const auto p = detail::time_term_process(term, X);
        for (std::size_t i = 0; i <= n; ++i) At[i] += p[i];
    }
    std::vector<double> fx(n);
    for (std::size_t i = 0; i < n; ++i) fx[i] = F.F_x(g.time(i), X.values[i]);
    const auto I = ito_integral(fx, X).values;
    const double F0 = F.F(g.time(0), X.values[0]);

    ResidualReport r;
    r.resolution = {g.dt(), opt.level_spacing, 0.0};
    if (F.F_x.space_density()) {
        const auto lam = lts_space_density_process(F.F_x, X, opt);
        for (std::size_t k = 0; k <= kT; ++k) {
            r.times.push_back(g.time(k));
            r.residual.push_back(F.F(g.time(k), X.values[k]) - F0 - At[k] - I[k] + 0.5 * lam.values[k]);
        }
    } else if (F.F_x.time_density() || F.F_x.vitali()) {
        const std::size_t m = std::max<std::size_t>(1, std::min(coarse_nodes, kT));
        for (std::size_t p = 0; p <= m; ++p) {
            const std::size_t k = kT * p / m;
            const double t = g.time(k);
            double lam = 0.0;
            if (k > 0) {
                lam = F.F_x.time_density() ? lts_time_density(F.F_x, X, t, opt).value : lts_vitali(F.F_x, X, t, opt).value;
            }
            r.times.push_back(t);
            r.residual.push_back(F.F(t, X.values[k]) - F0 - At[k] - I[k] + 0.5 * lam);
        }
    } else {
        throw RepresentationUnavailableError("cov_residual: F_x declares no representation");
    }
    r.finish();
    return r;
}

/// Time-independent formula for a difference of convex functions:
/// F(X_t) = F(X_0) + Σ F′₋(X_i)ΔX_i + ½∫L^a_t dF′₋(a). Routed through
/// cov_residual with F_x = F′₋ of space density 1 against dF′₋.
inline ResidualReport ito_tanaka_check(const RealFn& F, const BVFunction& Fprime, const SamplePath& X,
                                       double T, const LtsOptions& opt = {}) {
    const auto [mn, mx] = path_range(X, node_of(X.grid, T));
    (void)total_variation(Fprime, {mn - 1.0, mx + 1.0});
    const RadonMeasure dF = Fprime.measure();
    ValidationBox box{0.0, 1.0, mn - 1.0, mx + 1.0};
    TimeSpaceFunction Fx([Fprime](double, double a) { return Fprime(a); }, std::nullopt,
                         SpaceDensity{[](double, double) { return 1.0; }, dF}, std::nullopt, box);
    CovFunction cf{[F](double, double x) { return F(x); }, std::move(Fx), {}};
    return cov_residual(cf, X, T, opt);
}

/// C^{1,2} extension of F on one side of a curve.
struct SmoothPiece {
    TimeSpaceFn F;
    TimeSpaceFn F_t;
    TimeSpaceFn F_x;
    TimeSpaceFn F_xx;
};

/// F equal to `below` for x < b(t) and `above` for x > b(t).
struct CurveSplitFunction {
    SmoothPiece below;
    SmoothPiece above;
    RealFn curve;
};

/// Residual of the local-time-on-curves formula. The curve local time is
/// the Tanaka local time of X − b at 0.
inline ResidualReport ltc_residual(const CurveSplitFunction& F, const SamplePath& X, double T) {
    const auto& g = X.grid;
    const auto kT = node_of(g, T);
    const std::size_t n = g.n_steps();
    std::vector<double> b(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = g.time(i);
        b[i] = F.curve(t);
        const double lo = F.below.F(t, b[i]);
        const double hi = F.above.F(t, b[i]);
        if (std::abs(lo - hi) > 1e-8 * (1.0 + std::abs(lo) + std::abs(hi))) {
            throw ContractError("ltc_residual: extensions disagree on the curve at t=" + std::to_string(t));
        }
    }
    const auto Y = shifted(X, b);
    const auto curve_lt = tanaka_trace(Y, 0.0, Side::right);
    std::vector<double> jump(n, 0.0);
    for (const auto& e : curve_lt.events) {
        const double t = g.time(e.step);
        jump[e.step] = 0.5 * (F.above.F_x(t, b[e.step]) - F.below.F_x(t, b[e.step])) * e.dL;
    }
    std::vector<double> scratch;
    const auto& q = qv_track(X, scratch);
    auto piece = [&](std::size_t i) -> const SmoothPiece& { return X.values[i] > b[i] ? F.above : F.below; };
    auto value = [&](std::size_t i) { return piece(i).F(g.time(i), X.values[i]); };

    ResidualReport r;
    r.resolution = {g.dt(), 0.0, 0.0};
    const double F0 = value(0);
    double acc = 0.0;
    r.times.push_back(g.time(0));
    r.residual.push_back(0.0);
    for (std::size_t i = 0; i < kT; ++i) {
        const double t = g.time(i);
        const auto& p = piece(i);
        const double x = X.values[i];
        acc += p.F_t(t, x) * g.dt() + p.F_x(t, x) * (X.values[i + 1] - x) + jump[i];
        const double fxx = x != b[i] ? p.F_xx(t, x) : 0.5 * (F.above.F_xx(t, x) + F.below.F_xx(t, x));
        acc += 0.5 * fxx * (q[i + 1] - q[i]);
        r.times.push_back(g.time(i + 1));
        r.residual.push_back(value(i + 1) - F0 - acc);
    }
    r.finish();
    return r;
}

struct ConvergenceRow {
    double key;  // depth or ε
    double value;
    double reference;
    double abs_err;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;

    [[nodiscard]] std::vector<double> successive_diffs() const {
        std::vector<double> d;
        for (std::size_t i = 1; i < rows.size(); ++i) d.push_back(std::abs(rows[i].value - rows[i - 1].value));
        return d;
    }
};

/// `depth_or_eps,value,reference,abs_err`, 17 significant digits.
inline void write_convergence_csv(std::ostream& os, const ConvergenceTable& t) {
    os << "depth_or_eps,value,reference,abs_err\n";
    char buf[128];
    for (const auto& r : t.rows) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", r.key, r.value, r.reference, r.abs_err);
        os << buf;
    }
}

/// Occupation-side values (1/ε)Σ[H(t_i,X_i) − H(t_i,X_i − ε)]Δ⟨X⟩_i next to
/// Λ(H). The table's reference column is |Λ(H)| compared with |value|;
/// matched_sign is the sign s for which value ≈ s·Λ(H) at the smallest ε.
struct GhomrasniResult {
    ConvergenceTable table;
    double lambda = 0.0;
    double matched_sign = 1.0;
};

inline double occupation_difference_quotient(const TimeSpaceFn& H, const SamplePath& X, double eps,
                                             std::size_t upto) {
    std::vector<double> scratch;
    const auto& q = qv_track(X, scratch);
    double s = 0.0;
    for (std::size_t i = 0; i < upto; ++i) {
        const double t = X.grid.time(i);
        s += (H(t, X.values[i]) - H(t, X.values[i] - eps)) * (q[i + 1] - q[i]);
    }
    return s / eps;
}

inline GhomrasniResult ghomrasni_limit(const TimeSpaceFunction& H, const SamplePath& X, double T,
                                       const std::vector<double>& eps_list, const LtsOptions& opt = {}) {
    const auto kT = node_of(X.grid, T);
    for (std::size_t i = 1; i < eps_list.size(); ++i) {
        if (!(eps_list[i] < eps_list[i - 1])) throw ContractError("ghomrasni_limit: eps_list must be decreasing");
    }
    std::vector<double> scratch;
    const auto& q = qv_track(X, scratch);
    const double rms = std::sqrt(q[kT] / static_cast<double>(std::max<std::size_t>(kT, 1)));
    GhomrasniResult out;
    if (H.space_density()) {
        out.lambda = lts_space_density(H, X, T, opt).value;
    } else if (H.time_density()) {
        out.lambda = lts_time_density(H, X, T, opt).value;
    } else if (H.vitali()) {
        out.lambda = lts_vitali(H, X, T, opt).value;
    } else {
        throw RepresentationUnavailableError("ghomrasni_limit: H declares no representation");
    }
    for (double eps : eps_list) {
        if (!(eps > 0.0) || eps < 0.5 * rms) {
            throw ResolutionError("ghomrasni_limit: eps=" + std::to_string(eps) + " below the path increment scale");
        }
        const double v = occupation_difference_quotient(H.eval(), X, eps, kT);
        out.table.rows.push_back({eps, v, std::abs(out.lambda), std::abs(std::abs(v) - std::abs(out.lambda))});
    }
    if (!out.table.rows.empty()) {
        const double v = out.table.rows.back().value;
        out.matched_sign = std::abs(v - out.lambda) <= std::abs(v + out.lambda) ? 1.0 : -1.0;
    }
    return out;
}

/// Partition sums Σ H_{t_i}(L^{θ_{t_i}}_{t_{i+1}} − L^{θ_{t_i}}_{t_i}) over
/// dyadic partitions, next to ∫H dL^0(X − θ). The increments over a
/// partition cell are sums of the per-step Tanaka increments at the frozen
/// level θ_{t_i}.
inline ConvergenceTable riemann_sum_localtime(std::span<const double> Hproc, const SamplePath& theta,
                                              const SamplePath& X, const std::vector<int>& depths) {
    const auto& g = X.grid;
    const std::size_t n = g.n_steps();
    if (Hproc.size() != n + 1 || !(theta.grid == g)) throw ContractError("riemann_sum_localtime: inputs must share the grid");
    detail::check_time_bv(g, [&](double t) { return theta.values[node_of(g, t)]; });
    const auto Y = shifted(X, theta.values);
    const auto ref_trace = tanaka_trace(Y, 0.0, Side::right);
    double reference = 0.0;
    for (const auto& e : ref_trace.events) reference += Hproc[e.step] * e.dL;

    ConvergenceTable table;
    for (int d : depths) {
        const std::size_t cells = std::size_t{1} << d;
        if (d < 0 || n % cells != 0) throw ContractError("riemann_sum_localtime: depth finer than the grid");
        const std::size_t w = n / cells;
        double s = 0.0;
        for (std::size_t c = 0; c < cells; ++c) {
            const std::size_t i0 = c * w;
            const double a = theta.values[i0];
            double inc = 0.0;
            for (std::size_t i = i0; i < i0 + w; ++i) {
                inc += detail::tanaka_step(X.values[i] - a, X.values[i + 1] - a, Side::right);
            }
            s += Hproc[i0] * inc;
        }
        table.rows.push_back({static_cast<double>(d), s, reference, std::abs(s - reference)});
    }
    return table;
}

/// Compares ∫G_y(s, F(s,a)+) d_sL^{F(·,a)}_s(Y) with L^a(X), X = G(t,Y),
/// F(t,·) the inverse of G(t,·). The curve local time is the Tanaka local
/// time of Y − F(·,a) at 0.
inline ResidualReport change_of_local_time_check(const TimeSpaceFn& G, const TimeSpaceFn& G_y,
                                                 const SamplePath& Y, double a) {
    const auto& g = Y.grid;
    const std::size_t n = g.n_steps();
    const auto [mn, mx] = path_range(Y, n);
    for (int it = 0; it <= 16; ++it) {
        const double t = g.t0() + (g.T() - g.t0()) * it / 16.0;
        double prev = G(t, mn - 1.0);
        for (int k = 1; k <= 64; ++k) {
            const double v = G(t, mn - 1.0 + (mx - mn + 2.0) * k / 64.0);
            if (!(v > prev)) throw ContractError("change_of_local_time_check: G is not strictly increasing in y");
            prev = v;
        }
    }
    std::vector<double> curve(n + 1);
    std::vector<double> xv(n + 1);
    double guess = a;
    for (std::size_t i = 0; i <= n; ++i) {
        const double t = g.time(i);
        curve[i] = invert_increasing([&](double y) { return G(t, y); }, a, guess,
                                     [&](double y) { return G_y(t, y); });
        guess = curve[i];
        xv[i] = G(t, Y.values[i]);
    }
    const auto lhs_trace = tanaka_trace(shifted(Y, curve), 0.0, Side::right);
    SamplePath X(g, std::move(xv));
    const auto rhs = local_time_tanaka(X, a, Side::right);
    std::vector<double> lhs(n + 1, 0.0);
    std::vector<double> inc(n, 0.0);
    for (const auto& e : lhs_trace.events) {
        const double t = g.time(e.step);
        inc[e.step] = G_y(t, std::nextafter(curve[e.step], kInf)) * e.dL;
    }
    for (std::size_t i = 0; i < n; ++i) lhs[i + 1] = lhs[i] + inc[i];
    ResidualReport r;
    r.resolution = {g.dt(), 0.0, 0.0};
    for (std::size_t i = 0; i <= n; ++i) {
        r.times.push_back(g.time(i));
        r.residual.push_back(lhs[i] - rhs.values[i]);
    }
    r.finish();
    return r;
}

}  // namespace ltsi
