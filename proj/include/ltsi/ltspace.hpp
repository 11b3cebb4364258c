#pragma once

// The local time-space integral Λ(H) and its representations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltsi/error.hpp"
#include "ltsi/localtime.hpp"
#include "ltsi/measure.hpp"
#include "ltsi/path.hpp"

namespace ltsi {

/// t ↦ H(t,a) has density h with respect to μ.
struct TimeDensity {
    TimeSpaceFn h;
    RadonMeasure mu;
};

/// a ↦ H(t,a) has density g with respect to ν.
struct SpaceDensity {
    TimeSpaceFn g;
    RadonMeasure nu;
};

struct VitaliDecl {
    double variation_bound = kInf;
};

/// Region sampled when checking declared structure.
struct ValidationBox {
    double t_lo = 0.0;
    double t_hi = 1.0;
    double a_lo = -4.0;
    double a_hi = 4.0;
};

/// H(t,a) with whichever structure the caller declares. Declarations are
/// checked against the evaluator on a 17x17 lattice at construction.
class TimeSpaceFunction {
public:
    explicit TimeSpaceFunction(TimeSpaceFn eval, std::optional<TimeDensity> td = std::nullopt,
                               std::optional<SpaceDensity> sd = std::nullopt,
                               std::optional<VitaliDecl> vd = std::nullopt, ValidationBox lattice = {},
                               std::vector<double> space_breaks = {})
        : eval_(std::move(eval)),
          td_(std::move(td)),
          sd_(std::move(sd)),
          vd_(vd),
          space_breaks_(std::move(space_breaks)) {
        if (!eval_) throw ContractError("TimeSpaceFunction: missing evaluator");
        validate(lattice);
    }

    double operator()(double t, double a) const { return eval_(t, a); }
    [[nodiscard]] const TimeSpaceFn& eval() const noexcept { return eval_; }
    [[nodiscard]] const std::optional<TimeDensity>& time_density() const noexcept { return td_; }
    [[nodiscard]] const std::optional<SpaceDensity>& space_density() const noexcept { return sd_; }
    [[nodiscard]] const std::optional<VitaliDecl>& vitali() const noexcept { return vd_; }

    /// Points where a ↦ H(t,a) may jump or kink (besides ν atoms).
    [[nodiscard]] std::vector<double> space_breaks() const {
        std::vector<double> b = space_breaks_;
        if (sd_) {
            for (const auto& at : sd_->nu.atoms()) b.push_back(at.location);
            const auto db = sd_->nu.density_breakpoints();
            b.insert(b.end(), db.begin(), db.end());
        }
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

    [[nodiscard]] int representation_count() const noexcept {
        return static_cast<int>(td_.has_value()) + static_cast<int>(sd_.has_value()) +
               static_cast<int>(vd_.has_value());
    }

private:
    void validate(const ValidationBox& box) const {
        constexpr int n = 17;
        QuadratureOptions q;
        q.rel_tol = 1e-9;
        q.max_level = 12;
        auto node = [](double lo, double hi, int k) { return lo + (hi - lo) * k / (n - 1); };
        auto close = [](double x, double y) { return std::abs(x - y) <= 1e-5 * (1.0 + std::abs(x) + std::abs(y)); };
        if (td_) {
            for (int ia = 0; ia < n; ++ia) {
                const double a = node(box.a_lo, box.a_hi, ia);
                for (int it = 1; it < n; ++it) {
                    const double t = node(box.t_lo, box.t_hi, it);
                    const double lhs = eval_(t, a) - eval_(box.t_lo, a);
                    const double rhs = measure_integrate([&](double u) { return td_->h(u, a); }, td_->mu,
                                                         {box.t_lo, t}, q);
                    if (!close(lhs, rhs)) {
                        throw ContractError("TimeSpaceFunction: time density disagrees with H at (t,a)=(" +
                                            std::to_string(t) + "," + std::to_string(a) + ")");
                    }
                }
            }
        }
        if (sd_) {
            for (int it = 0; it < n; ++it) {
                const double t = node(box.t_lo, box.t_hi, it);
                for (int ia = 1; ia < n; ++ia) {
                    const double a = node(box.a_lo, box.a_hi, ia);
                    const double lhs = eval_(t, a) - eval_(t, box.a_lo);
                    const double rhs = measure_integrate([&](double x) { return sd_->g(t, x); }, sd_->nu,
                                                         {box.a_lo, a}, q);
                    if (!close(lhs, rhs)) {
                        throw ContractError("TimeSpaceFunction: space density disagrees with H at (t,a)=(" +
                                            std::to_string(t) + "," + std::to_string(a) + ")");
                    }
                }
            }
        }
    }

    TimeSpaceFn eval_;
    std::optional<TimeDensity> td_;
    std::optional<SpaceDensity> sd_;
    std::optional<VitaliDecl> vd_;
    std::vector<double> space_breaks_;
};

enum class Representation { simple, time_density, space_density, vitali, shifted };

inline const char* representation_name(Representation r) noexcept {
    switch (r) {
        case Representation::simple: return "simple";
        case Representation::time_density: return "time_density";
        case Representation::space_density: return "space_density";
        case Representation::vitali: return "vitali";
        case Representation::shifted: return "shifted";
    }
    return "simple";
}

struct LtsDiagnostics {
    int depth = 0;
    double truncation_error = 0.0;
    std::size_t quadrature_nodes = 0;
    std::vector<std::string> notes;
};

struct LtsResult {
    double value = 0.0;
    Representation representation = Representation::simple;
    LtsDiagnostics diagnostics;
};

/// Resolution knobs shared by the grid-based representations.
struct LtsOptions {
    double level_spacing = 0x1.0p-8;
    /// Extra room beyond the path range; defaults to one level spacing.
    double margin = -1.0;
    /// Panels of the u-grid used for the time-density representation.
    std::size_t time_panels = 128;
    /// Coarse time intervals of the two-parameter sum.
    std::size_t vitali_time_cells = 256;
    QuadratureOptions quadrature = {};
};

/// Node index of time T on the grid; T must be a node.
inline std::size_t node_of(const TimeGrid& g, double T) {
    const double r = (T - g.t0()) / g.dt();
    const double k = std::round(r);
    if (k < 0 || k > static_cast<double>(g.n_steps()) || std::abs(r - k) > 1e-9 * std::max(1.0, r)) {
        throw ContractError("time " + std::to_string(T) + " is not a grid node");
    }
    return static_cast<std::size_t>(k);
}

struct BouleauYorOptions {
    /// Jumps or kinks of f, for the antiderivative quadrature.
    std::vector<double> breaks;
    QuadratureOptions quadrature = {};
};

/// ∫ f(a) d_a L^a at node k, as −2[F(X_k) − F(X_0) − Σ_{i<k} f(X_i) ΔX_i].
/// F(X_k) − F(X_0) is the quadrature of f from X_0 to X_k, so no reference
/// point enters.
inline double bouleau_yor(const RealFn& f, const SamplePath& X, std::size_t k,
                          const BouleauYorOptions& opt = {}) {
    if (k > X.grid.n_steps()) throw ContractError("bouleau_yor: node out of range");
    double ito = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const double fi = f(X.values[i]);
        if (!std::isfinite(fi)) throw NumericDomainError("bouleau_yor: integrand not finite on the path", i);
        ito += fi * (X.values[i + 1] - X.values[i]);
    }
    const double x0 = X.values[0];
    const double xk = X.values[k];
    double dF = 0.0;
    if (xk != x0) {
        const double lo = std::min(x0, xk);
        const double hi = std::max(x0, xk);
        dF = detail::romberg_pieces(f, lo, hi, opt.breaks, opt.quadrature).value;
        if (xk < x0) dF = -dF;
    }
    return -2.0 * (dF - ito);
}

/// One rectangle (s,t] x (x,y] with a coefficient.
struct SimpleTerm {
    double s;
    double t;
    double x;
    double y;
    double coefficient;
};

/// Λ of a finite rectangle sum from the four-term local-time combination.
inline double lts_simple(const std::vector<SimpleTerm>& H, const LocalTimeField& field) {
    double total = 0.0;
    for (const auto& r : H) {
        const auto is = node_of(field.tgrid(), r.s);
        const auto it = node_of(field.tgrid(), r.t);
        const auto jx = field.level_index(r.x);
        const auto jy = field.level_index(r.y);
        total += r.coefficient *
                 (field.value(it, jy) - field.value(is, jy) - field.value(it, jx) + field.value(is, jx));
    }
    return total;
}

/// Level grid with ν-quadrature weights. Levels are uniform over the path
/// range (plus margin) with ν's atoms and density breakpoints inserted.
struct LevelQuadrature {
    std::vector<double> levels;
    std::vector<double> weights;
};

inline LevelQuadrature build_level_quadrature(double xmin, double xmax, const RadonMeasure& nu,
                                              const LtsOptions& opt) {
    const double margin = opt.margin >= 0.0 ? opt.margin : opt.level_spacing;
    const double lo = xmin - margin;
    const double hi = xmax + margin;
    LevelQuadrature q;
    q.levels = uniform_levels(lo, hi, opt.level_spacing);
    const double glo = q.levels.front();
    const double ghi = q.levels.back();
    for (const auto& a : nu.atoms()) {
        if (a.location > glo && a.location < ghi) q.levels.push_back(a.location);
    }
    for (double b : nu.density_breakpoints()) {
        if (b > glo && b < ghi) q.levels.push_back(b);
    }
    std::sort(q.levels.begin(), q.levels.end());
    q.levels.erase(std::unique(q.levels.begin(), q.levels.end()), q.levels.end());
    q.weights.assign(q.levels.size(), 0.0);
    if (nu.has_density()) {
        for (std::size_t j = 0; j + 1 < q.levels.size(); ++j) {
            const double a0 = q.levels[j];
            const double a1 = q.levels[j + 1];
            const double half = 0.5 * (a1 - a0);
            q.weights[j] += half * nu.density(std::nextafter(a0, a1));
            q.weights[j + 1] += half * nu.density(std::nextafter(a1, a0));
        }
    }
    for (std::size_t j = 0; j < q.levels.size(); ++j) q.weights[j] += nu.atom(q.levels[j]);
    return q;
}

inline std::pair<double, double> path_range(const SamplePath& X, std::size_t upto) {
    const auto [mn, mx] = std::minmax_element(X.values.begin(), X.values.begin() + static_cast<std::ptrdiff_t>(upto) + 1);
    return {*mn, *mx};
}

/// −Σ_j w_j Σ_{charges before node k} g(t_step, a_j) dL, on a field whose
/// levels are those of q.
inline double space_density_sum(const LocalTimeField& field, const LevelQuadrature& q,
                                const TimeSpaceFn& g, std::size_t k) {
    double total = 0.0;
    for (std::size_t j = 0; j < q.levels.size(); ++j) {
        if (q.weights[j] == 0.0) continue;
        const double a = q.levels[j];
        total += q.weights[j] * field.stieltjes(j, [&](double t) { return g(t, a); }, k);
    }
    return -total;
}

inline RepresentationUnavailableError missing(const char* what) {
    return RepresentationUnavailableError(std::string("no ") + what + " declared on the integrand");
}

/// −∫_R ∫_0^T g(u,a) d_u L^a_u dν(a), left-point g, outer integral over the
/// path range.
inline LtsResult lts_space_density(const TimeSpaceFunction& H, const SamplePath& X, double T,
                                   const LtsOptions& opt = {}) {
    if (!H.space_density()) throw missing("space density");
    const auto k = node_of(X.grid, T);
    const auto [mn, mx] = path_range(X, k);
    const auto q = build_level_quadrature(mn, mx, H.space_density()->nu, opt);
    const auto field = local_time_field(X, q.levels, Side::right);
    LtsResult r;
    r.representation = Representation::space_density;
    r.value = space_density_sum(field, q, H.space_density()->g, k);
    r.diagnostics.quadrature_nodes = q.levels.size();
    return r;
}

/// Λ_t for every node t of the grid, from the space-density representation,
/// with the per-step increments kept so the discrete total variation can be
/// summed in step order.
struct LtsProcess {
    std::vector<double> values;
    std::vector<double> increments;

    [[nodiscard]] double total_variation() const {
        double tv = 0.0;
        for (double d : increments) tv += std::abs(d);
        return tv;
    }
};

inline LtsProcess lts_space_density_process(const TimeSpaceFunction& H, const SamplePath& X,
                                            const LtsOptions& opt = {}) {
    if (!H.space_density()) throw missing("space density");
    const auto [mn, mx] = path_range(X, X.grid.n_steps());
    const auto q = build_level_quadrature(mn, mx, H.space_density()->nu, opt);
    const auto field = local_time_field(X, q.levels, Side::right);
    const auto& g = H.space_density()->g;
    const std::size_t n = X.grid.n_steps();
    std::vector<double> inc(n, 0.0);
    for (std::size_t j = 0; j < q.levels.size(); ++j) {
        if (q.weights[j] == 0.0) continue;
        const double a = q.levels[j];
        for (const auto& e : field.events(j)) {
            inc[e.step] -= q.weights[j] * g(X.grid.time(e.step), a) * e.dL;
        }
    }
    LtsProcess p;
    p.values.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) p.values[i + 1] = p.values[i] + inc[i];
    p.increments = std::move(inc);
    return p;
}

/// ∫ L^a_T sup_u |g(u,a)| d|ν|(a), on the same level quadrature and u-sup
/// taken over the grid nodes.
inline double lts_variation_bound(const TimeSpaceFunction& H, const SamplePath& X, const LtsOptions& opt = {}) {
    if (!H.space_density()) throw missing("space density");
    const auto [mn, mx] = path_range(X, X.grid.n_steps());
    const auto q = build_level_quadrature(mn, mx, H.space_density()->nu, opt);
    const auto field = local_time_field(X, q.levels, Side::right);
    const auto& g = H.space_density()->g;
    double bound = 0.0;
    for (std::size_t j = 0; j < q.levels.size(); ++j) {
        if (q.weights[j] == 0.0 || field.terminal(j) == 0.0) continue;
        double sup = 0.0;
        for (std::size_t i = 0; i <= X.grid.n_steps(); ++i) sup = std::max(sup, std::abs(g(X.grid.time(i), q.levels[j])));
        bound += std::abs(q.weights[j]) * field.terminal(j) * sup;
    }
    return bound;
}

/// BY(H(T,·)) − ∫_[0,T) BY(h(u,·), u) dμ(u). The continuous part of μ is
/// integrated by composite Simpson over a u-grid of time nodes; atoms use
/// the node at or before the atom. An atom at T is excluded and noted.
inline LtsResult lts_time_density(const TimeSpaceFunction& H, const SamplePath& X, double T,
                                  const LtsOptions& opt = {}) {
    if (!H.time_density()) throw missing("time density");
    const auto& td = *H.time_density();
    const auto& g = X.grid;
    const auto kT = node_of(g, T);
    BouleauYorOptions by;
    by.breaks = H.space_breaks();
    by.quadrature = opt.quadrature;
    LtsResult r;
    r.representation = Representation::time_density;
    const double head = bouleau_yor([&](double a) { return H(T, a); }, X, kT, by);

    double atoms = 0.0;
    for (const auto& at : td.mu.atoms()) {
        if (at.location == T) {
            r.diagnostics.notes.push_back("mu has an atom at T; excluded from [0,T)");
            continue;
        }
        if (at.location < g.t0() || at.location > T) continue;
        const auto k = static_cast<std::size_t>(std::floor((at.location - g.t0()) / g.dt()));
        atoms += at.weight * bouleau_yor([&](double a) { return td.h(at.location, a); }, X, std::min(k, kT), by);
    }

    double cont = 0.0;
    if (td.mu.has_density() && kT > 0) {
        std::size_t panels = std::min(opt.time_panels, kT);
        while (panels > 2 && (kT % panels != 0 || panels % 2 != 0)) --panels;
        if (kT % panels != 0 || panels % 2 != 0) panels = kT % 2 == 0 ? kT : 1;
        const std::size_t stride = kT / panels;
        std::vector<double> vals(panels + 1);
        for (std::size_t p = 0; p <= panels; ++p) {
            const std::size_t k = p * stride;
            const double u = g.time(k);
            const double dens = td.mu.density(u);
            vals[p] = dens == 0.0 ? 0.0 : dens * bouleau_yor([&](double a) { return td.h(u, a); }, X, k, by);
        }
        const double hstep = (g.time(kT) - g.t0()) / static_cast<double>(panels);
        auto simpson = [&](std::size_t step) {
            const std::size_t m = panels / step;
            const double hh = hstep * static_cast<double>(step);
            if (m % 2 != 0) {
                double s = 0.0;
                for (std::size_t p = 0; p < m; ++p) s += 0.5 * hh * (vals[p * step] + vals[(p + 1) * step]);
                return s;
            }
            double s = vals[0] + vals[m * step];
            for (std::size_t p = 1; p < m; ++p) s += (p % 2 == 1 ? 4.0 : 2.0) * vals[p * step];
            return s * hh / 3.0;
        };
        cont = simpson(1);
        if (panels % 4 == 0) r.diagnostics.truncation_error = std::abs(cont - simpson(2));
        r.diagnostics.depth = static_cast<int>(panels);
        r.diagnostics.quadrature_nodes = panels + 1;
    }
    r.value = head - (atoms + cont);
    return r;
}

/// Coarse time stride giving about `cells` intervals over the grid.
inline std::size_t vitali_stride(const TimeGrid& g, std::size_t cells) {
    std::size_t stride = std::max<std::size_t>(1, g.n_steps() / std::max<std::size_t>(cells, 1));
    while (g.n_steps() % stride != 0) --stride;
    return stride;
}

/// −Σ_j L_T(a_{j+1})[H(T,a_{j+1}) − H(T,a_j)] + Σ_{p,j} L(u_{p+1},a_{j+1}) ΔΔH
/// on the coarse time grid x field levels, ΔΔH the rectangle increment of
/// cell [u_p,u_{p+1}] x [a_j,a_{j+1}]. This is the summation-by-parts form
/// of the four-term definition on the H-sampled cells, so the double term
/// enters with a plus sign.
inline LtsResult lts_vitali(const TimeSpaceFunction& H, const LocalTimeField& field, double T,
                            const LtsOptions& opt = {}) {
    if (!H.vitali()) throw missing("Vitali variation bound");
    const auto& g = field.tgrid();
    const auto kT = node_of(g, T);
    const auto& lv = field.levels();
    if (lv.size() < 2) throw ContractError("lts_vitali: field needs at least two levels");
    LtsResult r;
    r.representation = Representation::vitali;

    double single = 0.0;
    double prevH = H(T, lv[0]);
    for (std::size_t j = 0; j + 1 < lv.size(); ++j) {
        const double nextH = H(T, lv[j + 1]);
        single += field.value(kT, j + 1) * (nextH - prevH);
        prevH = nextH;
    }

    std::size_t stride = vitali_stride(g, opt.vitali_time_cells);
    while (kT % stride != 0) --stride;
    const std::size_t nt = kT / stride;
    double dbl = 0.0;
    if (nt > 0) {
        const auto m = field.matrix(stride);
        const std::size_t na = lv.size();
        std::vector<double> upper_right(nt * na, 0.0);
        for (std::size_t p = 0; p < nt; ++p) {
            for (std::size_t j = 0; j + 1 < na; ++j) upper_right[p * na + j] = m[(p + 1) * na + j + 1];
        }
        std::vector<double> tn(nt + 1);
        for (std::size_t p = 0; p <= nt; ++p) tn[p] = g.time(p * stride);
        const auto s = vitali_grid_sum(upper_right, tn, lv, H.eval());
        dbl = s.value;
        if (std::isfinite(H.vitali()->variation_bound) && s.variation > H.vitali()->variation_bound * (1.0 + 1e-9)) {
            throw VariationUnboundedError("lts_vitali: grid Vitali variation exceeds the declared bound");
        }
        r.diagnostics.depth = static_cast<int>(nt);
    }
    r.value = -single + dbl;
    r.diagnostics.quadrature_nodes = lv.size();
    return r;
}

/// Vitali representation on a freshly built field over the path range.
inline LtsResult lts_vitali(const TimeSpaceFunction& H, const SamplePath& X, double T, const LtsOptions& opt = {}) {
    if (!H.vitali()) throw missing("Vitali variation bound");
    const auto [mn, mx] = path_range(X, node_of(X.grid, T));
    RadonMeasure none;
    if (H.space_density()) none = H.space_density()->nu;
    const auto q = build_level_quadrature(mn, mx, none, opt);
    const auto field = local_time_field(X, q.levels, Side::right);
    return lts_vitali(H, field, T, opt);
}

namespace detail {

/// Discrete variation of t ↦ ψ(t) on the grid at strides 1,2,4,...; throws
/// when it keeps growing like a rough path.
inline void check_time_bv(const TimeGrid& g, const RealFn& psi) {
    std::vector<double> v(g.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = psi(g.time(i));
    std::vector<double> tv;
    for (std::size_t stride = std::size_t{1} << 5; stride >= 1; stride /= 2) {
        if (g.n_steps() % stride != 0) continue;
        double s = 0.0;
        for (std::size_t i = stride; i < v.size(); i += stride) s += std::abs(v[i] - v[i - stride]);
        tv.push_back(s);
        if (stride == 1) break;
    }
    if (looks_divergent(tv, 1.15)) {
        throw VariationUnboundedError("lts_shifted: shift is not of bounded variation in time");
    }
}

}  // namespace detail

/// −∫_R ∫_0^T g(u,a) d_u L^0_u(X − Ψ(·,a)) dν(a), on the same level
/// quadrature and summation order as lts_space_density.
inline LtsResult lts_shifted(const TimeSpaceFn& g, const RadonMeasure& nu, const TimeSpaceFn& psi,
                             const SamplePath& X, double T, const LtsOptions& opt = {}) {
    const auto k = node_of(X.grid, T);
    const auto [mn, mx] = path_range(X, k);
    const auto q = build_level_quadrature(mn, mx, nu, opt);
    const std::size_t n = X.grid.n_steps();
    double total = 0.0;
    std::vector<double> shift(n + 1);
    for (std::size_t j = 0; j < q.levels.size(); ++j) {
        if (q.weights[j] == 0.0) continue;
        const double a = q.levels[j];
        for (std::size_t i = 0; i <= n; ++i) shift[i] = psi(X.grid.time(i), a);
        detail::check_time_bv(X.grid, [&](double t) { return psi(t, a); });
        detail::Monotonizer m;
        double s = 0.0;
        double z0 = X.values[0] - shift[0];
        for (std::size_t i = 0; i < k; ++i) {
            const double z1 = X.values[i + 1] - shift[i + 1];
            const double d = m.push(detail::tanaka_step(z0, z1, Side::right));
            if (d > 0.0) s += g(X.grid.time(i), a) * d;
            z0 = z1;
        }
        total += q.weights[j] * s;
    }
    LtsResult r;
    r.representation = Representation::shifted;
    r.value = -total;
    r.diagnostics.quadrature_nodes = q.levels.size();
    return r;
}

struct PairwiseDiff {
    Representation a;
    Representation b;
    double abs_diff;
    double rel_diff;
};

struct CrossCheckReport {
    std::vector<LtsResult> results;
    std::vector<PairwiseDiff> diffs;

    [[nodiscard]] double max_rel() const {
        double m = 0.0;
        for (const auto& d : diffs) m = std::max(m, d.rel_diff);
        return m;
    }

    [[nodiscard]] double max_abs() const {
        double m = 0.0;
        for (const auto& d : diffs) m = std::max(m, d.abs_diff);
        return m;
    }

    /// Every pair within max(rel_tol relative, abs_tol absolute).
    [[nodiscard]] bool agree(double rel_tol, double abs_tol) const {
        return std::all_of(diffs.begin(), diffs.end(),
                           [&](const PairwiseDiff& d) { return d.rel_diff <= rel_tol || d.abs_diff <= abs_tol; });
    }
};

/// Evaluates every declared representation and compares them pairwise.
inline CrossCheckReport lts_cross_check(const TimeSpaceFunction& H, const SamplePath& X, double T,
                                        const LtsOptions& opt = {}) {
    if (H.representation_count() < 2) throw ContractError("lts_cross_check: needs at least two declared representations");
    CrossCheckReport rep;
    if (H.time_density()) rep.results.push_back(lts_time_density(H, X, T, opt));
    if (H.space_density()) rep.results.push_back(lts_space_density(H, X, T, opt));
    if (H.vitali()) rep.results.push_back(lts_vitali(H, X, T, opt));
    for (std::size_t i = 0; i < rep.results.size(); ++i) {
        for (std::size_t j = i + 1; j < rep.results.size(); ++j) {
            const double x = rep.results[i].value;
            const double y = rep.results[j].value;
            const double d = std::abs(x - y);
            const double scale = std::max(std::abs(x), std::abs(y));
            rep.diffs.push_back({rep.results[i].representation, rep.results[j].representation, d,
                                 scale > 0.0 ? d / scale : 0.0});
        }
    }
    return rep;
}

inline nlohmann::json to_json(const CrossCheckReport& r) {
    nlohmann::json j;
    for (const auto& res : r.results) {
        j["values"][representation_name(res.representation)] = res.value;
        j["diagnostics"][representation_name(res.representation)] = {
            {"depth", res.diagnostics.depth},
            {"truncation_error", res.diagnostics.truncation_error},
            {"quadrature_nodes", res.diagnostics.quadrature_nodes},
            {"notes", res.diagnostics.notes}};
    }
    j["pairwise_diffs"] = nlohmann::json::array();
    for (const auto& d : r.diffs) {
        j["pairwise_diffs"].push_back({{"a", representation_name(d.a)},
                                       {"b", representation_name(d.b)},
                                       {"abs", d.abs_diff},
                                       {"rel", d.rel_diff}});
    }
    return j;
}

}  // namespace ltsi
