#pragma once

// Radon measures, bounded-variation functions and one- and two-parameter
// Lebesgue–Stieltjes integration.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "ltsi/error.hpp"

namespace ltsi {

using RealFn = std::function<double(double)>;
using TimeSpaceFn = std::function<double(double, double)>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Endpoints of an interval. Whether it is read as [lo,hi) or [lo,hi]
/// depends on the operation.
struct Interval {
    double lo;
    double hi;
};

struct QuadratureOptions {
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int min_level = 4;
    int max_level = 20;  // at most 2^20 trapezoid panels per piece
};

struct QuadratureResult {
    double value = 0.0;
    int level = 0;
    double error_estimate = 0.0;
};

namespace detail {

inline double checked(double v, const char* what) {
    if (!std::isfinite(v)) throw NumericDomainError(std::string("non-finite value in ") + what);
    return v;
}

/// Trapezoid rule under repeated panel halving, accelerated by Richardson
/// extrapolation (Romberg table). Stops when successive diagonal entries
/// agree to rel_tol or when max_level halvings have been spent.
inline QuadratureResult romberg(const RealFn& f, double a, double b,
                                const QuadratureOptions& opt = {}) {
    if (a == b) return {0.0, 0, 0.0};
    const double width = b - a;
    std::vector<double> prev;
    std::vector<double> row;
    double trap = 0.5 * width * (checked(f(a), "integrand") + checked(f(b), "integrand"));
    prev.push_back(trap);
    double best = trap;
    double err = std::abs(trap);
    for (int k = 1; k <= opt.max_level; ++k) {
        const std::size_t n_new = std::size_t{1} << (k - 1);
        const double h = width / static_cast<double>(n_new * 2);
        double sum = 0.0;
        for (std::size_t i = 0; i < n_new; ++i) {
            sum += checked(f(a + h * static_cast<double>(2 * i + 1)), "integrand");
        }
        trap = 0.5 * trap + h * sum;
        row.assign(1, trap);
        double factor = 4.0;
        for (std::size_t j = 1; j <= prev.size(); ++j) {
            row.push_back(row[j - 1] + (row[j - 1] - prev[j - 1]) / (factor - 1.0));
            factor *= 4.0;
        }
        const double diag = row.back();
        err = std::abs(diag - prev.back());
        best = diag;
        if (k >= opt.min_level && err <= std::max(opt.abs_tol, opt.rel_tol * std::abs(diag))) {
            return {best, k, err};
        }
        prev.swap(row);
    }
    return {best, opt.max_level, err};
}

/// Romberg over [a,b] split at the given sorted breakpoints. A piece
/// endpoint lying on a breakpoint is moved one ulp inward, so f is sampled
/// on the piece's own side of the jump.
inline QuadratureResult romberg_pieces(const RealFn& f, double a, double b,
                                       std::span<const double> breaks,
                                       const QuadratureOptions& opt = {}) {
    QuadratureResult total;
    double lo = a;
    auto on_break = [&](double x) { return std::binary_search(breaks.begin(), breaks.end(), x); };
    auto piece = [&](double x, double y) {
        if (x < y) {
            if (on_break(x)) x = std::nextafter(x, y);
            if (on_break(y)) y = std::nextafter(y, x);
        }
        const auto r = romberg(f, x, y, opt);
        total.value += r.value;
        total.level = std::max(total.level, r.level);
        total.error_estimate += r.error_estimate;
    };
    for (double c : breaks) {
        if (c <= lo || c >= b) continue;
        piece(lo, c);
        lo = c;
    }
    piece(lo, b);
    return total;
}

}  // namespace detail

/// A point mass.
struct Atom {
    double location;
    double weight;
};

struct DensitySupport {
    double lo = -kInf;
    double hi = kInf;
};

/// Finitely many atoms plus a piecewise-continuous density with respect to
/// Lebesgue measure.
class RadonMeasure {
public:
    RadonMeasure() = default;

    RadonMeasure(std::vector<Atom> atoms, RealFn density = {}, DensitySupport support = {},
                 std::vector<double> density_breaks = {})
        : atoms_(std::move(atoms)),
          density_(std::move(density)),
          support_(support),
          breaks_(std::move(density_breaks)) {
        std::erase_if(atoms_, [](const Atom& a) { return a.weight == 0.0; });
        for (const auto& a : atoms_) {
            if (!std::isfinite(a.location) || !std::isfinite(a.weight)) {
                throw ContractError("RadonMeasure: atoms must be finite");
            }
        }
        std::sort(atoms_.begin(), atoms_.end(),
                  [](const Atom& l, const Atom& r) { return l.location < r.location; });
        for (std::size_t i = 1; i < atoms_.size(); ++i) {
            if (atoms_[i].location == atoms_[i - 1].location) {
                throw ContractError("RadonMeasure: duplicate atom location");
            }
        }
        if (!(support_.lo < support_.hi)) throw ContractError("RadonMeasure: empty density support");
        std::sort(breaks_.begin(), breaks_.end());
    }

    static RadonMeasure zero() { return {}; }

    static RadonMeasure dirac(double at, double weight = 1.0) { return RadonMeasure({{at, weight}}); }

    static RadonMeasure lebesgue(DensitySupport support = {}) {
        return RadonMeasure({}, [](double) { return 1.0; }, support);
    }

    static RadonMeasure with_density(RealFn density, DensitySupport support = {},
                                     std::vector<double> breaks = {}) {
        return RadonMeasure({}, std::move(density), support, std::move(breaks));
    }

    [[nodiscard]] const std::vector<Atom>& atoms() const noexcept { return atoms_; }

    /// Mass of the singleton {x}: the stored weight, or exactly 0.
    [[nodiscard]] double atom(double x) const noexcept {
        auto it = std::lower_bound(atoms_.begin(), atoms_.end(), x,
                                   [](const Atom& a, double v) { return a.location < v; });
        return (it != atoms_.end() && it->location == x) ? it->weight : 0.0;
    }

    [[nodiscard]] bool has_density() const noexcept { return static_cast<bool>(density_); }
    [[nodiscard]] bool is_zero() const noexcept { return atoms_.empty() && !density_; }
    [[nodiscard]] const DensitySupport& support() const noexcept { return support_; }

    [[nodiscard]] double density(double x) const {
        if (!density_ || x < support_.lo || x > support_.hi) return 0.0;
        return density_(x);
    }

    /// Places where the density may jump: finite support ends plus any
    /// declared interior breakpoints.
    [[nodiscard]] std::vector<double> density_breakpoints() const {
        std::vector<double> out;
        if (!density_) return out;
        if (std::isfinite(support_.lo)) out.push_back(support_.lo);
        out.insert(out.end(), breaks_.begin(), breaks_.end());
        if (std::isfinite(support_.hi)) out.push_back(support_.hi);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// Total variation |m|([lo,hi)).
    [[nodiscard]] double total_variation(Interval iv, const QuadratureOptions& opt = {}) const {
        double tv = 0.0;
        for (const auto& a : atoms_) {
            if (a.location >= iv.lo && a.location < iv.hi) tv += std::abs(a.weight);
        }
        if (density_) {
            const double lo = std::max(iv.lo, support_.lo);
            const double hi = std::min(iv.hi, support_.hi);
            if (lo < hi) {
                if (!std::isfinite(lo) || !std::isfinite(hi)) {
                    throw ContractError("total_variation: unbounded interval for a density part");
                }
                const auto br = density_breakpoints();
                tv += detail::romberg_pieces([this](double x) { return std::abs(density(x)); }, lo,
                                             hi, br, opt)
                          .value;
            }
        }
        return tv;
    }

    /// Sum of two measures; coincident atoms are merged.
    [[nodiscard]] RadonMeasure plus(const RadonMeasure& other) const {
        std::vector<Atom> merged = atoms_;
        for (const auto& a : other.atoms_) {
            auto it = std::find_if(merged.begin(), merged.end(),
                                   [&](const Atom& m) { return m.location == a.location; });
            if (it != merged.end()) {
                it->weight += a.weight;
            } else {
                merged.push_back(a);
            }
        }
        if (!density_ && !other.density_) return RadonMeasure(std::move(merged));
        RealFn d = [l = *this, r = other](double x) { return l.density(x) + r.density(x); };
        DensitySupport sup{std::min(density_ ? support_.lo : kInf, other.density_ ? other.support_.lo : kInf),
                           std::max(density_ ? support_.hi : -kInf, other.density_ ? other.support_.hi : -kInf)};
        auto br = density_breakpoints();
        auto obr = other.density_breakpoints();
        br.insert(br.end(), obr.begin(), obr.end());
        return RadonMeasure(std::move(merged), std::move(d), sup, std::move(br));
    }

    [[nodiscard]] RadonMeasure scaled(double c) const {
        std::vector<Atom> a = atoms_;
        for (auto& x : a) x.weight *= c;
        if (!density_) return RadonMeasure(std::move(a));
        return RadonMeasure(std::move(a), [d = density_, c](double x) { return c * d(x); }, support_,
                            breaks_);
    }

private:
    std::vector<Atom> atoms_;
    RealFn density_;
    DensitySupport support_;
    std::vector<double> breaks_;
};

/// ∫_[x,y) f dm: atoms in the half-open interval plus the density part by
/// quadrature.
inline double measure_integrate(const RealFn& f, const RadonMeasure& m, Interval iv,
                                const QuadratureOptions& opt = {}) {
    if (!(iv.lo <= iv.hi)) throw ContractError("measure_integrate: reversed interval");
    double total = 0.0;
    for (const auto& a : m.atoms()) {
        if (a.location >= iv.lo && a.location < iv.hi) {
            total += detail::checked(f(a.location), "measure_integrate") * a.weight;
        }
    }
    if (m.has_density()) {
        const double lo = std::max(iv.lo, m.support().lo);
        const double hi = std::min(iv.hi, m.support().hi);
        if (lo < hi) {
            if (!std::isfinite(lo) || !std::isfinite(hi)) {
                throw ContractError("measure_integrate: unbounded interval for a density part");
            }
            const auto br = m.density_breakpoints();
            total += detail::romberg_pieces([&](double x) { return f(x) * m.density(x); }, lo, hi,
                                            br, opt)
                         .value;
        }
    }
    return total;
}

/// A jump of a BV function: left and right limits at `location`.
struct Jump {
    double location;
    double left;
    double right;
};

/// Function of bounded variation: an evaluator, its jumps, and optionally the
/// derivative of its absolutely continuous part (with the kinks where that
/// derivative is discontinuous).
class BVFunction {
public:
    BVFunction() = default;

    BVFunction(RealFn eval, std::vector<Jump> jumps = {}, RealFn derivative = {},
               std::vector<double> kinks = {})
        : eval_(std::move(eval)),
          jumps_(std::move(jumps)),
          derivative_(std::move(derivative)),
          kinks_(std::move(kinks)) {
        if (!eval_) throw ContractError("BVFunction: missing evaluator");
        std::sort(jumps_.begin(), jumps_.end(),
                  [](const Jump& a, const Jump& b) { return a.location < b.location; });
        std::sort(kinks_.begin(), kinks_.end());
        for (const auto& j : jumps_) {
            const double d = 1e-9 * (1.0 + std::abs(j.location));
            const double tol = 1e-6 * (1.0 + std::abs(j.left) + std::abs(j.right));
            if (std::abs(eval_(j.location - d) - j.left) > tol ||
                std::abs(eval_(j.location + d) - j.right) > tol) {
                throw ContractError("BVFunction: stored jump limits disagree with evaluator");
            }
        }
    }

    static BVFunction smooth(RealFn g, RealFn dg) { return BVFunction(std::move(g), {}, std::move(dg)); }

    /// left on (-inf, at), right on [at, inf).
    static BVFunction heaviside(double at, double left = 0.0, double right = 1.0) {
        return BVFunction([=](double x) { return x >= at ? right : left; }, {{at, left, right}},
                          [](double) { return 0.0; });
    }

    /// Linear interpolation through (x_i, y_i); constant beyond the ends.
    static BVFunction piecewise_linear(std::vector<double> xs, std::vector<double> ys) {
        if (xs.size() != ys.size() || xs.size() < 2) {
            throw ContractError("piecewise_linear: need matching knots, at least two");
        }
        if (!std::is_sorted(xs.begin(), xs.end())) throw ContractError("piecewise_linear: unsorted knots");
        auto locate = [xs](double x) {
            auto it = std::upper_bound(xs.begin(), xs.end(), x);
            return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - xs.begin() - 1, 0,
                                                                       static_cast<std::ptrdiff_t>(xs.size()) - 2));
        };
        RealFn f = [xs, ys, locate](double x) {
            if (x <= xs.front()) return ys.front();
            if (x >= xs.back()) return ys.back();
            const auto i = locate(x);
            const double w = (x - xs[i]) / (xs[i + 1] - xs[i]);
            return ys[i] + w * (ys[i + 1] - ys[i]);
        };
        RealFn df = [xs, ys, locate](double x) {
            if (x < xs.front() || x > xs.back()) return 0.0;
            const auto i = locate(x);
            return (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        };
        return BVFunction(std::move(f), {}, std::move(df), xs);
    }

    double operator()(double x) const { return eval_(x); }
    [[nodiscard]] const std::vector<Jump>& jumps() const noexcept { return jumps_; }
    [[nodiscard]] bool has_derivative() const noexcept { return static_cast<bool>(derivative_); }
    [[nodiscard]] double derivative(double x) const { return derivative_ ? derivative_(x) : 0.0; }

    /// Jump locations and kinks, sorted.
    [[nodiscard]] std::vector<double> breakpoints() const {
        std::vector<double> out = kinks_;
        for (const auto& j : jumps_) out.push_back(j.location);
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    /// The Lebesgue–Stieltjes measure dg (requires the derivative).
    [[nodiscard]] RadonMeasure measure() const {
        if (!derivative_) throw ContractError("BVFunction::measure: derivative not supplied");
        std::vector<Atom> atoms;
        for (const auto& j : jumps_) atoms.push_back({j.location, j.right - j.left});
        return RadonMeasure(std::move(atoms), derivative_, {}, kinks_);
    }

private:
    RealFn eval_;
    std::vector<Jump> jumps_;
    RealFn derivative_;
    std::vector<double> kinks_;
};

struct RefinementOptions {
    double tol = 1e-10;
    int max_depth = 20;
    /// Growth ratio of successive partition sums above which a
    /// non-converged refinement is declared divergent.
    double divergence_ratio = 1.15;
};

namespace detail {

inline std::vector<double> dyadic_partition(double lo, double hi, int depth,
                                            std::span<const double> breaks) {
    const std::size_t n = std::size_t{1} << depth;
    std::vector<double> p;
    p.reserve(n + 1 + breaks.size());
    for (std::size_t i = 0; i <= n; ++i) {
        p.push_back(i == n ? hi : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n));
    }
    for (double b : breaks) {
        if (b > lo && b < hi) p.push_back(b);
    }
    std::sort(p.begin(), p.end());
    p.erase(std::unique(p.begin(), p.end()), p.end());
    return p;
}

/// True when the sums grow geometrically by `ratio`, or when their
/// increments stop shrinking (slow, e.g. logarithmic, divergence).
inline bool looks_divergent(std::span<const double> history, double ratio) {
    const std::size_t n = history.size();
    if (n < 4) return false;
    bool growing = true;
    for (std::size_t k = n - 3; k < n; ++k) {
        if (history[k - 1] <= 0.0 || history[k] / history[k - 1] < ratio) growing = false;
    }
    if (growing) return true;
    if (n < 5) return false;
    for (std::size_t k = n - 3; k < n; ++k) {
        const double d = history[k] - history[k - 1];
        const double d_prev = history[k - 1] - history[k - 2];
        if (!(d > 1e-6 * std::abs(history[k])) || !(d_prev > 0.0) || d / d_prev < 0.7) return false;
    }
    return true;
}

}  // namespace detail

/// Total variation of g over the closed interval [lo,hi].
inline double total_variation(const BVFunction& g, Interval iv, const RefinementOptions& opt = {}) {
    if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
        throw ContractError("total_variation: interval must be compact");
    }
    if (iv.lo == iv.hi) return 0.0;
    if (g.has_derivative()) {
        double tv = 0.0;
        for (const auto& j : g.jumps()) {
            if (j.location < iv.lo || j.location > iv.hi) continue;
            const double at = g(j.location);
            if (j.location > iv.lo) tv += std::abs(at - j.left);
            if (j.location < iv.hi) tv += std::abs(j.right - at);
        }
        const auto br = g.breakpoints();
        QuadratureOptions q;
        q.rel_tol = opt.tol;
        tv += detail::romberg_pieces([&](double x) { return std::abs(g.derivative(x)); }, iv.lo,
                                     iv.hi, br, q)
                  .value;
        return tv;
    }
    const auto br = g.breakpoints();
    std::vector<double> history;
    double prev = -1.0;
    for (int k = 1; k <= opt.max_depth; ++k) {
        const auto p = detail::dyadic_partition(iv.lo, iv.hi, k, br);
        double v = 0.0;
        double gp = detail::checked(g(p[0]), "total_variation");
        for (std::size_t i = 1; i < p.size(); ++i) {
            const double gi = detail::checked(g(p[i]), "total_variation");
            v += std::abs(gi - gp);
            gp = gi;
        }
        history.push_back(v);
        if (k >= 3 && prev >= 0.0 && v - prev <= opt.tol * std::max(1.0, v)) return v;
        prev = v;
    }
    if (detail::looks_divergent(history, opt.divergence_ratio)) {
        throw VariationUnboundedError("total_variation: partition sums keep growing under refinement");
    }
    return history.back();
}

enum class TagSide { left, right };

/// ∫_[lo,hi] f dg as the limit of Riemann–Stieltjes sums with f sampled at
/// the left (or right) end of each cell.
inline double stieltjes_integrate(const RealFn& f, const BVFunction& g, Interval iv,
                                  TagSide side = TagSide::left, const RefinementOptions& opt = {}) {
    if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
        throw ContractError("stieltjes_integrate: interval must be compact");
    }
    if (iv.lo == iv.hi) return 0.0;
    if (g.has_derivative()) {
        double total = 0.0;
        for (const auto& j : g.jumps()) {
            if (j.location < iv.lo || j.location > iv.hi) continue;
            const double b = j.location;
            const double at = g(b);
            const double before = at - j.left;
            const double after = j.right - at;
            const double f_minus = f(std::nextafter(b, -kInf));
            const double f_at = f(b);
            const double f_plus = f(std::nextafter(b, kInf));
            if (b > iv.lo) total += before * (side == TagSide::left ? f_minus : f_at);
            if (b < iv.hi) total += after * (side == TagSide::left ? f_at : f_plus);
        }
        const auto br = g.breakpoints();
        QuadratureOptions q;
        q.rel_tol = opt.tol;
        total += detail::romberg_pieces([&](double x) { return f(x) * g.derivative(x); }, iv.lo,
                                        iv.hi, br, q)
                     .value;
        return detail::checked(total, "stieltjes_integrate");
    }
    const auto br = g.breakpoints();
    std::vector<double> tv_history;
    double prev = 0.0;
    for (int k = 1; k <= opt.max_depth; ++k) {
        const auto p = detail::dyadic_partition(iv.lo, iv.hi, k, br);
        double s = 0.0;
        double tv = 0.0;
        double gp = g(p[0]);
        for (std::size_t i = 1; i < p.size(); ++i) {
            const double gi = g(p[i]);
            const double tag = side == TagSide::left ? p[i - 1] : p[i];
            s += detail::checked(f(tag), "stieltjes_integrate") * (gi - gp);
            tv += std::abs(gi - gp);
            gp = gi;
        }
        tv_history.push_back(tv);
        if (k >= 3 && std::abs(s - prev) <= opt.tol * std::max(1.0, std::abs(s))) return s;
        prev = s;
    }
    if (detail::looks_divergent(tv_history, opt.divergence_ratio)) {
        throw VariationUnboundedError("stieltjes_integrate: integrator variation diverges");
    }
    return prev;
}

/// Closed rectangle [t_lo,t_hi] x [a_lo,a_hi] in time-space.
struct Rect {
    double t_lo;
    double t_hi;
    double a_lo;
    double a_hi;

    Rect(double tl, double th, double al, double ah) : t_lo(tl), t_hi(th), a_lo(al), a_hi(ah) {
        if (!(t_lo < t_hi) || !(a_lo < a_hi)) throw ContractError("Rect: degenerate rectangle");
    }
};

inline double rectangle_increment(const TimeSpaceFn& H, double t0, double t1, double a0, double a1) {
    return H(t1, a1) - H(t0, a1) - H(t1, a0) + H(t0, a0);
}

struct IntegralEstimate {
    double value = 0.0;
    int depth = 0;
    double error_estimate = 0.0;
    /// Vitali variation of the integrator on the finest partition used.
    double variation = 0.0;
};

/// Sum of phi(t_i,a_j) times the rectangle increments of H over the product
/// grid tnodes x anodes, phi sampled at lower-left corners. phi_values is
/// row-major [time][level] with at least (nt-1) x (na-1) meaningful entries
/// and row stride anodes.size().
inline IntegralEstimate vitali_grid_sum(std::span<const double> phi_values,
                                        std::span<const double> tnodes,
                                        std::span<const double> anodes, const TimeSpaceFn& H) {
    const std::size_t nt = tnodes.size();
    const std::size_t na = anodes.size();
    if (nt < 2 || na < 2 || phi_values.size() < (nt - 1) * na) {
        throw ContractError("vitali_grid_sum: grid too small or value matrix mismatched");
    }
    std::vector<double> prev_row(na);
    std::vector<double> row(na);
    for (std::size_t j = 0; j < na; ++j) prev_row[j] = H(tnodes[0], anodes[j]);
    IntegralEstimate out;
    for (std::size_t i = 0; i + 1 < nt; ++i) {
        for (std::size_t j = 0; j < na; ++j) row[j] = H(tnodes[i + 1], anodes[j]);
        for (std::size_t j = 0; j + 1 < na; ++j) {
            const double inc = row[j + 1] - prev_row[j + 1] - row[j] + prev_row[j];
            out.value += phi_values[i * na + j] * inc;
            out.variation += std::abs(inc);
        }
        prev_row.swap(row);
    }
    detail::checked(out.value, "vitali_grid_sum");
    return out;
}

/// Two-parameter Lebesgue–Stieltjes integral of phi against H over rect.
/// Lower-left-corner sums on dyadic product grids, Richardson-extrapolated
/// across levels, stopped when successive extrapolants agree to tol.
inline IntegralEstimate vitali_integrate(const TimeSpaceFn& phi, const TimeSpaceFn& H,
                                         const Rect& rect, double tol = 1e-8, int max_depth = 11) {
    std::vector<double> prev_row_table;
    std::vector<double> row_table;
    std::vector<double> variations;
    IntegralEstimate best;
    for (int k = 1; k <= max_depth; ++k) {
        const std::size_t n = std::size_t{1} << k;
        std::vector<double> tn(n + 1), an(n + 1);
        for (std::size_t i = 0; i <= n; ++i) {
            const double w = static_cast<double>(i) / static_cast<double>(n);
            tn[i] = i == n ? rect.t_hi : rect.t_lo + w * (rect.t_hi - rect.t_lo);
            an[i] = i == n ? rect.a_hi : rect.a_lo + w * (rect.a_hi - rect.a_lo);
        }
        std::vector<double> phis(n * (n + 1));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j <= n; ++j) phis[i * (n + 1) + j] = phi(tn[i], an[j]);
        }
        const auto s = vitali_grid_sum(phis, tn, an, H);
        variations.push_back(s.variation);
        row_table.assign(1, s.value);
        double factor = 2.0;
        for (std::size_t j = 1; j <= prev_row_table.size(); ++j) {
            row_table.push_back(row_table[j - 1] + (row_table[j - 1] - prev_row_table[j - 1]) / (factor - 1.0));
            factor *= 2.0;
        }
        best.value = row_table.back();
        best.depth = k;
        best.variation = s.variation;
        if (!prev_row_table.empty()) {
            best.error_estimate = std::abs(row_table.back() - prev_row_table.back());
            if (k >= 3 && best.error_estimate <= tol * std::max(1.0, std::abs(best.value))) return best;
        }
        prev_row_table.swap(row_table);
    }
    if (detail::looks_divergent(variations, 1.15)) {
        throw VariationUnboundedError("vitali_integrate: rectangle-increment sums diverge under refinement");
    }
    return best;
}

}  // namespace ltsi
