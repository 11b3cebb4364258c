#pragma once

// Local time estimators at fixed levels and over level grids.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iostream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ltsi/error.hpp"
#include "ltsi/measure.hpp"
#include "ltsi/path.hpp"

namespace ltsi {

enum class Side { right, left, symmetric };

/// The value sgn(0) induced by a side convention.
constexpr double sgn0(Side s) noexcept {
    switch (s) {
        case Side::right: return -1.0;
        case Side::left: return 1.0;
        case Side::symmetric: return 0.0;
    }
    return -1.0;
}

constexpr double sgn(double x, Side s) noexcept { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : sgn0(s)); }

inline const char* side_name(Side s) noexcept {
    switch (s) {
        case Side::right: return "right";
        case Side::left: return "left";
        case Side::symmetric: return "symmetric";
    }
    return "right";
}

inline Side side_from_name(const std::string& n) {
    if (n == "right") return Side::right;
    if (n == "left") return Side::left;
    if (n == "symmetric") return Side::symmetric;
    throw ContractError("unknown side convention: " + n);
}

using WarningHandler = std::function<void(const std::string&)>;

/// Process-wide sink for non-fatal diagnostics. Defaults to stderr.
inline WarningHandler& warning_handler() {
    static WarningHandler h = [](const std::string& m) { std::cerr << "ltsi warning: " << m << '\n'; };
    return h;
}

inline void warn(const std::string& msg) {
    if (warning_handler()) warning_handler()(msg);
}

namespace detail {

/// Increment of |z| − sgn(z)·z over one step; zero unless the sign class
/// of z changes (or z starts at 0 under the symmetric convention).
inline double tanaka_step(double z0, double z1, Side side) noexcept {
    return (std::abs(z1) - std::abs(z0)) - sgn(z0, side) * (z1 - z0);
}

}  // namespace detail

/// Charge of one step of the path to one level: the local time increases by
/// dL across step `step` (node step -> step+1), reaching `cum`.
struct LocalTimeEvent {
    std::uint32_t step;
    double dL;
    double cum;
};

struct TanakaTrace {
    SamplePath L;
    /// Largest gap between the monotonized and the raw discrete formula.
    double correction = 0.0;
    std::vector<LocalTimeEvent> events;
};

namespace detail {

/// Running maximum of raw cumulative sums, advanced by increments.
struct Monotonizer {
    double raw = 0.0;
    double mono = 0.0;
    double correction = 0.0;

    double push(double term) noexcept {
        raw += term;
        const double d = std::max(0.0, raw - mono);
        mono += d;
        correction = std::max(correction, mono - raw);
        return d;
    }
};

inline void check_correction(double correction, double dt, double level) {
    if (correction > 5.0 * std::sqrt(dt)) {
        warn("Tanaka monotonization correction " + std::to_string(correction) + " at level " +
             std::to_string(level) + " exceeds 5*sqrt(dt)");
    }
}

}  // namespace detail

/// Discrete Tanaka estimator of L^a with running-max monotonization.
inline TanakaTrace tanaka_trace(const SamplePath& X, double a, Side side = Side::right) {
    const std::size_t n = X.grid.n_steps();
    std::vector<double> L(n + 1);
    L[0] = 0.0;
    detail::Monotonizer m;
    std::vector<LocalTimeEvent> events;
    double z0 = X.values[0] - a;
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = X.values[i + 1] - a;
        const double d = m.push(detail::tanaka_step(z0, z1, side));
        L[i + 1] = m.mono;
        if (d > 0.0) events.push_back({static_cast<std::uint32_t>(i), d, m.mono});
        z0 = z1;
    }
    detail::check_correction(m.correction, X.grid.dt(), a);
    return {SamplePath(X.grid, std::move(L)), m.correction, std::move(events)};
}

inline SamplePath local_time_tanaka(const SamplePath& X, double a, Side side = Side::right) {
    return tanaka_trace(X, a, side).L;
}

/// Default occupation bandwidth sqrt(dt).
inline double default_bandwidth(const TimeGrid& g) { return std::sqrt(g.dt()); }

inline bool in_window(double x, double a, double eps, Side side) noexcept {
    switch (side) {
        case Side::right: return a <= x && x < a + eps;
        case Side::left: return a - eps < x && x <= a;
        case Side::symmetric: return a - 0.5 * eps < x && x <= a + 0.5 * eps;
    }
    return false;
}

/// (1/ε) Σ 1_window(X_i) Δ⟨X⟩_i, cumulative.
inline SamplePath local_time_occupation(const SamplePath& X, double a, double eps,
                                        Side side = Side::right) {
    if (!(eps > 0.0)) throw ContractError("local_time_occupation: bandwidth must be positive");
    std::vector<double> scratch;
    const auto& q = qv_track(X, scratch);
    const std::size_t n = X.grid.n_steps();
    std::vector<double> L(n + 1);
    L[0] = 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_window(X.values[i], a, eps, side)) acc += q[i + 1] - q[i];
        L[i + 1] = acc / eps;
    }
    return SamplePath(X.grid, std::move(L));
}

/// Local time over a level grid, stored as per-level event lists at full
/// time resolution. Column j is bit-identical to the fixed-level Tanaka
/// estimator at levels[j].
class LocalTimeField {
public:
    LocalTimeField(TimeGrid tgrid, std::vector<double> levels, Side side,
                   std::vector<std::vector<LocalTimeEvent>> events, std::vector<double> corrections = {})
        : tgrid_(tgrid),
          levels_(std::move(levels)),
          side_(side),
          events_(std::move(events)),
          corrections_(std::move(corrections)) {
        if (events_.size() != levels_.size()) throw ContractError("LocalTimeField: one event list per level");
        if (corrections_.empty()) corrections_.assign(levels_.size(), 0.0);
    }

    [[nodiscard]] const TimeGrid& tgrid() const noexcept { return tgrid_; }
    [[nodiscard]] const std::vector<double>& levels() const noexcept { return levels_; }
    [[nodiscard]] std::size_t n_levels() const noexcept { return levels_.size(); }
    [[nodiscard]] Side side() const noexcept { return side_; }
    [[nodiscard]] std::span<const LocalTimeEvent> events(std::size_t j) const { return events_.at(j); }
    [[nodiscard]] double correction(std::size_t j) const { return corrections_.at(j); }

    /// Index of a level stored exactly in the grid.
    [[nodiscard]] std::size_t level_index(double a) const {
        auto it = std::lower_bound(levels_.begin(), levels_.end(), a);
        if (it == levels_.end() || *it != a) throw ContractError("LocalTimeField: level not on grid");
        return static_cast<std::size_t>(it - levels_.begin());
    }

    /// L at time node i and level index j.
    [[nodiscard]] double value(std::size_t i, std::size_t j) const {
        const auto& ev = events_.at(j);
        auto it = std::lower_bound(ev.begin(), ev.end(), i,
                                   [](const LocalTimeEvent& e, std::size_t node) { return e.step < node; });
        return it == ev.begin() ? 0.0 : std::prev(it)->cum;
    }

    [[nodiscard]] double terminal(std::size_t j) const {
        const auto& ev = events_.at(j);
        return ev.empty() ? 0.0 : ev.back().cum;
    }

    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> c(tgrid_.n_nodes(), 0.0);
        double cur = 0.0;
        std::size_t next = 0;
        for (const auto& e : events_.at(j)) {
            for (; next <= e.step; ++next) c[next] = cur;
            cur = e.cum;
        }
        for (; next < c.size(); ++next) c[next] = cur;
        return c;
    }

    /// Σ over the charges of level j up to node `upto` of g(t_step) dL.
    template <class G>
    [[nodiscard]] double stieltjes(std::size_t j, G&& g, std::size_t upto) const {
        double s = 0.0;
        for (const auto& e : events_.at(j)) {
            if (e.step >= upto) break;
            s += g(tgrid_.time(e.step)) * e.dL;
        }
        return s;
    }

    /// Dense [time node][level] values on every stride-th node.
    [[nodiscard]] std::vector<double> matrix(std::size_t stride) const {
        const auto coarse = tgrid_.coarsened(stride);
        const std::size_t nt = coarse.n_nodes();
        const std::size_t na = levels_.size();
        std::vector<double> m(nt * na, 0.0);
        for (std::size_t j = 0; j < na; ++j) {
            double cur = 0.0;
            std::size_t k = 0;
            for (const auto& e : events_[j]) {
                for (; k * stride <= e.step && k < nt; ++k) m[k * na + j] = cur;
                cur = e.cum;
            }
            for (; k < nt; ++k) m[k * na + j] = cur;
        }
        return m;
    }

private:
    TimeGrid tgrid_;
    std::vector<double> levels_;
    Side side_;
    std::vector<std::vector<LocalTimeEvent>> events_;
    std::vector<double> corrections_;
};

/// Tanaka local time at every level of agrid. Only levels between X_i and
/// X_{i+1} can be charged across step i, so each step visits that bracket.
inline LocalTimeField local_time_field(const SamplePath& X, std::vector<double> agrid,
                                       Side side = Side::right) {
    for (std::size_t j = 1; j < agrid.size(); ++j) {
        if (!(agrid[j - 1] < agrid[j])) throw ContractError("local_time_field: levels must be strictly increasing");
    }
    const std::size_t na = agrid.size();
    std::vector<detail::Monotonizer> state(na);
    std::vector<std::vector<LocalTimeEvent>> events(na);
    const std::size_t n = X.grid.n_steps();
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = X.values[i];
        const double x1 = X.values[i + 1];
        const auto lo = std::lower_bound(agrid.begin(), agrid.end(), std::min(x0, x1)) - agrid.begin();
        const auto hi = std::upper_bound(agrid.begin(), agrid.end(), std::max(x0, x1)) - agrid.begin();
        for (auto j = static_cast<std::size_t>(lo); j < static_cast<std::size_t>(hi); ++j) {
            const double a = agrid[j];
            const double d = state[j].push(detail::tanaka_step(x0 - a, x1 - a, side));
            if (d > 0.0) events[j].push_back({static_cast<std::uint32_t>(i), d, state[j].mono});
        }
    }
    std::vector<double> corr(na);
    for (std::size_t j = 0; j < na; ++j) {
        corr[j] = state[j].correction;
        detail::check_correction(corr[j], X.grid.dt(), agrid[j]);
    }
    return LocalTimeField(X.grid, std::move(agrid), side, std::move(events), std::move(corr));
}

/// Uniform levels lo, lo+h, ... covering [lo, hi].
inline std::vector<double> uniform_levels(double lo, double hi, double h) {
    if (!(h > 0.0) || !(lo <= hi)) throw ContractError("uniform_levels: bad range or spacing");
    const auto k0 = static_cast<long long>(std::floor(lo / h));
    const auto k1 = static_cast<long long>(std::ceil(hi / h));
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k1 - k0 + 1));
    for (long long k = k0; k <= k1; ++k) out.push_back(static_cast<double>(k) * h);
    return out;
}

struct OccupationCheck {
    double time_side = 0.0;
    double space_side = 0.0;
    [[nodiscard]] double rel_err() const {
        return std::abs(time_side - space_side) / std::max(std::abs(time_side), 1e-300);
    }
};

/// Both sides of ∫_0^T G(s,X_s) d⟨X⟩_s = ∫_R ∫_0^T G(s,a) d_sL^a_s da at the
/// terminal node: the left from the qv track, the right from the Tanaka
/// field on uniform levels with trapezoid weights.
inline OccupationCheck occupation_formula(const TimeSpaceFn& G, const SamplePath& X, double spacing = 0x1.0p-8) {
    const std::size_t n = X.grid.n_steps();
    std::vector<double> scratch;
    const auto& q = qv_track(X, scratch);
    OccupationCheck c;
    for (std::size_t i = 0; i < n; ++i) c.time_side += G(X.grid.time(i), X.values[i]) * (q[i + 1] - q[i]);
    const auto [mn, mx] = std::minmax_element(X.values.begin(), X.values.end());
    const auto levels = uniform_levels(*mn - spacing, *mx + spacing, spacing);
    const auto field = local_time_field(X, levels, Side::right);
    for (std::size_t j = 0; j < levels.size(); ++j) {
        const double w = (j == 0 || j + 1 == levels.size()) ? 0.5 * spacing : spacing;
        const double a = levels[j];
        c.space_side += w * field.stieltjes(j, [&](double t) { return G(t, a); }, n);
    }
    return c;
}

/// Symmetric local time from the right one:
/// L̃^a_t = ∫_0^t (1 − h(s,a) ν({a})) d_s L^a_s.
/// When the factor is the same at every charge, the column is scaled
/// directly so L̃ = factor · L holds nodewise.
inline LocalTimeField symmetric_from_right(const LocalTimeField& field, const TimeSpaceFn& h,
                                           const RadonMeasure& nu) {
    if (field.side() != Side::right) throw ContractError("symmetric_from_right: field must use the right convention");
    const auto& tg = field.tgrid();
    std::vector<std::vector<LocalTimeEvent>> out(field.n_levels());
    for (std::size_t j = 0; j < field.n_levels(); ++j) {
        const double a = field.levels()[j];
        const double w = nu.atom(a);
        const auto ev = field.events(j);
        if (w == 0.0) {
            out[j].assign(ev.begin(), ev.end());
            continue;
        }
        std::vector<double> factor(ev.size());
        bool constant = true;
        for (std::size_t k = 0; k < ev.size(); ++k) {
            const double hv = h(tg.time(ev[k].step), a) * w;
            if (!(std::abs(hv) < 1.0)) throw ContractError("symmetric_from_right: |h nu({a})| >= 1 at a visited atom");
            factor[k] = 1.0 - hv;
            constant = constant && factor[k] == factor[0];
        }
        out[j].reserve(ev.size());
        double cum = 0.0;
        for (std::size_t k = 0; k < ev.size(); ++k) {
            const double d = factor[k] * ev[k].dL;
            cum = constant ? factor[0] * ev[k].cum : cum + d;
            out[j].push_back({ev[k].step, d, cum});
        }
    }
    std::vector<double> corr(field.n_levels());
    for (std::size_t j = 0; j < corr.size(); ++j) corr[j] = field.correction(j);
    return LocalTimeField(tg, field.levels(), Side::symmetric, std::move(out), std::move(corr));
}

/// Piecewise-constant approximation of a field on a product partition.
/// Cell (p,q) covers time nodes [time_breaks[p], time_breaks[p+1]) and
/// level indices [level_breaks[q], level_breaks[q+1]).
struct StepField {
    std::vector<std::size_t> time_breaks;
    std::vector<std::size_t> level_breaks;
    std::vector<double> values;  // row-major [time block][level block]
    double sup_error = 0.0;

    [[nodiscard]] std::size_t cells() const noexcept { return values.size(); }
};

/// Greedy product partition: time blocks keep every column within ε/2 of
/// its block-start value; level blocks keep every block-start row within
/// ε/2 of the block's first level. The sup error is then < ε and is
/// recomputed exactly on the output.
inline StepField step_approximation(const LocalTimeField& field, double eps,
                                    std::size_t max_cells = std::size_t{1} << 22) {
    if (!(eps > 0.0)) throw ContractError("step_approximation: eps must be positive");
    const std::size_t na = field.n_levels();
    const std::size_t nn = field.tgrid().n_nodes();
    StepField out;
    if (na == 0) return out;

    // Merge all charges by step.
    struct Charge {
        std::uint32_t step;
        std::uint32_t level;
        double dL;
    };
    std::vector<Charge> charges;
    for (std::size_t j = 0; j < na; ++j) {
        for (const auto& e : field.events(j)) charges.push_back({e.step, static_cast<std::uint32_t>(j), e.dL});
    }
    std::stable_sort(charges.begin(), charges.end(),
                     [](const Charge& a, const Charge& b) { return a.step < b.step; });
    out.time_breaks.push_back(0);
    std::vector<double> acc(na, 0.0);
    std::vector<std::uint32_t> touched;
    for (std::size_t k = 0; k < charges.size();) {
        const auto step = charges[k].step;
        bool cut = false;
        std::size_t m = k;
        for (; m < charges.size() && charges[m].step == step; ++m) {
            auto& a = acc[charges[m].level];
            if (a == 0.0) touched.push_back(charges[m].level);
            a += charges[m].dL;
            cut = cut || a >= 0.5 * eps;
        }
        if (cut) {
            out.time_breaks.push_back(step + 1);
            for (auto j : touched) acc[j] = 0.0;
            touched.clear();
        }
        k = m;
    }
    if (out.time_breaks.back() != nn) out.time_breaks.push_back(nn);
    const std::size_t ntb = out.time_breaks.size() - 1;

    std::vector<double> rows(ntb * na);
    for (std::size_t p = 0; p < ntb; ++p) {
        for (std::size_t j = 0; j < na; ++j) rows[p * na + j] = field.value(out.time_breaks[p], j);
    }
    out.level_breaks.push_back(0);
    for (std::size_t j = 1; j < na; ++j) {
        const std::size_t first = out.level_breaks.back();
        bool split = false;
        for (std::size_t p = 0; p < ntb && !split; ++p) {
            split = std::abs(rows[p * na + j] - rows[p * na + first]) >= 0.5 * eps;
        }
        if (split) out.level_breaks.push_back(j);
    }
    out.level_breaks.push_back(na);
    const std::size_t nlb = out.level_breaks.size() - 1;
    if (ntb * nlb > max_cells) {
        throw ResolutionError("step_approximation: tolerance needs " + std::to_string(ntb * nlb) +
                              " cells, above the configured maximum");
    }
    out.values.resize(ntb * nlb);
    for (std::size_t p = 0; p < ntb; ++p) {
        for (std::size_t q = 0; q < nlb; ++q) {
            const double v = rows[p * na + out.level_breaks[q]];
            out.values[p * nlb + q] = v;
            const std::size_t last = out.time_breaks[p + 1] - 1;
            for (std::size_t j = out.level_breaks[q]; j < out.level_breaks[q + 1]; ++j) {
                // Columns are nondecreasing in time: the block extremes are at its ends.
                out.sup_error = std::max({out.sup_error, std::abs(rows[p * na + j] - v),
                                          std::abs(field.value(last, j) - v)});
            }
        }
    }
    if (!(out.sup_error < eps)) throw ResolutionError("step_approximation: tolerance not reached");
    return out;
}

/// CSV matrix: first row levels, first column times, on every stride-th node.
inline void write_field_csv(std::ostream& os, const LocalTimeField& f, std::size_t stride = 1) {
    const auto m = f.matrix(stride);
    const std::size_t na = f.n_levels();
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    os << "t";
    for (double a : f.levels()) {
        os << ',';
        put(a);
    }
    os << '\n';
    const std::size_t nt = m.size() / std::max<std::size_t>(na, 1);
    for (std::size_t k = 0; k < nt; ++k) {
        put(f.tgrid().time(k * stride));
        for (std::size_t j = 0; j < na; ++j) {
            os << ',';
            put(m[k * na + j]);
        }
        os << '\n';
    }
}

/// JSON sidecar recording the side convention and grid shape.
inline void write_field_sidecar(std::ostream& os, const LocalTimeField& f, std::size_t stride = 1) {
    os << "{\"side\": \"" << side_name(f.side()) << "\", \"sgn0\": " << sgn0(f.side())
       << ", \"n_levels\": " << f.n_levels() << ", \"time_stride\": " << stride
       << ", \"n_steps\": " << f.tgrid().n_steps() << "}\n";
}

}  // namespace ltsi
