#pragma once

// Stochastic differential equations with a local-time term,
//   X_t = X_0 + ∫b ds + ∫σ dB + ∫∫ h(s,a) d_sL^a_s dν(a),
// solved through a space transform F that removes the local time.

#include <algorithm>
#include <array>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ltsi/calculus.hpp"
#include "ltsi/error.hpp"
#include "ltsi/expr.hpp"
#include "ltsi/localtime.hpp"
#include "ltsi/measure.hpp"
#include "ltsi/path.hpp"
#include "ltsi/rng.hpp"
#include "ltsi/roots.hpp"

namespace ltsi {

struct SdeltSpec {
    Expr b = expr::constant(0.0);
    Expr sigma = expr::constant(1.0);
    Expr h = expr::constant(1.0);
    RadonMeasure nu;
    double x0 = 0.0;
    double sigma_min = 1e-6;
    /// JSON form of ν's density, kept for round trips.
    nlohmann::json nu_density_source;
};

/// Spec file layout: {b, sigma, h, nu:{atoms:[[loc,w],...], density, support:[lo,hi]}, x0}.
inline SdeltSpec spec_from_json(const nlohmann::json& j) {
    SdeltSpec s;
    if (!j.is_object()) throw ContractError("spec must be a JSON object");
    if (j.contains("b")) s.b = expr::from_json(j.at("b"));
    if (j.contains("sigma")) s.sigma = expr::from_json(j.at("sigma"));
    if (j.contains("h")) s.h = expr::from_json(j.at("h"));
    if (j.contains("x0")) s.x0 = j.at("x0").get<double>();
    if (j.contains("sigma_min")) s.sigma_min = j.at("sigma_min").get<double>();
    if (j.contains("nu")) {
        const auto& n = j.at("nu");
        std::vector<Atom> atoms;
        if (n.contains("atoms")) {
            for (const auto& a : n.at("atoms")) {
                if (!a.is_array() || a.size() != 2) throw ContractError("nu.atoms entries must be [location, weight]");
                atoms.push_back({a[0].get<double>(), a[1].get<double>()});
            }
        }
        if (n.contains("density") && !n.at("density").is_null()) {
            DensitySupport sup;
            if (n.contains("support")) {
                const auto& r = n.at("support");
                if (!r.is_array() || r.size() != 2) throw ContractError("nu.support must be [lo, hi]");
                sup = {r[0].is_null() ? -kInf : r[0].get<double>(), r[1].is_null() ? kInf : r[1].get<double>()};
            }
            const Expr d = expr::from_json(n.at("density"));
            s.nu = RadonMeasure(std::move(atoms), [d](double x) { return d(0.0, x); }, sup);
            s.nu_density_source = n.at("density");
        } else {
            s.nu = RadonMeasure(std::move(atoms));
        }
    }
    return s;
}

inline nlohmann::json spec_to_json(const SdeltSpec& s) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const auto& a : s.nu.atoms()) atoms.push_back({a.location, a.weight});
    nlohmann::json nu{{"atoms", atoms}};
    if (s.nu.has_density()) {
        nu["density"] = s.nu_density_source.is_null() ? nlohmann::json{{"kind", "custom"}} : s.nu_density_source;
        auto end = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
        nu["support"] = {end(s.nu.support().lo), end(s.nu.support().hi)};
    }
    return {{"b", s.b.source}, {"sigma", s.sigma.source}, {"h", s.h.source},
            {"nu", nu},        {"x0", s.x0},               {"sigma_min", s.sigma_min}};
}

struct SpecViolation {
    std::string kind;
    double t;
    double x;
    std::string message;
};

struct SpecLattice {
    double t_lo = 0.0, t_hi = 1.0;
    int nt = 9;
    double x_lo = -8.0, x_hi = 8.0;
    int nx = 33;
    double bound = 1e12;
};

/// Every violated assumption, with its location. Empty means admissible.
inline std::vector<SpecViolation> validate_spec(const SdeltSpec& s, const SpecLattice& lat = {}) {
    std::vector<SpecViolation> out;
    auto tval = [&](int i) { return lat.nt == 1 ? lat.t_lo : lat.t_lo + (lat.t_hi - lat.t_lo) * i / (lat.nt - 1); };
    auto xval = [&](int k) { return lat.nx == 1 ? lat.x_lo : lat.x_lo + (lat.x_hi - lat.x_lo) * k / (lat.nx - 1); };
    auto bounded = [&](double v) { return std::isfinite(v) && std::abs(v) <= lat.bound; };
    for (int i = 0; i < lat.nt; ++i) {
        const double t = tval(i);
        for (int k = 0; k < lat.nx; ++k) {
            const double x = xval(k);
            const double sg = s.sigma(t, x);
            if (!(sg >= s.sigma_min)) {
                out.push_back({"sigma_lower_bound", t, x, "sigma=" + std::to_string(sg) + " below sigma_min"});
            }
            if (!bounded(s.b(t, x))) out.push_back({"unbounded", t, x, "b not finite/bounded"});
            if (!bounded(sg)) out.push_back({"unbounded", t, x, "sigma not finite/bounded"});
            if (!bounded(s.h(t, x))) out.push_back({"unbounded", t, x, "h not finite/bounded"});
        }
        for (const auto& a : s.nu.atoms()) {
            const double v = s.h(t, a.location) * a.weight;
            if (!(std::abs(v) < 0.5)) {
                out.push_back({"atom_condition", t, a.location,
                               "|h nu({a})| = " + std::to_string(std::abs(v)) + " >= 1/2"});
            }
        }
    }
    if (s.nu.has_density()) {
        const auto& sup = s.nu.support();
        if (!std::isfinite(sup.lo) || !std::isfinite(sup.hi)) {
            out.push_back({"nu_not_finite", 0.0, std::isfinite(sup.lo) ? sup.hi : sup.lo,
                           "density part of nu has unbounded support"});
        } else {
            double mass = 0.0;
            try {
                mass = s.nu.total_variation({sup.lo, sup.hi});
            } catch (const Error&) {
                mass = kInf;
            }
            if (!std::isfinite(mass)) out.push_back({"nu_not_finite", 0.0, sup.lo, "density part of nu has infinite mass"});
        }
    }
    if (!std::isfinite(s.x0)) out.push_back({"unbounded", 0.0, s.x0, "x0 not finite"});
    return out;
}

inline nlohmann::json to_json(const std::vector<SpecViolation>& v) {
    auto arr = nlohmann::json::array();
    for (const auto& e : v) arr.push_back({{"kind", e.kind}, {"t", e.t}, {"x", e.x}, {"message", e.message}});
    return arr;
}

namespace detail {

/// Shared read-only data behind a TransformPair.
///
/// ζ(t,x) = −2∫_0^x h dν^c and ψ(t,x) = Π_{z<x}(1 − 2h(t,z)ν({z})), so that
/// F = ∫_0^x e^ζ ψ removes the right local time from the dynamics.
struct TransformCore {
    enum class Mode { identity, piecewise_linear, tabulated, direct };

    Mode mode = Mode::identity;
    Expr h;
    RadonMeasure nu;
    std::vector<double> atom_x;
    std::vector<double> atom_w;
    double step = 0x1p-8;

    // time-homogeneous ψ: psi_prefix[k] = product over the first k atoms
    std::vector<double> psi_prefix;

    // piecewise-linear F through the breakpoints px
    std::vector<double> px, pF, ps;

    // tabulated ζ and F on nodes tx
    std::vector<double> tx, tz, tF, dz_a, dz_b, cell_psi;

    [[nodiscard]] std::size_t atoms_below(double x) const {
        return static_cast<std::size_t>(std::lower_bound(atom_x.begin(), atom_x.end(), x) - atom_x.begin());
    }

    /// ψ and ψ_t at (t,x).
    [[nodiscard]] std::pair<double, double> psi(double t, double x) const {
        const std::size_t k = atoms_below(x);
        if (mode != Mode::direct) return {psi_prefix[k], 0.0};
        double p = 1.0;
        double lt = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            const double f = 1.0 - 2.0 * h(t, atom_x[i]) * atom_w[i];
            p *= f;
            lt += -2.0 * h.dt(t, atom_x[i]) * atom_w[i] / f;
        }
        return {p, p * lt};
    }

    /// −2 h(t,x) m(x) evaluated just inside [x, toward).
    [[nodiscard]] double dzeta(double t, double x, double toward) const {
        if (!nu.has_density()) return 0.0;
        const double xi = std::nextafter(x, toward);
        const double m = nu.density(xi);
        return m == 0.0 ? 0.0 : -2.0 * h(t, xi) * m;
    }

    [[nodiscard]] double dzeta_t(double t, double x, double toward) const {
        if (!nu.has_density() || !h.time_dependent) return 0.0;
        const double xi = std::nextafter(x, toward);
        const double m = nu.density(xi);
        return m == 0.0 ? 0.0 : -2.0 * h.dt(t, xi) * m;
    }

    /// Breakpoints of the integrand of F: atoms, density breakpoints, 0.
    [[nodiscard]] std::vector<double> breakpoints() const {
        std::vector<double> b = atom_x;
        const auto db = nu.density_breakpoints();
        b.insert(b.end(), db.begin(), db.end());
        b.push_back(0.0);
        std::sort(b.begin(), b.end());
        b.erase(std::unique(b.begin(), b.end()), b.end());
        return b;
    }

    struct State {
        double zeta = 0.0, zeta_t = 0.0, F = 0.0, F_t = 0.0;
    };

    /// One RK4 step of (ζ, ζ_t, F, F_t) from xa to xb inside a cell on which
    /// ψ is constant.
    [[nodiscard]] State rk4(double t, double xa, double xb, State s, double ps, double ps_t, bool with_t) const {
        const double d = xb - xa;
        const double xm = 0.5 * (xa + xb);
        const double k1 = dzeta(t, xa, xb);
        const double k2 = dzeta(t, xm, xb);
        const double k4 = dzeta(t, xb, xa);
        const double z1 = s.zeta;
        const double z2 = s.zeta + 0.5 * d * k1;
        const double z3 = s.zeta + 0.5 * d * k2;
        const double z4 = s.zeta + d * k2;
        State r = s;
        r.zeta = s.zeta + d / 6.0 * (k1 + 4.0 * k2 + k4);
        r.F = s.F + d / 6.0 * ps * (std::exp(z1) + 2.0 * std::exp(z2) + 2.0 * std::exp(z3) + std::exp(z4));
        if (with_t) {
            const double j1 = dzeta_t(t, xa, xb);
            const double j2 = dzeta_t(t, xm, xb);
            const double j4 = dzeta_t(t, xb, xa);
            const double w1 = s.zeta_t;
            const double w2 = s.zeta_t + 0.5 * d * j1;
            const double w3 = s.zeta_t + 0.5 * d * j2;
            const double w4 = s.zeta_t + d * j2;
            r.zeta_t = s.zeta_t + d / 6.0 * (j1 + 4.0 * j2 + j4);
            auto g = [&](double z, double w) { return std::exp(z) * (w * ps + ps_t); };
            r.F_t = s.F_t + d / 6.0 * (g(z1, w1) + 2.0 * g(z2, w2) + 2.0 * g(z3, w3) + g(z4, w4));
        }
        return r;
    }

    /// Integrates from `from` (state s) to x, cutting at breakpoints and
    /// steps of at most `step`.
    [[nodiscard]] State integrate(double t, double from, State s, double x, bool with_t) const {
        if (x == from) return s;
        const auto br = breakpoints();
        const double dir = x > from ? 1.0 : -1.0;
        double cur = from;
        while (cur != x) {
            double stop = x;
            for (double b : br) {
                if (dir > 0 ? (b > cur && b < stop) : (b < cur && b > stop)) stop = b;
            }
            const int n = std::max(1, static_cast<int>(std::ceil(std::abs(stop - cur) / step)));
            const double lo = std::min(cur, stop);
            const double hi = std::max(cur, stop);
            const auto [p, pt] = psi(t, 0.5 * (lo + hi));
            for (int i = 0; i < n; ++i) {
                const double xa = cur + (stop - cur) * i / n;
                const double xb = i + 1 == n ? stop : cur + (stop - cur) * (i + 1) / n;
                s = rk4(t, xa, xb, s, p, pt, with_t);
            }
            cur = stop;
        }
        return s;
    }

    [[nodiscard]] State direct(double t, double x, bool with_t) const { return integrate(t, 0.0, {}, x, with_t); }

    static double hermite(double s, double d, double v0, double v1, double d0, double d1) {
        const double s2 = s * s;
        const double s3 = s2 * s;
        return (2 * s3 - 3 * s2 + 1) * v0 + (s3 - 2 * s2 + s) * d * d0 + (-2 * s3 + 3 * s2) * v1 +
               (s3 - s2) * d * d1;
    }

    /// (ζ, F) from the table, or by integration beyond its ends.
    [[nodiscard]] State table(double x) const {
        if (x <= tx.front()) return integrate(0.0, tx.front(), {tz.front(), 0.0, tF.front(), 0.0}, x, false);
        if (x >= tx.back()) return integrate(0.0, tx.back(), {tz.back(), 0.0, tF.back(), 0.0}, x, false);
        const std::size_t c =
            static_cast<std::size_t>(std::lower_bound(tx.begin(), tx.end(), x) - tx.begin()) - 1;
        const double d = tx[c + 1] - tx[c];
        const double s = (x - tx[c]) / d;
        State r;
        r.zeta = hermite(s, d, tz[c], tz[c + 1], dz_a[c], dz_b[c]);
        r.F = hermite(s, d, tF[c], tF[c + 1], std::exp(tz[c]) * cell_psi[c], std::exp(tz[c + 1]) * cell_psi[c]);
        return r;
    }

    void build_table() {
        double R = 16.0;
        for (double b : breakpoints()) R = std::max(R, std::abs(b) + 1.0);
        std::vector<double> nodes = uniform_levels(-R, R, step);
        for (double b : breakpoints()) nodes.push_back(b);
        std::sort(nodes.begin(), nodes.end());
        nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
        const std::size_t n = nodes.size();
        std::vector<State> st(n);
        const std::size_t i0 =
            static_cast<std::size_t>(std::lower_bound(nodes.begin(), nodes.end(), 0.0) - nodes.begin());
        auto cell_step = [&](double xa, double xb, State s) {
            const auto [p, pt] = psi(0.0, 0.5 * (xa + xb));
            return rk4(0.0, xa, xb, s, p, pt, false);
        };
        std::size_t hi = i0;
        for (; hi + 1 < n; ++hi) {
            st[hi + 1] = cell_step(nodes[hi], nodes[hi + 1], st[hi]);
            if (!std::isfinite(st[hi + 1].F) || std::abs(st[hi + 1].zeta) > 500.0) break;
        }
        std::size_t lo = i0;
        for (; lo > 0; --lo) {
            st[lo - 1] = cell_step(nodes[lo], nodes[lo - 1], st[lo]);
            if (!std::isfinite(st[lo - 1].F) || std::abs(st[lo - 1].zeta) > 500.0) break;
        }
        for (std::size_t i = lo; i <= std::min(hi, n - 1); ++i) {
            tx.push_back(nodes[i]);
            tz.push_back(st[i].zeta);
            tF.push_back(st[i].F);
        }
        for (std::size_t c = 0; c + 1 < tx.size(); ++c) {
            dz_a.push_back(dzeta(0.0, tx[c], tx[c + 1]));
            dz_b.push_back(dzeta(0.0, tx[c + 1], tx[c]));
            cell_psi.push_back(psi(0.0, 0.5 * (tx[c] + tx[c + 1])).first);
        }
        if (tx.size() < 2) throw NumericDomainError("build_transform: ζ table collapsed around 0");
    }

    void build_piecewise_linear() {
        px = breakpoints();
        const std::size_t n = px.size();
        ps.assign(n + 1, 0.0);
        ps[0] = psi(0.0, px[0]).first;
        for (std::size_t r = 1; r <= n; ++r) ps[r] = psi(0.0, std::nextafter(px[r - 1], kInf)).first;
        pF.assign(n, 0.0);
        const std::size_t i0 = static_cast<std::size_t>(std::lower_bound(px.begin(), px.end(), 0.0) - px.begin());
        for (std::size_t k = i0 + 1; k < n; ++k) pF[k] = pF[k - 1] + ps[k] * (px[k] - px[k - 1]);
        for (std::size_t k = i0; k > 0; --k) pF[k - 1] = pF[k] - ps[k] * (px[k] - px[k - 1]);
    }
};

}  // namespace detail

/// F, its derivatives and its inverse G for a pair (h, ν). Copies share
/// read-only tables.
class TransformPair {
public:
    using Mode = detail::TransformCore::Mode;

    TransformPair() {
        auto c = std::make_shared<detail::TransformCore>();
        c->psi_prefix = {1.0};
        core_ = std::move(c);
    }
    explicit TransformPair(std::shared_ptr<const detail::TransformCore> c) : core_(std::move(c)) {}

    [[nodiscard]] Mode mode() const noexcept { return core_->mode; }
    [[nodiscard]] bool is_identity() const noexcept { return core_->mode == Mode::identity; }
    [[nodiscard]] bool time_dependent() const noexcept { return core_->mode == Mode::direct; }

    [[nodiscard]] const char* mode_name() const noexcept {
        switch (core_->mode) {
            case Mode::identity: return "identity";
            case Mode::piecewise_linear: return "piecewise_linear";
            case Mode::tabulated: return "tabulated";
            case Mode::direct: return "direct";
        }
        return "?";
    }

    [[nodiscard]] double F(double t, double x) const {
        const auto& c = *core_;
        switch (c.mode) {
            case Mode::identity: return x;
            case Mode::piecewise_linear: {
                const std::size_t r = static_cast<std::size_t>(std::lower_bound(c.px.begin(), c.px.end(), x) - c.px.begin());
                return r == 0 ? c.pF[0] + c.ps[0] * (x - c.px[0]) : c.pF[r - 1] + c.ps[r] * (x - c.px[r - 1]);
            }
            case Mode::tabulated: return c.table(x).F;
            case Mode::direct: return c.direct(t, x, false).F;
        }
        return x;
    }

    /// Left space derivative e^{ζ}ψ.
    [[nodiscard]] double F_x(double t, double x) const {
        const auto& c = *core_;
        switch (c.mode) {
            case Mode::identity: return 1.0;
            case Mode::piecewise_linear:
                return c.ps[static_cast<std::size_t>(std::lower_bound(c.px.begin(), c.px.end(), x) - c.px.begin())];
            case Mode::tabulated: return std::exp(c.table(x).zeta) * c.psi(0.0, x).first;
            case Mode::direct: return std::exp(c.direct(t, x, false).zeta) * c.psi(t, x).first;
        }
        return 1.0;
    }

    [[nodiscard]] double F_t(double t, double x) const {
        return core_->mode == Mode::direct ? core_->direct(t, x, true).F_t : 0.0;
    }

    [[nodiscard]] double zeta(double t, double x) const {
        const auto& c = *core_;
        switch (c.mode) {
            case Mode::identity:
            case Mode::piecewise_linear: return 0.0;
            case Mode::tabulated: return c.table(x).zeta;
            case Mode::direct: return c.direct(t, x, false).zeta;
        }
        return 0.0;
    }

    [[nodiscard]] double psi(double t, double x) const {
        return core_->mode == Mode::identity ? 1.0 : core_->psi(t, x).first;
    }

    /// Inverse of F(t,·), to 1e-12·(1+|y|).
    [[nodiscard]] double G(double t, double y) const {
        const auto& c = *core_;
        switch (c.mode) {
            case Mode::identity: return y;
            case Mode::piecewise_linear: {
                const std::size_t r = static_cast<std::size_t>(std::lower_bound(c.pF.begin(), c.pF.end(), y) - c.pF.begin());
                return r == 0 ? c.px[0] + (y - c.pF[0]) / c.ps[0] : c.px[r - 1] + (y - c.pF[r - 1]) / c.ps[r];
            }
            case Mode::tabulated: {
                double guess = y;
                if (y > c.tF.front() && y < c.tF.back()) {
                    const std::size_t k =
                        static_cast<std::size_t>(std::lower_bound(c.tF.begin(), c.tF.end(), y) - c.tF.begin());
                    const double w = (y - c.tF[k - 1]) / (c.tF[k] - c.tF[k - 1]);
                    guess = c.tx[k - 1] + w * (c.tx[k] - c.tx[k - 1]);
                } else {
                    guess = y <= c.tF.front() ? c.tx.front() : c.tx.back();
                }
                return invert_increasing([this](double x) { return F(0.0, x); }, y, guess,
                                         [this](double x) { return F_x(0.0, x); });
            }
            case Mode::direct:
                return invert_increasing([this, t](double x) { return F(t, x); }, y, y,
                                         [this, t](double x) { return F_x(t, x); });
        }
        return y;
    }

private:
    std::shared_ptr<const detail::TransformCore> core_;
};

/// Builds F/G for (h, ν). Atoms-only, time-constant h gives an exact
/// piecewise-linear F; a density with time-constant h is tabulated once;
/// time-dependent h is integrated on demand.
inline TransformPair build_transform(const Expr& h, const RadonMeasure& nu, double step = 0x1p-8) {
    if (nu.is_zero()) return TransformPair();
    auto c = std::make_shared<detail::TransformCore>();
    c->h = h;
    c->nu = nu;
    c->step = step;
    for (const auto& a : nu.atoms()) {
        c->atom_x.push_back(a.location);
        c->atom_w.push_back(a.weight);
    }
    for (std::size_t i = 0; i < c->atom_x.size(); ++i) {
        for (double t : {0.0, 0.5, 1.0}) {
            if (!(std::abs(h(t, c->atom_x[i]) * c->atom_w[i]) < 0.5)) {
                throw ContractError("build_transform: |h nu({a})| >= 1/2 at atom " + std::to_string(c->atom_x[i]));
            }
        }
    }
    if (h.time_dependent) {
        c->mode = detail::TransformCore::Mode::direct;
        return TransformPair(std::move(c));
    }
    c->psi_prefix.assign(1, 1.0);
    for (std::size_t i = 0; i < c->atom_x.size(); ++i) {
        c->psi_prefix.push_back(c->psi_prefix.back() * (1.0 - 2.0 * h(0.0, c->atom_x[i]) * c->atom_w[i]));
    }
    if (!nu.has_density()) {
        c->mode = detail::TransformCore::Mode::piecewise_linear;
        c->build_piecewise_linear();
    } else {
        c->mode = detail::TransformCore::Mode::tabulated;
        c->build_table();
    }
    return TransformPair(std::move(c));
}

inline TransformPair build_transform(const SdeltSpec& s) { return build_transform(s.h, s.nu); }

struct TransformedCoeffs {
    Coefficient drift;
    Coefficient diff;
};

/// Coefficients of Y = F(t,X): drift F_t + F_x·b and diffusion F_x·σ, both
/// composed with G.
inline TransformedCoeffs transformed_coeffs(const SdeltSpec& s, const TransformPair& pair) {
    TransformedCoeffs c;
    const bool has_b = !s.b.zero;
    const bool td = pair.time_dependent();
    c.drift = [s, pair, has_b, td](double t, double y) {
        if (!has_b && !td) return 0.0;
        const double x = pair.G(t, y);
        double d = td ? pair.F_t(t, x) : 0.0;
        if (has_b) d += pair.F_x(t, x) * s.b(t, x);
        return d;
    };
    c.diff = [s, pair](double t, double y) {
        const double x = pair.G(t, y);
        return pair.F_x(t, x) * s.sigma(t, x);
    };
    return c;
}

/// Equivalent spec without drift: ν′ = ν + Lebesgue, h′ = h at ν's atoms and
/// (h·m + b/σ²)/(m + 1) elsewhere, m the density of ν.
inline SdeltSpec absorb_drift(const SdeltSpec& s, double window = 16.0) {
    if (s.b.zero) return s;
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        QuadratureOptions q;
        q.max_level = 14;
        double v = kInf;
        try {
            v = detail::romberg([&](double x) { return std::abs(s.b(t, x) / (s.sigma(t, x) * s.sigma(t, x))); },
                                -window, window, q)
                    .value;
        } catch (const Error&) {
            v = kInf;
        }
        if (!std::isfinite(v)) throw ContractError("absorb_drift: b/sigma^2 is not locally integrable at t=" + std::to_string(t));
    }
    SdeltSpec out = s;
    out.nu = s.nu.plus(RadonMeasure::lebesgue());
    const RadonMeasure nu = s.nu;
    const Expr h = s.h, b = s.b, sg = s.sigma;
    Expr hp;
    hp.f = [nu, h, b, sg](double t, double a) {
        if (nu.atom(a) != 0.0) return h(t, a);
        const double m = nu.density(a);
        const double v = sg(t, a);
        return (h(t, a) * m + b(t, a) / (v * v)) / (m + 1.0);
    };
    hp.f_t = [nu, h, b, sg](double t, double a) {
        if (nu.atom(a) != 0.0) return h.dt(t, a);
        const double m = nu.density(a);
        const double v = sg(t, a);
        const double q = (b.dt(t, a) * v - 2.0 * b(t, a) * sg.dt(t, a)) / (v * v * v);
        return (h.dt(t, a) * m + q) / (m + 1.0);
    };
    hp.time_dependent = h.time_dependent || b.time_dependent || sg.time_dependent;
    hp.source = {{"kind", "absorbed"}, {"h", h.source}, {"b", b.source}, {"sigma", sg.source}};
    out.h = std::move(hp);
    out.b = expr::constant(0.0);
    out.nu_density_source = {{"kind", "custom"}, {"label", "nu + lebesgue"}};
    return out;
}

struct SdeltSolution {
    SamplePath X;
    SamplePath Y;
    SamplePath driver;
};

/// Solver for one spec; the transform is built once and shared by every
/// path.
class SdeltSolver {
public:
    /// With `force_transform`, a drift is absorbed into ν even when ν = 0.
    explicit SdeltSolver(SdeltSpec spec, bool force_transform = false) : spec_(std::move(spec)) {
        const auto v = validate_spec(spec_);
        if (!v.empty()) throw ContractError("solve_sdelt: spec violates " + v.front().kind + " (" + v.front().message + ")");
        direct_euler_ = spec_.nu.is_zero() && !(force_transform && !spec_.b.zero);
        if (!direct_euler_) {
            work_ = absorb_drift(spec_);
            pair_ = build_transform(work_);
        }
    }

    [[nodiscard]] const SdeltSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] const TransformPair& transform() const noexcept { return pair_; }

    [[nodiscard]] SdeltSolution solve(const SamplePath& driver) const {
        const auto& g = driver.grid;
        if (direct_euler_) {
            auto X = euler_solve(spec_.b.f, spec_.sigma.f, spec_.x0, g, driver);
            return {X, X, driver};
        }
        const std::size_t n = g.n_steps();
        const double dt = g.dt();
        const bool td = pair_.time_dependent();
        const bool has_b = !work_.b.zero;
        std::vector<double> y(n + 1), x(n + 1), q(n + 1);
        x[0] = spec_.x0;
        y[0] = pair_.F(g.t0(), spec_.x0);
        q[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = g.time(i);
            const double fx = pair_.F_x(t, x[i]);
            const double sg = spec_.sigma(t, x[i]);
            double drift = td ? pair_.F_t(t, x[i]) : 0.0;
            if (has_b) drift += fx * work_.b(t, x[i]);
            y[i + 1] = y[i] + drift * dt + fx * sg * (driver.values[i + 1] - driver.values[i]);
            x[i + 1] = pair_.G(g.time(i + 1), y[i + 1]);
            q[i + 1] = q[i] + sg * sg * dt;
            if (!std::isfinite(y[i + 1]) || !std::isfinite(x[i + 1])) {
                throw NumericDomainError("solve_sdelt: non-finite state", i);
            }
        }
        SamplePath Y(g, std::move(y));
        SamplePath X(g, std::move(x));
        X.qv = std::move(q);
        return {std::move(X), std::move(Y), driver};
    }

    /// X_T without storing the path. The driver is accumulated as in
    /// brownian_path and differenced again, so the result equals
    /// solve(grid, rng).X.terminal() exactly.
    [[nodiscard]] double terminal(const TimeGrid& g, const RngStream& rng) const {
        const std::size_t n = g.n_steps();
        const double dt = g.dt();
        const double sq = std::sqrt(dt);
        const bool td = !direct_euler_ && pair_.time_dependent();
        const bool has_b = direct_euler_ ? true : !work_.b.zero;
        std::array<double, 1024> z{};
        double v = 0.0;
        double x = spec_.x0;
        double y = direct_euler_ ? 0.0 : pair_.F(g.t0(), spec_.x0);
        for (std::size_t base = 0; base < n; base += z.size()) {
            const std::size_t m = std::min(z.size(), n - base);
            rng.normals(std::span<double>(z.data(), m), base);
            for (std::size_t k = 0; k < m; ++k) {
                const std::size_t i = base + k;
                const double v1 = v + sq * z[k];
                const double dB = v1 - v;
                v = v1;
                const double t = g.time(i);
                if (direct_euler_) {
                    const double drift = spec_.b(t, x) * dt;
                    const double diff = spec_.sigma(t, x) * dB;
                    x = x + drift + diff;
                    if (!std::isfinite(x)) throw NumericDomainError("euler_solve: non-finite state", i);
                    continue;
                }
                const double fx = pair_.F_x(t, x);
                const double sg = spec_.sigma(t, x);
                double drift = td ? pair_.F_t(t, x) : 0.0;
                if (has_b) drift += fx * work_.b(t, x);
                y = y + drift * dt + fx * sg * dB;
                x = pair_.G(g.time(i + 1), y);
                if (!std::isfinite(y) || !std::isfinite(x)) throw NumericDomainError("solve_sdelt: non-finite state", i);
            }
        }
        return x;
    }

    [[nodiscard]] SdeltSolution solve(const TimeGrid& grid, const RngStream& rng) const {
        return solve(brownian_path(grid, rng));
    }

private:
    SdeltSpec spec_;
    SdeltSpec work_;
    TransformPair pair_;
    bool direct_euler_ = true;
};

inline SamplePath solve_sdelt(const SdeltSpec& spec, const TimeGrid& grid, const RngStream& rng) {
    return SdeltSolver(spec).solve(grid, rng).X;
}

/// Residual X_t − x0 − Σb Δt − Σσ ΔB − ∫∫h dL dν along the path. Atoms use
/// the Tanaka estimator at the atom; the continuous part uses the
/// occupation identity Σ h(t_i,X_i) m(X_i) σ² Δt.
inline ResidualReport verify_sdelt(const SamplePath& X, const SdeltSpec& spec, const SamplePath& driver) {
    if (!(X.grid == driver.grid)) throw ContractError("verify_sdelt: grid mismatch");
    const auto& g = X.grid;
    const std::size_t n = g.n_steps();
    const double dt = g.dt();
    std::vector<double> lt(n + 1, 0.0);
    for (const auto& a : spec.nu.atoms()) {
        const auto tr = tanaka_trace(X, a.location, Side::right);
        double cum = 0.0;
        std::size_t next = 0;
        for (const auto& e : tr.events) {
            for (; next <= e.step; ++next) lt[next] += cum;
            cum += a.weight * spec.h(g.time(e.step), a.location) * e.dL;
        }
        for (; next <= n; ++next) lt[next] += cum;
    }
    ResidualReport r;
    r.times.resize(n + 1);
    r.residual.resize(n + 1);
    double drift = 0.0, mart = 0.0, cont = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
        r.times[i] = g.time(i);
        r.residual[i] = X.values[i] - spec.x0 - drift - mart - cont - lt[i];
        if (i == n) break;
        const double t = g.time(i);
        const double x = X.values[i];
        const double sg = spec.sigma(t, x);
        drift += spec.b(t, x) * dt;
        mart += sg * (driver.values[i + 1] - driver.values[i]);
        if (spec.nu.has_density()) {
            const double m = spec.nu.density(x);
            if (m != 0.0) cont += spec.h(t, x) * m * sg * sg * dt;
        }
    }
    r.resolution = {dt, 0.0, 0.0};
    r.finish();
    return r;
}

inline SdeltSpec skew_spec(double beta, double x0 = 0.0) {
    if (!(std::abs(beta) < 0.5)) {
        throw ContractError("skew_bm: |beta| must be < 1/2 (admissibility |h nu({a})| < 1/2 under right local time)");
    }
    SdeltSpec s;
    s.nu = beta == 0.0 ? RadonMeasure::zero() : RadonMeasure::dirac(0.0, beta);
    s.x0 = x0;
    return s;
}

/// X = x0 + B + β L⁰(X) with right local time; |β| < 1/2.
inline SamplePath skew_bm(double beta, const TimeGrid& grid, const RngStream& rng, double x0 = 0.0) {
    return solve_sdelt(skew_spec(beta, x0), grid, rng);
}

}  // namespace ltsi
