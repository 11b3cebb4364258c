#pragma once

// Uniform time grids, sample paths, Brownian drivers, Euler–Maruyama and
// grid-level stochastic integrals.

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <functional>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ltsi/error.hpp"
#include "ltsi/rng.hpp"

namespace ltsi {

/// n_steps uniform steps from t0 to T.
class TimeGrid {
public:
    TimeGrid(double t0, double T, std::size_t n_steps) : t0_(t0), T_(T), n_(n_steps) {
        if (!(T > t0) || n_steps < 1) throw ContractError("TimeGrid: need T > t0 and n_steps >= 1");
        dt_ = (T - t0) / static_cast<double>(n_steps);
    }

    /// Unit-horizon grid with 2^exponent steps.
    static TimeGrid dyadic(int exponent, double T = 1.0) {
        return TimeGrid(0.0, T, std::size_t{1} << exponent);
    }

    [[nodiscard]] double t0() const noexcept { return t0_; }
    [[nodiscard]] double T() const noexcept { return T_; }
    [[nodiscard]] std::size_t n_steps() const noexcept { return n_; }
    [[nodiscard]] std::size_t n_nodes() const noexcept { return n_ + 1; }
    [[nodiscard]] double dt() const noexcept { return dt_; }

    [[nodiscard]] double time(std::size_t i) const noexcept {
        return i == n_ ? T_ : std::fma(static_cast<double>(i), dt_, t0_);
    }

    /// Coarser grid taking every stride-th node; stride must divide n_steps.
    [[nodiscard]] TimeGrid coarsened(std::size_t stride) const {
        if (stride == 0 || n_ % stride != 0) throw ContractError("TimeGrid: stride must divide n_steps");
        return TimeGrid(t0_, T_, n_ / stride);
    }

    friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
        return a.t0_ == b.t0_ && a.T_ == b.T_ && a.n_ == b.n_;
    }

private:
    double t0_;
    double T_;
    std::size_t n_;
    double dt_;
};

/// Values of one path on a grid, with an optional semimartingale
/// decomposition and quadratic-variation track.
struct SamplePath {
    TimeGrid grid;
    std::vector<double> values;
    std::optional<std::vector<double>> martingale_part;
    std::optional<std::vector<double>> bv_part;
    std::optional<std::vector<double>> qv;

    SamplePath(TimeGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.n_nodes()) throw ContractError("SamplePath: value count must match grid nodes");
    }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t i) const noexcept { return values[i]; }
    [[nodiscard]] double initial() const noexcept { return values.front(); }
    [[nodiscard]] double terminal() const noexcept { return values.back(); }
    [[nodiscard]] bool has_decomposition() const noexcept { return martingale_part && bv_part; }
};

/// Standard Brownian motion from 0 on grid, increments sqrt(dt)·N(0,1) from
/// the increments domain of rng.
inline SamplePath brownian_path(const TimeGrid& grid, const RngStream& rng) {
    const std::size_t n = grid.n_steps();
    std::vector<double> z(n);
    rng.normals(z);
    const double s = std::sqrt(grid.dt());
    std::vector<double> v(n + 1), q(n + 1);
    v[0] = 0.0;
    q[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double db = s * z[i];
        v[i + 1] = v[i] + db;
        q[i + 1] = q[i] + db * db;
    }
    SamplePath p(grid, std::move(v));
    p.martingale_part = p.values;
    p.bv_part = std::vector<double>(n + 1, 0.0);
    p.qv = std::move(q);
    return p;
}

using Coefficient = std::function<double(double, double)>;

/// X_{i+1} = X_i + b(t_i,X_i) dt + σ(t_i,X_i) ΔB_i.
inline SamplePath euler_solve(const Coefficient& b, const Coefficient& sigma, double x0,
                              const TimeGrid& grid, const SamplePath& driver) {
    if (!(driver.grid == grid)) throw ContractError("euler_solve: driver grid differs");
    const std::size_t n = grid.n_steps();
    const double dt = grid.dt();
    std::vector<double> x(n + 1), m(n + 1), a(n + 1), q(n + 1);
    x[0] = x0;
    m[0] = a[0] = q[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = grid.time(i);
        const double drift = b(t, x[i]) * dt;
        const double s = sigma(t, x[i]);
        const double diff = s * (driver.values[i + 1] - driver.values[i]);
        x[i + 1] = x[i] + drift + diff;
        a[i + 1] = a[i] + drift;
        m[i + 1] = m[i] + diff;
        q[i + 1] = q[i] + s * s * dt;
        if (!std::isfinite(x[i + 1]) || !std::isfinite(q[i + 1])) {
            throw NumericDomainError("euler_solve: non-finite state", i);
        }
    }
    SamplePath p(grid, std::move(x));
    p.martingale_part = std::move(m);
    p.bv_part = std::move(a);
    p.qv = std::move(q);
    return p;
}

/// Cumulative left-point sums Σ φ_i (X_{i+1} − X_i). φ needs n_steps or
/// n_nodes entries; a trailing node value is ignored. The decomposition of
/// X, when present, is carried through.
inline SamplePath ito_integral(std::span<const double> phi, const SamplePath& X) {
    const std::size_t n = X.grid.n_steps();
    if (phi.size() != n && phi.size() != n + 1) throw ContractError("ito_integral: integrand length mismatch");
    auto cumulate = [&](const std::vector<double>& y) {
        std::vector<double> out(n + 1);
        out[0] = 0.0;
        for (std::size_t i = 0; i < n; ++i) out[i + 1] = out[i] + phi[i] * (y[i + 1] - y[i]);
        return out;
    };
    SamplePath r(X.grid, cumulate(X.values));
    if (X.has_decomposition()) {
        r.martingale_part = cumulate(*X.martingale_part);
        r.bv_part = cumulate(*X.bv_part);
    }
    return r;
}

/// Realized quadratic variation Σ (X_{i+1} − X_i)², carried as both the
/// values and the qv track.
inline SamplePath quadratic_variation(const SamplePath& X) {
    const std::size_t n = X.grid.n_steps();
    std::vector<double> q(n + 1);
    q[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = X.values[i + 1] - X.values[i];
        q[i + 1] = q[i] + d * d;
    }
    SamplePath r(X.grid, q);
    r.qv = std::move(q);
    return r;
}

/// X with a QV track, computing the realized one if absent.
inline const std::vector<double>& qv_track(const SamplePath& X, std::vector<double>& scratch) {
    if (X.qv) return *X.qv;
    scratch = quadratic_variation(X).values;
    return scratch;
}

/// New path X_t − θ_t (θ given per node); decomposition and qv dropped
/// except that a realized qv is attached.
inline SamplePath shifted(const SamplePath& X, std::span<const double> theta) {
    if (theta.size() != X.size()) throw ContractError("shifted: length mismatch");
    std::vector<double> v(X.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = X.values[i] - theta[i];
    SamplePath r(X.grid, std::move(v));
    r.qv = quadratic_variation(r).values;
    return r;
}

inline SamplePath shifted(const SamplePath& X, double a) {
    std::vector<double> v(X.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = X.values[i] - a;
    SamplePath r(X.grid, std::move(v));
    r.martingale_part = X.martingale_part;
    r.bv_part = X.bv_part;
    r.qv = X.qv;
    return r;
}

/// Every stride-th node of X on the coarsened grid. The qv track becomes
/// the realized one of the coarse martingale part (of the values when no
/// decomposition is carried).
inline SamplePath coarsen(const SamplePath& X, std::size_t stride) {
    const auto g = X.grid.coarsened(stride);
    auto pick = [&](const std::vector<double>& v) {
        std::vector<double> out(g.n_nodes());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i * stride];
        return out;
    };
    SamplePath r(g, pick(X.values));
    if (X.has_decomposition()) {
        r.martingale_part = pick(*X.martingale_part);
        r.bv_part = pick(*X.bv_part);
    }
    const auto& m = X.has_decomposition() ? *r.martingale_part : r.values;
    std::vector<double> q(g.n_nodes(), 0.0);
    for (std::size_t i = 0; i + 1 < q.size(); ++i) q[i + 1] = q[i] + (m[i + 1] - m[i]) * (m[i + 1] - m[i]);
    r.qv = std::move(q);
    return r;
}

/// `t,value[,m_part,bv_part,qv]`, one row per node, 17 significant digits.
inline void write_path_csv(std::ostream& os, const SamplePath& X) {
    const bool dec = X.has_decomposition();
    const bool q = X.qv.has_value();
    os << "t,value";
    if (dec) os << ",m_part,bv_part";
    if (q) os << ",qv";
    os << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << buf;
    };
    for (std::size_t i = 0; i < X.size(); ++i) {
        put(X.grid.time(i));
        os << ',';
        put(X.values[i]);
        if (dec) {
            os << ',';
            put((*X.martingale_part)[i]);
            os << ',';
            put((*X.bv_part)[i]);
        }
        if (q) {
            os << ',';
            put((*X.qv)[i]);
        }
        os << '\n';
    }
}

}  // namespace ltsi
