#pragma once

// Reference constructions used to check the library. They share no code
// with the estimators they check and draw from std::mt19937_64 rather than
// the library's Philox streams. Not part of the umbrella header.

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace ltsi::oracle {

/// E|N(0,1)| = sqrt(2/π), the mean of L⁰_1 for Brownian motion.
inline double abs_normal_mean() { return std::sqrt(2.0 / std::numbers::pi); }

/// Sample mean of |N(0,1)| over n draws.
inline double abs_normal_sample_mean(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> nd;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::abs(nd(gen));
    return s / static_cast<double>(n);
}

/// P(X_1 > 0) for X = B + βL⁰(X), L⁰ the right local time. With
/// L̃ = (1−β)L the symmetric local time, X = B + γL̃ with γ = β/(1−β) and
/// P(X_1>0) = (1+γ)/2.
inline double skew_positive_probability(double beta) { return 1.0 / (2.0 * (1.0 - beta)); }

struct SkewWalk {
    double terminal = 0.0;
    std::size_t excursions = 0;
};

/// Excursion-sign construction: a walk W with uniform increments of
/// variance dt; X = s·|W| where a fresh sign s (positive with probability p)
/// is drawn each time W reaches or crosses 0.
inline SkewWalk skew_walk(double p, std::size_t n_steps, double T, std::mt19937_64& gen) {
    const double half = std::sqrt(3.0 * T / static_cast<double>(n_steps));
    std::uniform_real_distribution<double> inc(-half, half);
    std::bernoulli_distribution sign(p);
    double w = 0.0;
    double s = sign(gen) ? 1.0 : -1.0;
    SkewWalk out{0.0, 1};
    for (std::size_t i = 0; i < n_steps; ++i) {
        const double next = w + inc(gen);
        if (next == 0.0 || (w > 0.0) != (next > 0.0)) {
            s = sign(gen) ? 1.0 : -1.0;
            ++out.excursions;
        }
        w = next;
    }
    out.terminal = s * std::abs(w);
    return out;
}

/// Left-point Riemann–Stieltjes sum on n uniform cells of [lo, hi].
inline double riemann_stieltjes(const std::function<double(double)>& f, const std::function<double(double)>& g,
                                double lo, double hi, std::size_t n) {
    double s = 0.0;
    double g0 = g(lo);
    for (std::size_t i = 0; i < n; ++i) {
        const double x0 = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n);
        const double x1 = lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(n);
        const double g1 = g(x1);
        s += f(x0) * (g1 - g0);
        g0 = g1;
    }
    return s;
}

/// Σ φ(t_i, a_j) ΔΔH over an nt × na uniform grid of the rectangle.
inline double vitali_brute(const std::function<double(double, double)>& phi,
                           const std::function<double(double, double)>& H, double t0, double t1, double a0,
                           double a1, std::size_t nt, std::size_t na) {
    double s = 0.0;
    for (std::size_t i = 0; i < nt; ++i) {
        const double ta = t0 + (t1 - t0) * static_cast<double>(i) / static_cast<double>(nt);
        const double tb = t0 + (t1 - t0) * static_cast<double>(i + 1) / static_cast<double>(nt);
        for (std::size_t j = 0; j < na; ++j) {
            const double aa = a0 + (a1 - a0) * static_cast<double>(j) / static_cast<double>(na);
            const double ab = a0 + (a1 - a0) * static_cast<double>(j + 1) / static_cast<double>(na);
            s += phi(ta, aa) * (H(tb, ab) - H(tb, aa) - H(ta, ab) + H(ta, aa));
        }
    }
    return s;
}

/// Two-sided occupation time (1/ε) Σ 1{a − ε/2 < X_i ≤ a + ε/2} Δ⟨X⟩_i, given the per-step increments of ⟨X⟩.
inline double symmetric_occupation(const std::vector<double>& x, const std::vector<double>& dqv, double a, double eps) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        if (x[i] > a - 0.5 * eps && x[i] <= a + 0.5 * eps) s += dqv[i];
    }
    return s / eps;
}

}  // namespace ltsi::oracle
