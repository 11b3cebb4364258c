#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "ltsi/error.hpp"

namespace ltsi {

struct InversionStats {
    int iterations = 0;
    bool bisected = false;
};

/// Solves f(x) = y for increasing f. The bracket grows geometrically from
/// the guess; Newton steps (when df is given) are taken while they stay
/// inside the bracket, bisection otherwise. Stops at |Δx| or |f−y| below
/// tol·(1+|y|).
inline double invert_increasing(const std::function<double(double)>& f, double y, double guess,
                                const std::function<double(double)>& df = {}, double tol = 1e-12,
                                InversionStats* stats = nullptr) {
    const double scale = tol * (1.0 + std::abs(y));
    double lo = guess;
    double hi = guess;
    double flo = f(lo) - y;
    if (std::abs(flo) <= scale) return guess;
    double step = 1.0 + 1e-3 * std::abs(guess);
    int expansions = 0;
    if (flo < 0.0) {
        double fhi = flo;
        while (fhi < 0.0) {
            lo = hi;
            flo = fhi;
            hi = lo + step;
            fhi = f(hi) - y;
            step *= 2.0;
            if (++expansions > 200 || !std::isfinite(fhi)) throw NumericDomainError("invert_increasing: cannot bracket y=" + std::to_string(y));
        }
    } else {
        double fl = flo;
        while (fl > 0.0) {
            hi = lo;
            lo = hi - step;
            fl = f(lo) - y;
            step *= 2.0;
            if (++expansions > 200 || !std::isfinite(fl)) throw NumericDomainError("invert_increasing: cannot bracket y=" + std::to_string(y));
        }
        flo = fl;
    }
    double x = 0.5 * (lo + hi);
    if (df) x = guess < lo || guess > hi ? x : guess;
    for (int it = 1; it <= 200; ++it) {
        const double fx = f(x) - y;
        if (stats) stats->iterations = it;
        if (std::abs(fx) <= scale) return x;
        if (fx < 0.0) {
            lo = x;
        } else {
            hi = x;
        }
        double next = 0.5 * (lo + hi);
        if (df) {
            const double d = df(x);
            const double newton = x - fx / d;
            if (d > 0.0 && newton > lo && newton < hi) {
                next = newton;
            } else if (stats) {
                stats->bisected = true;
            }
        }
        if (std::abs(next - x) <= tol * (1.0 + std::abs(x)) || hi - lo <= tol * (1.0 + std::abs(x))) return next;
        x = next;
    }
    throw NumericDomainError("invert_increasing: no convergence for y=" + std::to_string(y) +
                             " in [" + std::to_string(lo) + "," + std::to_string(hi) + "]");
}

}  // namespace ltsi
