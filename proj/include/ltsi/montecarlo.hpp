#pragma once

// Ensemble statistics and an order-preserving parallel map over paths.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <span>
#include <thread>
#include <vector>

#include "ltsi/error.hpp"

namespace ltsi {

struct SampleStats {
    std::size_t n = 0;
    double mean = 0.0;
    double sd = 0.0;
    double se = 0.0;
};

/// Mean, sample standard deviation (n−1) and standard error.
inline SampleStats summarize(std::span<const double> xs) {
    SampleStats s;
    s.n = xs.size();
    if (s.n == 0) return s;
    double m = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) m += (xs[i] - m) / static_cast<double>(i + 1);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    s.mean = m;
    s.sd = s.n > 1 ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    s.se = s.sd / std::sqrt(static_cast<double>(s.n));
    return s;
}

inline double quantile(std::vector<double> xs, double q) {
    if (xs.empty()) throw ContractError("quantile: empty sample");
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline double median(std::vector<double> xs) { return quantile(std::move(xs), 0.5); }

/// Proportion with its binomial standard error.
inline SampleStats proportion(std::size_t hits, std::size_t n) {
    SampleStats s;
    s.n = n;
    s.mean = n ? static_cast<double>(hits) / static_cast<double>(n) : 0.0;
    s.sd = std::sqrt(s.mean * (1.0 - s.mean));
    s.se = n ? s.sd / std::sqrt(static_cast<double>(n)) : 0.0;
    return s;
}

/// |m1 − m2| in units of the joint standard error sqrt(se1² + se2²).
inline double joint_z(const SampleStats& a, const SampleStats& b) {
    const double se = std::hypot(a.se, b.se);
    return se > 0.0 ? std::abs(a.mean - b.mean) / se : (a.mean == b.mean ? 0.0 : INFINITY);
}

/// Two-sample Kolmogorov–Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
    if (a.empty() || b.empty()) throw ContractError("ks_statistic: empty sample");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

/// out[i] = fn(i) for i < n on up to `workers` threads. Results land by
/// index, so the output does not depend on the worker count. The first
/// exception (lowest index) is rethrown.
template <class R>
std::vector<R> parallel_map(std::size_t n, unsigned workers, const std::function<R(std::size_t)>& fn) {
    std::vector<R> out(n);
    if (workers <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::size_t failed_at = n;
    std::exception_ptr failure;
    auto work = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(mu);
                if (i < failed_at) {
                    failed_at = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> pool;
    const unsigned w = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    for (unsigned k = 0; k < w; ++k) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return out;
}

}  // namespace ltsi
