#pragma once

// Counter-based normal variates: Philox4x64-10 keyed by (seed, stream_id),
// mapped through Box–Muller.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

namespace ltsi {

/// Identifier written into run manifests.
inline constexpr const char* kRngAlgorithm = "philox4x64-10/box-muller/v1";

using PhiloxCounter = std::array<std::uint64_t, 4>;
using PhiloxKey = std::array<std::uint64_t, 2>;

namespace detail {

inline void mulhilo64(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(p >> 64);
    lo = static_cast<std::uint64_t>(p);
}

}  // namespace detail

/// Ten-round Philox 4x64 bijection, as in Random123.
inline PhiloxCounter philox4x64(PhiloxCounter ctr, PhiloxKey key) {
    constexpr std::uint64_t m0 = 0xD2E7470EE14C6C93ULL;
    constexpr std::uint64_t m1 = 0xCA5A826395121157ULL;
    constexpr std::uint64_t w0 = 0x9E3779B97F4A7C15ULL;
    constexpr std::uint64_t w1 = 0xBB67AE8584CAA73BULL;
    for (int r = 0; r < 10; ++r) {
        if (r > 0) {
            key[0] += w0;
            key[1] += w1;
        }
        std::uint64_t hi0, lo0, hi1, lo1;
        detail::mulhilo64(m0, ctr[0], hi0, lo0);
        detail::mulhilo64(m1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

/// 53-bit uniform on (0,1].
inline double uniform_from_bits(std::uint64_t w) {
    return (static_cast<double>(w >> 11) + 1.0) * 0x1.0p-53;
}

/// Well-known sub-stream tags, placed in the second counter word.
enum class RngDomain : std::uint64_t {
    increments = 0,
    oracle = 1,
    auxiliary = 2,
};

/// One reproducible stream of variates. Variate i of a domain depends only
/// on (seed, stream_id, domain, i).
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_(stream_id) {}

    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
    [[nodiscard]] std::uint64_t stream_id() const noexcept { return stream_; }

    [[nodiscard]] PhiloxCounter block(std::uint64_t index, RngDomain domain = RngDomain::increments) const {
        return philox4x64({index, static_cast<std::uint64_t>(domain), 0, 0}, {seed_, stream_});
    }

    /// Standard normals number first .. first+out.size()-1. Block b yields
    /// four uniforms (u0,u1,u2,u3) and normals
    /// r0 cos(2πu1), r0 sin(2πu1), r2 cos(2πu3), r2 sin(2πu3), r = sqrt(-2 ln u).
    void normals(std::span<double> out, std::uint64_t first = 0,
                 RngDomain domain = RngDomain::increments) const {
        std::size_t k = 0;
        std::uint64_t i = first;
        while (k < out.size()) {
            const auto z = normal_block(i / 4, domain);
            for (auto slot = i % 4; slot < 4 && k < out.size(); ++slot, ++i, ++k) out[k] = z[slot];
        }
    }

    /// Uniforms on (0,1], one per 64-bit word, numbered like normals.
    void uniforms(std::span<double> out, std::uint64_t first = 0,
                  RngDomain domain = RngDomain::oracle) const {
        std::size_t k = 0;
        std::uint64_t i = first;
        while (k < out.size()) {
            const auto w = block(i / 4, domain);
            for (auto slot = i % 4; slot < 4 && k < out.size(); ++slot, ++i, ++k) {
                out[k] = uniform_from_bits(w[slot]);
            }
        }
    }

    [[nodiscard]] std::array<double, 4> normal_block(std::uint64_t index, RngDomain domain) const {
        const auto w = block(index, domain);
        const double r0 = std::sqrt(-2.0 * std::log(uniform_from_bits(w[0])));
        const double a0 = 2.0 * std::numbers::pi * uniform_from_bits(w[1]);
        const double r2 = std::sqrt(-2.0 * std::log(uniform_from_bits(w[2])));
        const double a2 = 2.0 * std::numbers::pi * uniform_from_bits(w[3]);
        return {r0 * std::cos(a0), r0 * std::sin(a0), r2 * std::cos(a2), r2 * std::sin(a2)};
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace ltsi
