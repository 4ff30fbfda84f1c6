#pragma once

// Counter-based random streams.
//
// Every random quantity in the library is drawn from an `Rng`, which is a
// Philox4x32-10 generator keyed by the 64-bit master seed.  Independent
// streams are addressed by a 64-bit stream id placed in the upper half of the
// 128-bit counter; the lower half counts blocks.  Stream ids are derived by
// hashing a path of labels and indices, e.g. ("betti", theta, replication),
// so a replication's numbers never depend on which thread runs it or on the
// order in which other replications are executed.
//
// The distributions below are implemented here rather than taken from
// <random> because the standard distributions are not required to produce
// the same values across library implementations.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <numbers>
#include <string_view>

namespace bettieq {

namespace detail {

inline void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo)
{
    const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
    hi = static_cast<std::uint32_t>(product >> 32);
    lo = static_cast<std::uint32_t>(product);
}

} // namespace detail

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds (Salmon et al., Random123).
inline PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key)
{
    constexpr std::uint32_t kM0 = 0xD2511F53u;
    constexpr std::uint32_t kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u;
    constexpr std::uint32_t kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        std::uint32_t hi0, lo0, hi1, lo1;
        detail::mulhilo32(kM0, ctr[0], hi0, lo0);
        detail::mulhilo32(kM1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kW0;
        key[1] += kW1;
    }
    return ctr;
}

/// SplitMix64 finalizer; used only to hash stream paths.
inline std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// FNV-1a, for turning labels into stream-path components.
inline std::uint64_t hash_label(std::string_view label)
{
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Combines path components into a stream id.  Order matters.
inline std::uint64_t stream_id(std::initializer_list<std::uint64_t> path)
{
    std::uint64_t h = 0x243F6A8885A308D3ull;
    for (std::uint64_t part : path)
        h = mix64(h ^ mix64(part));
    return h;
}

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_(stream)
    {
    }

    /// Stream `id` of the same master seed.
    Rng substream(std::uint64_t id) const { return Rng(seed(), stream_id({stream_, id})); }

    std::uint64_t seed() const { return (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0]; }
    std::uint64_t stream() const { return stream_; }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        if (buffered_ == 0) {
            const PhiloxCounter ctr{static_cast<std::uint32_t>(block_),
                                    static_cast<std::uint32_t>(block_ >> 32),
                                    static_cast<std::uint32_t>(stream_),
                                    static_cast<std::uint32_t>(stream_ >> 32)};
            buffer_ = philox4x32_10(ctr, key_);
            ++block_;
            buffered_ = 2;
        }
        const int base = (2 - buffered_) * 2;
        --buffered_;
        return (static_cast<std::uint64_t>(buffer_[base + 1]) << 32) | buffer_[base];
    }

    /// Uniform on the open interval (0, 1); never returns 0 or 1.
    double uniform()
    {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n)
    {
        // Lemire's multiply-shift with rejection of the biased low range.
        std::uint64_t x = (*this)();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                x = (*this)();
                m = static_cast<__uint128_t>(x) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    double sign() { return ((*this)() >> 63) ? -1.0 : 1.0; }

    double normal()
    {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double exponential() { return -std::log(uniform()); }

    /// Gamma(shape, scale) by Marsaglia-Tsang; shape < 1 uses
    /// Gamma(shape + 1) * U^(1/shape).
    double gamma(double shape, double scale = 1.0)
    {
        if (shape < 1.0) {
            const double g = gamma(shape + 1.0, 1.0);
            return scale * g * std::pow(uniform(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x)
                return scale * d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
                return scale * d * v;
        }
    }

private:
    PhiloxKey key_;
    std::uint64_t stream_;
    std::uint64_t block_ = 0;
    PhiloxCounter buffer_{};
    int buffered_ = 0;
};

/// Acceptance bookkeeping for rejection samplers.
struct RejectionStats {
    std::uint64_t proposals = 0;
    std::uint64_t accepted = 0;

    double acceptance_rate() const
    {
        return proposals == 0 ? 1.0 : static_cast<double>(accepted) / static_cast<double>(proposals);
    }

    RejectionStats& operator+=(const RejectionStats& other)
    {
        proposals += other.proposals;
        accepted += other.accepted;
        return *this;
    }
};

/// Von Mises(mu = 0, kappa) on (-pi, pi] by the Best-Fisher wrapped-Cauchy
/// envelope.
inline double von_mises(Rng& rng, double kappa, RejectionStats* stats = nullptr)
{
    constexpr double pi = std::numbers::pi;
    if (kappa < 1e-8) {
        if (stats) {
            ++stats->proposals;
            ++stats->accepted;
        }
        return rng.uniform(-pi, pi);
    }
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double r = (1.0 + rho * rho) / (2.0 * rho);
    for (;;) {
        const double u1 = rng.uniform();
        const double u2 = rng.uniform();
        const double u3 = rng.uniform();
        const double z = std::cos(pi * u1);
        const double f = (1.0 + r * z) / (r + z);
        const double c = kappa * (r - f);
        if (stats)
            ++stats->proposals;
        if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
            if (stats)
                ++stats->accepted;
            const double angle = std::acos(std::clamp(f, -1.0, 1.0));
            return u3 > 0.5 ? angle : -angle;
        }
    }
}

} // namespace bettieq
