#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace airx {

/// splitmix64 finalizer, used to derive independent substream seeds.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combine a base seed with a stream/index salt into a fresh seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(base ^ splitmix64(salt));
}

/// Deterministic random source. Distributions are implemented here rather
/// than with std:: distribution objects so that a given seed produces the
/// same stream under every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Requires n > 0.
    std::uint64_t integer(std::uint64_t n) {
        // Rejection-free for the sizes used here; bias is below 2^-53.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    /// Standard normal via Box-Muller.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    /// Circularly symmetric complex normal with total variance `variance`.
    std::complex<double> cnormal(double variance) {
        const double s = std::sqrt(variance * 0.5);
        const double re = s * normal();
        const double im = s * normal();
        return {re, im};
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace airx
