#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace frametuner {

/// Seeded PRNG for all library randomness: std::mt19937_64 for the uniform
/// stream (bit-exact across conforming implementations) with an explicit
/// Box-Muller transform for Gaussians, so normal variates do not depend on
/// the standard library's unspecified std::normal_distribution algorithm.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; u1 is shifted into (0, 1].
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * kPi * u2;
        spare_ = r * std::sin(angle);
        have_spare_ = true;
        return r * std::cos(angle);
    }

    template <class T>
    T gaussian_scalar() {
        if constexpr (std::is_same_v<T, std::complex<double>>) {
            const double re = gaussian();
            const double im = gaussian();
            return {re, im};
        } else {
            return gaussian();
        }
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace frametuner
