#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace y00lab {

/// A point of the complex plane: coherent-state amplitude or heterodyne outcome.
using Amplitude = std::complex<double>;

inline bool is_finite(Amplitude a) noexcept
{
    return std::isfinite(a.real()) && std::isfinite(a.imag());
}

inline void require_finite(Amplitude a, const char* what)
{
    if (!is_finite(a))
        throw std::invalid_argument(std::string(what) + ": non-finite amplitude");
}

/// Published stream separation constants. Changing any of these changes every
/// artifact produced by the lab.
namespace domain {
inline constexpr std::uint64_t basis = 0xB0;
inline constexpr std::uint64_t key = 0x4B;
inline constexpr std::uint64_t channel = 0xC4;
inline constexpr std::uint64_t ciphertext = 0xE5;
inline constexpr std::uint64_t decoy = 0xDE;
inline constexpr std::uint64_t monte_carlo = 0x3C;
} // namespace domain

inline constexpr std::uint64_t weyl_increment = 0x9E3779B97F4A7C15ULL;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Keyed counter PRF: output at `index` of the stream (seed, tag).
constexpr std::uint64_t prf(std::uint64_t seed, std::uint64_t tag,
                            std::uint64_t index) noexcept
{
    return mix64(seed ^ tag ^ (index * weyl_increment));
}

/// Counter-based random stream. Every draw is a pure function of
/// (seed, domain_tag, index); there is no internal state to advance.
struct RandomStream
{
    std::uint64_t seed = 0;
    std::uint64_t domain_tag = 0;

    constexpr std::uint64_t bits(std::uint64_t index) const noexcept
    {
        return prf(seed, domain_tag, index);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    constexpr double uniform01(std::uint64_t index) const noexcept
    {
        return static_cast<double>(bits(index) >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). Accepts the 64-bit modulo bias.
    constexpr std::uint64_t below(std::uint64_t index, std::uint64_t n) const noexcept
    {
        return bits(index) % n;
    }

    /// Complex Gaussian with E|g|^2 = 1 (variance 1/2 per quadrature), by
    /// Box-Muller from the uniforms at 2*index and 2*index+1.
    Amplitude unit_complex_gaussian(std::uint64_t index) const noexcept
    {
        const double u1 = uniform01(2 * index);
        const double u2 = uniform01(2 * index + 1);
        const double radius = std::sqrt(-std::log1p(-u1));
        const double phase = 2.0 * std::numbers::pi * u2;
        return {radius * std::cos(phase), radius * std::sin(phase)};
    }
};

/// Draw z ~ (1/pi) exp(-|z - alpha|^2).
inline Amplitude sample_heterodyne(Amplitude alpha, const RandomStream& stream,
                                   std::uint64_t index)
{
    require_finite(alpha, "sample_heterodyne");
    return alpha + stream.unit_complex_gaussian(index);
}

inline double heterodyne_pdf(Amplitude alpha, Amplitude z)
{
    return std::exp(-std::norm(z - alpha)) * std::numbers::inv_pi;
}

/// Probability mass of the heterodyne density inside a disc of radius r
/// around its mean.
inline double circle_mass(double r)
{
    if (!(r >= 0.0))
        throw std::invalid_argument("circle_mass: radius must be non-negative");
    return -std::expm1(-r * r);
}

/// 1 - circle_mass(r), without cancellation.
inline double circle_mass_complement(double r)
{
    if (!(r >= 0.0))
        throw std::invalid_argument("circle_mass_complement: radius must be non-negative");
    return std::exp(-r * r);
}

} // namespace y00lab
