#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "physcorrect/fft.hpp"
#include "physcorrect/field.hpp"

namespace physcorrect {

/// Covariance sigma2 * (-Laplacian + tau^2)^(-alpha) on the periodic domain.
struct GrfSpec {
    double sigma2 = 512.0;  // 8^3
    double tau = 8.0;       // tau^2 = 64
    double alpha = 4.0;
};

/// Target standard deviation of the physical-space amplitude of Fourier mode
/// (p, q) (q ignored in 1D), using the continuum Laplacian symbol.
inline double grf_mode_scale(const Grid& grid, const GrfSpec& spec, long p, long q) {
    const double k2 = static_cast<double>(p * p + (grid.ndim() == 2 ? q * q : 0));
    const double lap = 4.0 * std::numbers::pi * std::numbers::pi * k2 / (grid.length() * grid.length());
    return std::sqrt(spec.sigma2) * std::pow(lap + spec.tau * spec.tau, -spec.alpha / 2.0);
}

/// Splitmix64 finaliser, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Draws u(x) = sum_k xi_k s_k exp(i k.x) with Hermitian standard complex
/// Gaussian xi_k, s_k from grf_mode_scale, and the mean mode removed. The
/// white noise is drawn in physical space and transformed, which yields
/// exactly such Hermitian coefficients.
inline Field sample_grf(const Grid& grid, const GrfSpec& spec, std::uint64_t seed) {
    if (!(spec.alpha > grid.ndim() / 2.0))
        throw ContractError("sample_grf: alpha must exceed ndim/2 for square-integrable samples");
    if (!(spec.sigma2 >= 0.0)) throw ContractError("sample_grf: sigma2 must be non-negative");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::complex<double>> c(grid.size());
    for (auto& v : c) v = normal(rng);
    detail::transform_inplace(grid, c, FFTW_FORWARD);

    // Forward transform of unit white noise has E|c|^2 = size; rescale so the
    // inverse (which divides by size) produces unit-variance xi_k.
    const std::size_t n = grid.n();
    const double root_size = std::sqrt(static_cast<double>(grid.size()));
    if (grid.ndim() == 1) {
        for (std::size_t m = 0; m < n; ++m) c[m] *= root_size * grf_mode_scale(grid, spec, signed_mode(m, n), 0);
    } else {
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = 0; q < n; ++q)
                c[p * n + q] *= root_size * grf_mode_scale(grid, spec, signed_mode(p, n), signed_mode(q, n));
    }
    c[0] = 0.0;
    return fft_inverse(SpectralField{grid, std::move(c)});
}

}  // namespace physcorrect
