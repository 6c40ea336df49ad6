#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "physcorrect/fft.hpp"
#include "physcorrect/field.hpp"

namespace physcorrect {

/// Eigenvalue of the periodic 5-point Laplacian for mode (p, q).
inline double stencil_symbol_5pt(long p, long q, std::size_t n, double delta) {
    const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
    return (2.0 * std::cos(w * static_cast<double>(p)) + 2.0 * std::cos(w * static_cast<double>(q)) - 4.0) /
           (delta * delta);
}

/// Per-mode table of the 5-point Laplacian symbol in FFT index order.
inline std::vector<double> laplacian_5pt_symbols(const Grid& grid) {
    const std::size_t n = grid.n();
    std::vector<double> table(grid.size());
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
            table[p * n + q] = stencil_symbol_5pt(static_cast<long>(p), static_cast<long>(q), n, grid.delta());
    return table;
}

namespace detail {

/// Periodic neighbour offsets along one axis: next[i] = (i+1) mod n, prev[i] = (i-1) mod n.
struct PeriodicNeighbours {
    std::vector<std::size_t> next, prev;
    explicit PeriodicNeighbours(std::size_t n) : next(n), prev(n) {
        for (std::size_t i = 0; i < n; ++i) {
            next[i] = (i + 1) % n;
            prev[i] = (i + n - 1) % n;
        }
    }
};

/// Unscaled 5-point stencil sum of row-major n x n data into out.
inline void stencil_5pt(const double* v, double* out, std::size_t n, double scale) {
    const PeriodicNeighbours nb(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = v + i * n;
        const double* up = v + nb.next[i] * n;
        const double* down = v + nb.prev[i] * n;
        double* o = out + i * n;
        for (std::size_t j = 0; j < n; ++j)
            o[j] = (up[j] + down[j] + row[nb.next[j]] + row[nb.prev[j]] - 4.0 * row[j]) * scale;
    }
}

}  // namespace detail

inline Field laplacian_5pt(const Field& f) {
    require_ndim(f, 2, "laplacian_5pt");
    const double inv = 1.0 / (f.grid().delta() * f.grid().delta());
    std::vector<double> out(f.size());
    detail::stencil_5pt(f.values().data(), out.data(), f.grid().n(), inv);
    return Field(f.grid(), std::move(out));
}

/// (f[.+1] - f[.-1]) / (2 delta) along axis 0 (index i) or 1 (index j).
inline Field central_diff(const Field& f, int axis) {
    require_ndim(f, 2, "central_diff");
    if (axis != 0 && axis != 1) throw ContractError("central_diff: axis must be 0 or 1");
    const std::size_t n = f.grid().n();
    const double inv = 0.5 / f.grid().delta();
    const auto v = f.values();
    std::vector<double> out(f.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t ip = (i + 1) % n, im = (i + n - 1) % n;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jp = (j + 1) % n, jm = (j + n - 1) % n;
            out[i * n + j] = axis == 0 ? (v[ip * n + j] - v[im * n + j]) * inv
                                       : (v[i * n + jp] - v[i * n + jm]) * inv;
        }
    }
    return Field(f.grid(), std::move(out));
}

/// Multiplier table (ik)^order for a 1D grid, k = 2 pi m / length.
/// The Nyquist entry of odd orders is zero so the derivative of a real field stays real.
inline std::vector<std::complex<double>> spectral_derivative_symbols(const Grid& grid, int order) {
    if (grid.ndim() != 1) throw ContractError("spectral_derivative: 1D grids only");
    if (order != 1 && order != 2 && order != 4) throw ContractError("spectral_derivative: order must be 1, 2 or 4");
    const std::size_t n = grid.n();
    std::vector<std::complex<double>> table(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double k = 2.0 * std::numbers::pi * static_cast<double>(signed_mode(m, n)) / grid.length();
        if (order % 2 == 1 && 2 * m == n) {
            table[m] = 0.0;
            continue;
        }
        table[m] = std::pow(std::complex<double>(0.0, k), order);
    }
    return table;
}

inline Field spectral_derivative(const Field& f, int order) {
    require_ndim(f, 1, "spectral_derivative");
    return apply_fourier_multiplier(f, spectral_derivative_symbols(f.grid(), order));
}

/// Solves 5-point Laplacian(psi) = -(omega - mean(omega)) with zero-mean psi.
inline Field poisson_solve_periodic(const Field& omega) {
    require_ndim(omega, 2, "poisson_solve_periodic");
    const auto lambda = laplacian_5pt_symbols(omega.grid());
    SpectralField s = fft_forward(omega);
    s.coefficients[0] = 0.0;
    for (std::size_t k = 1; k < lambda.size(); ++k) s.coefficients[k] /= -lambda[k];
    return fft_inverse(std::move(s));
}

}  // namespace physcorrect
