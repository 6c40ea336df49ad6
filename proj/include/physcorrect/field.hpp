#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "physcorrect/errors.hpp"

namespace physcorrect {

enum class PdeKind : std::uint8_t { NavierStokes = 0, Wave = 1, KuramotoSivashinsky = 2 };

inline const char* to_string(PdeKind kind) {
    switch (kind) {
        case PdeKind::NavierStokes: return "ns";
        case PdeKind::Wave: return "wave";
        case PdeKind::KuramotoSivashinsky: return "ks";
    }
    return "?";
}

/// Uniform periodic grid in one or two dimensions. Every axis has the same
/// point count and spacing.
class Grid {
public:
    Grid(int ndim, std::size_t n, double delta) : ndim_(ndim), n_(n), delta_(delta) {
        if (ndim != 1 && ndim != 2) throw ContractError("Grid: ndim must be 1 or 2");
        if (n < 4) throw ContractError("Grid: need at least 4 points per axis");
        if (!(delta > 0.0) || !std::isfinite(delta)) throw ContractError("Grid: spacing must be positive");
        length_ = static_cast<double>(n) * delta;
    }

    static Grid periodic_1d(std::size_t n, double length) { return Grid(1, n, length / static_cast<double>(n)); }
    static Grid periodic_2d(std::size_t n, double length) { return Grid(2, n, length / static_cast<double>(n)); }

    int ndim() const noexcept { return ndim_; }
    std::size_t n() const noexcept { return n_; }
    double delta() const noexcept { return delta_; }
    double length() const noexcept { return length_; }
    std::size_t size() const noexcept { return ndim_ == 1 ? n_ : n_ * n_; }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.ndim_ == b.ndim_ && a.n_ == b.n_ && a.delta_ == b.delta_;
    }

    std::string describe() const {
        return std::to_string(ndim_) + "D n=" + std::to_string(n_) + " delta=" + std::to_string(delta_);
    }

private:
    int ndim_;
    std::size_t n_;
    double delta_;
    double length_;
};

/// Real samples on a Grid, row-major for 2D (index i*n + j, i along axis 0).
/// Values are finite; construction from non-finite data throws.
class Field {
public:
    explicit Field(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

    Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.size())
            throw ContractError("Field: value count " + std::to_string(values_.size()) +
                                " does not match grid " + grid_.describe());
        for (double v : values_)
            if (!std::isfinite(v)) throw NumericalError("Field: non-finite value");
    }

    /// Samples f(x) (1D) or f(x, y) (2D) at x_i = i*delta.
    template <typename Fn>
    static Field from_function(const Grid& grid, Fn&& fn) {
        std::vector<double> v(grid.size());
        const std::size_t n = grid.n();
        const double d = grid.delta();
        if constexpr (std::is_invocable_r_v<double, Fn, double>) {
            if (grid.ndim() != 1) throw ContractError("Field::from_function: 1D function on a 2D grid");
            for (std::size_t i = 0; i < n; ++i) v[i] = fn(static_cast<double>(i) * d);
        } else {
            if (grid.ndim() != 2) throw ContractError("Field::from_function: 2D function on a 1D grid");
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j)
                    v[i * n + j] = fn(static_cast<double>(i) * d, static_cast<double>(j) * d);
        }
        return Field(grid, std::move(v));
    }

    static Field constant(const Grid& grid, double c) { return Field(grid, std::vector<double>(grid.size(), c)); }

    const Grid& grid() const noexcept { return grid_; }
    std::span<const double> values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }

    double operator[](std::size_t k) const { return values_[k]; }
    double operator()(std::size_t i, std::size_t j) const { return values_[i * grid_.n() + j]; }

    /// Releases the buffer (the field is left empty).
    std::vector<double> take_values() && { return std::move(values_); }

    double l2_norm() const {
        double s = 0.0;
        for (double v : values_) s += v * v;
        return std::sqrt(s);
    }
    double linf_norm() const {
        double m = 0.0;
        for (double v : values_) m = std::max(m, std::abs(v));
        return m;
    }
    /// Mean absolute value; the resolution-independent residual scalar.
    double l1_mean() const {
        double s = 0.0;
        for (double v : values_) s += std::abs(v);
        return s / static_cast<double>(values_.size());
    }
    double mean() const {
        return std::accumulate(values_.begin(), values_.end(), 0.0) / static_cast<double>(values_.size());
    }

    bool same_shape(const Field& other) const noexcept { return grid_ == other.grid_; }

private:
    Grid grid_;
    std::vector<double> values_;
};

inline void require_same_shape(const Field& a, const Field& b, const char* who) {
    if (!a.same_shape(b))
        throw ContractError(std::string(who) + ": shape mismatch (" + a.grid().describe() + " vs " +
                            b.grid().describe() + ")");
}

inline void require_ndim(const Field& f, int ndim, const char* who) {
    if (f.grid().ndim() != ndim)
        throw ContractError(std::string(who) + ": expected a " + std::to_string(ndim) + "D field");
}

/// a*x + b*y
inline Field combine(double a, const Field& x, double b, const Field& y) {
    require_same_shape(x, y, "combine");
    std::vector<double> out(x.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = a * x[k] + b * y[k];
    return Field(x.grid(), std::move(out));
}

inline Field operator+(const Field& x, const Field& y) { return combine(1.0, x, 1.0, y); }
inline Field operator-(const Field& x, const Field& y) { return combine(1.0, x, -1.0, y); }
inline Field operator*(double a, const Field& x) {
    std::vector<double> out(x.values().begin(), x.values().end());
    for (double& v : out) v *= a;
    return Field(x.grid(), std::move(out));
}

/// Complex Fourier coefficients in the unnormalised forward convention:
/// C_m = sum_x f(x) exp(-2 pi i m x / n). The inverse divides by the point count.
struct SpectralField {
    Grid grid;
    std::vector<std::complex<double>> coefficients;
};

/// Signed mode number for FFT index m on an n-point axis; the Nyquist index
/// maps to +n/2.
inline long signed_mode(std::size_t m, std::size_t n) {
    return m <= n / 2 ? static_cast<long>(m) : static_cast<long>(m) - static_cast<long>(n);
}

}  // namespace physcorrect
