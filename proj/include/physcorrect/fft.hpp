#pragma once

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "physcorrect/field.hpp"

namespace physcorrect {

namespace detail {

/// Process-wide FFTW plan table. Planning is serialised; execution through the
/// new-array interface is reentrant, so one plan serves every caller.
class FftPlans {
public:
    static FftPlans& instance() {
        static FftPlans plans;
        return plans;
    }

    enum class Kind { Complex, RealToComplex, ComplexToReal };

    /// Complex in-place plan; sign = FFTW_FORWARD or FFTW_BACKWARD.
    fftw_plan get(int ndim, std::size_t n, int sign) {
        return find_or_make(ndim, n, Kind::Complex, sign);
    }
    /// Out-of-place real transforms over the half spectrum (last axis n/2 + 1).
    fftw_plan get_real(int ndim, std::size_t n, Kind kind) { return find_or_make(ndim, n, kind, 0); }

    FftPlans(const FftPlans&) = delete;
    FftPlans& operator=(const FftPlans&) = delete;

private:
    fftw_plan find_or_make(int ndim, std::size_t n, Kind kind, int sign) {
        std::lock_guard lock(mutex_);
        const auto key = std::make_tuple(ndim, n, static_cast<int>(kind), sign);
        if (auto it = plans_.find(key); it != plans_.end()) return it->second;
        const std::size_t total = ndim == 1 ? n : n * n;
        const int ni = static_cast<int>(n);
        std::vector<std::complex<double>> scratch(total);
        std::vector<double> real(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = nullptr;
        switch (kind) {
            case Kind::Complex:
                plan = ndim == 1 ? fftw_plan_dft_1d(ni, buf, buf, sign, flags)
                                 : fftw_plan_dft_2d(ni, ni, buf, buf, sign, flags);
                break;
            case Kind::RealToComplex:
                plan = ndim == 1 ? fftw_plan_dft_r2c_1d(ni, real.data(), buf, flags)
                                 : fftw_plan_dft_r2c_2d(ni, ni, real.data(), buf, flags);
                break;
            case Kind::ComplexToReal:
                plan = ndim == 1 ? fftw_plan_dft_c2r_1d(ni, buf, real.data(), flags)
                                 : fftw_plan_dft_c2r_2d(ni, ni, buf, real.data(), flags);
                break;
        }
        plans_.emplace(key, plan);
        return plan;
    }

    FftPlans() = default;
    ~FftPlans() {
        for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::tuple<int, std::size_t, int, int>, fftw_plan> plans_;
};

/// In-place unnormalised transform. sign = FFTW_FORWARD or FFTW_BACKWARD.
inline void transform_inplace(const Grid& grid, std::vector<std::complex<double>>& data, int sign) {
    fftw_plan plan = FftPlans::instance().get(grid.ndim(), grid.n(), sign);
    auto* buf = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, buf, buf);
}

}  // namespace detail

inline SpectralField fft_forward(const Field& f) {
    std::vector<std::complex<double>> c(f.values().begin(), f.values().end());
    detail::transform_inplace(f.grid(), c, FFTW_FORWARD);
    return SpectralField{f.grid(), std::move(c)};
}

/// Inverse transform; the imaginary part (rounding residue for Hermitian
/// input) is discarded.
inline Field fft_inverse(SpectralField s) {
    detail::transform_inplace(s.grid, s.coefficients, FFTW_BACKWARD);
    const double scale = 1.0 / static_cast<double>(s.grid.size());
    std::vector<double> out(s.coefficients.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = s.coefficients[k].real() * scale;
    return Field(s.grid, std::move(out));
}

/// Multiplies every Fourier coefficient of f by a per-mode factor (the
/// diagonal action of a circulant operator) and returns the real part.
/// Only the Hermitian part (m(k) + conj(m(-k)))/2 of the table affects a real
/// result, so the work is done on the half spectrum.
inline Field apply_fourier_multiplier(const Field& f, const std::vector<std::complex<double>>& multiplier) {
    if (multiplier.size() != f.size()) throw ContractError("apply_fourier_multiplier: table size mismatch");
    const Grid& g = f.grid();
    const std::size_t n = g.n();
    const std::size_t half = n / 2 + 1;
    const std::size_t rows = g.ndim() == 1 ? 1 : n;
    auto& plans = detail::FftPlans::instance();
    using Kind = detail::FftPlans::Kind;

    std::vector<double> in(f.values().begin(), f.values().end());
    std::vector<std::complex<double>> spec(rows * half);
    fftw_execute_dft_r2c(plans.get_real(g.ndim(), n, Kind::RealToComplex), in.data(),
                         reinterpret_cast<fftw_complex*>(spec.data()));
    for (std::size_t i = 0; i < rows; ++i) {
        const std::size_t mi = (rows - i) % rows;
        for (std::size_t j = 0; j < half; ++j) {
            const std::size_t mj = (n - j) % n;
            const auto m = 0.5 * (multiplier[i * n + j] + std::conj(multiplier[mi * n + mj]));
            spec[i * half + j] *= m;
        }
    }
    fftw_execute_dft_c2r(plans.get_real(g.ndim(), n, Kind::ComplexToReal), reinterpret_cast<fftw_complex*>(spec.data()),
                         in.data());
    const double scale = 1.0 / static_cast<double>(g.size());
    for (double& v : in) v *= scale;
    return Field(g, std::move(in));
}

}  // namespace physcorrect
