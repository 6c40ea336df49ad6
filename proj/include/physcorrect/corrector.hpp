#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "physcorrect/fft.hpp"
#include "physcorrect/field.hpp"
#include "physcorrect/linalg.hpp"
#include "physcorrect/residuals.hpp"

namespace physcorrect {

/// Dense assembly is refused above this many matrix entries (8192^2).
inline constexpr std::size_t kDefaultDenseEntryCap = 8192ull * 8192ull;
inline constexpr double kDefaultTruncation = 1e-10;

enum class CacheRepresentation : std::uint8_t { Dense = 0, FourierDiagonal = 1 };

/// Precomputed pseudoinverse of a residual Jacobian.
struct JacobianCache {
    CacheRepresentation representation = CacheRepresentation::FourierDiagonal;
    Grid grid;
    Eigen::MatrixXd dense_pinv;                        // Dense
    std::vector<std::complex<double>> inverse_symbol;  // FourierDiagonal
    double truncation_tol = kDefaultTruncation;
    double build_seconds = 0.0;
    std::uint64_t params_hash = 0;
    std::size_t truncated = 0;

    /// A+ b
    Field apply(const Field& b) const {
        if (!(b.grid() == grid)) throw ContractError("JacobianCache::apply: field shape does not match cache grid");
        if (representation == CacheRepresentation::FourierDiagonal) return apply_fourier_multiplier(b, inverse_symbol);
        const auto n = static_cast<Eigen::Index>(b.size());
        const Eigen::Map<const Eigen::VectorXd> bv(b.values().data(), n);
        std::vector<double> out(b.size());
        Eigen::Map<Eigen::VectorXd>(out.data(), n).noalias() = dense_pinv * bv;
        return Field(grid, std::move(out));
    }

    /// Stored scalar entries (complex entries count twice).
    std::size_t memory_entries() const {
        return representation == CacheRepresentation::Dense ? static_cast<std::size_t>(dense_pinv.size())
                                                            : 2 * inverse_symbol.size();
    }
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

/// Dense matrix of a circulant operator given its Fourier symbol.
inline Eigen::MatrixXd circulant_matrix(const Grid& grid, const std::vector<std::complex<double>>& symbol) {
    SpectralField s{grid, symbol};
    transform_inplace(grid, s.coefficients, FFTW_BACKWARD);
    const std::size_t total = grid.size();
    std::vector<double> kernel(total);
    for (std::size_t k = 0; k < total; ++k) kernel[k] = s.coefficients[k].real() / static_cast<double>(total);

    const auto N = static_cast<Eigen::Index>(total);
    Eigen::MatrixXd m(N, N);
    const std::size_t n = grid.n();
    if (grid.ndim() == 1) {
        for (std::size_t c = 0; c < n; ++c)
            for (std::size_t r = 0; r < n; ++r) m(r, c) = kernel[(r + n - c) % n];
    } else {
        for (std::size_t ci = 0; ci < n; ++ci)
            for (std::size_t cj = 0; cj < n; ++cj) {
                const auto col = static_cast<Eigen::Index>(ci * n + cj);
                for (std::size_t ri = 0; ri < n; ++ri) {
                    const std::size_t di = (ri + n - ci) % n;
                    for (std::size_t rj = 0; rj < n; ++rj)
                        m(static_cast<Eigen::Index>(ri * n + rj), col) = kernel[di * n + (rj + n - cj) % n];
                }
            }
    }
    return m;
}

inline void check_dense_capacity(const Grid& grid, std::size_t cap) {
    const std::size_t entries = grid.size() * grid.size();
    if (entries > cap)
        throw CapacityError("dense Jacobian of " + std::to_string(grid.size()) + " points needs " +
                            std::to_string(entries) + " entries (cap " + std::to_string(cap) +
                            "); use the spectral cache path");
}

}  // namespace detail

/// Jacobian of the residual with respect to the prediction, by central
/// differences with eps = 1e-6 max(1, |u_hat|_inf). Generic fallback.
inline Eigen::MatrixXd assemble_dense_jacobian_fd(const ResidualModel& model, const StateContext& ctx,
                                                  const Field& u_hat, std::size_t cap = kDefaultDenseEntryCap) {
    detail::check_dense_capacity(model.grid(), cap);
    const std::size_t total = u_hat.size();
    const double eps = 1e-6 * std::max(1.0, u_hat.linf_norm());
    Eigen::MatrixXd jac(total, total);
    std::vector<double> probe(u_hat.values().begin(), u_hat.values().end());
    for (std::size_t j = 0; j < total; ++j) {
        const double saved = probe[j];
        probe[j] = saved + eps;
        const Field plus = model.residual(ctx, Field(u_hat.grid(), probe));
        probe[j] = saved - eps;
        const Field minus = model.residual(ctx, Field(u_hat.grid(), probe));
        probe[j] = saved;
        for (std::size_t i = 0; i < total; ++i)
            jac(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = (plus[i] - minus[i]) / (2.0 * eps);
    }
    return jac;
}

/// Analytic dense Jacobian: circulant from the symbol for affine residuals,
/// the state-dependent implicit form for the implicit KS residual.
inline Eigen::MatrixXd assemble_dense_jacobian(const ResidualModel& model, const StateContext& ctx,
                                               const Field& u_hat, std::size_t cap = kDefaultDenseEntryCap) {
    detail::check_dense_capacity(model.grid(), cap);
    validate_context(ctx, model.kind(), model.grid(), "assemble_dense_jacobian");
    if (!(u_hat.grid() == model.grid())) throw ContractError("assemble_dense_jacobian: prediction shape mismatch");
    if (model.jacobian_is_constant()) return detail::circulant_matrix(model.grid(), model.cached_jacobian().fourier_symbol);
    return ks_jacobian_implicit(model.ks(), u_hat);
}

/// FourierDiagonal cache: 1/symbol where |symbol| > rel_tol * max|symbol|, else 0.
inline JacobianCache pseudoinverse_spectral(const JacobianSpec& spec, double rel_tol = kDefaultTruncation) {
    if (spec.structure != JacobianStructure::ConstantCirculant)
        throw ContractError("pseudoinverse_spectral: Jacobian is not constant-circulant");
    const auto start = std::chrono::steady_clock::now();
    double peak = 0.0;
    for (const auto& s : spec.fourier_symbol) peak = std::max(peak, std::abs(s));
    JacobianCache cache{CacheRepresentation::FourierDiagonal, spec.grid, {}, {}, rel_tol, 0.0, 0, 0};
    cache.inverse_symbol.resize(spec.fourier_symbol.size());
    for (std::size_t k = 0; k < spec.fourier_symbol.size(); ++k) {
        const auto s = spec.fourier_symbol[k];
        if (std::abs(s) <= rel_tol * peak) {
            cache.inverse_symbol[k] = 0.0;
            ++cache.truncated;
        } else {
            cache.inverse_symbol[k] = 1.0 / s;
        }
    }
    cache.build_seconds = detail::seconds_since(start);
    return cache;
}

inline JacobianCache build_spectral_cache(const ResidualModel& model, double rel_tol = kDefaultTruncation) {
    JacobianCache cache = pseudoinverse_spectral(model.cached_jacobian(), rel_tol);
    cache.params_hash = model.params_hash();
    return cache;
}

/// Dense cache from the Jacobian at (ctx, u_hat). Build time includes assembly.
inline JacobianCache build_dense_cache(const ResidualModel& model, const StateContext& ctx, const Field& u_hat,
                                       double rel_tol = kDefaultTruncation, std::size_t cap = kDefaultDenseEntryCap) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::MatrixXd jac = assemble_dense_jacobian(model, ctx, u_hat, cap);
    PseudoinverseResult pinv = pseudoinverse_dense_full(jac, rel_tol);
    JacobianCache cache{CacheRepresentation::Dense, model.grid(), std::move(pinv.pinv), {}, rel_tol, 0.0,
                        model.params_hash(), pinv.truncated};
    cache.build_seconds = detail::seconds_since(start);
    return cache;
}

/// Dense cache of the model's cached (circulant) Jacobian; no state needed.
inline JacobianCache build_dense_cache(const ResidualModel& model, double rel_tol = kDefaultTruncation,
                                       std::size_t cap = kDefaultDenseEntryCap) {
    const auto start = std::chrono::steady_clock::now();
    detail::check_dense_capacity(model.grid(), cap);
    const Eigen::MatrixXd jac = detail::circulant_matrix(model.grid(), model.cached_jacobian().fourier_symbol);
    PseudoinverseResult pinv = pseudoinverse_dense_full(jac, rel_tol);
    JacobianCache cache{CacheRepresentation::Dense, model.grid(), std::move(pinv.pinv), {}, rel_tol, 0.0,
                        model.params_hash(), pinv.truncated};
    cache.build_seconds = detail::seconds_since(start);
    return cache;
}

// ---------------------------------------------------------------------------
// Correction
// ---------------------------------------------------------------------------

struct Correction {
    Field delta;
    double residual_before = 0.0;  // mean |r| at u_hat
    double residual_after = 0.0;   // mean |r| at u_hat + delta
    double solve_seconds = 0.0;    // residual evaluation + A+ b

    Field corrected(const Field& u_hat) const { return u_hat + delta; }
};

inline Field subtract_reference_residual(const Field& residual, const Field& ref_residual) {
    require_same_shape(residual, ref_residual, "subtract_reference_residual");
    return residual - ref_residual;
}

/// delta = A+ (-r(ctx, u_hat)), optionally with the reference residual
/// subtracted from r first. Inputs are not modified.
inline Correction correct(const JacobianCache& cache, const ResidualModel& model, const StateContext& ctx,
                          const Field& u_hat, const Field* reference_residual = nullptr) {
    if (!(cache.grid == model.grid())) throw ContractError("correct: cache grid does not match model grid");
    if (cache.params_hash != model.params_hash()) throw ContractError("correct: cache was built for different parameters");
    const auto start = std::chrono::steady_clock::now();
    Field r = model.residual(ctx, u_hat);
    const double before = r.l1_mean();
    if (reference_residual != nullptr) r = subtract_reference_residual(r, *reference_residual);
    Field delta = cache.apply(-1.0 * r);
    const double elapsed = detail::seconds_since(start);
    const double after = model.residual(ctx, u_hat + delta).l1_mean();
    return {std::move(delta), before, after, elapsed};
}

/// Uncached baseline: assemble the Jacobian at this state, pseudoinvert, apply.
inline Correction correct_exact(const ResidualModel& model, const StateContext& ctx, const Field& u_hat,
                                double rel_tol = kDefaultTruncation, std::size_t cap = kDefaultDenseEntryCap) {
    const auto start = std::chrono::steady_clock::now();
    const JacobianCache cache = build_dense_cache(model, ctx, u_hat, rel_tol, cap);
    Correction c = correct(cache, model, ctx, u_hat);
    c.solve_seconds = detail::seconds_since(start);
    return c;
}

// ---------------------------------------------------------------------------
// Update policies
// ---------------------------------------------------------------------------

struct CorrectionStrategy {
    enum class Mode { None, Cached, ExactPerStep, EveryK };
    Mode mode = Mode::None;
    int k = 1;
    bool subtract_reference_residual = false;

    static CorrectionStrategy none() { return {Mode::None, 1, false}; }
    static CorrectionStrategy cached() { return {Mode::Cached, 1, false}; }
    static CorrectionStrategy exact() { return {Mode::ExactPerStep, 1, false}; }
    static CorrectionStrategy every_k(int k) {
        if (k < 1) throw ContractError("CorrectionStrategy: k must be >= 1");
        return {Mode::EveryK, k, false};
    }
};

/// Per-rollout mutable cache holder. Cached mode reads the warm-up cache;
/// EveryK replaces it on its schedule. Never share between rollouts.
struct CacheSlot {
    std::optional<JacobianCache> cache;
    std::vector<std::size_t> rebuild_steps;
    double rel_tol = kDefaultTruncation;
    std::size_t dense_cap = kDefaultDenseEntryCap;
};

/// Applies one step of the strategy. Mode None returns a zero correction
/// with the residual of the raw prediction recorded in both norms.
inline Correction strategy_step(const CorrectionStrategy& strategy, std::size_t step_index, CacheSlot& slot,
                                const ResidualModel& model, const StateContext& ctx, const Field& u_hat,
                                const Field* reference_residual = nullptr) {
    const Field* ref = strategy.subtract_reference_residual ? reference_residual : nullptr;
    switch (strategy.mode) {
        case CorrectionStrategy::Mode::None: {
            const double r = model.residual(ctx, u_hat).l1_mean();
            return {Field(u_hat.grid()), r, r, 0.0};
        }
        case CorrectionStrategy::Mode::Cached:
            if (!slot.cache) throw ContractError("strategy_step: Cached mode needs a warm-up cache");
            return correct(*slot.cache, model, ctx, u_hat, ref);
        case CorrectionStrategy::Mode::ExactPerStep: {
            const auto start = std::chrono::steady_clock::now();
            const JacobianCache fresh = build_dense_cache(model, ctx, u_hat, slot.rel_tol, slot.dense_cap);
            Correction c = correct(fresh, model, ctx, u_hat, ref);
            c.solve_seconds = detail::seconds_since(start);
            return c;
        }
        case CorrectionStrategy::Mode::EveryK: {
            const auto start = std::chrono::steady_clock::now();
            if (step_index % static_cast<std::size_t>(strategy.k) == 0 || !slot.cache) {
                slot.cache = build_dense_cache(model, ctx, u_hat, slot.rel_tol, slot.dense_cap);
                slot.rebuild_steps.push_back(step_index);
            }
            Correction c = correct(*slot.cache, model, ctx, u_hat, ref);
            c.solve_seconds = detail::seconds_since(start);
            return c;
        }
    }
    throw ContractError("strategy_step: unknown mode");
}

}  // namespace physcorrect
