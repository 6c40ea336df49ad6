#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "physcorrect/fft.hpp"
#include "physcorrect/field.hpp"
#include "physcorrect/grf.hpp"
#include "physcorrect/residuals.hpp"
#include "physcorrect/solvers.hpp"

namespace physcorrect {

enum class NoisePattern : std::uint8_t { Uncorrelated = 0, CorrelatedGrf = 1 };

inline const char* to_string(NoisePattern p) { return p == NoisePattern::Uncorrelated ? "uncorrelated" : "grf"; }

/// Corruption applied to a reference state. `level` is the exact relative L2
/// error of the corrupted state. The correlated spectrum is evaluated on a
/// unit-length domain with the same point count, so its correlation length
/// is the same fraction of the domain in 1D and 2D.
struct NoiseSpec {
    NoisePattern pattern = NoisePattern::Uncorrelated;
    double level = 0.0;
    GrfSpec correlated{1.0, 8.0, 4.0};
};

inline Field draw_noise(const Grid& grid, const NoiseSpec& spec, std::uint64_t seed) {
    if (spec.pattern == NoisePattern::Uncorrelated) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<double> normal(0.0, 1.0);
        std::vector<double> v(grid.size());
        for (double& x : v) x = normal(rng);
        return Field(grid, std::move(v));
    }
    const Grid unit(grid.ndim(), grid.n(), 1.0 / static_cast<double>(grid.n()));
    Field g = sample_grf(unit, spec.correlated, seed);
    return Field(grid, std::move(g).take_values());
}

/// ref_next + g * (level |ref_next| / |g|).
inline Field oracle_noise_predict(const Field& ref_next, const NoiseSpec& spec, std::uint64_t seed, std::size_t step) {
    if (!(spec.level >= 0.0)) throw ContractError("oracle_noise_predict: level must be non-negative");
    if (spec.level == 0.0) return ref_next;
    const double ref_norm = ref_next.l2_norm();
    if (ref_norm == 0.0) throw DegenerateInputError("oracle_noise_predict: zero reference cannot carry a relative error");
    const Field g = draw_noise(ref_next.grid(), spec, mix_seed(seed, step));
    const double g_norm = g.l2_norm();
    if (g_norm == 0.0) throw DegenerateInputError("oracle_noise_predict: drawn noise is identically zero");
    return combine(1.0, ref_next, spec.level * ref_norm / g_norm, g);
}

/// Degradation knobs of the coarse numerical surrogate.
struct SurrogateConfig {
    /// NS: advection modes with max(|p|,|q|) above this fraction of Nyquist are dropped.
    double ns_advection_cutoff = 0.03125;
    /// Wave: the Laplacian is scaled by (1 - wave_laplacian_error).
    double wave_laplacian_error = 1e-3;
    /// KS: integrating-factor RK4 with this many substeps per dt...
    int ks_substeps = 1;
    /// ...and nonlinear-term modes above this fraction of Nyquist dropped.
    double ks_mode_cutoff = 0.1;
};

/// Semi-implicit NS step with the high-wavenumber part of the advection
/// term removed.
inline Field ns_surrogate_step(const Field& psi_t, const NsParams& p, double cutoff) {
    const StateContext ctx = StateContext::ns(psi_t);
    const Field r0 = ns_residual(ctx, Field(p.grid), p);
    const Field advection = ns_advection_term(psi_t, vorticity_from_stream(psi_t));
    SpectralField s = fft_forward(r0);
    SpectralField a = fft_forward(advection);
    const JacobianSpec jac = ns_jacobian_symbol(p);
    const std::size_t n = p.grid.n();
    const double limit = cutoff * static_cast<double>(n / 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t k = i * n + j;
            const auto reach = static_cast<double>(std::max(std::abs(signed_mode(i, n)), std::abs(signed_mode(j, n))));
            if (reach > limit) s.coefficients[k] -= a.coefficients[k];
            s.coefficients[k] = k == 0 ? 0.0 : -s.coefficients[k] / jac.fourier_symbol[k];
        }
    return fft_inverse(std::move(s));
}

inline Field coarse_surrogate_predict(const StateContext& ctx, const ResidualModel& model,
                                      const SurrogateConfig& config = {}) {
    validate_context(ctx, model.kind(), model.grid(), "coarse_surrogate_predict");
    switch (model.kind()) {
        case PdeKind::NavierStokes: return ns_surrogate_step(ctx.current(), model.ns(), config.ns_advection_cutoff);
        case PdeKind::Wave: {
            const WaveParams& p = model.wave();
            const WaveParams degraded(p.grid, p.c * std::sqrt(1.0 - config.wave_laplacian_error), p.dt);
            return wave_implicit_step(ctx.levels[0], ctx.levels[1], degraded);
        }
        case PdeKind::KuramotoSivashinsky:
            return ks_exponential_step(ctx.current(), model.ks(), config.ks_substeps, config.ks_mode_cutoff);
    }
    throw ContractError("coarse_surrogate_predict: unknown kind");
}

/// Stored prediction for reference index `step`.
inline Field file_predict(const Trajectory& store, std::size_t step) {
    if (step >= store.states.size())
        throw std::out_of_range("file_predict: step " + std::to_string(step) + " beyond stored " +
                                std::to_string(store.states.size()) + " states");
    return store.states[step];
}

/// Stand-in for a learned one-step model. predict() receives the context and
/// the reference index of the state being predicted.
class Predictor {
public:
    struct OracleNoise {
        std::shared_ptr<const Trajectory> reference;
        NoiseSpec noise;
        std::uint64_t seed = 0;
    };
    struct CoarseSurrogate {
        ResidualModel model;
        SurrogateConfig config;
    };
    struct FromFile {
        std::shared_ptr<const Trajectory> store;
    };

    static Predictor oracle_noise(std::shared_ptr<const Trajectory> reference, NoiseSpec noise, std::uint64_t seed) {
        return Predictor(OracleNoise{std::move(reference), noise, seed});
    }
    static Predictor coarse(ResidualModel model, SurrogateConfig config = {}) {
        return Predictor(CoarseSurrogate{std::move(model), config});
    }
    static Predictor from_file(std::shared_ptr<const Trajectory> store) { return Predictor(FromFile{std::move(store)}); }

    Field predict(const StateContext& ctx, std::size_t target_index) const {
        return std::visit(
            [&](const auto& p) -> Field {
                using T = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<T, OracleNoise>) {
                    if (target_index >= p.reference->states.size())
                        throw std::out_of_range("oracle-noise predictor: reference too short");
                    return oracle_noise_predict(p.reference->states[target_index], p.noise, p.seed, target_index);
                } else if constexpr (std::is_same_v<T, CoarseSurrogate>) {
                    return coarse_surrogate_predict(ctx, p.model, p.config);
                } else {
                    return file_predict(*p.store, target_index);
                }
            },
            impl_);
    }

private:
    explicit Predictor(std::variant<OracleNoise, CoarseSurrogate, FromFile> impl) : impl_(std::move(impl)) {}
    std::variant<OracleNoise, CoarseSurrogate, FromFile> impl_;
};

}  // namespace physcorrect
