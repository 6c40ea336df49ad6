#pragma once

#include <Eigen/Dense>

#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <variant>
#include <vector>

#include "physcorrect/field.hpp"
#include "physcorrect/fft.hpp"
#include "physcorrect/operators.hpp"

namespace physcorrect {

// ---------------------------------------------------------------------------
// Parameters
// ---------------------------------------------------------------------------

/// f(x, y) = 0.1 sin(2 pi (x + y)) + cos(2 pi (x + y))
inline Field kolmogorov_diagonal_forcing(const Grid& grid) {
    return Field::from_function(grid, [](double x, double y) {
        const double a = 2.0 * std::numbers::pi * (x + y);
        return 0.1 * std::sin(a) + std::cos(a);
    });
}

struct NsParams {
    Grid grid;
    double reynolds = 1000.0;
    double dt = 0.01;
    Field forcing;

    NsParams(const Grid& g, double re, double step, Field f)
        : grid(g), reynolds(re), dt(step), forcing(std::move(f)) {
        if (grid.ndim() != 2) throw ContractError("NsParams: 2D grid required");
        if (!(reynolds > 0.0)) throw ContractError("NsParams: reynolds must be positive");
        if (!(dt > 0.0)) throw ContractError("NsParams: dt must be positive");
        if (!(forcing.grid() == grid)) throw ContractError("NsParams: forcing shape does not match grid");
    }

    /// Unit square, Re = 1000, dt = 0.01, diagonal Kolmogorov forcing.
    static NsParams defaults(std::size_t n = 64, double dt = 0.01) {
        const Grid g = Grid::periodic_2d(n, 1.0);
        return NsParams(g, 1000.0, dt, kolmogorov_diagonal_forcing(g));
    }
};

struct WaveParams {
    Grid grid;
    double c = 1.0;
    double dt = 0.01;

    WaveParams(const Grid& g, double speed, double step) : grid(g), c(speed), dt(step) {
        if (grid.ndim() != 2) throw ContractError("WaveParams: 2D grid required");
        if (!(c > 0.0)) throw ContractError("WaveParams: c must be positive");
        if (!(dt > 0.0)) throw ContractError("WaveParams: dt must be positive");
    }

    static WaveParams defaults(std::size_t n = 64, double dt = 0.01) {
        return WaveParams(Grid::periodic_2d(n, 1.0), 1.0, dt);
    }
};

struct KsParams {
    Grid grid;
    double dt = 0.05;

    KsParams(const Grid& g, double step) : grid(g), dt(step) {
        if (grid.ndim() != 1) throw ContractError("KsParams: 1D grid required");
        if (!(dt > 0.0)) throw ContractError("KsParams: dt must be positive");
    }

    /// Domain [0, 64), 512 points (spacing 0.125), dt = 0.05.
    static KsParams defaults(std::size_t n = 512, double dt = 0.05) {
        return KsParams(Grid::periodic_1d(n, 64.0), dt);
    }
};

// ---------------------------------------------------------------------------
// State context and Jacobian description
// ---------------------------------------------------------------------------

/// Known time levels preceding the prediction, oldest first:
/// NS {psi_t}, wave {u_{t-1}, u_t}, KS {v_t}.
struct StateContext {
    PdeKind kind;
    std::vector<Field> levels;

    static StateContext ns(Field psi) { return {PdeKind::NavierStokes, {std::move(psi)}}; }
    static StateContext wave(Field prev, Field curr) {
        require_same_shape(prev, curr, "StateContext::wave");
        return {PdeKind::Wave, {std::move(prev), std::move(curr)}};
    }
    static StateContext ks(Field v) { return {PdeKind::KuramotoSivashinsky, {std::move(v)}}; }

    const Field& current() const { return levels.back(); }

    /// Context for the next step after accepting `next` as the new state.
    StateContext advanced(Field next) const {
        StateContext out{kind, levels};
        out.levels.erase(out.levels.begin());
        out.levels.push_back(std::move(next));
        return out;
    }
};

inline std::size_t history_levels(PdeKind kind) { return kind == PdeKind::Wave ? 2 : 1; }

inline void validate_context(const StateContext& ctx, PdeKind kind, const Grid& grid, const char* who) {
    if (ctx.kind != kind) throw ContractError(std::string(who) + ": context is for a different PDE");
    if (ctx.levels.size() != history_levels(kind))
        throw ContractError(std::string(who) + ": wrong number of history levels");
    for (const Field& f : ctx.levels)
        if (!(f.grid() == grid)) throw ContractError(std::string(who) + ": context shape does not match grid");
}

enum class JacobianStructure { ConstantCirculant, StateDependent };

struct JacobianSpec {
    JacobianStructure structure;
    Grid grid;
    /// Per-mode multiplier in FFT index order; empty for StateDependent.
    std::vector<std::complex<double>> fourier_symbol;
};

// ---------------------------------------------------------------------------
// Navier-Stokes (vorticity-streamfunction), semi-implicit
// ---------------------------------------------------------------------------

inline Field vorticity_from_stream(const Field& psi) { return -1.0 * laplacian_5pt(psi); }

/// Explicit advection contribution to the NS residual:
/// -[(psi_{i,j+1}-psi_{i,j-1})(w_{i+1,j}-w_{i-1,j}) - (psi_{i+1,j}-psi_{i-1,j})(w_{i,j+1}-w_{i,j-1})] / (4 delta^2).
inline Field ns_advection_term(const Field& psi, const Field& omega) {
    require_same_shape(psi, omega, "ns_advection_term");
    const std::size_t n = psi.grid().n();
    const double d = psi.grid().delta();
    const double scale = -1.0 / (4.0 * d * d);
    const detail::PeriodicNeighbours nb(n);
    const double* ps = psi.values().data();
    const double* w = omega.values().data();
    std::vector<double> out(psi.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double* p0 = ps + i * n;
        const double* pu = ps + nb.next[i] * n;
        const double* pd = ps + nb.prev[i] * n;
        const double* w0 = w + i * n;
        const double* wu = w + nb.next[i] * n;
        const double* wd = w + nb.prev[i] * n;
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t jp = nb.next[j], jm = nb.prev[j];
            out[i * n + j] = ((p0[jp] - p0[jm]) * (wu[j] - wd[j]) - (pu[j] - pd[j]) * (w0[jp] - w0[jm])) * scale;
        }
    }
    return Field(psi.grid(), std::move(out));
}

/// Per-point residual with implicit (averaged) diffusion and explicit
/// advection. Sign convention: right-hand side minus time derivative.
inline Field ns_residual(const StateContext& ctx, const Field& psi_hat, const NsParams& p) {
    validate_context(ctx, PdeKind::NavierStokes, p.grid, "ns_residual");
    require_same_shape(psi_hat, p.forcing, "ns_residual");
    const Field& psi = ctx.current();
    const std::size_t n = p.grid.n();
    const std::size_t total = p.grid.size();
    const double inv_d2 = 1.0 / (p.grid.delta() * p.grid.delta());
    const Field omega = vorticity_from_stream(psi);
    std::vector<double> omega_hat(total), sum(total), lap_sum(total);
    detail::stencil_5pt(psi_hat.values().data(), omega_hat.data(), n, -inv_d2);
    for (std::size_t k = 0; k < total; ++k) sum[k] = omega[k] + omega_hat[k];
    detail::stencil_5pt(sum.data(), lap_sum.data(), n, inv_d2);
    const Field advection = ns_advection_term(psi, omega);

    const double inv_dt = 1.0 / p.dt;
    const double visc = 0.5 / p.reynolds;
    std::vector<double> r(total);
    for (std::size_t k = 0; k < total; ++k)
        r[k] = (omega[k] - omega_hat[k]) * inv_dt + advection[k] + visc * lap_sum[k] + p.forcing[k];
    return Field(p.grid, std::move(r));
}

/// d r / d psi_hat = (1/dt) Lap - (0.5/Re) Lap^2 ; symbol lambda/dt - 0.5 lambda^2 / Re.
inline JacobianSpec ns_jacobian_symbol(const NsParams& p) {
    const auto lambda = laplacian_5pt_symbols(p.grid);
    std::vector<std::complex<double>> sym(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k)
        sym[k] = lambda[k] / p.dt - 0.5 * lambda[k] * lambda[k] / p.reynolds;
    return {JacobianStructure::ConstantCirculant, p.grid, std::move(sym)};
}

// ---------------------------------------------------------------------------
// Wave, implicit three-level scheme
// ---------------------------------------------------------------------------

inline Field wave_residual(const StateContext& ctx, const Field& u_hat, const WaveParams& p) {
    validate_context(ctx, PdeKind::Wave, p.grid, "wave_residual");
    if (!(u_hat.grid() == p.grid)) throw ContractError("wave_residual: prediction shape does not match grid");
    const Field& prev = ctx.levels[0];
    const Field& curr = ctx.levels[1];
    const Field lap_sum = laplacian_5pt(prev + curr + u_hat);
    const double inv_dt2 = 1.0 / (p.dt * p.dt);
    const double c2_3 = p.c * p.c / 3.0;
    std::vector<double> r(p.grid.size());
    for (std::size_t k = 0; k < r.size(); ++k)
        r[k] = (u_hat[k] + prev[k] - 2.0 * curr[k]) * inv_dt2 - c2_3 * lap_sum[k];
    return Field(p.grid, std::move(r));
}

/// Symbol 1/dt^2 - (c^2/3) lambda; strictly positive since lambda <= 0.
inline JacobianSpec wave_jacobian_symbol(const WaveParams& p) {
    const auto lambda = laplacian_5pt_symbols(p.grid);
    std::vector<std::complex<double>> sym(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) sym[k] = 1.0 / (p.dt * p.dt) - p.c * p.c / 3.0 * lambda[k];
    return {JacobianStructure::ConstantCirculant, p.grid, std::move(sym)};
}

// ---------------------------------------------------------------------------
// Kuramoto-Sivashinsky
// ---------------------------------------------------------------------------

/// How the nonlinear term v v_x enters the residual.
enum class KsResidualForm : std::uint8_t {
    /// Trapezoidal average over t and t+1 for every term.
    Implicit = 0,
    /// v v_x taken at time t only; the residual becomes affine in the prediction.
    SemiImplicit = 1,
};

namespace detail {

struct KsTerms {
    Field linear;     // v_xx + v_xxxx
    Field nonlinear;  // v v_x
};

inline KsTerms ks_terms(const Field& v) {
    SpectralField s = fft_forward(v);
    const auto d1 = spectral_derivative_symbols(v.grid(), 1);
    const auto d2 = spectral_derivative_symbols(v.grid(), 2);
    const auto d4 = spectral_derivative_symbols(v.grid(), 4);
    SpectralField sx{v.grid(), s.coefficients};
    SpectralField sl{v.grid(), std::move(s.coefficients)};
    for (std::size_t m = 0; m < d1.size(); ++m) {
        sx.coefficients[m] *= d1[m];
        sl.coefficients[m] *= d2[m] + d4[m];
    }
    const Field vx = fft_inverse(std::move(sx));
    std::vector<double> nl(v.size());
    for (std::size_t i = 0; i < nl.size(); ++i) nl[i] = v[i] * vx[i];
    return {fft_inverse(std::move(sl)), Field(v.grid(), std::move(nl))};
}

}  // namespace detail

inline Field ks_residual(const StateContext& ctx, const Field& v_hat, const KsParams& p,
                         KsResidualForm form = KsResidualForm::Implicit) {
    validate_context(ctx, PdeKind::KuramotoSivashinsky, p.grid, "ks_residual");
    if (!(v_hat.grid() == p.grid)) throw ContractError("ks_residual: prediction shape does not match grid");
    const Field& v = ctx.current();
    const auto now = detail::ks_terms(v);
    const auto next = detail::ks_terms(v_hat);
    const double inv_dt = 1.0 / p.dt;
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < r.size(); ++i) {
        const double nonlinear = form == KsResidualForm::Implicit ? 0.5 * (now.nonlinear[i] + next.nonlinear[i])
                                                                  : now.nonlinear[i];
        r[i] = (v_hat[i] - v[i]) * inv_dt + 0.5 * (now.linear[i] + next.linear[i]) + nonlinear;
    }
    return Field(p.grid, std::move(r));
}

/// Jacobian with the nonlinear term frozen: 1/dt + 0.5 (-k^2 + k^4).
inline JacobianSpec ks_jacobian_semi_implicit(const KsParams& p) {
    const auto d2 = spectral_derivative_symbols(p.grid, 2);
    const auto d4 = spectral_derivative_symbols(p.grid, 4);
    std::vector<std::complex<double>> sym(d2.size());
    for (std::size_t m = 0; m < sym.size(); ++m) sym[m] = 1.0 / p.dt + 0.5 * (d2[m] + d4[m]);
    return {JacobianStructure::ConstantCirculant, p.grid, std::move(sym)};
}

/// Dense spectral differentiation matrix: column j is the derivative of e_j.
inline Eigen::MatrixXd spectral_diff_matrix(const Grid& grid, int order) {
    const std::size_t n = grid.n();
    const auto sym = spectral_derivative_symbols(grid, order);
    Eigen::MatrixXd d(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        const Field col = apply_fourier_multiplier(Field(grid, std::move(e)), sym);
        for (std::size_t i = 0; i < n; ++i) d(i, j) = col[i];
    }
    return d;
}

/// Exact Jacobian of the implicit KS residual at v_hat:
/// I/dt + 0.5 (D2 + D4 + diag(D1 v_hat) + diag(v_hat) D1).
inline Eigen::MatrixXd ks_jacobian_implicit(const KsParams& p, const Field& v_hat) {
    if (!(v_hat.grid() == p.grid)) throw ContractError("ks_jacobian_implicit: prediction shape does not match grid");
    const std::size_t n = p.grid.n();
    const Eigen::MatrixXd d1 = spectral_diff_matrix(p.grid, 1);
    const Eigen::MatrixXd d2 = spectral_diff_matrix(p.grid, 2);
    const Eigen::MatrixXd d4 = spectral_diff_matrix(p.grid, 4);
    const Eigen::Map<const Eigen::VectorXd> v(v_hat.values().data(), static_cast<Eigen::Index>(n));
    const Eigen::VectorXd vx = d1 * v;
    Eigen::MatrixXd j = 0.5 * (d2 + d4);
    j += 0.5 * (v.asDiagonal() * d1);
    j.diagonal() += 0.5 * vx + Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), 1.0 / p.dt);
    return j;
}

// ---------------------------------------------------------------------------
// Model facade
// ---------------------------------------------------------------------------

struct KsModelParams {
    KsParams params;
    KsResidualForm form = KsResidualForm::Implicit;
};

/// One residual operator together with its Jacobian description. Immutable.
class ResidualModel {
public:
    explicit ResidualModel(NsParams p) : params_(std::move(p)) {}
    explicit ResidualModel(WaveParams p) : params_(std::move(p)) {}
    explicit ResidualModel(KsParams p, KsResidualForm form = KsResidualForm::Implicit)
        : params_(KsModelParams{std::move(p), form}) {}

    PdeKind kind() const {
        if (std::holds_alternative<NsParams>(params_)) return PdeKind::NavierStokes;
        if (std::holds_alternative<WaveParams>(params_)) return PdeKind::Wave;
        return PdeKind::KuramotoSivashinsky;
    }

    const Grid& grid() const {
        return std::visit(
            [](const auto& p) -> const Grid& {
                if constexpr (std::is_same_v<std::decay_t<decltype(p)>, KsModelParams>) return p.params.grid;
                else return p.grid;
            },
            params_);
    }

    double dt() const {
        return std::visit(
            [](const auto& p) {
                if constexpr (std::is_same_v<std::decay_t<decltype(p)>, KsModelParams>) return p.params.dt;
                else return p.dt;
            },
            params_);
    }

    const NsParams& ns() const { return std::get<NsParams>(params_); }
    const WaveParams& wave() const { return std::get<WaveParams>(params_); }
    const KsParams& ks() const { return std::get<KsModelParams>(params_).params; }
    KsResidualForm ks_form() const { return std::get<KsModelParams>(params_).form; }

    Field residual(const StateContext& ctx, const Field& prediction) const {
        switch (kind()) {
            case PdeKind::NavierStokes: return ns_residual(ctx, prediction, ns());
            case PdeKind::Wave: return wave_residual(ctx, prediction, wave());
            case PdeKind::KuramotoSivashinsky: return ks_residual(ctx, prediction, ks(), ks_form());
        }
        throw ContractError("ResidualModel: unknown kind");
    }

    /// Constant circulant Jacobian used for caching. For KS this is the
    /// semi-implicit approximation regardless of the residual form.
    JacobianSpec cached_jacobian() const {
        switch (kind()) {
            case PdeKind::NavierStokes: return ns_jacobian_symbol(ns());
            case PdeKind::Wave: return wave_jacobian_symbol(wave());
            case PdeKind::KuramotoSivashinsky: return ks_jacobian_semi_implicit(ks());
        }
        throw ContractError("ResidualModel: unknown kind");
    }

    /// True when the residual is affine in the prediction, so the cached
    /// Jacobian is exact.
    bool jacobian_is_constant() const {
        return kind() != PdeKind::KuramotoSivashinsky || ks_form() == KsResidualForm::SemiImplicit;
    }

    /// Hash of every parameter the Jacobian depends on (kind, grid, dt, Re or c).
    /// Forcing and the KS residual form are excluded: they do not change the
    /// cached operator.
    std::uint64_t params_hash() const {
        std::uint64_t h = 0xcbf29ce484222325ULL;
        auto mix = [&h](std::uint64_t x) {
            for (int b = 0; b < 8; ++b) {
                h ^= (x >> (8 * b)) & 0xFFu;
                h *= 0x100000001b3ULL;
            }
        };
        mix(static_cast<std::uint64_t>(kind()));
        mix(static_cast<std::uint64_t>(grid().ndim()));
        mix(grid().n());
        mix(std::bit_cast<std::uint64_t>(grid().delta()));
        mix(std::bit_cast<std::uint64_t>(dt()));
        if (kind() == PdeKind::NavierStokes) mix(std::bit_cast<std::uint64_t>(ns().reynolds));
        if (kind() == PdeKind::Wave) mix(std::bit_cast<std::uint64_t>(wave().c));
        return h;
    }

private:
    std::variant<NsParams, WaveParams, KsModelParams> params_;
};

}  // namespace physcorrect
