#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <vector>

#include "physcorrect/fft.hpp"
#include "physcorrect/field.hpp"
#include "physcorrect/operators.hpp"
#include "physcorrect/residuals.hpp"

namespace physcorrect {

enum class SolverId : std::uint16_t {
    External = 0,
    NsSemiImplicit = 1,
    NsPseudoSpectralRk4 = 2,
    WaveFd4Rk4 = 3,
    KsIntegratingFactorRk4 = 4,
};

/// Recorded states at a fixed interval. states[0] is the initial condition.
struct Trajectory {
    PdeKind kind;
    Grid grid;
    double dt;
    std::vector<Field> states;
    SolverId solver = SolverId::External;
    std::uint64_t seed = 0;
    double internal_dt = 0.0;  // not persisted

    void validate() const {
        if (!(dt > 0.0)) throw ContractError("Trajectory: dt must be positive");
        if (states.size() < 2) throw ContractError("Trajectory: at least two states required");
        for (const Field& f : states)
            if (!(f.grid() == grid)) throw ContractError("Trajectory: state shape does not match grid");
    }
};

namespace detail {

/// Solves J x = -r0 per Fourier mode, leaving modes with zero symbol at zero.
inline Field solve_circulant(const Field& r0, const std::vector<std::complex<double>>& symbol) {
    SpectralField s = fft_forward(r0);
    for (std::size_t k = 0; k < symbol.size(); ++k) {
        if (symbol[k] == 0.0) {
            s.coefficients[k] = 0.0;
            continue;
        }
        s.coefficients[k] = -s.coefficients[k] / symbol[k];
    }
    return fft_inverse(std::move(s));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Navier-Stokes
// ---------------------------------------------------------------------------

/// Exact zero of ns_residual: the residual is affine in the prediction, so the
/// step is one circulant solve of J psi = -r(psi_t, 0). The mean mode is the
/// stream-function gauge and is set to zero.
inline Field ns_step_semi_implicit(const Field& psi_t, const NsParams& p) {
    const StateContext ctx = StateContext::ns(psi_t);
    const Field r0 = ns_residual(ctx, Field(p.grid), p);
    const JacobianSpec jac = ns_jacobian_symbol(p);
    for (std::size_t k = 1; k < jac.fourier_symbol.size(); ++k)
        if (jac.fourier_symbol[k] == 0.0) throw NumericalError("ns_step_semi_implicit: singular non-mean mode");
    return detail::solve_circulant(r0, jac.fourier_symbol);
}

/// Pseudo-spectral RK4 for the vorticity equation with 2/3-rule dealiasing of
/// the advection term; `substeps` RK4 stages of dt/substeps per call.
inline Field ns_step_highorder(const Field& psi_t, const NsParams& p, int substeps = 4) {
    if (substeps < 2) throw ContractError("ns_step_highorder: substeps must be >= 2");
    require_ndim(psi_t, 2, "ns_step_highorder");
    require_same_shape(psi_t, p.forcing, "ns_step_highorder");

    const Grid& g = p.grid;
    const std::size_t n = g.n();
    const std::size_t total = g.size();
    const double two_pi_l = 2.0 * std::numbers::pi / g.length();
    std::vector<double> kx(total), ky(total), k2(total);
    std::vector<char> keep(total);
    const long cut = static_cast<long>(n) / 3;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) {
            const long ma = signed_mode(a, n), mb = signed_mode(b, n);
            const std::size_t k = a * n + b;
            // odd-derivative Nyquist entries vanish for real output
            kx[k] = 2 * a == n ? 0.0 : two_pi_l * static_cast<double>(ma);
            ky[k] = 2 * b == n ? 0.0 : two_pi_l * static_cast<double>(mb);
            k2[k] = two_pi_l * two_pi_l * static_cast<double>(ma * ma + mb * mb);
            keep[k] = std::abs(ma) <= cut && std::abs(mb) <= cut;
        }

    using Coeffs = std::vector<std::complex<double>>;
    const std::complex<double> I(0.0, 1.0);
    const double nu = 1.0 / p.reynolds;
    const Coeffs forcing_hat = fft_forward(p.forcing).coefficients;

    auto to_physical = [&](Coeffs c) {
        detail::transform_inplace(g, c, FFTW_BACKWARD);
        std::vector<double> out(total);
        for (std::size_t k = 0; k < total; ++k) out[k] = c[k].real() / static_cast<double>(total);
        return out;
    };

    auto rhs = [&](const Coeffs& w) {
        Coeffs psi_x(total), psi_y(total), w_x(total), w_y(total);
        for (std::size_t k = 0; k < total; ++k) {
            const std::complex<double> ps = k2[k] > 0.0 ? w[k] / k2[k] : 0.0;
            psi_x[k] = I * kx[k] * ps;
            psi_y[k] = I * ky[k] * ps;
            w_x[k] = I * kx[k] * w[k];
            w_y[k] = I * ky[k] * w[k];
        }
        const auto px = to_physical(std::move(psi_x));
        const auto py = to_physical(std::move(psi_y));
        const auto wx = to_physical(std::move(w_x));
        const auto wy = to_physical(std::move(w_y));
        Coeffs adv(total);
        for (std::size_t k = 0; k < total; ++k) adv[k] = -py[k] * wx[k] + px[k] * wy[k];
        detail::transform_inplace(g, adv, FFTW_FORWARD);
        Coeffs out(total);
        for (std::size_t k = 0; k < total; ++k)
            out[k] = (keep[k] ? adv[k] : 0.0) - nu * k2[k] * w[k] + forcing_hat[k];
        out[0] = 0.0;
        return out;
    };

    // omega = -Lap psi, spectrally
    Coeffs w = fft_forward(psi_t).coefficients;
    for (std::size_t k = 0; k < total; ++k) w[k] *= k2[k];

    const double h = p.dt / substeps;
    for (int s = 0; s < substeps; ++s) {
        const Coeffs k1 = rhs(w);
        Coeffs tmp(total);
        for (std::size_t k = 0; k < total; ++k) tmp[k] = w[k] + 0.5 * h * k1[k];
        const Coeffs k2c = rhs(tmp);
        for (std::size_t k = 0; k < total; ++k) tmp[k] = w[k] + 0.5 * h * k2c[k];
        const Coeffs k3 = rhs(tmp);
        for (std::size_t k = 0; k < total; ++k) tmp[k] = w[k] + h * k3[k];
        const Coeffs k4 = rhs(tmp);
        double peak = 0.0;
        for (std::size_t k = 0; k < total; ++k) {
            w[k] += h / 6.0 * (k1[k] + 2.0 * k2c[k] + 2.0 * k3[k] + k4[k]);
            peak = std::max(peak, std::abs(w[k]) / static_cast<double>(total));
        }
        if (!std::isfinite(peak) || peak > 1e6)
            throw DivergenceError("ns_step_highorder: vorticity magnitude exceeded 1e6", static_cast<std::size_t>(s));
    }

    Coeffs psi_hat(total);
    for (std::size_t k = 0; k < total; ++k) psi_hat[k] = k2[k] > 0.0 ? w[k] / k2[k] : 0.0;
    return fft_inverse(SpectralField{g, std::move(psi_hat)});
}

// ---------------------------------------------------------------------------
// Wave
// ---------------------------------------------------------------------------

inline Field wave_implicit_step(const Field& u_prev, const Field& u_curr, const WaveParams& p) {
    const StateContext ctx = StateContext::wave(u_prev, u_curr);
    const Field r0 = wave_residual(ctx, Field(p.grid), p);
    return detail::solve_circulant(r0, wave_jacobian_symbol(p).fourier_symbol);
}

/// Fourth-order periodic Laplacian, (-f[-2] + 16 f[-1] - 30 f + 16 f[+1] - f[+2]) / (12 delta^2) per axis.
inline std::vector<double> laplacian_4th(const std::vector<double>& v, std::size_t n, double delta) {
    std::vector<double> out(v.size());
    const double inv = 1.0 / (12.0 * delta * delta);
    auto w = [n](std::size_t i, long off) { return (i + n + static_cast<std::size_t>(off + 2 * static_cast<long>(n))) % n; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            const double c = v[i * n + j];
            const double xx = -v[w(i, -2) * n + j] + 16.0 * v[w(i, -1) * n + j] - 30.0 * c +
                              16.0 * v[w(i, 1) * n + j] - v[w(i, 2) * n + j];
            const double yy = -v[i * n + w(j, -2)] + 16.0 * v[i * n + w(j, -1)] - 30.0 * c +
                              16.0 * v[i * n + w(j, 1)] - v[i * n + w(j, 2)];
            out[i * n + j] = (xx + yy) * inv;
        }
    return out;
}

/// Integrates u_tt = c^2 Lap4 u from rest with classical RK4 on (u, u_t),
/// recording every `record_every` inner steps. Returns steps + 1 states.
inline Trajectory wave_generate_rk4(const Field& u0, const WaveParams& p, double inner_dt, int record_every,
                                    std::size_t steps) {
    require_ndim(u0, 2, "wave_generate_rk4");
    if (!(u0.grid() == p.grid)) throw ContractError("wave_generate_rk4: initial state shape does not match grid");
    if (record_every < 1) throw ContractError("wave_generate_rk4: record_every must be >= 1");
    if (std::abs(inner_dt * record_every - p.dt) > 1e-12 * p.dt)
        throw ContractError("wave_generate_rk4: inner_dt * record_every must equal dt");
    if (p.c * inner_dt / p.grid.delta() > 1.0) throw ContractError("wave_generate_rk4: CFL number c*dt/delta exceeds 1");

    const std::size_t n = p.grid.n();
    const double d = p.grid.delta();
    const double c2 = p.c * p.c;
    const std::size_t total = p.grid.size();
    std::vector<double> u(u0.values().begin(), u0.values().end());
    std::vector<double> v(total, 0.0);

    Trajectory traj{PdeKind::Wave, p.grid, p.dt, {u0}, SolverId::WaveFd4Rk4, 0, inner_dt};
    traj.states.reserve(steps + 1);
    std::vector<double> tu(total), tv(total);
    for (std::size_t rec = 0; rec < steps; ++rec) {
        for (int s = 0; s < record_every; ++s) {
            // (u, v)' = (v, c^2 L u)
            const auto a1 = laplacian_4th(u, n, d);
            for (std::size_t k = 0; k < total; ++k) { tu[k] = u[k] + 0.5 * inner_dt * v[k]; tv[k] = v[k] + 0.5 * inner_dt * c2 * a1[k]; }
            const std::vector<double> ku2 = tv;
            const auto a2 = laplacian_4th(tu, n, d);
            for (std::size_t k = 0; k < total; ++k) { tu[k] = u[k] + 0.5 * inner_dt * ku2[k]; tv[k] = v[k] + 0.5 * inner_dt * c2 * a2[k]; }
            const std::vector<double> ku3 = tv;
            const auto a3 = laplacian_4th(tu, n, d);
            for (std::size_t k = 0; k < total; ++k) { tu[k] = u[k] + inner_dt * ku3[k]; tv[k] = v[k] + inner_dt * c2 * a3[k]; }
            const std::vector<double> ku4 = tv;
            const auto a4 = laplacian_4th(tu, n, d);
            for (std::size_t k = 0; k < total; ++k) {
                u[k] += inner_dt / 6.0 * (v[k] + 2.0 * ku2[k] + 2.0 * ku3[k] + ku4[k]);
                v[k] += inner_dt / 6.0 * c2 * (a1[k] + 2.0 * a2[k] + 2.0 * a3[k] + a4[k]);
            }
        }
        traj.states.emplace_back(p.grid, u);
    }
    return traj;
}

// ---------------------------------------------------------------------------
// Kuramoto-Sivashinsky
// ---------------------------------------------------------------------------

/// One step of dt with the integrating-factor RK4 scheme: the linear part
/// k^2 - k^4 is integrated exactly, the nonlinear term -(v^2/2)_x explicitly
/// over `substeps` stages. Nonlinear-term modes above mode_cutoff * (n/2)
/// are discarded (1.0 keeps every mode).
inline Field ks_exponential_step(const Field& v, const KsParams& p, int substeps = 4, double mode_cutoff = 1.0) {
    require_ndim(v, 1, "ks_exponential_step");
    if (!(v.grid() == p.grid)) throw ContractError("ks_exponential_step: shape does not match grid");
    if (substeps < 1) throw ContractError("ks_exponential_step: substeps must be >= 1");

    const Grid& g = p.grid;
    const std::size_t n = g.n();
    const double h = p.dt / substeps;
    const auto d1 = spectral_derivative_symbols(g, 1);
    std::vector<double> e(n), e2(n);
    std::vector<std::complex<double>> nl_sym(n);
    for (std::size_t m = 0; m < n; ++m) {
        const double k = 2.0 * std::numbers::pi * static_cast<double>(signed_mode(m, n)) / g.length();
        const double lin = k * k - k * k * k * k;
        e[m] = std::exp(lin * h);
        e2[m] = std::exp(lin * h / 2.0);
        const bool kept = static_cast<double>(std::abs(signed_mode(m, n))) <= mode_cutoff * static_cast<double>(n / 2);
        nl_sym[m] = kept ? -0.5 * d1[m] : 0.0;
    }

    using Coeffs = std::vector<std::complex<double>>;
    auto nonlinear = [&](const Coeffs& vh) {
        Coeffs c = vh;
        detail::transform_inplace(g, c, FFTW_BACKWARD);
        for (auto& x : c) {
            const double r = x.real() / static_cast<double>(n);
            x = r * r;
        }
        detail::transform_inplace(g, c, FFTW_FORWARD);
        for (std::size_t m = 0; m < n; ++m) c[m] *= nl_sym[m];
        return c;
    };

    Coeffs vh = fft_forward(v).coefficients;
    Coeffs tmp(n);
    for (int s = 0; s < substeps; ++s) {
        const Coeffs k1 = nonlinear(vh);
        for (std::size_t m = 0; m < n; ++m) tmp[m] = e2[m] * (vh[m] + 0.5 * h * k1[m]);
        const Coeffs k2 = nonlinear(tmp);
        for (std::size_t m = 0; m < n; ++m) tmp[m] = e2[m] * vh[m] + 0.5 * h * k2[m];
        const Coeffs k3 = nonlinear(tmp);
        for (std::size_t m = 0; m < n; ++m) tmp[m] = e[m] * vh[m] + e2[m] * h * k3[m];
        const Coeffs k4 = nonlinear(tmp);
        for (std::size_t m = 0; m < n; ++m)
            vh[m] = e[m] * vh[m] + h / 6.0 * (e[m] * k1[m] + 2.0 * e2[m] * (k2[m] + k3[m]) + k4[m]);
    }
    Coeffs out = vh;
    detail::transform_inplace(g, out, FFTW_BACKWARD);
    std::vector<double> real(n);
    for (std::size_t i = 0; i < n; ++i) {
        real[i] = out[i].real() / static_cast<double>(n);
        if (!std::isfinite(real[i]) || std::abs(real[i]) > 1e4)
            throw DivergenceError("ks_exponential_step: |v| exceeded 1e4", 0);
    }
    return Field(g, std::move(real));
}

struct KsGeneratorConfig {
    int substeps = 4;
    double warmup_time = 50.0;
};

/// Warm-up to `warmup_time`, then records steps + 1 states at interval dt.
inline Trajectory ks_generate_spectral(const Field& v0, const KsParams& p, std::size_t steps,
                                       const KsGeneratorConfig& config = {}) {
    const auto warmup_steps = static_cast<std::size_t>(std::llround(config.warmup_time / p.dt));
    Field v = v0;
    std::size_t step = 0;
    try {
        for (; step < warmup_steps; ++step) v = ks_exponential_step(v, p, config.substeps);
        Trajectory traj{PdeKind::KuramotoSivashinsky, p.grid, p.dt, {v}, SolverId::KsIntegratingFactorRk4, 0,
                        p.dt / config.substeps};
        traj.states.reserve(steps + 1);
        for (std::size_t s = 0; s < steps; ++s, ++step) traj.states.push_back(ks_exponential_step(traj.states.back(), p, config.substeps));
        return traj;
    } catch (const DivergenceError&) {
        throw DivergenceError("ks_generate_spectral: |v| exceeded 1e4", step);
    }
}

/// Newton iteration on the implicit KS residual, starting from v_t.
inline Field ks_implicit_step(const Field& v_t, const KsParams& p, double tol = -1.0, int max_iterations = 50) {
    if (tol <= 0.0) tol = 1e-10 / p.dt;
    const StateContext ctx = StateContext::ks(v_t);
    Field v = v_t;
    double res = 0.0;
    for (int it = 0; it <= max_iterations; ++it) {
        const Field r = ks_residual(ctx, v, p, KsResidualForm::Implicit);
        res = r.linf_norm();
        if (res <= tol) return v;
        if (it == max_iterations) break;
        const Eigen::MatrixXd jac = ks_jacobian_implicit(p, v);
        const Eigen::Map<const Eigen::VectorXd> rv(r.values().data(), static_cast<Eigen::Index>(r.size()));
        const Eigen::VectorXd delta = jac.partialPivLu().solve(-rv);
        std::vector<double> next(v.size());
        for (std::size_t i = 0; i < next.size(); ++i) next[i] = v[i] + delta(static_cast<Eigen::Index>(i));
        v = Field(p.grid, std::move(next));
    }
    throw ConvergenceError("ks_implicit_step: Newton did not converge in " + std::to_string(max_iterations) +
                               " iterations",
                           res);
}

}  // namespace physcorrect
