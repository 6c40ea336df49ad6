#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <optional>
#include <string>
#include <vector>

#include "physcorrect/corrector.hpp"
#include "physcorrect/predictors.hpp"
#include "physcorrect/residuals.hpp"
#include "physcorrect/solvers.hpp"

namespace physcorrect {

inline constexpr double kDivergenceThreshold = 1e3;

inline double relative_l2(const Field& pred, const Field& ref) {
    require_same_shape(pred, ref, "relative_l2");
    const double denom = ref.l2_norm();
    if (denom == 0.0) throw DegenerateInputError("relative_l2: reference has zero norm");
    return (pred - ref).l2_norm() / denom;
}

struct StepRecord {
    std::size_t step = 0;
    double time = 0.0;
    double relative_l2 = 0.0;
    double residual = 0.0;
    double prediction_seconds = 0.0;
    double correction_seconds = 0.0;
    bool diverged = false;
};

struct RolloutReport {
    std::vector<StepRecord> records;
    std::optional<std::size_t> divergence_step;
    std::vector<std::size_t> rebuild_steps;
    std::string divergence_reason;

    bool diverged() const { return divergence_step.has_value(); }
    double final_error() const {
        return records.empty() || records.back().diverged ? INFINITY : records.back().relative_l2;
    }
    double mean_error() const {
        if (records.empty()) return 0.0;
        double s = 0.0;
        for (const StepRecord& r : records) {
            if (r.diverged) return INFINITY;
            s += r.relative_l2;
        }
        return s / static_cast<double>(records.size());
    }
    double total_prediction_seconds() const {
        double s = 0.0;
        for (const StepRecord& r : records) s += r.prediction_seconds;
        return s;
    }
    double total_correction_seconds() const {
        double s = 0.0;
        for (const StepRecord& r : records) s += r.correction_seconds;
        return s;
    }
};

struct RolloutResult {
    RolloutReport report;
    Trajectory trajectory;
};

/// Index of the first predicted state: one history level for NS/KS, two for wave.
inline std::size_t first_target_index(PdeKind kind) { return history_levels(kind); }

inline StateContext initial_context(const Trajectory& reference) {
    if (reference.kind == PdeKind::Wave) return StateContext::wave(reference.states[0], reference.states[1]);
    if (reference.kind == PdeKind::NavierStokes) return StateContext::ns(reference.states[0]);
    return StateContext::ks(reference.states[0]);
}

/// Context made of reference states ending at `index`.
inline StateContext reference_context(const Trajectory& reference, std::size_t index) {
    if (reference.kind == PdeKind::Wave) {
        if (index == 0) throw ContractError("reference_context: wave needs two levels");
        return StateContext::wave(reference.states[index - 1], reference.states[index]);
    }
    if (reference.kind == PdeKind::NavierStokes) return StateContext::ns(reference.states[index]);
    return StateContext::ks(reference.states[index]);
}

/// Residual of each reference transition under the model's scheme, indexed by
/// the target state. Entries before the first target are zero fields.
inline std::vector<Field> reference_residuals(const ResidualModel& model, const Trajectory& reference) {
    std::vector<Field> out;
    out.reserve(reference.states.size());
    const std::size_t first = first_target_index(reference.kind);
    for (std::size_t i = 0; i < reference.states.size(); ++i) {
        if (i < first) out.emplace_back(reference.grid);
        else out.push_back(model.residual(reference_context(reference, i - 1), reference.states[i]));
    }
    return out;
}

/// Predictor-corrector loop. Each step predicts from the current corrected
/// state, applies the strategy and feeds the result forward. Errors against
/// the reference are recorded; divergence (relative L2 above 1e3 or a
/// numerical failure) ends the loop and marks the remaining records.
/// Cached mode uses `slot.cache` if present, otherwise the spectral cache.
inline RolloutResult rollout(const ResidualModel& model, const Trajectory& reference, const Predictor& predictor,
                             const CorrectionStrategy& strategy, std::size_t steps, CacheSlot slot = {}) {
    reference.validate();
    if (reference.kind != model.kind()) throw ContractError("rollout: reference kind does not match model");
    if (!(reference.grid == model.grid())) throw ContractError("rollout: reference grid does not match model");
    const std::size_t first = first_target_index(model.kind());
    if (reference.states.size() < first + steps)
        throw ContractError("rollout: reference has " + std::to_string(reference.states.size()) +
                            " states, need " + std::to_string(first + steps));
    if (strategy.mode == CorrectionStrategy::Mode::Cached && !slot.cache) slot.cache = build_spectral_cache(model);

    std::vector<Field> ref_residuals;
    if (strategy.subtract_reference_residual) ref_residuals = reference_residuals(model, reference);

    RolloutResult out{{}, Trajectory{model.kind(), model.grid(), reference.dt, {}, SolverId::External, reference.seed}};
    StateContext ctx = initial_context(reference);
    for (const Field& level : ctx.levels) out.trajectory.states.push_back(level);

    for (std::size_t s = 0; s < steps; ++s) {
        const std::size_t target = first + s;
        StepRecord rec;
        rec.step = s;
        rec.time = static_cast<double>(target) * reference.dt;
        try {
            const auto t0 = std::chrono::steady_clock::now();
            Field pred = predictor.predict(ctx, target);
            rec.prediction_seconds = detail::seconds_since(t0);
            const Field* ref_r = strategy.subtract_reference_residual ? &ref_residuals[target] : nullptr;
            Correction c = strategy_step(strategy, s, slot, model, ctx, pred, ref_r);
            rec.correction_seconds = c.solve_seconds;
            rec.residual = c.residual_after;
            Field next = strategy.mode == CorrectionStrategy::Mode::None ? std::move(pred) : c.corrected(pred);
            rec.relative_l2 = relative_l2(next, reference.states[target]);
            if (!std::isfinite(rec.relative_l2) || rec.relative_l2 > kDivergenceThreshold) {
                rec.diverged = true;
                out.report.divergence_reason = "relative L2 exceeded 1e3";
            } else {
                out.trajectory.states.push_back(next);
                ctx = ctx.advanced(std::move(next));
            }
        } catch (const DegenerateInputError&) {
            throw;
        } catch (const ContractError&) {
            throw;
        } catch (const std::exception& e) {
            rec.diverged = true;
            out.report.divergence_reason = e.what();
        }
        if (rec.diverged) {
            out.report.divergence_step = s;
            for (std::size_t rest = s; rest < steps; ++rest) {
                StepRecord d;
                d.step = rest;
                d.time = static_cast<double>(first + rest) * reference.dt;
                d.diverged = true;
                if (rest == s) {
                    d.prediction_seconds = rec.prediction_seconds;
                    d.correction_seconds = rec.correction_seconds;
                }
                out.report.records.push_back(d);
            }
            break;
        }
        out.report.records.push_back(rec);
    }
    out.report.rebuild_steps = slot.rebuild_steps;
    return out;
}

// ---------------------------------------------------------------------------
// Sensitivity
// ---------------------------------------------------------------------------

struct SensitivityRow {
    PdeKind kind;
    NoisePattern pattern;
    double level = 0.0;
    std::size_t seeds = 0;
    double post_mean = 0.0;
    double post_std = 0.0;
};

struct SensitivityTable {
    std::vector<SensitivityRow> rows;

    const SensitivityRow& at(NoisePattern pattern, double level) const {
        for (const SensitivityRow& r : rows)
            if (r.pattern == pattern && r.level == level) return r;
        throw std::out_of_range("SensitivityTable: no row for the requested pattern and level");
    }
};

struct SensitivityConfig {
    std::vector<double> levels{1e-3, 1e-2, 1e-1, 1.0};
    std::vector<NoisePattern> patterns{NoisePattern::Uncorrelated, NoisePattern::CorrelatedGrf};
    std::size_t seeds = 8;
    std::uint64_t base_seed = 0;
    /// Reference index of the corrupted state; defaults to the middle of the trajectory.
    std::optional<std::size_t> target_index;
};

inline void require_increasing_levels(const std::vector<double>& levels) {
    if (levels.empty()) throw ContractError("sensitivity: at least one level required");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0) || !std::isfinite(levels[i]))
            throw ContractError("sensitivity: levels must be positive");
        if (i > 0 && !(levels[i] > levels[i - 1]))
            throw ContractError("sensitivity: levels must be strictly increasing");
    }
}

/// Corrupts one reference state at each (pattern, level, seed), corrects it
/// once with the cached Jacobian and records the relative error of the
/// corrected state against the true state.
inline SensitivityTable sensitivity_sweep(const ResidualModel& model, const Trajectory& reference,
                                          const SensitivityConfig& config, const JacobianCache& cache) {
    reference.validate();
    require_increasing_levels(config.levels);
    if (config.seeds == 0) throw ContractError("sensitivity: seed count must be positive");
    const std::size_t first = first_target_index(model.kind());
    const std::size_t target = config.target_index.value_or(std::max(first, reference.states.size() / 2));
    if (target < first || target >= reference.states.size())
        throw ContractError("sensitivity: target index outside the reference");
    const StateContext ctx = reference_context(reference, target - 1);
    const Field& truth = reference.states[target];

    SensitivityTable table;
    for (NoisePattern pattern : config.patterns)
        for (double level : config.levels) {
            std::vector<double> post;
            for (std::size_t s = 0; s < config.seeds; ++s) {
                const NoiseSpec spec{pattern, level, NoiseSpec{}.correlated};
                const Field pred = oracle_noise_predict(truth, spec, mix_seed(config.base_seed, s), target);
                const Correction c = correct(cache, model, ctx, pred);
                post.push_back(relative_l2(c.corrected(pred), truth));
            }
            double mean = 0.0;
            for (double v : post) mean += v;
            mean /= static_cast<double>(post.size());
            double var = 0.0;
            for (double v : post) var += (v - mean) * (v - mean);
            const double sd = post.size() > 1 ? std::sqrt(var / static_cast<double>(post.size() - 1)) : 0.0;
            table.rows.push_back({model.kind(), pattern, level, config.seeds, mean, sd});
        }
    return table;
}

// ---------------------------------------------------------------------------
// Reference-residual subtraction
// ---------------------------------------------------------------------------

struct SubtractionStep {
    std::size_t step = 0;
    double plain_error = 0.0;
    double subtracted_error = 0.0;
    double reference_residual = 0.0;
    double prediction_residual = 0.0;
};

struct SubtractionStudy {
    std::vector<SubtractionStep> steps;

    double mean_ratio() const {
        double s = 0.0;
        for (const SubtractionStep& st : steps) s += st.subtracted_error / st.plain_error;
        return steps.empty() ? 0.0 : s / static_cast<double>(steps.size());
    }
    bool subtraction_wins_every_step() const {
        return std::all_of(steps.begin(), steps.end(),
                           [](const SubtractionStep& s) { return s.subtracted_error < s.plain_error; });
    }
};

/// One-step study along a reference: the surrogate predicts each next state
/// from the reference state, which is then corrected with and without the
/// reference's own residual subtracted.
inline SubtractionStudy reference_subtraction_study(const Trajectory& reference, const NsParams& p,
                                                    const SurrogateConfig& surrogate = {},
                                                    std::optional<JacobianCache> cache = std::nullopt) {
    reference.validate();
    if (reference.kind != PdeKind::NavierStokes) throw ContractError("reference_subtraction_study: NS only");
    const ResidualModel model(p);
    if (!cache) cache = build_spectral_cache(model);
    SubtractionStudy out;
    for (std::size_t t = 0; t + 1 < reference.states.size(); ++t) {
        const StateContext ctx = StateContext::ns(reference.states[t]);
        const Field& truth = reference.states[t + 1];
        const Field pred = coarse_surrogate_predict(ctx, model, surrogate);
        const Field ref_r = model.residual(ctx, truth);
        const Correction plain = correct(*cache, model, ctx, pred);
        const Correction sub = correct(*cache, model, ctx, pred, &ref_r);
        out.steps.push_back({t, relative_l2(plain.corrected(pred), truth), relative_l2(sub.corrected(pred), truth),
                             ref_r.l1_mean(), plain.residual_before});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timing studies
// ---------------------------------------------------------------------------

struct CachingBenchmark {
    std::size_t n = 0;
    std::size_t steps = 0;
    double dense_build_seconds = 0.0;
    double spectral_build_seconds = 0.0;
    double prediction_per_step = 0.0;
    double cached_dense_per_step = 0.0;
    double cached_spectral_per_step = 0.0;
    double exact_per_step = 0.0;
    std::size_t exact_steps_timed = 0;

    double exact_over_cached_dense() const { return exact_per_step / cached_dense_per_step; }
    double spectral_overhead() const { return cached_spectral_per_step / prediction_per_step; }
    double dense_overhead() const { return cached_dense_per_step / prediction_per_step; }
};

struct BenchConfig {
    std::size_t steps = 200;
    /// Exact-per-step corrections are expensive; time this many and average.
    std::size_t exact_steps = 1;
    std::uint64_t seed = 7;
    SurrogateConfig surrogate{};
};

/// Times cache construction and per-step correction cost along a semi-implicit
/// NS trajectory with coarse-surrogate predictions.
inline CachingBenchmark bench_caching(std::size_t n, const BenchConfig& config = {}) {
    const NsParams p = NsParams::defaults(n);
    const ResidualModel model(p);
    CachingBenchmark out;
    out.n = n;
    out.steps = config.steps;

    auto t0 = std::chrono::steady_clock::now();
    const JacobianCache dense = build_dense_cache(model);
    out.dense_build_seconds = detail::seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    const JacobianCache spectral = build_spectral_cache(model);
    out.spectral_build_seconds = detail::seconds_since(t0);

    Field psi = poisson_solve_periodic(sample_grf(p.grid, GrfSpec{}, config.seed));
    double predict = 0.0, cached_dense = 0.0, cached_spectral = 0.0, exact = 0.0;
    for (std::size_t s = 0; s < config.steps; ++s) {
        const StateContext ctx = StateContext::ns(psi);
        t0 = std::chrono::steady_clock::now();
        const Field pred = coarse_surrogate_predict(ctx, model, config.surrogate);
        predict += detail::seconds_since(t0);
        cached_dense += correct(dense, model, ctx, pred).solve_seconds;
        const Correction c = correct(spectral, model, ctx, pred);
        cached_spectral += c.solve_seconds;
        if (s < config.exact_steps) exact += correct_exact(model, ctx, pred).solve_seconds;
        psi = c.corrected(pred);
    }
    const auto steps = static_cast<double>(std::max<std::size_t>(config.steps, 1));
    out.prediction_per_step = predict / steps;
    out.cached_dense_per_step = cached_dense / steps;
    out.cached_spectral_per_step = cached_spectral / steps;
    out.exact_steps_timed = std::min(config.exact_steps, config.steps);
    out.exact_per_step = out.exact_steps_timed > 0 ? exact / static_cast<double>(out.exact_steps_timed) : 0.0;
    return out;
}

struct ScalingRow {
    std::size_t n = 0;
    std::size_t points = 0;
    std::size_t dense_entries = 0;
    double dense_seconds = 0.0;
    double spectral_seconds = 0.0;
    std::string error;
};

struct ScalingStudy {
    std::vector<ScalingRow> rows;
    double dense_slope = NAN;
    double spectral_slope = NAN;
};

/// Least-squares slope of log(y) against log(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw ContractError("loglog_slope: need at least two points");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(x.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxy += dx * (std::log(y[i]) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

struct ScalingConfig {
    std::vector<std::size_t> resolutions{16, 24, 32, 48};
    /// Each timing is the minimum over this many batches of matvecs.
    int repeats = 5;
    double min_batch_seconds = 0.05;
    std::size_t dense_cap = kDefaultDenseEntryCap;
};

namespace detail {

template <typename Fn>
double time_per_call(Fn&& fn, int repeats, double min_batch_seconds) {
    std::size_t calls = 1;
    for (;;) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < calls; ++i) fn();
        if (seconds_since(t0) >= min_batch_seconds || calls >= (std::size_t{1} << 24)) break;
        calls *= 2;
    }
    double best = INFINITY;
    for (int r = 0; r < repeats; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        for (std::size_t i = 0; i < calls; ++i) fn();
        best = std::min(best, seconds_since(t0) / static_cast<double>(calls));
    }
    return best;
}

}  // namespace detail

/// Cost of applying the cached pseudoinverse (dense and Fourier-diagonal) to
/// an NS residual across resolutions. Capacity failures are recorded per row.
inline ScalingStudy scaling_study(const ScalingConfig& config = {}) {
    ScalingStudy out;
    std::vector<double> pts, dense_t, spec_t;
    for (std::size_t n : config.resolutions) {
        ScalingRow row;
        row.n = n;
        row.points = n * n;
        try {
            const ResidualModel model(NsParams::defaults(n));
            const JacobianCache spectral = build_spectral_cache(model);
            const Field b = sample_grf(model.grid(), GrfSpec{}, 11);
            row.spectral_seconds = detail::time_per_call([&] { (void)spectral.apply(b); }, config.repeats,
                                                         config.min_batch_seconds);
            const JacobianCache dense = build_dense_cache(model, kDefaultTruncation, config.dense_cap);
            row.dense_entries = dense.memory_entries();
            row.dense_seconds = detail::time_per_call([&] { (void)dense.apply(b); }, config.repeats,
                                                      config.min_batch_seconds);
            pts.push_back(static_cast<double>(row.points));
            dense_t.push_back(row.dense_seconds);
            spec_t.push_back(row.spectral_seconds);
        } catch (const CapacityError& e) {
            row.error = e.what();
        }
        out.rows.push_back(row);
    }
    if (pts.size() >= 2) {
        out.dense_slope = loglog_slope(pts, dense_t);
        out.spectral_slope = loglog_slope(pts, spec_t);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Jacobian update frequency (KS)
// ---------------------------------------------------------------------------

struct UpdateFrequencyStudy {
    RolloutReport baseline;
    RolloutReport cached;
    RolloutReport cached_semi_implicit_residual;
    std::vector<std::pair<int, RolloutReport>> every_k;

    double relative_gap(int k) const {
        for (const auto& [kk, rep] : every_k)
            if (kk == k) return std::abs(rep.final_error() - cached.final_error()) / cached.final_error();
        throw std::out_of_range("UpdateFrequencyStudy: k not run");
    }
};

/// KS rollouts under the cached semi-implicit Jacobian with the implicit
/// residual, periodic implicit-Jacobian rebuilds, and the cached Jacobian with
/// the semi-implicit residual.
inline UpdateFrequencyStudy update_frequency_study(const Trajectory& reference, const KsParams& p,
                                                   const Predictor& predictor, std::size_t steps,
                                                   const std::vector<int>& k_values = {3, 10}) {
    if (reference.kind != PdeKind::KuramotoSivashinsky) throw ContractError("update_frequency_study: KS only");
    const ResidualModel implicit(p, KsResidualForm::Implicit);
    const ResidualModel semi(p, KsResidualForm::SemiImplicit);
    UpdateFrequencyStudy out;
    out.baseline = rollout(implicit, reference, predictor, CorrectionStrategy::none(), steps).report;
    out.cached = rollout(implicit, reference, predictor, CorrectionStrategy::cached(), steps).report;
    out.cached_semi_implicit_residual = rollout(semi, reference, predictor, CorrectionStrategy::cached(), steps).report;
    for (int k : k_values)
        out.every_k.emplace_back(k, rollout(implicit, reference, predictor, CorrectionStrategy::every_k(k), steps).report);
    return out;
}

}  // namespace physcorrect
