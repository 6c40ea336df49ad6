#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "physcorrect/blas_guard.hpp"
#include "physcorrect/dataset.hpp"
#include "physcorrect/io.hpp"
#include "physcorrect/rollout.hpp"

using namespace physcorrect;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[failed: " << what << "] ";
        }
    }
};

struct Criterion {
    int id;
    std::string name;
    double limit_seconds;
    std::function<void(Outcome&)> body;
};

double rel_max(const Field& got, const Field& want) {
    const double scale = std::max(want.linf_norm(), 1e-300);
    return oracle::max_abs_diff(got, want) / scale;
}

double abs_matrix(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want) {
    return (got - want).cwiseAbs().maxCoeff();
}

std::array<double, 4> spectral_mp_defects(const std::vector<std::complex<double>>& s,
                                          const std::vector<std::complex<double>>& p) {
    std::array<double, 4> worst{};
    double smax = 0.0, pmax = 0.0;
    for (std::size_t k = 0; k < s.size(); ++k) {
        smax = std::max(smax, std::abs(s[k]));
        pmax = std::max(pmax, std::abs(p[k]));
    }
    for (std::size_t k = 0; k < s.size(); ++k) {
        const auto sp = s[k] * p[k];
        const auto ps = p[k] * s[k];
        worst[0] = std::max(worst[0], std::abs(sp * s[k] - s[k]) / smax);
        worst[1] = std::max(worst[1], std::abs(ps * p[k] - p[k]) / pmax);
        worst[2] = std::max(worst[2], std::abs(sp - std::conj(sp)));
        worst[3] = std::max(worst[3], std::abs(ps - std::conj(ps)));
    }
    return worst;
}

double worst(const std::array<double, 4>& d) { return *std::max_element(d.begin(), d.end()); }

// 1 --------------------------------------------------------------------------
void operators(Outcome& o) {
    double lap = 0.0, cdiff = 0.0, spec = 0.0, poisson = 0.0, fft = 0.0;
    for (std::size_t n : {8u, 16u}) {
        const Grid g = Grid::periodic_2d(n, 1.0);
        const double h = g.delta();
        const double w = 2.0 * std::numbers::pi / static_cast<double>(n);
        for (long p = 0; p < static_cast<long>(n); ++p)
            for (long q = 0; q < static_cast<long>(n); ++q) {
                const double sp = std::sin(0.5 * w * static_cast<double>(p)), sq = std::sin(0.5 * w * static_cast<double>(q));
                const double lambda = -4.0 * (sp * sp + sq * sq) / (h * h);
                const double peak = 8.0 / (h * h);
                for (const Field& mode : {oracle::cos_mode(g, p, q), oracle::sin_mode(g, p, q)})
                    lap = std::max(lap, oracle::max_abs_diff(laplacian_5pt(mode), lambda * mode) / peak);
                // d/dx_j cos(w(p i + q j)) -> -sin(w q)/h sin(...) for the centred difference
                const double s1 = std::sin(w * static_cast<double>(q)) / h, s0 = std::sin(w * static_cast<double>(p)) / h;
                const double dpeak = 1.0 / h;
                cdiff = std::max(cdiff, oracle::max_abs_diff(central_diff(oracle::cos_mode(g, p, q), 1),
                                                             -s1 * oracle::sin_mode(g, p, q)) / dpeak);
                cdiff = std::max(cdiff, oracle::max_abs_diff(central_diff(oracle::sin_mode(g, p, q), 0),
                                                             s0 * oracle::cos_mode(g, p, q)) / dpeak);
            }
        const Field omega = oracle::random_field(g, n);
        const Field psi = poisson_solve_periodic(omega);
        poisson = std::max(poisson, rel_max(-1.0 * laplacian_5pt(psi), oracle::zero_mean(omega)));
        poisson = std::max(poisson, std::abs(psi.mean()));
        fft = std::max(fft, rel_max(fft_inverse(fft_forward(omega)), omega));

        const Grid g1 = Grid::periodic_1d(n, 2.0 * std::numbers::pi);
        for (long m = 0; m <= static_cast<long>(n / 2); ++m) {
            const double k = static_cast<double>(m);
            const bool nyquist = 2 * m == static_cast<long>(n);
            const Field c = oracle::cos_mode(g1, m), s = oracle::sin_mode(g1, m);
            const double peak4 = std::pow(static_cast<double>(n / 2), 4);
            const double d1 = nyquist ? 0.0 : k;
            spec = std::max(spec, oracle::max_abs_diff(spectral_derivative(c, 1), -d1 * s) / (n / 2.0));
            spec = std::max(spec, oracle::max_abs_diff(spectral_derivative(s, 1), d1 * c) / (n / 2.0));
            spec = std::max(spec, oracle::max_abs_diff(spectral_derivative(c, 2), -k * k * c) / (n * n / 4.0));
            spec = std::max(spec, oracle::max_abs_diff(spectral_derivative(c, 4), k * k * k * k * c) / peak4);
        }
    }
    o.detail << "laplacian " << lap << ", central diff " << cdiff << ", spectral " << spec << ", poisson " << poisson
             << ", fft " << fft << " ";
    o.require(lap <= 1e-10, "laplacian symbol");
    o.require(cdiff <= 1e-10, "central difference symbol");
    o.require(spec <= 1e-10, "spectral derivative symbol");
    o.require(poisson <= 1e-10, "poisson round trip");
    o.require(fft <= 1e-10, "fft round trip");
}

// 2 --------------------------------------------------------------------------
void jacobians(Outcome& o) {
    const NsParams np = NsParams::defaults(16);
    const ResidualModel ns(np);
    const Field psi = poisson_solve_periodic(sample_grf(np.grid, GrfSpec{}, 1));
    const StateContext nctx = StateContext::ns(psi);
    const Eigen::MatrixXd ns_fd =
        oracle::one_hot_jacobian([&](const Field& u) { return ns.residual(nctx, u); }, psi, 1e-3);
    const double ns_err = abs_matrix(oracle::multiplier_matrix(np.grid, ns.cached_jacobian().fourier_symbol), ns_fd);

    const WaveParams wp = WaveParams::defaults(16);
    const ResidualModel wave(wp);
    const StateContext wctx = StateContext::wave(oracle::random_field(wp.grid, 2), oracle::random_field(wp.grid, 3));
    const Field wu = oracle::random_field(wp.grid, 4);
    const Eigen::MatrixXd wave_fd =
        oracle::one_hot_jacobian([&](const Field& u) { return wave.residual(wctx, u); }, wu, 1e-3);
    const double wave_err =
        abs_matrix(oracle::multiplier_matrix(wp.grid, wave.cached_jacobian().fourier_symbol), wave_fd);

    const KsParams kp = KsParams::defaults(64);
    const Field v = ks_generate_spectral(sample_grf(kp.grid, GrfSpec{0.05, 1.0, 1.0}, 5), kp, 0,
                                        KsGeneratorConfig{4, 20.0}).states.front();
    const StateContext kctx = StateContext::ks(v);
    const Field vhat = ks_exponential_step(v, kp, 1, 0.1);
    const Eigen::MatrixXd semi_fd = oracle::one_hot_jacobian(
        [&](const Field& u) { return ks_residual(kctx, u, kp, KsResidualForm::SemiImplicit); }, vhat, 1e-3);
    const double semi_err =
        abs_matrix(oracle::multiplier_matrix(kp.grid, ks_jacobian_semi_implicit(kp).fourier_symbol), semi_fd);
    const Eigen::MatrixXd impl_fd = oracle::one_hot_jacobian(
        [&](const Field& u) { return ks_residual(kctx, u, kp, KsResidualForm::Implicit); }, vhat, 1e-3);
    const double impl_err = abs_matrix(ks_jacobian_implicit(kp, vhat), impl_fd);

    o.detail << "ns " << ns_err << ", wave " << wave_err << ", ks semi-implicit " << semi_err << ", ks implicit "
             << impl_err << " (max absolute entry difference) ";
    o.require(ns_err <= 1e-6, "ns symbol");
    o.require(wave_err <= 1e-6, "wave symbol");
    o.require(semi_err <= 1e-6, "ks semi-implicit symbol");
    o.require(impl_err <= 1e-6, "ks implicit matrix");
}

// 3 --------------------------------------------------------------------------
void pseudoinverse_identities(Outcome& o) {
    double random_worst = 0.0;
    std::mt19937_64 rng(42);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::MatrixXd a(12, 12);
        for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = nd(rng);
        if (trial % 4 == 3) a.col(5) = a.col(2) - 0.5 * a.col(7);
        random_worst = std::max(random_worst, worst(moore_penrose_defects(a, pseudoinverse_dense(a))));
    }
    double cache_worst = 0.0;
    double path_gap = 0.0;
    for (const ResidualModel& m : {ResidualModel(NsParams::defaults(16)), ResidualModel(WaveParams::defaults(16)),
                                   ResidualModel(KsParams::defaults(64))}) {
        const auto symbol = m.cached_jacobian().fourier_symbol;
        const JacobianCache dense = build_dense_cache(m);
        const JacobianCache spectral = build_spectral_cache(m);
        cache_worst = std::max(cache_worst, worst(moore_penrose_defects(oracle::multiplier_matrix(m.grid(), symbol),
                                                                        dense.dense_pinv)));
        cache_worst = std::max(cache_worst, worst(spectral_mp_defects(symbol, spectral.inverse_symbol)));
        if (m.kind() == PdeKind::KuramotoSivashinsky) continue;
        const Field base = sample_grf(m.grid(), GrfSpec{}, 6);
        const StateContext ctx = m.kind() == PdeKind::NavierStokes ? StateContext::ns(poisson_solve_periodic(base))
                                                                   : StateContext::wave(base, 0.99 * base);
        const Field u = oracle::random_field(m.grid(), 7, base.linf_norm());
        path_gap = std::max(path_gap, oracle::rel_l2(correct(dense, m, ctx, u).delta, correct(spectral, m, ctx, u).delta));
    }
    const KsParams kp = KsParams::defaults(64);
    const ResidualModel ks(kp);
    const Field v = oracle::random_field(kp.grid, 8);
    const JacobianCache per_state = build_dense_cache(ks, StateContext::ks(v), v);
    cache_worst = std::max(cache_worst, worst(moore_penrose_defects(ks_jacobian_implicit(kp, v), per_state.dense_pinv)));

    o.detail << "random 12x12 " << random_worst << ", caches " << cache_worst << ", dense vs spectral " << path_gap << " ";
    o.require(random_worst <= 1e-9, "random matrices");
    o.require(cache_worst <= 1e-9, "built caches");
    o.require(path_gap <= 1e-8, "dense vs spectral paths");
}

// 4 --------------------------------------------------------------------------
void wave_linear_exactness(Outcome& o) {
    DatasetConfig cfg;
    cfg.n = 64;
    cfg.steps = 20;
    const Trajectory ref = generate_trajectory(PdeKind::Wave, cfg, 3);
    const WaveParams p = wave_params(cfg);
    const ResidualModel m(p);
    const JacobianCache cache = build_spectral_cache(m);
    const std::size_t target = 10;
    const StateContext ctx = StateContext::wave(ref.states[target - 2], ref.states[target - 1]);
    std::vector<Field> corrected;
    double res = 0.0;
    for (NoisePattern pattern : {NoisePattern::Uncorrelated, NoisePattern::CorrelatedGrf})
        for (double level : {1e-3, 1e-1, 1.0}) {
            const Field pred = oracle_noise_predict(ref.states[target], {pattern, level}, 11, target);
            const Field u = correct(cache, m, ctx, pred).corrected(pred);
            res = std::max(res, m.residual(ctx, u).linf_norm());
            corrected.push_back(u);
        }
    double spread = 0.0;
    for (std::size_t a = 0; a < corrected.size(); ++a)
        for (std::size_t b = a + 1; b < corrected.size(); ++b)
            spread = std::max(spread, oracle::rel_l2(corrected[a], corrected[b]));
    const double bound = 1e-8 / (p.dt * p.dt);
    o.detail << "pairwise rel-L2 " << spread << ", residual Linf " << res << " (bound " << bound << ") ";
    o.require(spread <= 1e-8, "corrected states agree");
    o.require(res <= bound, "residual");
}

// 5 --------------------------------------------------------------------------
void ns_one_step_reduction(Outcome& o) {
    const NsParams p = NsParams::defaults(64);
    const ResidualModel m(p);
    const JacobianCache cache = build_spectral_cache(m);
    Field psi = poisson_solve_periodic(sample_grf(p.grid, GrfSpec{}, 1));
    double worst_ratio = 0.0;
    for (int s = 0; s < 50; ++s) {
        const StateContext ctx = StateContext::ns(psi);
        const Field pred = coarse_surrogate_predict(ctx, m);
        const Correction c = correct(cache, m, ctx, pred);
        const double before = m.residual(ctx, pred).l2_norm();
        const double after = m.residual(ctx, c.corrected(pred)).l2_norm();
        worst_ratio = std::max(worst_ratio, after / before);
        psi = c.corrected(pred);
    }
    o.detail << "worst corrected/baseline residual ratio over 50 steps " << worst_ratio << " ";
    o.require(worst_ratio <= 1e-4, "ratio");
}

// 6 --------------------------------------------------------------------------
void ns_rollout(Outcome& o) {
    DatasetConfig cfg;
    cfg.n = 64;
    cfg.steps = 200;
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 1);
    const ResidualModel m(ns_params(cfg));
    const Predictor pred = Predictor::coarse(m);
    const RolloutReport base = rollout(m, ref, pred, CorrectionStrategy::none(), 200).report;
    const RolloutReport corr = rollout(m, ref, pred, CorrectionStrategy::cached(), 200).report;
    const std::vector<Field> ref_res = reference_residuals(m, ref);
    double worst = 0.0;
    for (std::size_t s = 0; s < corr.records.size(); ++s) {
        const Field& rr = ref_res[s + 1];
        worst = std::max(worst, corr.records[s].residual / std::max(rr.l1_mean(), 1e-300));
    }
    o.detail << "final rel-L2 baseline " << base.final_error() << ", corrected " << corr.final_error()
             << "; max corrected/reference residual " << worst << " ";
    o.require(!corr.diverged(), "corrected rollout diverged");
    o.require(corr.final_error() <= 0.1 * base.final_error(), "final error ratio");
    o.require(worst <= 10.0, "residual vs reference");
}

// 7 --------------------------------------------------------------------------
void ks_stabilization(Outcome& o) {
    DatasetConfig cfg;
    cfg.n = 512;
    cfg.steps = 500;
    const Trajectory ref = generate_trajectory(PdeKind::KuramotoSivashinsky, cfg, 3);
    const KsParams p = ks_params(cfg);
    const UpdateFrequencyStudy s = update_frequency_study(ref, p, Predictor::coarse(ResidualModel(p)), 500, {3});
    const double every3 = s.every_k.front().second.final_error();
    o.detail << "final rel-L2 baseline " << s.baseline.final_error() << ", cached " << s.cached.final_error()
             << ", cached semi-implicit residual " << s.cached_semi_implicit_residual.final_error() << ", every-3 "
             << every3 << " ";
    o.require(s.cached.final_error() < s.baseline.final_error(), "cached beats baseline");
    o.require(s.cached.final_error() < s.cached_semi_implicit_residual.final_error(), "implicit residual ordering");
    o.require(every3 <= 1.2 * s.cached.final_error(), "every-3 vs cached");
}

// 8 --------------------------------------------------------------------------
void reference_subtraction(Outcome& o) {
    DatasetConfig cfg;
    cfg.n = 64;
    cfg.steps = 20;
    cfg.ns_solver = NsSolver::HighOrder;
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 2);
    const SubtractionStudy s = reference_subtraction_study(ref, ns_params(cfg));
    double plain = 0.0, sub = 0.0;
    for (const SubtractionStep& st : s.steps) {
        plain += st.plain_error;
        sub += st.subtracted_error;
    }
    o.detail << s.steps.size() << " steps, mean error plain " << plain / s.steps.size() << " subtracted "
             << sub / s.steps.size() << ", mean ratio " << s.mean_ratio() << " ";
    o.require(s.subtraction_wins_every_step(), "every step");
    o.require(s.mean_ratio() <= 0.5, "mean ratio");
}

// 9 --------------------------------------------------------------------------
void sensitivity(Outcome& o) {
    DatasetConfig cfg;
    cfg.n = 64;
    cfg.steps = 20;
    const Trajectory ns_ref = generate_trajectory(PdeKind::NavierStokes, cfg, 4);
    const ResidualModel ns(ns_params(cfg));
    DatasetConfig kcfg;
    kcfg.n = 512;
    kcfg.steps = 20;
    const Trajectory ks_ref = generate_trajectory(PdeKind::KuramotoSivashinsky, kcfg, 4);
    const ResidualModel ks(ks_params(kcfg));
    const SensitivityConfig sc;
    const SensitivityTable tables[] = {sensitivity_sweep(ns, ns_ref, sc, build_spectral_cache(ns)),
                                       sensitivity_sweep(ks, ks_ref, sc, build_spectral_cache(ks))};
    for (const SensitivityTable& t : tables)
        for (const SensitivityRow& r : t.rows) {
            if (r.level > 1e-1) continue;
            if (!(r.post_mean < r.level)) {
                std::ostringstream w;
                w << to_string(r.kind) << " " << to_string(r.pattern) << " level " << r.level << " post " << r.post_mean;
                o.require(false, w.str());
            }
        }
    const double lo = tables[1].at(NoisePattern::CorrelatedGrf, 1e-2).post_mean;
    const double hi = tables[1].at(NoisePattern::CorrelatedGrf, 1.0).post_mean;
    o.detail << "ns uncorrelated 1e-1 -> " << tables[0].at(NoisePattern::Uncorrelated, 1e-1).post_mean
             << ", ks grf 1e-2 -> " << lo << ", ks grf 1.0 -> " << hi << " (x" << hi / lo << ") ";
    o.require(hi >= 10.0 * lo, "ks correlated degradation");
}

// 10 -------------------------------------------------------------------------
void caching_benchmark(Outcome& o) {
    const CachingBenchmark b = bench_caching(64);
    o.detail << "build " << b.dense_build_seconds << " s, exact/cached-dense " << b.exact_over_cached_dense()
             << ", cached overhead " << b.spectral_overhead() << " (dense cache " << b.dense_overhead() << ") ";
    o.require(b.exact_over_cached_dense() >= 20.0, "exact vs cached ratio");
    o.require(b.dense_build_seconds <= 120.0, "build time");
    o.require(b.spectral_overhead() <= 0.5, "per-step overhead");
}

// 11 -------------------------------------------------------------------------
void scaling(Outcome& o) {
    const ScalingStudy s = scaling_study();
    bool memory_exact = s.rows.size() == 4;
    for (const ScalingRow& r : s.rows) memory_exact = memory_exact && r.error.empty() && r.dense_entries == r.points * r.points;
    o.detail << "dense slope " << s.dense_slope << " (spectral " << s.spectral_slope << "), memory N^2 "
             << (memory_exact ? "exact" : "mismatch") << " ";
    o.require(s.dense_slope >= 1.6 && s.dense_slope <= 2.4, "dense slope");
    o.require(memory_exact, "dense memory");
}

// 12 -------------------------------------------------------------------------
void formats(Outcome& o) {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "physcorrect_acceptance_formats";
    fs::remove_all(dir);
    fs::create_directories(dir);
    DatasetConfig cfg;
    cfg.n = 16;
    cfg.steps = 4;
    cfg.ks.warmup_time = 2.0;
    bool ok = true;
    for (PdeKind kind : {PdeKind::NavierStokes, PdeKind::Wave, PdeKind::KuramotoSivashinsky}) {
        const Trajectory t = generate_trajectory(kind, cfg, 9);
        write_trajectory(dir / "t.phct", t);
        const Bytes first = read_file(dir / "t.phct");
        write_trajectory(dir / "u.phct", read_trajectory(dir / "t.phct"));
        ok = ok && first == read_file(dir / "u.phct");
    }
    o.require(ok, "PHCT round trip");

    ok = true;
    for (const ResidualModel& m : {ResidualModel(NsParams::defaults(8)), ResidualModel(WaveParams::defaults(8)),
                                   ResidualModel(KsParams::defaults(16))})
        for (const JacobianCache& c : {build_spectral_cache(m), build_dense_cache(m)}) {
            write_cache(dir / "c.phjc", c);
            const Bytes first = read_file(dir / "c.phjc");
            write_cache(dir / "d.phjc", load_cache(dir / "c.phjc", m));
            ok = ok && first == read_file(dir / "d.phjc");
        }
    o.require(ok, "PHJC round trip");

    DatasetConfig rcfg;
    rcfg.n = 16;
    rcfg.steps = 8;
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, rcfg, 1);
    const ResidualModel m(ns_params(rcfg));
    const RolloutReport base = rollout(m, ref, Predictor::coarse(m), CorrectionStrategy::none(), 8).report;
    const RolloutReport corr = rollout(m, ref, Predictor::coarse(m), CorrectionStrategy::cached(), 8).report;
    const std::string report = format_report_csv(report_rows(base, corr));
    SensitivityConfig sc;
    sc.seeds = 2;
    const std::string sens = format_sensitivity_csv(sensitivity_sweep(m, ref, sc, build_spectral_cache(m)));
    o.require(format_report_csv(parse_report_csv(report)) == report, "report CSV round trip");
    o.require(format_sensitivity_csv(parse_sensitivity_csv(sens)) == sens, "sensitivity CSV round trip");

    int rejected = 0, attempts = 0;
    auto expect_reject = [&](const std::function<void()>& fn) {
        ++attempts;
        try {
            fn();
        } catch (const FormatError&) {
            ++rejected;
        }
    };
    const Bytes phct = encode_trajectory(ref);
    const Bytes phjc = encode_cache(build_spectral_cache(m));
    for (std::size_t at : {0u, 3u, 4u, 8u}) {
        Bytes bad = phct;
        bad[at] ^= 0x5A;
        expect_reject([&] { decode_trajectory(bad); });
        Bytes badc = phjc;
        badc[at] ^= 0x5A;
        expect_reject([&] { decode_cache(badc); });
    }
    expect_reject([&] { decode_trajectory(Bytes(phct.begin(), phct.begin() + 20)); });
    expect_reject([&] { decode_cache(Bytes(phjc.begin(), phjc.end() - 1)); });
    expect_reject([&] { parse_report_csv("step,time\n"); });
    expect_reject([&] { parse_sensitivity_csv("pde,pattern,level\n"); });
    o.detail << "round trips byte-identical, " << rejected << "/" << attempts << " corrupted inputs rejected ";
    o.require(rejected == attempts, "corruption rejection");
    fs::remove_all(dir);
}

}  // namespace

int main(int, char** argv) {
    restart_with_portable_blas_if_needed(argv);
    const std::vector<Criterion> criteria{
        {1, "operator correctness", 5.0, operators},
        {2, "Jacobian fidelity", 30.0, jacobians},
        {3, "pseudoinverse identities", 10.0, pseudoinverse_identities},
        {4, "wave linear exactness", 30.0, wave_linear_exactness},
        {5, "NS one-step residual reduction", 60.0, ns_one_step_reduction},
        {6, "NS rollout stabilization", 300.0, ns_rollout},
        {7, "KS stabilization", 600.0, ks_stabilization},
        {8, "reference-residual subtraction", 120.0, reference_subtraction},
        {9, "sensitivity curves", 300.0, sensitivity},
        {10, "caching benchmark", 300.0, caching_benchmark},
        {11, "scaling", 300.0, scaling},
        {12, "format round-trips", 5.0, formats},
    };
    int failures = 0;
    for (const Criterion& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body(o);
        } catch (const std::exception& e) {
            o.require(false, std::string("exception: ") + e.what());
        }
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (seconds > c.limit_seconds) {
            std::ostringstream w;
            w << "runtime over " << c.limit_seconds << " s";
            o.require(false, w.str());
        }
        if (!o.pass) ++failures;
        std::printf("%s  criterion %2d: %s | %s| %.2f s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(),
                    o.detail.str().c_str(), seconds);
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
