#include <gtest/gtest.h>

#include "oracles.hpp"
#include "physcorrect/dataset.hpp"
#include "physcorrect/rollout.hpp"

using namespace physcorrect;

namespace {

DatasetConfig small_config(std::size_t n, std::size_t steps) {
    DatasetConfig cfg;
    cfg.n = n;
    cfg.steps = steps;
    cfg.ks.warmup_time = 10.0;
    return cfg;
}

ResidualModel model_for(PdeKind kind, const DatasetConfig& cfg) {
    switch (kind) {
        case PdeKind::NavierStokes: return ResidualModel(ns_params(cfg));
        case PdeKind::Wave: return ResidualModel(wave_params(cfg));
        case PdeKind::KuramotoSivashinsky: return ResidualModel(ks_params(cfg));
    }
    throw std::logic_error("kind");
}

}  // namespace

TEST(RelativeL2, Examples) {
    const Grid g = Grid::periodic_2d(4, 1.0);
    const Field ref = Field::constant(g, 2.0);
    EXPECT_DOUBLE_EQ(relative_l2(ref, ref), 0.0);
    EXPECT_DOUBLE_EQ(relative_l2(Field::constant(g, 3.0), ref), 0.5);
    EXPECT_DOUBLE_EQ(relative_l2(Field(g), ref), 1.0);
    EXPECT_THROW(relative_l2(ref, Field(g)), DegenerateInputError);
    EXPECT_THROW(relative_l2(ref, Field(Grid::periodic_2d(8, 1.0))), ContractError);
}

TEST(Rollout, PerfectPredictorStaysOnTheReference) {
    for (PdeKind kind : {PdeKind::NavierStokes, PdeKind::Wave, PdeKind::KuramotoSivashinsky}) {
        const DatasetConfig cfg = small_config(kind == PdeKind::KuramotoSivashinsky ? 64 : 16, 12);
        auto ref = std::make_shared<Trajectory>(generate_trajectory(kind, cfg, 1));
        const ResidualModel m = model_for(kind, cfg);
        const Predictor perfect = Predictor::from_file(ref);
        const std::size_t steps = ref->states.size() - history_levels(kind);
        const RolloutResult r = rollout(m, *ref, perfect, CorrectionStrategy::none(), steps);
        ASSERT_EQ(r.report.records.size(), steps);
        for (const StepRecord& rec : r.report.records) EXPECT_EQ(rec.relative_l2, 0.0) << to_string(kind);
        EXPECT_FALSE(r.report.diverged());
        EXPECT_EQ(r.trajectory.states.size(), ref->states.size());
    }
}

TEST(Rollout, NoneReproducesTheRawPredictor) {
    const DatasetConfig cfg = small_config(16, 20);
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 2);
    const ResidualModel m(ns_params(cfg));
    const RolloutResult r = rollout(m, ref, Predictor::coarse(m), CorrectionStrategy::none(), 20);
    Field u = ref.states[0];
    for (std::size_t s = 0; s < 20; ++s) {
        u = coarse_surrogate_predict(StateContext::ns(u), m);
        EXPECT_EQ(oracle::max_abs_diff(r.trajectory.states[s + 1], u), 0.0);
        EXPECT_DOUBLE_EQ(r.report.records[s].relative_l2, oracle::rel_l2(u, ref.states[s + 1]));
    }
}

TEST(Rollout, DeterministicAcrossRuns) {
    const DatasetConfig cfg = small_config(16, 15);
    auto ref = std::make_shared<Trajectory>(generate_trajectory(PdeKind::Wave, cfg, 3));
    const ResidualModel m(wave_params(cfg));
    const Predictor p = Predictor::oracle_noise(ref, {NoisePattern::CorrelatedGrf, 0.05}, 4);
    const RolloutResult a = rollout(m, *ref, p, CorrectionStrategy::cached(), 13);
    const RolloutResult b = rollout(m, *ref, p, CorrectionStrategy::cached(), 13);
    for (std::size_t s = 0; s < 13; ++s) {
        EXPECT_EQ(a.report.records[s].relative_l2, b.report.records[s].relative_l2);
        EXPECT_EQ(a.report.records[s].residual, b.report.records[s].residual);
    }
}

TEST(Rollout, CorrectionDrivesTheNsResidualDown) {
    const DatasetConfig cfg = small_config(32, 50);
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 5);
    const ResidualModel m(ns_params(cfg));
    const Predictor p = Predictor::coarse(m);
    const RolloutResult base = rollout(m, ref, p, CorrectionStrategy::none(), 50);
    const RolloutResult corr = rollout(m, ref, p, CorrectionStrategy::cached(), 50);
    for (std::size_t s = 0; s < 50; ++s)
        EXPECT_LE(corr.report.records[s].residual, 1e-6 * base.report.records[s].residual);
    EXPECT_LT(corr.report.final_error(), 1e-6 * base.report.final_error());
}

TEST(Rollout, RejectsBadInputs) {
    const DatasetConfig cfg = small_config(16, 4);
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 6);
    const ResidualModel ns(ns_params(cfg));
    const ResidualModel wave(wave_params(cfg));
    EXPECT_THROW(rollout(ns, ref, Predictor::coarse(ns), CorrectionStrategy::none(), 5), ContractError);
    EXPECT_THROW(rollout(wave, ref, Predictor::coarse(wave), CorrectionStrategy::none(), 2), ContractError);
}

TEST(Rollout, DivergenceMarksTheRemainingSteps) {
    const DatasetConfig cfg = small_config(16, 6);
    auto ref = std::make_shared<Trajectory>(generate_trajectory(PdeKind::NavierStokes, cfg, 7));
    const ResidualModel m(ns_params(cfg));
    Trajectory junk = *ref;
    junk.states[3] = 1e4 * ref->states[3];
    const RolloutResult r =
        rollout(m, *ref, Predictor::from_file(std::make_shared<Trajectory>(junk)), CorrectionStrategy::none(), 6);
    ASSERT_EQ(r.report.records.size(), 6u);
    EXPECT_EQ(r.report.divergence_step, std::optional<std::size_t>(2));
    EXPECT_FALSE(r.report.records[1].diverged);
    for (std::size_t s = 2; s < 6; ++s) EXPECT_TRUE(r.report.records[s].diverged);
    EXPECT_TRUE(std::isinf(r.report.final_error()));
    EXPECT_EQ(r.trajectory.states.size(), 3u);
}

TEST(Sensitivity, WaveCorrectionRecoversTheScheme) {
    const DatasetConfig cfg = small_config(16, 10);
    const Trajectory ref = generate_trajectory(PdeKind::Wave, cfg, 8);
    const ResidualModel m(wave_params(cfg));
    SensitivityConfig sc;
    sc.seeds = 3;
    const SensitivityTable t = sensitivity_sweep(m, ref, sc, build_spectral_cache(m));
    ASSERT_EQ(t.rows.size(), 8u);
    const std::size_t target = ref.states.size() / 2;
    const Field scheme = wave_implicit_step(ref.states[target - 2], ref.states[target - 1], wave_params(cfg));
    const double floor = oracle::rel_l2(scheme, ref.states[target]);
    for (const SensitivityRow& r : t.rows) EXPECT_NEAR(r.post_mean, floor, 1e-8 * std::max(1.0, r.level));
    EXPECT_THROW(t.at(NoisePattern::Uncorrelated, 0.5), std::out_of_range);
}

TEST(Sensitivity, NsPostErrorBelowPreError) {
    const DatasetConfig cfg = small_config(16, 10);
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 9);
    const ResidualModel m(ns_params(cfg));
    SensitivityConfig sc;
    sc.seeds = 3;
    const SensitivityTable t = sensitivity_sweep(m, ref, sc, build_spectral_cache(m));
    for (const SensitivityRow& r : t.rows) {
        EXPECT_LT(r.post_mean, r.level);
        EXPECT_GE(r.post_std, 0.0);
    }
}

TEST(Sensitivity, LevelValidation) {
    EXPECT_THROW(require_increasing_levels({}), ContractError);
    EXPECT_THROW(require_increasing_levels({0.1, 0.1}), ContractError);
    EXPECT_THROW(require_increasing_levels({0.1, 0.01}), ContractError);
    EXPECT_THROW(require_increasing_levels({-1.0}), ContractError);
    EXPECT_NO_THROW(require_increasing_levels({1e-3, 1.0}));
}

TEST(SubtractionStudy, SemiImplicitReferenceHasZeroResidual) {
    const DatasetConfig cfg = small_config(16, 10);
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 10);
    const SubtractionStudy s = reference_subtraction_study(ref, ns_params(cfg));
    ASSERT_EQ(s.steps.size(), 10u);
    for (const SubtractionStep& st : s.steps) {
        EXPECT_NEAR(st.subtracted_error, st.plain_error, 1e-10);
        EXPECT_LE(st.reference_residual, 1e-9 * st.prediction_residual);
    }
}

TEST(SubtractionStudy, SubtractionHelpsAgainstAHighOrderReference) {
    DatasetConfig cfg = small_config(32, 10);
    cfg.ns_solver = NsSolver::HighOrder;
    const Trajectory ref = generate_trajectory(PdeKind::NavierStokes, cfg, 11);
    const SubtractionStudy s = reference_subtraction_study(ref, ns_params(cfg));
    EXPECT_TRUE(s.subtraction_wins_every_step());
    EXPECT_LT(s.mean_ratio(), 1.0);
}

TEST(LogLogSlope, RecoversPowerLaws) {
    const std::vector<double> x{1, 2, 4, 8, 16};
    std::vector<double> y;
    for (double v : x) y.push_back(3.0 * v * v);
    EXPECT_NEAR(loglog_slope(x, y), 2.0, 1e-12);
    for (double& v : y) v = 0.5 * std::sqrt(v);
    EXPECT_NEAR(loglog_slope(x, y), 1.0, 1e-12);
}
