#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "physcorrect/blas_guard.hpp"
#include "physcorrect/dataset.hpp"
#include "physcorrect/io.hpp"
#include "physcorrect/rollout.hpp"

namespace pc = physcorrect;

namespace {

const std::map<std::string, pc::PdeKind> kPdeNames{
    {"ns", pc::PdeKind::NavierStokes}, {"wave", pc::PdeKind::Wave}, {"ks", pc::PdeKind::KuramotoSivashinsky}};

struct ModelFlags {
    double reynolds = 1000.0;
    double wave_speed = 1.0;
    std::string ks_residual = "implicit";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--re", reynolds, "Reynolds number (ns)")->check(CLI::PositiveNumber);
        cmd->add_option("--c", wave_speed, "wave speed (wave)")->check(CLI::PositiveNumber);
        cmd->add_option("--ks-residual", ks_residual, "KS residual form")
            ->check(CLI::IsMember({"implicit", "semi-implicit"}));
    }

    pc::ResidualModel model(pc::PdeKind kind, const pc::Grid& grid, double dt) const {
        switch (kind) {
            case pc::PdeKind::NavierStokes:
                return pc::ResidualModel(pc::NsParams(grid, reynolds, dt, pc::kolmogorov_diagonal_forcing(grid)));
            case pc::PdeKind::Wave: return pc::ResidualModel(pc::WaveParams(grid, wave_speed, dt));
            case pc::PdeKind::KuramotoSivashinsky:
                return pc::ResidualModel(pc::KsParams(grid, dt), ks_residual == "implicit"
                                                                     ? pc::KsResidualForm::Implicit
                                                                     : pc::KsResidualForm::SemiImplicit);
        }
        throw pc::ContractError("unknown pde");
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path == "-") std::cout << text;
    else pc::write_file_atomic(path, text);
}

pc::Trajectory load_reference(const std::string& path, pc::PdeKind expected, std::optional<double> length) {
    pc::Trajectory traj = pc::read_trajectory(path, length);
    if (traj.kind != expected)
        throw CLI::ValidationError("--traj", path + " holds a " + pc::to_string(traj.kind) +
                                                 " trajectory but --pde is " + pc::to_string(expected));
    return traj;
}

}  // namespace

int main(int argc, char** argv) {
    pc::restart_with_portable_blas_if_needed(argv);

    CLI::App app{"Residual-based correction of next-step PDE predictions"};
    app.require_subcommand(1);

    pc::PdeKind pde = pc::PdeKind::NavierStokes;
    std::optional<double> length;
    auto add_pde = [&](CLI::App* cmd) {
        cmd->add_option("--pde", pde, "ns | wave | ks")
            ->required()
            ->transform(CLI::CheckedTransformer(kPdeNames, CLI::ignore_case));
    };
    auto add_length = [&](CLI::App* cmd) {
        cmd->add_option("--length", length, "domain length per axis (default: 1 for ns/wave, 64 for ks)")
            ->check(CLI::PositiveNumber);
    };

    // generate ---------------------------------------------------------------
    auto* gen = app.add_subcommand("generate", "simulate reference trajectories");
    pc::DatasetConfig gen_cfg;
    std::size_t gen_count = 1;
    std::uint64_t gen_seed = 0;
    std::string gen_out;
    std::optional<double> gen_dt;
    std::string gen_solver = "semi-implicit";
    add_pde(gen);
    add_length(gen);
    gen->add_option("--n", gen_cfg.n, "points per axis")->check(CLI::Range(4, 1 << 14));
    gen->add_option("--steps", gen_cfg.steps, "recorded steps after the initial state")->check(CLI::PositiveNumber);
    gen->add_option("--count", gen_count, "number of trajectories")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "base seed");
    gen->add_option("--out", gen_out, "output directory")->required();
    gen->add_option("--dt", gen_dt, "recording interval")->check(CLI::PositiveNumber);
    gen->add_option("--solver", gen_solver, "ns reference solver")
        ->check(CLI::IsMember({"semi-implicit", "high-order"}));
    gen->add_option("--re", gen_cfg.reynolds, "Reynolds number (ns)")->check(CLI::PositiveNumber);
    gen->add_option("--c", gen_cfg.wave_speed, "wave speed (wave)")->check(CLI::PositiveNumber);
    gen->add_option("--inner-dt", gen_cfg.wave_inner_dt, "RK4 step of the wave generator")->check(CLI::PositiveNumber);
    gen->add_option("--warmup", gen_cfg.ks.warmup_time, "ks warm-up time")->check(CLI::NonNegativeNumber);

    // precompute -------------------------------------------------------------
    auto* pre = app.add_subcommand("precompute", "build and store a Jacobian pseudoinverse cache");
    std::size_t pre_n = 64;
    std::string pre_method = "spectral";
    double pre_tol = pc::kDefaultTruncation;
    std::string pre_out;
    std::optional<double> pre_dt;
    ModelFlags pre_model;
    add_pde(pre);
    add_length(pre);
    pre->add_option("--n", pre_n, "points per axis")->check(CLI::Range(4, 1 << 14));
    pre->add_option("--method", pre_method, "dense | spectral")->check(CLI::IsMember({"dense", "spectral"}));
    pre->add_option("--tol", pre_tol, "relative truncation tolerance")->check(CLI::PositiveNumber);
    pre->add_option("--out", pre_out, "cache file")->required();
    pre->add_option("--dt", pre_dt, "time step")->check(CLI::PositiveNumber);
    pre_model.add_to(pre);

    // rollout ----------------------------------------------------------------
    auto* roll = app.add_subcommand("rollout", "run baseline and corrected rollouts against a reference");
    std::string roll_traj, roll_predictor = "coarse", roll_pred_file, roll_pattern = "uncorrelated";
    std::string roll_correct = "cached", roll_cache, roll_report;
    double roll_level = 1e-2;
    int roll_k = 3;
    bool roll_subtract = false;
    std::optional<std::size_t> roll_steps;
    std::uint64_t roll_seed = 0;
    ModelFlags roll_model;
    add_pde(roll);
    add_length(roll);
    roll->add_option("--traj", roll_traj, "reference trajectory (PHCT)")->required()->check(CLI::ExistingFile);
    roll->add_option("--predictor", roll_predictor, "oracle-noise | coarse | file")
        ->check(CLI::IsMember({"oracle-noise", "coarse", "file"}));
    roll->add_option("--pred-file", roll_pred_file, "stored predictions (PHCT) for --predictor file")
        ->check(CLI::ExistingFile);
    roll->add_option("--noise-pattern", roll_pattern, "uncorrelated | grf")
        ->check(CLI::IsMember({"uncorrelated", "grf"}));
    roll->add_option("--noise-level", roll_level, "relative L2 error of oracle-noise predictions")
        ->check(CLI::NonNegativeNumber);
    roll->add_option("--correct", roll_correct, "none | cached | exact | every-k")
        ->check(CLI::IsMember({"none", "cached", "exact", "every-k"}));
    roll->add_option("--k", roll_k, "rebuild interval for every-k")->check(CLI::PositiveNumber);
    roll->add_option("--cache", roll_cache, "cache file (PHJC) for cached correction")->check(CLI::ExistingFile);
    roll->add_flag("--subtract-ref-residual", roll_subtract, "subtract the reference residual before correcting");
    roll->add_option("--steps", roll_steps, "predicted steps (default: whole reference)")->check(CLI::PositiveNumber);
    roll->add_option("--seed", roll_seed, "noise seed");
    roll->add_option("--report", roll_report, "CSV report path ('-' for stdout)")->required();
    roll_model.add_to(roll);

    // sensitivity ------------------------------------------------------------
    auto* sens = app.add_subcommand("sensitivity", "post-correction error versus corruption level");
    std::string sens_traj, sens_report, sens_cache;
    std::vector<double> sens_levels{1e-3, 1e-2, 1e-1, 1.0};
    std::vector<std::string> sens_patterns{"uncorrelated", "grf"};
    std::size_t sens_seeds = 8;
    std::uint64_t sens_seed = 0;
    std::optional<std::size_t> sens_index;
    ModelFlags sens_model;
    add_pde(sens);
    add_length(sens);
    sens->add_option("--traj", sens_traj, "reference trajectory (PHCT)")->required()->check(CLI::ExistingFile);
    sens->add_option("--levels", sens_levels, "comma-separated, strictly increasing")->delimiter(',');
    sens->add_option("--patterns", sens_patterns, "comma-separated: uncorrelated, grf")
        ->delimiter(',')
        ->check(CLI::IsMember({"uncorrelated", "grf"}));
    sens->add_option("--seeds", sens_seeds, "noise draws per level")->check(CLI::PositiveNumber);
    sens->add_option("--seed", sens_seed, "base seed");
    sens->add_option("--index", sens_index, "reference index of the corrupted state");
    sens->add_option("--cache", sens_cache, "cache file (PHJC)")->check(CLI::ExistingFile);
    sens->add_option("--report", sens_report, "CSV path ('-' for stdout)")->required();
    sens_model.add_to(sens);

    // bench ------------------------------------------------------------------
    auto* bench = app.add_subcommand("bench", "caching benchmark and resolution scaling (ns)");
    std::size_t bench_n = 64;
    pc::BenchConfig bench_cfg;
    pc::ScalingConfig scale_cfg;
    std::string bench_report = "-";
    add_pde(bench);
    bench->add_option("--n", bench_n, "resolution of the caching benchmark")->check(CLI::Range(4, 1 << 14));
    bench->add_option("--steps", bench_cfg.steps, "rollout steps timed")->check(CLI::PositiveNumber);
    bench->add_option("--exact-steps", bench_cfg.exact_steps, "exact-per-step corrections timed");
    bench->add_option("--resolutions", scale_cfg.resolutions, "comma-separated scaling resolutions")
        ->delimiter(',')
        ->check(CLI::Range(4, 1 << 14));
    bench->add_option("--report", bench_report, "CSV path ('-' for stdout)");

    try {
        app.parse(argc, argv);

        if (*gen) {
            gen_cfg.dt = gen_dt;
            gen_cfg.length = length;
            gen_cfg.ns_solver = gen_solver == "high-order" ? pc::NsSolver::HighOrder : pc::NsSolver::SemiImplicit;
            const auto paths = pc::generate_dataset(pde, gen_count, gen_seed, gen_cfg, gen_out);
            for (std::size_t i = 0; i < paths.size(); ++i)
                std::printf("%s pde=%s n=%zu states=%zu dt=%g seed=%llu\n", paths[i].string().c_str(),
                            pc::to_string(pde), gen_cfg.n, gen_cfg.steps + 1, gen_cfg.dt_for(pde),
                            static_cast<unsigned long long>(pc::mix_seed(gen_seed, i)));
            return 0;
        }

        if (*pre) {
            const pc::Grid grid = pc::default_grid(pde, pre_n, length);
            const double dt = pre_dt.value_or(pde == pc::PdeKind::KuramotoSivashinsky ? 0.05 : 0.01);
            const pc::ResidualModel model = pre_model.model(pde, grid, dt);
            const pc::JacobianCache cache = pre_method == "dense" ? pc::build_dense_cache(model, pre_tol)
                                                                  : pc::build_spectral_cache(model, pre_tol);
            pc::write_cache(pre_out, cache);
            std::printf("%s method=%s n=%zu build_seconds=%g truncated=%zu\n", pre_out.c_str(), pre_method.c_str(),
                        pre_n, cache.build_seconds, cache.truncated);
            return 0;
        }

        if (*roll) {
            if (roll_correct == "every-k" && pde != pc::PdeKind::KuramotoSivashinsky)
                throw CLI::ValidationError("--correct", "every-k is only available with --pde ks");
            if (roll_predictor == "file" && roll_pred_file.empty())
                throw CLI::ValidationError("--pred-file", "required with --predictor file");
            const auto reference = std::make_shared<const pc::Trajectory>(load_reference(roll_traj, pde, length));
            const pc::ResidualModel model = roll_model.model(pde, reference->grid, reference->dt);
            const std::size_t first = pc::first_target_index(pde);
            const std::size_t available = reference->states.size() - first;
            const std::size_t steps = roll_steps.value_or(available);
            if (steps > available)
                throw CLI::ValidationError("--steps", "reference supports at most " + std::to_string(available));

            std::optional<pc::Predictor> predictor;
            if (roll_predictor == "coarse") {
                predictor = pc::Predictor::coarse(model);
            } else if (roll_predictor == "oracle-noise") {
                const pc::NoiseSpec noise{roll_pattern == "grf" ? pc::NoisePattern::CorrelatedGrf
                                                                : pc::NoisePattern::Uncorrelated,
                                          roll_level, pc::NoiseSpec{}.correlated};
                predictor = pc::Predictor::oracle_noise(reference, noise, roll_seed);
            } else {
                auto store = std::make_shared<const pc::Trajectory>(pc::read_trajectory(roll_pred_file, length));
                if (!(store->grid == reference->grid))
                    throw pc::FormatError(roll_pred_file + ": prediction grid does not match the reference");
                predictor = pc::Predictor::from_file(std::move(store));
            }

            pc::CorrectionStrategy strategy = pc::CorrectionStrategy::none();
            if (roll_correct == "cached") strategy = pc::CorrectionStrategy::cached();
            if (roll_correct == "exact") strategy = pc::CorrectionStrategy::exact();
            if (roll_correct == "every-k") strategy = pc::CorrectionStrategy::every_k(roll_k);
            strategy.subtract_reference_residual = roll_subtract;

            pc::CacheSlot slot;
            if (!roll_cache.empty()) slot.cache = pc::load_cache(roll_cache, model);

            const pc::RolloutReport baseline =
                pc::rollout(model, *reference, *predictor, pc::CorrectionStrategy::none(), steps).report;
            const pc::RolloutReport corrected =
                strategy.mode == pc::CorrectionStrategy::Mode::None
                    ? baseline
                    : pc::rollout(model, *reference, *predictor, strategy, steps, slot).report;
            write_text(roll_report, pc::format_report_csv(pc::report_rows(baseline, corrected)));
            auto describe = [](const pc::RolloutReport& r) {
                return r.diverged() ? "diverged at step " + std::to_string(*r.divergence_step)
                                    : pc::format_double(r.final_error());
            };
            std::fprintf(stderr, "final relative L2: baseline %s, corrected %s\n", describe(baseline).c_str(),
                         describe(corrected).c_str());
            return 0;
        }

        if (*sens) {
            try {
                pc::require_increasing_levels(sens_levels);
            } catch (const pc::ContractError& e) {
                throw CLI::ValidationError("--levels", e.what());
            }
            const pc::Trajectory reference = load_reference(sens_traj, pde, length);
            const pc::ResidualModel model = sens_model.model(pde, reference.grid, reference.dt);
            pc::SensitivityConfig cfg;
            cfg.levels = sens_levels;
            cfg.patterns.clear();
            for (const std::string& p : sens_patterns)
                cfg.patterns.push_back(p == "grf" ? pc::NoisePattern::CorrelatedGrf : pc::NoisePattern::Uncorrelated);
            cfg.seeds = sens_seeds;
            cfg.base_seed = sens_seed;
            cfg.target_index = sens_index;
            const pc::JacobianCache cache =
                sens_cache.empty() ? pc::build_spectral_cache(model) : pc::load_cache(sens_cache, model);
            write_text(sens_report, pc::format_sensitivity_csv(pc::sensitivity_sweep(model, reference, cfg, cache)));
            return 0;
        }

        if (*bench) {
            if (pde != pc::PdeKind::NavierStokes) throw CLI::ValidationError("--pde", "bench supports ns only");
            std::vector<pc::BenchRow> rows;
            try {
                rows = pc::bench_rows(pc::bench_caching(bench_n, bench_cfg));
            } catch (const pc::CapacityError& e) {
                std::fprintf(stderr, "caching benchmark skipped: %s\n", e.what());
                rows.push_back({"caching", bench_n, "capacity_error", 1.0});
            }
            for (pc::BenchRow& r : pc::bench_rows(pc::scaling_study(scale_cfg))) rows.push_back(std::move(r));
            write_text(bench_report, pc::format_bench_csv(rows));
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const pc::ContractError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
