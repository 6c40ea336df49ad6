#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "physcorrect/grf.hpp"
#include "physcorrect/io.hpp"
#include "physcorrect/residuals.hpp"
#include "physcorrect/solvers.hpp"

namespace physcorrect {

enum class NsSolver { SemiImplicit, HighOrder };

struct DatasetConfig {
    std::size_t n = 64;
    std::size_t steps = 200;
    std::optional<double> dt;      // per-PDE default when empty
    std::optional<double> length;  // per-PDE default when empty
    NsSolver ns_solver = NsSolver::SemiImplicit;
    int ns_highorder_substeps = 4;
    double reynolds = 1000.0;
    double wave_speed = 1.0;
    double wave_inner_dt = 1e-4;
    KsGeneratorConfig ks{};

    double dt_for(PdeKind kind) const { return dt.value_or(kind == PdeKind::KuramotoSivashinsky ? 0.05 : 0.01); }
    Grid grid_for(PdeKind kind) const { return default_grid(kind, n, length); }
};

/// Initial-condition spectra: the vorticity spectrum for NS and wave, and a
/// small smooth perturbation for KS (the warm-up carries it onto the attractor).
inline GrfSpec initial_spectrum(PdeKind kind) {
    if (kind == PdeKind::KuramotoSivashinsky) return GrfSpec{0.05, 1.0, 1.0};
    return GrfSpec{};
}

inline Field initial_condition(PdeKind kind, const Grid& grid, std::uint64_t seed) {
    const Field sample = sample_grf(grid, initial_spectrum(kind), seed);
    return kind == PdeKind::NavierStokes ? poisson_solve_periodic(sample) : sample;
}

inline NsParams ns_params(const DatasetConfig& c) {
    const Grid g = c.grid_for(PdeKind::NavierStokes);
    return NsParams(g, c.reynolds, c.dt_for(PdeKind::NavierStokes), kolmogorov_diagonal_forcing(g));
}
inline WaveParams wave_params(const DatasetConfig& c) {
    return WaveParams(c.grid_for(PdeKind::Wave), c.wave_speed, c.dt_for(PdeKind::Wave));
}
inline KsParams ks_params(const DatasetConfig& c) {
    return KsParams(c.grid_for(PdeKind::KuramotoSivashinsky), c.dt_for(PdeKind::KuramotoSivashinsky));
}

/// steps + 1 recorded states from the seeded initial condition.
inline Trajectory generate_trajectory(PdeKind kind, const DatasetConfig& config, std::uint64_t seed) {
    if (config.steps < 1) throw ContractError("generate_trajectory: steps must be >= 1");
    const Grid grid = config.grid_for(kind);
    const Field u0 = initial_condition(kind, grid, seed);
    Trajectory traj{kind, grid, config.dt_for(kind), {}, SolverId::External, seed};
    switch (kind) {
        case PdeKind::NavierStokes: {
            const NsParams p = ns_params(config);
            const bool high = config.ns_solver == NsSolver::HighOrder;
            traj.solver = high ? SolverId::NsPseudoSpectralRk4 : SolverId::NsSemiImplicit;
            traj.internal_dt = high ? p.dt / config.ns_highorder_substeps : p.dt;
            traj.states.reserve(config.steps + 1);
            traj.states.push_back(u0);
            for (std::size_t s = 0; s < config.steps; ++s)
                traj.states.push_back(high ? ns_step_highorder(traj.states.back(), p, config.ns_highorder_substeps)
                                           : ns_step_semi_implicit(traj.states.back(), p));
            break;
        }
        case PdeKind::Wave: {
            const WaveParams p = wave_params(config);
            const auto every = static_cast<int>(std::llround(p.dt / config.wave_inner_dt));
            traj = wave_generate_rk4(u0, p, p.dt / every, every, config.steps);
            traj.seed = seed;
            break;
        }
        case PdeKind::KuramotoSivashinsky:
            traj = ks_generate_spectral(u0, ks_params(config), config.steps, config.ks);
            traj.seed = seed;
            break;
    }
    return traj;
}

inline std::string dataset_file_name(PdeKind kind, std::uint64_t seed, std::size_t index) {
    return std::string(to_string(kind)) + "_s" + std::to_string(seed) + "_" + std::to_string(index) + ".phct";
}

/// Writes `count` trajectories; trajectory i uses seed mix_seed(seed, i).
inline std::vector<std::filesystem::path> generate_dataset(PdeKind kind, std::size_t count, std::uint64_t seed,
                                                           const DatasetConfig& config,
                                                           const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());
    std::vector<std::filesystem::path> written;
    for (std::size_t i = 0; i < count; ++i) {
        const Trajectory traj = generate_trajectory(kind, config, mix_seed(seed, i));
        const std::filesystem::path path = out_dir / dataset_file_name(kind, seed, i);
        write_trajectory(path, traj);
        written.push_back(path);
    }
    return written;
}

}  // namespace physcorrect
