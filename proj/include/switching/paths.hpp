#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "switching/model.hpp"

namespace switching {

/// Simulated trajectories stored path-major: data[(p * (N + 1) + m) * k + c].
struct PathBatch {
    std::size_t paths = 0;
    std::size_t dim = 0;
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::string scheme = "euler";
    bool antithetic = false;
    std::vector<double> data;

    std::size_t steps() const { return static_cast<std::size_t>(grid.steps); }
    double at(std::size_t p, int m, std::size_t c = 0) const { return data[(p * (steps() + 1) + m) * dim + c]; }
    double& at(std::size_t p, int m, std::size_t c = 0) { return data[(p * (steps() + 1) + m) * dim + c]; }
    std::span<const double> state(std::size_t p, int m) const {
        return {data.data() + (p * (steps() + 1) + m) * dim, dim};
    }
};

struct SimulationOptions {
    unsigned workers = 1;
    /// Paths 2p and 2p+1 share their draws with opposite signs.
    bool antithetic = false;
};

/// Philox4x32-10 keyed by the seed; the counter carries (path, step, coordinate).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter, std::array<std::uint32_t, 2> key);

/// Uniform in (0, 1) for the draw addressed by (seed, path, step, coordinate).
double keyed_uniform(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t coord);

/// Standard normal by inverse CDF of keyed_uniform.
double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t coord);

/// Euler-Maruyama: X_{m+1} = X_m + b(t_m, X_m) dt + sigma(t_m, X_m) sqrt(dt) xi.
/// The result is a pure function of (diffusion, grid, paths, seed, antithetic);
/// the worker count only changes scheduling.
PathBatch simulate_euler(const DiffusionSpec& diffusion, const TimeGrid& grid, std::size_t paths, std::uint64_t seed,
                         SimulationOptions options = {});

struct MomentReport {
    double theta = 2.0;
    double sup_moment = 0.0;     // sample mean of max_m |X_m|^theta
    double stderr_ = 0.0;
    double x0_norm = 0.0;
    double bound_ratio = 0.0;    // sup_moment / (1 + |x0|^theta), an empirical constant C
    std::size_t nonfinite_paths = 0;
    bool finite = true;
};

/// Empirical E[sup_m |X_m|^theta] over the batch; |.| is the Euclidean norm.
MomentReport moment_report(const PathBatch& batch, double theta);

/// Sample mean of max_m |X_m - X'_m|^2 for two batches of equal shape.
double mean_square_sup_distance(const PathBatch& a, const PathBatch& b);

/// Terminal-time sample moments of coordinate c: mean and standard error of X_T and X_T^2.
struct TerminalMoments {
    double mean = 0.0;
    double mean_stderr = 0.0;
    double second = 0.0;
    double second_stderr = 0.0;
};
TerminalMoments terminal_moments(const PathBatch& batch, std::size_t coord = 0);

} // namespace switching
