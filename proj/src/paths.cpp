#include "switching/paths.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

#include "switching/parallel.hpp"

namespace switching {

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr, std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u;
    constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

double keyed_uniform(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t coord) {
    const auto out = philox4x32({static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32), step, coord},
                                {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    // 53 random bits, offset by half an ulp so the result lies strictly inside (0, 1).
    const std::uint64_t bits = (static_cast<std::uint64_t>(out[0]) << 21) ^ (out[1] >> 11);
    return (static_cast<double>(bits & ((std::uint64_t{1} << 53) - 1)) + 0.5) * 0x1.0p-53;
}

double keyed_normal(std::uint64_t seed, std::uint64_t path, std::uint32_t step, std::uint32_t coord) {
    const double u = keyed_uniform(seed, path, step, coord);
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * u);
}

PathBatch simulate_euler(const DiffusionSpec& diffusion, const TimeGrid& grid, std::size_t paths, std::uint64_t seed,
                         SimulationOptions options) {
    if (paths < 1) throw std::invalid_argument("simulate_euler: need at least one path");
    if (grid.steps < 1 || !(grid.horizon > 0.0)) throw std::invalid_argument("simulate_euler: invalid time grid");
    const std::size_t k = diffusion.dimension();
    if (k == 0) throw std::invalid_argument("simulate_euler: empty initial state");

    PathBatch batch;
    batch.paths = paths;
    batch.dim = k;
    batch.grid = grid;
    batch.seed = seed;
    batch.antithetic = options.antithetic;
    batch.data.resize(paths * (grid.steps + 1) * k);

    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    parallel_for(paths, options.workers, [&](std::size_t begin, std::size_t end) {
        for (std::size_t p = begin; p < end; ++p) {
            const std::uint64_t stream = options.antithetic ? p / 2 : p;
            const double sign = options.antithetic && (p % 2 == 1) ? -1.0 : 1.0;
            for (std::size_t c = 0; c < k; ++c) batch.at(p, 0, c) = diffusion.x0[c];
            for (int m = 0; m < grid.steps; ++m) {
                const double t = grid.time(m);
                for (std::size_t c = 0; c < k; ++c) {
                    const double x = batch.at(p, m, c);
                    const double xi = sign * keyed_normal(seed, stream, static_cast<std::uint32_t>(m),
                                                          static_cast<std::uint32_t>(c));
                    batch.at(p, m + 1, c) =
                        x + diffusion.drift(t, x, c) * dt + diffusion.volatility(t, x, c) * sqrt_dt * xi;
                }
            }
        }
    });
    return batch;
}

namespace {

double norm(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return std::sqrt(s);
}

struct Accumulator {
    double sum = 0.0;
    double sum_sq = 0.0;
    std::size_t n = 0;

    void add(double v) {
        sum += v;
        sum_sq += v * v;
        ++n;
    }
    double mean() const { return n ? sum / n : 0.0; }
    double stderr_() const {
        if (n < 2) return 0.0;
        const double mu = mean();
        const double var = std::max(0.0, (sum_sq - n * mu * mu) / (n - 1));
        return std::sqrt(var / n);
    }
};

} // namespace

MomentReport moment_report(const PathBatch& batch, double theta) {
    if (!(theta >= 2.0)) throw std::invalid_argument("moment_report: theta must be >= 2");
    MomentReport report;
    report.theta = theta;
    Accumulator acc;
    for (std::size_t p = 0; p < batch.paths; ++p) {
        double sup = 0.0;
        bool ok = true;
        for (int m = 0; m <= batch.grid.steps; ++m) {
            const double r = std::pow(norm(batch.state(p, m)), theta);
            if (!std::isfinite(r)) {
                ok = false;
                break;
            }
            sup = std::max(sup, r);
        }
        if (ok) {
            acc.add(sup);
        } else {
            ++report.nonfinite_paths;
        }
    }
    report.sup_moment = acc.mean();
    report.stderr_ = acc.stderr_();
    report.x0_norm = batch.paths ? norm(batch.state(0, 0)) : 0.0;
    report.bound_ratio = report.sup_moment / (1.0 + std::pow(report.x0_norm, theta));
    report.finite = report.nonfinite_paths == 0 && std::isfinite(report.sup_moment);
    return report;
}

double mean_square_sup_distance(const PathBatch& a, const PathBatch& b) {
    if (a.paths != b.paths || a.dim != b.dim || !(a.grid == b.grid)) {
        throw std::invalid_argument("mean_square_sup_distance: batch shapes differ");
    }
    double total = 0.0;
    for (std::size_t p = 0; p < a.paths; ++p) {
        double sup = 0.0;
        for (int m = 0; m <= a.grid.steps; ++m) {
            double d2 = 0.0;
            for (std::size_t c = 0; c < a.dim; ++c) {
                const double d = a.at(p, m, c) - b.at(p, m, c);
                d2 += d * d;
            }
            sup = std::max(sup, d2);
        }
        total += sup;
    }
    return total / a.paths;
}

TerminalMoments terminal_moments(const PathBatch& batch, std::size_t coord) {
    Accumulator first, second;
    for (std::size_t p = 0; p < batch.paths; ++p) {
        const double x = batch.at(p, batch.grid.steps, coord);
        first.add(x);
        second.add(x * x);
    }
    return {first.mean(), first.stderr_(), second.mean(), second.stderr_()};
}

} // namespace switching
