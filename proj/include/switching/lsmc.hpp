#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "switching/model.hpp"
#include "switching/paths.hpp"

namespace switching {

/// Polynomial basis of total degree `degree` over the k state coordinates,
/// optionally on standardized coordinates (per-batch shift and scale).
struct RegressionBasis {
    int degree = 3;
    bool standardize = true;
    /// Regress on log-coordinates (positive states only, e.g. geometric BM).
    bool log_state = false;

    /// C(degree + k, k)
    std::size_t size(std::size_t dim) const;
    /// Exponent tuples in graded order, constant term first.
    std::vector<std::vector<int>> exponents(std::size_t dim) const;
    /// Human-readable term names ("1", "x1", "x1^2", "x1*x2", ...).
    std::vector<std::string> term_names(std::size_t dim) const;
};

struct RegressionFit {
    std::vector<double> coefficients;
    std::vector<double> fitted;
    std::size_t rank = 0;
    bool rank_deficient = false;
};

/// Least-squares projection onto the basis evaluated at a fixed set of states.
/// The design matrix is factored once (complete orthogonal decomposition, so a
/// rank-deficient design yields the minimum-norm solution) and reused for
/// every target vector.
class ContinuationRegressor {
public:
    /// states: row-major paths x dim. Throws std::invalid_argument when the
    /// basis is larger than paths / 10.
    ContinuationRegressor(std::span<const double> states, std::size_t dim, const RegressionBasis& basis);

    RegressionFit fit(std::span<const double> targets) const;

    std::size_t rank() const { return static_cast<std::size_t>(solver_.rank()); }
    bool rank_deficient() const { return rank() < static_cast<std::size_t>(design_.cols()); }
    std::size_t paths() const { return static_cast<std::size_t>(design_.rows()); }

private:
    Eigen::MatrixXd design_;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> solver_;
};

/// One-shot form of ContinuationRegressor. Throws std::invalid_argument on
/// non-finite targets.
RegressionFit fit_continuation(std::span<const double> states, std::size_t dim, std::span<const double> targets,
                               const RegressionBasis& basis);

/// Regression solution along the paths. Per-path values are kept for m = 0
/// always and for every time index when requested; per-(mode, time) summaries
/// and coefficients are always kept.
struct PathValueField {
    std::size_t modes = 0;
    std::size_t paths = 0;
    int steps = 0;
    RegressionBasis basis;
    std::string scheme;
    int switches = -1;
    std::uint64_t seed = 0;
    std::vector<int> rank_deficient_steps;

    std::vector<double> mean;                        // [i * (N + 1) + m]
    std::vector<double> stderr_;                     // [i * (N + 1) + m]
    std::vector<std::vector<double>> coefficients;   // [i * (N + 1) + m], empty at m = N
    std::vector<std::string> terms;
    std::vector<double> initial;                     // [i * paths + p] at m = 0
    std::vector<double> values;                      // [(i * (N + 1) + m) * paths + p] when kept

    double value_mean(std::size_t i, int m) const { return mean[i * (steps + 1) + m]; }
    double value_stderr(std::size_t i, int m) const { return stderr_[i * (steps + 1) + m]; }
    bool has_path_values() const { return !values.empty(); }
    double value(std::size_t i, int m, std::size_t p) const { return values[(i * (steps + 1) + m) * paths + p]; }
};

/// What a path carries backward once decisions are made from the fitted
/// continuations: the fitted-decision value max(fitted continuation, obstacle)
/// itself, or the realized one-step value (payoff plus next-step value of
/// the mode finally continued, minus switching costs paid).
enum class ValueUpdate { fitted, realized };

struct LsmcOptions {
    ValueUpdate update = ValueUpdate::realized;
    unsigned workers = 1;
    bool keep_path_values = false;
};

/// Backward induction along the paths with regressed continuation values and
/// the same within-step mode coupling as the lattice solver. The reported
/// standard error at (i, m) is the sample standard error of the realized
/// one-step values (payoff plus next-step value of the mode finally
/// continued, minus switching costs paid).
PathValueField solve_lsmc_fixed_point(const PathBatch& batch, const SwitchingModel& model,
                                      const RegressionBasis& basis, LsmcOptions options = {});

/// n-switch recursion along the paths; the obstacle at level r uses level r - 1.
PathValueField solve_lsmc_n_switch(const PathBatch& batch, const SwitchingModel& model, const RegressionBasis& basis,
                                   int n, LsmcOptions options = {});

} // namespace switching
