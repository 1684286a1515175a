#include "switching/lsmc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "switching/coupling.hpp"
#include "switching/errors.hpp"
#include "switching/parallel.hpp"

namespace switching {

std::size_t RegressionBasis::size(std::size_t dim) const {
    // C(degree + dim, dim)
    std::size_t n = 1;
    for (std::size_t k = 1; k <= dim; ++k) n = n * (degree + k) / k;
    return n;
}

std::vector<std::vector<int>> RegressionBasis::exponents(std::size_t dim) const {
    std::vector<std::vector<int>> out;
    std::vector<int> e(dim, 0);
    for (int total = 0; total <= degree; ++total) {
        // All tuples with sum == total, first coordinate varying slowest.
        auto emit = [&](auto&& self, std::size_t c, int left) -> void {
            if (c + 1 == dim) {
                e[c] = left;
                out.push_back(e);
                return;
            }
            for (int v = left; v >= 0; --v) {
                e[c] = v;
                self(self, c + 1, left - v);
            }
        };
        emit(emit, 0, total);
    }
    return out;
}

std::vector<std::string> RegressionBasis::term_names(std::size_t dim) const {
    std::vector<std::string> names;
    for (const auto& e : exponents(dim)) {
        std::string name;
        for (std::size_t c = 0; c < dim; ++c) {
            if (e[c] == 0) continue;
            if (!name.empty()) name += "*";
            name += "x" + std::to_string(c + 1);
            if (e[c] > 1) name += "^" + std::to_string(e[c]);
        }
        names.push_back(name.empty() ? "1" : name);
    }
    return names;
}

ContinuationRegressor::ContinuationRegressor(std::span<const double> states, std::size_t dim,
                                             const RegressionBasis& basis) {
    if (basis.degree < 0) throw std::invalid_argument("regression basis degree must be >= 0");
    if (dim == 0 || states.size() % dim != 0) throw std::invalid_argument("regression: state array shape");
    const std::size_t paths = states.size() / dim;
    const auto exps = basis.exponents(dim);
    if (exps.size() * 10 > paths) {
        throw std::invalid_argument("regression: basis size " + std::to_string(exps.size()) + " exceeds paths/10 (" +
                                    std::to_string(paths) + " paths)");
    }

    std::vector<double> coords(states.begin(), states.end());
    if (basis.log_state) {
        for (double& v : coords) {
            if (!(v > 0.0)) throw std::invalid_argument("regression: log-state basis needs positive states");
            v = std::log(v);
        }
    }
    states = coords;

    std::vector<double> shift(dim, 0.0), scale(dim, 1.0);
    if (basis.standardize) {
        for (std::size_t c = 0; c < dim; ++c) {
            double sum = 0.0;
            for (std::size_t p = 0; p < paths; ++p) sum += states[p * dim + c];
            shift[c] = sum / paths;
            double ss = 0.0;
            for (std::size_t p = 0; p < paths; ++p) {
                const double d = states[p * dim + c] - shift[c];
                ss += d * d;
            }
            const double sd = std::sqrt(ss / paths);
            scale[c] = sd > 0.0 ? sd : 1.0;
        }
    }

    design_.resize(static_cast<Eigen::Index>(paths), static_cast<Eigen::Index>(exps.size()));
    std::vector<double> z(dim);
    for (std::size_t p = 0; p < paths; ++p) {
        for (std::size_t c = 0; c < dim; ++c) z[c] = (states[p * dim + c] - shift[c]) / scale[c];
        for (std::size_t t = 0; t < exps.size(); ++t) {
            double v = 1.0;
            for (std::size_t c = 0; c < dim; ++c) {
                for (int a = 0; a < exps[t][c]; ++a) v *= z[c];
            }
            design_(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(t)) = v;
        }
    }
    solver_.compute(design_);
}

RegressionFit ContinuationRegressor::fit(std::span<const double> targets) const {
    if (targets.size() != paths()) throw std::invalid_argument("regression: target count differs from path count");
    for (double v : targets) {
        if (!std::isfinite(v)) throw std::invalid_argument("regression: non-finite target");
    }
    const Eigen::Map<const Eigen::VectorXd> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
    const Eigen::VectorXd beta = solver_.solve(y);
    const Eigen::VectorXd fitted = design_ * beta;
    RegressionFit out;
    out.coefficients.assign(beta.data(), beta.data() + beta.size());
    out.fitted.assign(fitted.data(), fitted.data() + fitted.size());
    out.rank = rank();
    out.rank_deficient = rank_deficient();
    return out;
}

RegressionFit fit_continuation(std::span<const double> states, std::size_t dim, std::span<const double> targets,
                               const RegressionBasis& basis) {
    return ContinuationRegressor(states, dim, basis).fit(targets);
}

namespace {

void require_batch(const PathBatch& batch, const SwitchingModel& model) {
    require_valid(model);
    if (!(batch.grid == model.grid)) throw std::invalid_argument("lsmc: batch grid does not match model grid");
    if (batch.dim != model.diffusion.dimension()) throw std::invalid_argument("lsmc: batch dimension mismatch");
}

double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_stderr(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n < 2) return 0.0;
    const double mu = sample_mean(v);
    double ss = 0.0;
    for (double x : v) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / (n - 1) / n);
}

// Per level r and mode i: values at the current time index, one entry per path.
using Levels = std::vector<std::vector<std::vector<double>>>;

// Shared backward induction. With `coupled` the single level is solved as the
// fixed point; otherwise levels 0..n form the n-switch recursion.
PathValueField backward(const PathBatch& batch, const SwitchingModel& model, const RegressionBasis& basis, int n,
                        bool coupled, const LsmcOptions& options) {
    require_batch(batch, model);
    const std::size_t q = model.mode_count();
    const std::size_t paths = batch.paths;
    const std::size_t dim = batch.dim;
    const int steps = batch.grid.steps;
    const double dt = batch.grid.dt();
    const std::size_t levels = coupled ? 1 : static_cast<std::size_t>(n) + 1;
    const std::size_t top = levels - 1;

    PathValueField field;
    field.modes = q;
    field.paths = paths;
    field.steps = steps;
    field.basis = basis;
    field.scheme = coupled ? "lsmc_fixed_point" : "lsmc_n_switch";
    field.switches = coupled ? -1 : n;
    field.seed = batch.seed;
    field.terms = basis.term_names(dim);
    field.mean.assign(q * (steps + 1), 0.0);
    field.stderr_.assign(q * (steps + 1), 0.0);
    field.coefficients.assign(q * (steps + 1), {});
    if (options.keep_path_values) field.values.assign(q * (steps + 1) * paths, 0.0);

    Levels next(levels, std::vector<std::vector<double>>(q, std::vector<double>(paths, 0.0)));
    Levels cur = next;
    Levels fitted = next;
    Levels decision = next;
    Levels realized = next;
    std::vector<double> states(paths * dim);

    for (int m = steps - 1; m >= 0; --m) {
        const double t = batch.grid.time(m);
        const CostTable costs(model, t);
        for (std::size_t p = 0; p < paths; ++p) {
            const auto s = batch.state(p, m);
            for (double v : s) {
                if (!std::isfinite(v)) {
                    throw NumericalError("lsmc: non-finite state on path " + std::to_string(p) +
                                         ", m = " + std::to_string(m));
                }
            }
            std::copy(s.begin(), s.end(), states.begin() + p * dim);
        }
        for (std::size_t r = 0; r < levels; ++r) {
            for (std::size_t i = 0; i < q; ++i) {
                for (double v : next[r][i]) {
                    if (!std::isfinite(v)) {
                        throw NumericalError("lsmc: non-finite value at mode " + std::to_string(i + 1) +
                                             ", m = " + std::to_string(m + 1));
                    }
                }
            }
        }
        const ContinuationRegressor regressor(states, dim, basis);
        if (regressor.rank_deficient()) field.rank_deficient_steps.push_back(m);

        for (std::size_t r = 0; r < levels; ++r) {
            for (std::size_t i = 0; i < q; ++i) {
                RegressionFit fit = regressor.fit(next[r][i]);
                fitted[r][i] = std::move(fit.fitted);
                if (r == top) field.coefficients[i * (steps + 1) + m] = std::move(fit.coefficients);
            }
        }

        parallel_for(paths, options.workers, [&](std::size_t begin, std::size_t end) {
            std::vector<double> rates(q), cont(q), y(q), same_time(q), cash(q);
            std::vector<std::size_t> target(q);
            for (std::size_t p = begin; p < end; ++p) {
                const auto x = batch.state(p, m);
                for (std::size_t i = 0; i < q; ++i) rates[i] = model.payoffs[i](t, x) * dt;
                for (std::size_t r = 0; r < levels; ++r) {
                    for (std::size_t i = 0; i < q; ++i) {
                        cont[i] = rates[i] + fitted[r][i][p];
                        target[i] = i;
                    }
                    if (coupled) {
                        couple_modes(costs, cont, y);
                        for (std::size_t i = 0; i < q; ++i) {
                            if (y[i] > cont[i]) obstacle(costs, y, i, &target[i]);
                        }
                        // Follow the switch chain to the mode that continues; at most q - 1 hops.
                        for (std::size_t i = 0; i < q; ++i) {
                            double paid = 0.0;
                            std::size_t mode = i;
                            for (std::size_t hop = 0; hop < q && target[mode] != mode; ++hop) {
                                paid += costs(mode, target[mode]);
                                mode = target[mode];
                            }
                            cash[i] = rates[mode] + next[r][mode][p] - paid;
                        }
                    } else {
                        if (r > 0) {
                            for (std::size_t j = 0; j < q; ++j) same_time[j] = decision[r - 1][j][p];
                        }
                        for (std::size_t i = 0; i < q; ++i) {
                            y[i] = cont[i];
                            cash[i] = rates[i] + next[r][i][p];
                            if (r == 0) continue;
                            const double barrier = obstacle(costs, same_time, i, &target[i]);
                            if (barrier > cont[i]) {
                                y[i] = barrier;
                                cash[i] = -costs(i, target[i]) + realized[r - 1][target[i]][p];
                            }
                        }
                    }
                    for (std::size_t i = 0; i < q; ++i) {
                        decision[r][i][p] = y[i];
                        realized[r][i][p] = cash[i];
                        cur[r][i][p] = options.update == ValueUpdate::realized ? cash[i] : y[i];
                    }
                }
            }
        });

        for (std::size_t i = 0; i < q; ++i) {
            field.mean[i * (steps + 1) + m] = sample_mean(cur[top][i]);
            field.stderr_[i * (steps + 1) + m] = sample_stderr(realized[top][i]);
            if (options.keep_path_values) {
                std::copy(cur[top][i].begin(), cur[top][i].end(),
                          field.values.begin() + (i * (steps + 1) + m) * paths);
            }
        }
        std::swap(next, cur);
    }

    field.initial.resize(q * paths);
    for (std::size_t i = 0; i < q; ++i) {
        std::copy(next[top][i].begin(), next[top][i].end(), field.initial.begin() + i * paths);
    }
    return field;
}

} // namespace

PathValueField solve_lsmc_fixed_point(const PathBatch& batch, const SwitchingModel& model,
                                      const RegressionBasis& basis, LsmcOptions options) {
    return backward(batch, model, basis, 0, true, options);
}

PathValueField solve_lsmc_n_switch(const PathBatch& batch, const SwitchingModel& model, const RegressionBasis& basis,
                                   int n, LsmcOptions options) {
    if (n < 0) throw std::invalid_argument("solve_lsmc_n_switch: n must be >= 0");
    return backward(batch, model, basis, n, false, options);
}

} // namespace switching
