#include "switching/penalized.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "switching/coupling.hpp"

namespace switching {

void require_valid(const PenaltySchedule& schedule) {
    if (schedule.penalties.empty()) throw std::invalid_argument("penalty schedule is empty");
    for (std::size_t k = 0; k < schedule.penalties.size(); ++k) {
        if (!(schedule.penalties[k] > 0.0)) throw std::invalid_argument("penalties must be positive");
        if (k > 0 && !(schedule.penalties[k] > schedule.penalties[k - 1])) {
            throw std::invalid_argument("penalties must be strictly increasing");
        }
    }
    if (schedule.max_sweeps < 1) throw std::invalid_argument("max_sweeps must be >= 1");
    if (!(schedule.tolerance > 0.0)) throw std::invalid_argument("Picard tolerance must be > 0");
}

ValueLattice solve_penalized(const ChainModel& chain, const SwitchingModel& model, double penalty, int max_sweeps,
                             double tolerance) {
    if (!(penalty >= 0.0)) throw std::invalid_argument("solve_penalized: penalty must be >= 0");
    if (max_sweeps < 1 || !(tolerance > 0.0)) throw std::invalid_argument("solve_penalized: invalid Picard controls");

    ValueLattice previous = solve_n_switch(chain, model, 0);
    previous.meta = {.scheme = "penalized", .penalty = penalty, .converged = true, .iterations = 0};
    if (penalty == 0.0) return previous;

    const std::size_t q = model.mode_count();
    const int steps = chain.grid.steps;
    const double dt = chain.grid.dt();
    const double weight = penalty * dt;

    ValueLattice current = previous;
    std::vector<double> same_time(q);
    for (int sweep = 1; sweep <= max_sweeps; ++sweep) {
        std::vector<std::vector<double>> next(q, std::vector<double>(steps + 1, 0.0));
        for (int m = steps - 1; m >= 0; --m) {
            const double t = chain.grid.time(m);
            const CostTable costs(model, t);
            std::vector<std::vector<double>> cur(q, std::vector<double>(m + 1));
            for (int l = 0; l <= m; ++l) {
                const double x = chain.nodes[m][l];
                for (std::size_t j = 0; j < q; ++j) same_time[j] = previous.value(j, m, l);
                for (std::size_t i = 0; i < q; ++i) {
                    const double c = model.payoffs[i](t, x) * dt + chain.expectation(m, l, next[i]);
                    const double barrier = obstacle(costs, same_time, i);
                    const double y = barrier <= c ? c : (c + weight * barrier) / (1.0 + weight);
                    current.continuation(i, m, l) = c;
                    current.value(i, m, l) = y;
                    cur[i][l] = y;
                }
            }
            next = std::move(cur);
        }
        const double change = max_abs_difference(current, previous);
        current.meta.iterations = sweep;
        if (change < tolerance) {
            current.meta.converged = true;
            return current;
        }
        previous = current;
    }
    current.meta.converged = false;
    return current;
}

namespace {

// Probability of each node under the chain started at the root.
std::vector<std::vector<double>> node_weights(const ChainModel& chain) {
    std::vector<std::vector<double>> w(chain.grid.steps + 1);
    w[0] = {1.0};
    for (int m = 0; m < chain.grid.steps; ++m) {
        w[m + 1].assign(m + 2, 0.0);
        for (int l = 0; l <= m; ++l) {
            const double p = chain.up[m][l];
            w[m + 1][l + 1] += p * w[m][l];
            w[m + 1][l] += (1.0 - p) * w[m][l];
        }
    }
    return w;
}

} // namespace

ObstacleViolation obstacle_violation(const ChainModel& chain, const SwitchingModel& model, const ValueLattice& field,
                                     double penalty) {
    const std::size_t q = model.mode_count();
    const auto weights = node_weights(chain);
    const double dt = chain.grid.dt();
    ObstacleViolation out;
    std::vector<double> same_time(q);
    for (int m = 0; m < chain.grid.steps; ++m) {
        const CostTable costs(model, chain.grid.time(m));
        for (int l = 0; l <= m; ++l) {
            for (std::size_t j = 0; j < q; ++j) same_time[j] = field.value(j, m, l);
            for (std::size_t i = 0; i < q; ++i) {
                const double excess = std::max(0.0, obstacle(costs, same_time, i) - same_time[i]);
                out.sup = std::max(out.sup, excess);
                out.mass += weights[m][l] * penalty * excess * dt;
            }
        }
    }
    return out;
}

double lattice_gap(const ChainModel& chain, const ValueLattice& a, const ValueLattice& b) {
    const auto weights = node_weights(chain);
    double gap = 0.0;
    for (int m = 0; m <= chain.grid.steps; ++m) {
        double second = 0.0;
        for (int l = 0; l <= m; ++l) {
            double d = 0.0;
            for (std::size_t i = 0; i < a.modes(); ++i) d = std::max(d, std::abs(a.value(i, m, l) - b.value(i, m, l)));
            second += weights[m][l] * d * d;
        }
        gap = std::max(gap, std::sqrt(second));
    }
    return gap;
}

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < x.size() && k < y.size(); ++k) {
        if (!(x[k] > 0.0) || !(y[k] > 0.0)) continue;
        const double lx = std::log(x[k]);
        const double ly = std::log(y[k]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    const double denom = n * sxx - sx * sx;
    return denom == 0.0 ? std::numeric_limits<double>::quiet_NaN() : (n * sxy - sx * sy) / denom;
}

ConvergenceReport penalty_sweep(const ChainModel& chain, const SwitchingModel& model, const PenaltySchedule& schedule) {
    require_valid(schedule);
    const ValueLattice reference = solve_fixed_point(chain, model);
    constexpr double kTol = 1e-9;

    ConvergenceReport report;
    std::vector<double> xs, ys;
    ValueLattice previous;
    bool have_previous = false;
    for (double penalty : schedule.penalties) {
        const ValueLattice field = solve_penalized(chain, model, penalty, schedule.max_sweeps, schedule.tolerance);
        ConvergenceRow row;
        row.penalty = penalty;
        row.gap = lattice_gap(chain, field, reference);
        row.entrywise_gap = max_abs_difference(field, reference);
        row.converged = field.meta.converged;
        row.sweeps = field.meta.iterations;
        const auto violation = obstacle_violation(chain, model, field, penalty);
        row.violation_sup = violation.sup;
        row.violation_mass = violation.mass;
        xs.push_back(penalty);
        ys.push_back(row.gap);
        row.slope_so_far = log_log_slope(xs, ys);

        for (std::size_t i = 0; i < field.modes(); ++i) {
            for (int m = 0; m <= chain.grid.steps; ++m) {
                for (std::size_t l = 0; l < field.nodes(m); ++l) {
                    const double y = field.value(i, m, l);
                    if (y > reference.value(i, m, l) + kTol) report.dominated = false;
                    if (have_previous && previous.value(i, m, l) > y + kTol) report.monotone_in_penalty = false;
                }
            }
        }
        if (!report.rows.empty() && row.gap > report.rows.back().gap + kTol) report.gaps_nonincreasing = false;
        report.all_converged = report.all_converged && row.converged;
        report.rows.push_back(row);
        previous = field;
        have_previous = true;
    }
    report.slope = log_log_slope(xs, ys);
    return report;
}

} // namespace switching
