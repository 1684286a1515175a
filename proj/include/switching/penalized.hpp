#pragma once

#include <vector>

#include "switching/field.hpp"
#include "switching/lattice.hpp"

namespace switching {

struct PenaltySchedule {
    std::vector<double> penalties{1, 2, 4, 8, 16, 32, 64, 128, 256};
    int max_sweeps = 200;
    double tolerance = 1e-10;
};

/// Throws std::invalid_argument unless penalties are positive and strictly
/// increasing, max_sweeps >= 1 and tolerance > 0.
void require_valid(const PenaltySchedule& schedule);

/// Penalized approximation of the coupled system on the chain.
///
/// Picard iterate k solves, backward in time at every node,
///   y = c + penalty * dt * (L - y)^+,
///   c = psi_i dt + E[y_{m+1}],  L = max_{j != i}(-l_ij + Y^{k-1}_j)  (same node),
/// in closed form: y = c if L <= c, else (c + penalty dt L) / (1 + penalty dt).
/// Iterate 0 is the no-switch field. Iteration stops when successive iterates
/// differ by less than `tolerance` in sup norm; meta.converged is false if
/// `max_sweeps` is reached first. A penalty of 0 returns the no-switch field.
ValueLattice solve_penalized(const ChainModel& chain, const SwitchingModel& model, double penalty, int max_sweeps = 200,
                             double tolerance = 1e-10);

/// Sup over (i, m, l) of (max_{j != i}(-l_ij + Y_j) - Y_i)^+ and the
/// probability-weighted penalty mass sum_m dt * E[penalty * (L - Y)^+] from the root.
struct ObstacleViolation {
    double sup = 0.0;
    double mass = 0.0;
};
ObstacleViolation obstacle_violation(const ChainModel& chain, const SwitchingModel& model, const ValueLattice& field,
                                     double penalty);

/// Gap between two lattices as max over time of the root-started
/// root-mean-square difference: max_m sqrt(E[max_i (A - B)^2 at (m, X_m)]).
double lattice_gap(const ChainModel& chain, const ValueLattice& a, const ValueLattice& b);

struct ConvergenceRow {
    double penalty = 0.0;
    double gap = 0.0;            // lattice_gap to the fixed point
    double entrywise_gap = 0.0;  // max over every (i, m, l)
    double slope_so_far = 0.0;   // least-squares slope of log gap vs log penalty over rows so far (NaN for row 0)
    bool converged = true;
    int sweeps = 0;
    double violation_sup = 0.0;
    double violation_mass = 0.0;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    double slope = 0.0;
    bool gaps_nonincreasing = true;
    bool monotone_in_penalty = true;   // Y(n) <= Y(n') entrywise up to 1e-9
    bool dominated = true;             // Y(n) <= fixed point entrywise up to 1e-9
    bool all_converged = true;
};

ConvergenceReport penalty_sweep(const ChainModel& chain, const SwitchingModel& model, const PenaltySchedule& schedule);

/// Least-squares slope of log(y) against log(x); pairs with y <= 0 are skipped.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

} // namespace switching
