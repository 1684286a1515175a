#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "switching/field.hpp"
#include "switching/model.hpp"

namespace switching {

/// Recombining binomial chain: node (m, l) moves up to (m+1, l+1) with
/// probability up[m][l] and down to (m+1, l) otherwise.
struct ChainModel {
    TimeGrid grid;
    std::vector<std::vector<double>> nodes;  // nodes[m][l], l = 0..m
    std::vector<std::vector<double>> up;     // up[m][l], m = 0..N-1
    std::string provenance;

    double expectation(int m, std::size_t l, std::span<const double> next) const {
        const double p = up[m][l];
        return p * next[l + 1] + (1.0 - p) * next[l];
    }
};

/// Weak-order-1 binomial approximation of a 1-D diffusion with p = 1/2.
///
/// Arithmetic BM recombines directly. Geometric BM is built in log space with
/// the per-step log drift chosen so that E[X_{m+1} | X_m] = X_m exp(mu dt)
/// exactly. Ornstein-Uhlenbeck uses fixed spacing sigma sqrt(dt) and
/// node-dependent up-probabilities matching the drift (clamped to [0, 1]).
/// With sigma = 0 every node at time m carries the deterministic state.
ChainModel build_binomial_chain(const DiffusionSpec& diffusion, const TimeGrid& grid);

/// Hand-built chain; throws std::invalid_argument on shape or probability errors.
ChainModel explicit_chain(TimeGrid grid, std::vector<std::vector<double>> nodes, std::vector<std::vector<double>> up);

/// Coupled discrete Snell-envelope system with zero terminal value.
ValueLattice solve_fixed_point(const ChainModel& chain, const SwitchingModel& model);

/// Value with at most n further switches. Level 0 is the no-switch field.
ValueLattice solve_n_switch(const ChainModel& chain, const SwitchingModel& model, int n);

/// Levels 0..n of the n-switch recursion.
std::vector<ValueLattice> solve_n_switch_levels(const ChainModel& chain, const SwitchingModel& model, int n);

/// Expected remaining integral of max_i |psi_i| per node (single-mode field).
ValueLattice payoff_bound(const ChainModel& chain, const SwitchingModel& model);

/// Upper estimate of the enumeration work; enumerate_strategies refuses above
/// kEnumerationLimit.
double enumeration_size(std::size_t modes, int steps, int max_switches);
inline constexpr double kEnumerationLimit = 1e7;

/// Reference value at the root: maximum expected profit over every strategy
/// with at most max_switches switches, searched exhaustively on the
/// non-recombining event tree of the chain. Throws std::length_error when the
/// search would exceed kEnumerationLimit.
double enumerate_strategies(const ChainModel& chain, const SwitchingModel& model, int initial_mode, int max_switches);

/// True when a (chain, model) pair can be solved together.
void require_compatible(const ChainModel& chain, const SwitchingModel& model);

} // namespace switching
