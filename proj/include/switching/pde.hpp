#pragma once

#include <span>
#include <vector>

#include "switching/field.hpp"
#include "switching/model.hpp"

namespace switching {

/// Uniform truncation of the state line: J + 1 nodes on [x_min, x_max].
struct SpaceGrid {
    double x_min = 0.0;
    double x_max = 1.0;
    int intervals = 400;

    double h() const { return (x_max - x_min) / intervals; }
    double x(int j) const { return j == intervals ? x_max : x_min + j * h(); }
};

/// Five standard deviations around x0: x0 exp(-/+ 5 sigma sqrt(T)) for GBM,
/// x0 -/+ 5 sigma sqrt(T) otherwise (widened to include the OU mean level and
/// the deterministic drift). A minimum half-width keeps x0 strictly inside
/// when sigma = 0.
SpaceGrid default_space_grid(const DiffusionSpec& diffusion, double horizon, int intervals = 400);

/// Throws std::invalid_argument unless x_min < x0 < x_max and J >= 8.
void require_valid(const SpaceGrid& space, double x0);

/// Solves A x = d for a tridiagonal A (lower[0] and upper[n-1] are ignored).
std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                      std::span<const double> upper, std::span<const double> rhs);

/// Backward theta-scheme for dv_i/dt + A v_i + psi_i = 0 with v_i(T) = 0,
/// followed at each step by projection onto the inter-connected obstacles
/// v_i >= max_{j != i}(-l_ij(t_m) + v_j) iterated over modes to a fixpoint.
/// Central second differences, upwinded first differences, and linear
/// extrapolation at both ends. For theta < 1 the explicit part must satisfy
/// sigma^2 dt / h^2 + |b| dt / h <= 1 at every interior node.
GridValueField solve_qvi_fd(const SwitchingModel& model, const SpaceGrid& space, double theta = 1.0);

} // namespace switching
