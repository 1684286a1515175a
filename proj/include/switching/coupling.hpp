#pragma once

#include <span>
#include <vector>

#include "switching/model.hpp"

namespace switching {

/// Switching costs l_ij(t) at one time, stored row-major q x q (diagonal 0).
class CostTable {
public:
    CostTable(const SwitchingModel& model, double t);

    std::size_t modes() const { return q_; }
    double operator()(std::size_t i, std::size_t j) const { return cost_[i * q_ + j]; }

private:
    std::size_t q_;
    std::vector<double> cost_;
};

/// Best switch target from mode i given same-time values: returns the obstacle
/// max_{j != i}(-l_ij + values[j]) and writes the argmax (smallest index on ties).
double obstacle(const CostTable& costs, std::span<const double> values, std::size_t i, std::size_t* target = nullptr);

/// Solves y_i = max(c_i, max_{j != i}(-l_ij + y_j)) by Gauss-Seidel sweeps over
/// the modes starting from y = c. Every cycle of switches has positive cost,
/// so no more than q sweeps are needed (the last one confirms). Returns the
/// sweep count; throws std::logic_error if the sweep bound is exceeded.
int couple_modes(const CostTable& costs, std::span<const double> continuation, std::span<double> values);

} // namespace switching
