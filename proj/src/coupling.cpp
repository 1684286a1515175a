#include "switching/coupling.hpp"

#include <limits>
#include <stdexcept>

namespace switching {

CostTable::CostTable(const SwitchingModel& model, double t) : q_(model.mode_count()), cost_(q_ * q_, 0.0) {
    for (std::size_t i = 0; i < q_; ++i) {
        for (std::size_t j = 0; j < q_; ++j) {
            if (i != j) cost_[i * q_ + j] = evaluate_cost(model, static_cast<int>(i), static_cast<int>(j), t);
        }
    }
}

double obstacle(const CostTable& costs, std::span<const double> values, std::size_t i, std::size_t* target) {
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_j = i;
    for (std::size_t j = 0; j < costs.modes(); ++j) {
        if (j == i) continue;
        const double candidate = -costs(i, j) + values[j];
        if (candidate > best) {
            best = candidate;
            best_j = j;
        }
    }
    if (target) *target = best_j;
    return best;
}

int couple_modes(const CostTable& costs, std::span<const double> continuation, std::span<double> values) {
    const std::size_t q = costs.modes();
    for (std::size_t i = 0; i < q; ++i) values[i] = continuation[i];
    for (std::size_t sweep = 1; sweep <= q; ++sweep) {
        bool changed = false;
        for (std::size_t i = 0; i < q; ++i) {
            const double candidate = obstacle(costs, values, i);
            if (candidate > values[i]) {
                values[i] = candidate;
                changed = true;
            }
        }
        if (!changed) return static_cast<int>(sweep);
    }
    throw std::logic_error("couple_modes: no fixpoint within q sweeps (zero-cost switching cycle?)");
}

} // namespace switching
