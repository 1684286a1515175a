#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "switching/field.hpp"
#include "switching/lattice.hpp"
#include "switching/model.hpp"
#include "switching/paths.hpp"

namespace switching {

inline constexpr int kContinue = -1;

/// Per (mode, time index, node): kContinue or the 0-based mode to switch to.
/// No action is ever taken at m = N.
class DecisionRule {
public:
    DecisionRule() = default;
    DecisionRule(std::size_t modes, std::vector<std::vector<double>> node_x, std::string source);

    std::size_t modes() const { return modes_; }
    int steps() const { return static_cast<int>(node_x_.size()) - 1; }
    std::size_t nodes(int m) const { return node_x_[m].size(); }
    std::span<const double> x(int m) const { return node_x_[m]; }
    const std::string& source() const { return source_; }

    int action(std::size_t i, int m, std::size_t k) const { return actions_[index(i, m, k)]; }
    /// Throws std::invalid_argument for a self-switch target or an action at m = N.
    void set_action(std::size_t i, int m, std::size_t k, int action);

    /// Nearest node at time m; sets *clamped when x lies outside the node range.
    std::size_t locate(int m, double x, bool* clamped = nullptr) const;

    bool continues_everywhere() const;

private:
    std::size_t index(std::size_t i, int m, std::size_t k) const { return i * per_mode_ + offsets_[m] + k; }

    std::size_t modes_ = 0;
    std::vector<std::vector<double>> node_x_;
    std::vector<std::size_t> offsets_;
    std::size_t per_mode_ = 0;
    std::vector<int> actions_;
    std::string source_;
};

/// Rules indexed by the number of switches still allowed: layers[r] applies
/// with r switches left; layers[0] always continues.
struct LayeredRule {
    std::vector<DecisionRule> layers;
};

/// Switch from i to j* = argmax_j(-l_ij + Y_j) (smallest index on ties) iff
/// that obstacle is >= continuation + tolerance * max(1, |continuation|).
/// Obstacle values come from `obstacle_values` when given (the level below for
/// n-switch fields), otherwise from the field itself.
DecisionRule extract_rule(const ValueField& field, const SwitchingModel& model,
                          const ValueField* obstacle_values = nullptr, double tolerance = 1e-9);

/// Layer r from n-switch level r with obstacles from level r - 1.
LayeredRule extract_layered_rule(const std::vector<ValueField>& levels, const SwitchingModel& model,
                                 double tolerance = 1e-9);

struct SwitchEvent {
    std::size_t path = 0;
    int m = 0;
    int from = 0;
    int to = 0;
    double cost = 0.0;
};

struct ExecutionReport {
    bool exact = false;                   // chain expectation rather than a sample mean
    std::size_t samples = 0;
    std::vector<double> profits;          // per path
    std::vector<int> switch_counts;       // per path
    std::vector<SwitchEvent> log;         // first `log_limit` events
    double mean = 0.0;
    double stderr_ = 0.0;
    std::vector<double> switch_histogram; // fraction of paths (or probability) per switch count
    std::size_t clamped = 0;              // path states outside the rule's node range
    std::size_t capped = 0;               // switch requests refused by the per-step cap q - 1
    int max_switches = 0;
};

struct ExecutionOptions {
    std::size_t log_limit = 100000;
};

/// Exact expected profit on the chain by forward propagation of probability mass.
/// Within a step the rule is applied repeatedly (at most q - 1 switches) before
/// the step's payoff accrues in the resulting mode.
ExecutionReport execute(const DecisionRule& rule, const ChainModel& chain, const SwitchingModel& model,
                        int initial_mode);
/// As above with at most `budget` switches in total, using layers[remaining].
ExecutionReport execute(const LayeredRule& rule, const ChainModel& chain, const SwitchingModel& model,
                        int initial_mode, int budget);
/// Sample-mean profit over simulated paths; states are mapped to the nearest
/// rule node and the payoff is evaluated at the simulated state.
ExecutionReport execute(const DecisionRule& rule, const PathBatch& batch, const SwitchingModel& model,
                        int initial_mode, ExecutionOptions options = {});

struct OptimalityGap {
    double gap = 0.0;
    std::optional<double> z;  // gap / stderr for sampled reports
};

OptimalityGap optimality_gap(const ExecutionReport& report, double reference_value);

} // namespace switching
