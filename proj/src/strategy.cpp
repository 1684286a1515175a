#include "switching/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "switching/coupling.hpp"

namespace switching {

DecisionRule::DecisionRule(std::size_t modes, std::vector<std::vector<double>> node_x, std::string source)
    : modes_(modes), node_x_(std::move(node_x)), source_(std::move(source)) {
    for (const auto& xs : node_x_) {
        offsets_.push_back(per_mode_);
        per_mode_ += xs.size();
    }
    actions_.assign(modes_ * per_mode_, kContinue);
}

void DecisionRule::set_action(std::size_t i, int m, std::size_t k, int action) {
    if (action != kContinue) {
        if (m == steps()) throw std::invalid_argument("decision rule: no switching at the horizon");
        if (action < 0 || static_cast<std::size_t>(action) >= modes_ || static_cast<std::size_t>(action) == i) {
            throw std::invalid_argument("decision rule: switch target must be a different mode");
        }
    }
    actions_[index(i, m, k)] = action;
}

std::size_t DecisionRule::locate(int m, double x, bool* clamped) const {
    const auto xs = this->x(m);
    if (clamped) *clamped = x < xs.front() || x > xs.back();
    const auto it = std::lower_bound(xs.begin(), xs.end(), x);
    if (it == xs.begin()) return 0;
    if (it == xs.end()) return xs.size() - 1;
    const auto hi = static_cast<std::size_t>(it - xs.begin());
    return (x - xs[hi - 1] <= xs[hi] - x) ? hi - 1 : hi;
}

bool DecisionRule::continues_everywhere() const {
    return std::all_of(actions_.begin(), actions_.end(), [](int a) { return a == kContinue; });
}

namespace {

void require_terminal(const ValueField& field) {
    const int steps = field.steps();
    for (std::size_t i = 0; i < field.modes(); ++i) {
        for (std::size_t k = 0; k < field.nodes(steps); ++k) {
            if (field.value(i, steps, k) != 0.0) {
                throw std::invalid_argument("extract_rule: field violates the zero terminal condition");
            }
        }
    }
}

std::vector<std::vector<double>> coordinates(const ValueField& field) {
    std::vector<std::vector<double>> xs;
    for (int m = 0; m <= field.steps(); ++m) xs.emplace_back(field.x(m).begin(), field.x(m).end());
    return xs;
}

} // namespace

DecisionRule extract_rule(const ValueField& field, const SwitchingModel& model, const ValueField* obstacle_values,
                          double tolerance) {
    const std::size_t q = model.mode_count();
    if (field.modes() != q || field.steps() != model.grid.steps) {
        throw std::invalid_argument("extract_rule: field does not match the model (modes or time steps)");
    }
    if (obstacle_values && (obstacle_values->modes() != q || obstacle_values->steps() != field.steps())) {
        throw std::invalid_argument("extract_rule: obstacle field shape mismatch");
    }
    require_terminal(field);
    const ValueField& source = obstacle_values ? *obstacle_values : field;

    DecisionRule rule(q, coordinates(field), field.meta.scheme);
    std::vector<double> same_time(q);
    for (int m = 0; m < field.steps(); ++m) {
        const CostTable costs(model, model.grid.time(m));
        for (std::size_t k = 0; k < field.nodes(m); ++k) {
            for (std::size_t j = 0; j < q; ++j) same_time[j] = source.value(j, m, k);
            for (std::size_t i = 0; i < q; ++i) {
                const double c = field.continuation(i, m, k);
                std::size_t target = i;
                const double barrier = obstacle(costs, same_time, i, &target);
                if (barrier >= c + tolerance * std::max(1.0, std::abs(c))) {
                    rule.set_action(i, m, k, static_cast<int>(target));
                }
            }
        }
    }
    return rule;
}

LayeredRule extract_layered_rule(const std::vector<ValueField>& levels, const SwitchingModel& model,
                                 double tolerance) {
    if (levels.empty()) throw std::invalid_argument("extract_layered_rule: no levels");
    LayeredRule out;
    out.layers.push_back(DecisionRule(model.mode_count(), coordinates(levels[0]), "n_switch/0"));
    for (std::size_t r = 1; r < levels.size(); ++r) {
        out.layers.push_back(extract_rule(levels[r], model, &levels[r - 1], tolerance));
    }
    return out;
}

namespace {

// Rule lookup shared by the plain and the budgeted executions. For budgeted
// policies the layer is chosen by the number of switches still allowed.
struct Policy {
    const std::vector<DecisionRule>* layers;
    int budget;  // < 0: unlimited, single layer

    const DecisionRule& front() const { return layers->front(); }
    int action(std::size_t mode, int m, std::size_t k, int used) const {
        if (budget < 0) return (*layers)[0].action(mode, m, k);
        const int left = budget - used;
        if (left <= 0) return kContinue;
        const auto layer = static_cast<std::size_t>(std::min<int>(left, static_cast<int>(layers->size()) - 1));
        return (*layers)[layer].action(mode, m, k);
    }
};

void require_rule_shape(const DecisionRule& rule, const SwitchingModel& model) {
    if (rule.modes() != model.mode_count() || rule.steps() != model.grid.steps) {
        throw std::invalid_argument("execute: rule does not match the model (modes or time steps)");
    }
}

ExecutionReport execute_chain(const Policy& policy, const ChainModel& chain, const SwitchingModel& model,
                              int initial_mode) {
    require_compatible(chain, model);
    for (const auto& layer : *policy.layers) {
        require_rule_shape(layer, model);
        for (int m = 0; m <= chain.grid.steps; ++m) {
            if (layer.nodes(m) != chain.nodes[m].size()) {
                throw std::invalid_argument("execute: rule nodes do not match the chain");
            }
        }
    }
    if (initial_mode < 0 || static_cast<std::size_t>(initial_mode) >= model.mode_count()) {
        throw std::out_of_range("execute: initial mode out of range");
    }
    const std::size_t q = model.mode_count();
    const int steps = chain.grid.steps;
    const double dt = chain.grid.dt();
    const int max_count = policy.budget >= 0 ? policy.budget : static_cast<int>(q - 1) * steps;
    const std::size_t counts = static_cast<std::size_t>(max_count) + 1;

    // mass[(mode * counts + count)][l]
    std::vector<std::vector<double>> mass(q * counts, std::vector<double>(1, 0.0));
    mass[static_cast<std::size_t>(initial_mode) * counts][0] = 1.0;

    ExecutionReport report;
    report.exact = true;
    report.samples = 1;
    double profit = 0.0;

    for (int m = 0; m < steps; ++m) {
        const double t = chain.grid.time(m);
        const CostTable costs(model, t);
        std::vector<std::vector<double>> next(q * counts, std::vector<double>(m + 2, 0.0));
        for (std::size_t mode0 = 0; mode0 < q; ++mode0) {
            for (std::size_t c0 = 0; c0 < counts; ++c0) {
                const auto& layer = mass[mode0 * counts + c0];
                for (int l = 0; l <= m; ++l) {
                    const double w = layer[l];
                    if (w == 0.0) continue;
                    std::size_t mode = mode0;
                    std::size_t count = c0;
                    for (std::size_t hop = 0;; ++hop) {
                        const int a = policy.action(mode, m, l, static_cast<int>(count));
                        if (a == kContinue) break;
                        if (hop + 1 >= q || count + 1 >= counts) {
                            ++report.capped;
                            break;
                        }
                        profit -= w * costs(mode, static_cast<std::size_t>(a));
                        mode = static_cast<std::size_t>(a);
                        ++count;
                    }
                    profit += w * model.payoffs[mode](t, chain.nodes[m][l]) * dt;
                    const double p = chain.up[m][l];
                    auto& dest = next[mode * counts + count];
                    dest[l + 1] += p * w;
                    dest[l] += (1.0 - p) * w;
                }
            }
        }
        mass = std::move(next);
    }

    report.switch_histogram.assign(counts, 0.0);
    for (std::size_t mode = 0; mode < q; ++mode) {
        for (std::size_t c = 0; c < counts; ++c) {
            for (double w : mass[mode * counts + c]) report.switch_histogram[c] += w;
        }
    }
    while (report.switch_histogram.size() > 1 && report.switch_histogram.back() == 0.0) {
        report.switch_histogram.pop_back();
    }
    report.max_switches = static_cast<int>(report.switch_histogram.size()) - 1;
    report.mean = profit;
    report.stderr_ = 0.0;
    return report;
}

} // namespace

ExecutionReport execute(const DecisionRule& rule, const ChainModel& chain, const SwitchingModel& model,
                        int initial_mode) {
    const std::vector<DecisionRule> layers{rule};
    return execute_chain(Policy{&layers, -1}, chain, model, initial_mode);
}

ExecutionReport execute(const LayeredRule& rule, const ChainModel& chain, const SwitchingModel& model,
                        int initial_mode, int budget) {
    if (rule.layers.empty()) throw std::invalid_argument("execute: empty layered rule");
    if (budget < 0) throw std::invalid_argument("execute: budget must be >= 0");
    return execute_chain(Policy{&rule.layers, budget}, chain, model, initial_mode);
}

ExecutionReport execute(const DecisionRule& rule, const PathBatch& batch, const SwitchingModel& model,
                        int initial_mode, ExecutionOptions options) {
    require_valid(model);
    require_rule_shape(rule, model);
    if (!(batch.grid == model.grid)) throw std::invalid_argument("execute: batch grid does not match model grid");
    if (batch.dim != 1) throw std::invalid_argument("execute: nodal rules apply to 1-D paths only");
    if (initial_mode < 0 || static_cast<std::size_t>(initial_mode) >= model.mode_count()) {
        throw std::out_of_range("execute: initial mode out of range");
    }
    const std::size_t q = model.mode_count();
    const int steps = batch.grid.steps;
    const double dt = batch.grid.dt();

    std::vector<CostTable> costs;
    costs.reserve(steps);
    for (int m = 0; m < steps; ++m) costs.emplace_back(model, batch.grid.time(m));

    ExecutionReport report;
    report.samples = batch.paths;
    report.profits.resize(batch.paths);
    report.switch_counts.resize(batch.paths);
    for (std::size_t p = 0; p < batch.paths; ++p) {
        std::size_t mode = static_cast<std::size_t>(initial_mode);
        int count = 0;
        double profit = 0.0;
        for (int m = 0; m < steps; ++m) {
            const double t = batch.grid.time(m);
            const double x = batch.at(p, m);
            bool clamped = false;
            const std::size_t k = rule.locate(m, x, &clamped);
            if (clamped) ++report.clamped;
            for (std::size_t hop = 0;; ++hop) {
                const int a = rule.action(mode, m, k);
                if (a == kContinue) break;
                if (hop + 1 >= q) {
                    ++report.capped;
                    break;
                }
                const double cost = costs[m](mode, static_cast<std::size_t>(a));
                profit -= cost;
                if (report.log.size() < options.log_limit) {
                    report.log.push_back({p, m, static_cast<int>(mode), a, cost});
                }
                mode = static_cast<std::size_t>(a);
                ++count;
            }
            profit += model.payoffs[mode](t, x) * dt;
        }
        report.profits[p] = profit;
        report.switch_counts[p] = count;
        report.max_switches = std::max(report.max_switches, count);
    }

    double sum = 0.0;
    for (double v : report.profits) sum += v;
    report.mean = sum / batch.paths;
    double ss = 0.0;
    for (double v : report.profits) ss += (v - report.mean) * (v - report.mean);
    report.stderr_ = batch.paths > 1 ? std::sqrt(ss / (batch.paths - 1) / batch.paths) : 0.0;
    report.switch_histogram.assign(static_cast<std::size_t>(report.max_switches) + 1, 0.0);
    for (int c : report.switch_counts) report.switch_histogram[c] += 1.0 / batch.paths;
    return report;
}

OptimalityGap optimality_gap(const ExecutionReport& report, double reference_value) {
    OptimalityGap out;
    out.gap = reference_value - report.mean;
    if (!report.exact && report.stderr_ > 0.0) out.z = out.gap / report.stderr_;
    return out;
}

} // namespace switching
