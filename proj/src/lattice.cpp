#include "switching/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "switching/coupling.hpp"

namespace switching {

namespace {

ChainModel empty_chain(const TimeGrid& grid, std::string provenance) {
    ChainModel chain;
    chain.grid = grid;
    chain.provenance = std::move(provenance);
    chain.nodes.resize(grid.steps + 1);
    chain.up.resize(grid.steps);
    for (int m = 0; m <= grid.steps; ++m) {
        chain.nodes[m].assign(m + 1, 0.0);
        if (m < grid.steps) chain.up[m].assign(m + 1, 0.5);
    }
    return chain;
}

std::vector<std::vector<double>> chain_coordinates(const ChainModel& chain) { return chain.nodes; }

} // namespace

ChainModel build_binomial_chain(const DiffusionSpec& diffusion, const TimeGrid& grid) {
    if (diffusion.dimension() != 1) {
        throw std::invalid_argument("build_binomial_chain: lattices require a 1-D diffusion");
    }
    if (grid.steps < 1 || !(grid.horizon > 0.0)) {
        throw std::invalid_argument("build_binomial_chain: invalid time grid");
    }
    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    const double x0 = diffusion.x0[0];
    const double sigma = diffusion.sigma[0];

    switch (diffusion.family) {
    case DiffusionFamily::arithmetic_bm: {
        ChainModel chain = empty_chain(grid, "abm");
        const double mu = diffusion.mu[0];
        for (int m = 0; m <= grid.steps; ++m) {
            for (int l = 0; l <= m; ++l) {
                chain.nodes[m][l] = x0 + mu * m * dt + sigma * sqrt_dt * (2 * l - m);
            }
        }
        return chain;
    }
    case DiffusionFamily::geometric_bm: {
        ChainModel chain = empty_chain(grid, "gbm-log");
        const double mu = diffusion.mu[0];
        const double step = sigma * sqrt_dt;
        // exp(nu) * cosh(step) = exp(mu dt) keeps the conditional mean exact.
        const double nu = mu * dt - std::log(std::cosh(step));
        const double log_x0 = std::log(x0);
        for (int m = 0; m <= grid.steps; ++m) {
            for (int l = 0; l <= m; ++l) {
                chain.nodes[m][l] = std::exp(log_x0 + nu * m + step * (2 * l - m));
            }
        }
        return chain;
    }
    case DiffusionFamily::ornstein_uhlenbeck: {
        ChainModel chain = empty_chain(grid, "ou");
        if (sigma == 0.0) {
            double x = x0;
            for (int m = 0; m <= grid.steps; ++m) {
                for (int l = 0; l <= m; ++l) chain.nodes[m][l] = x;
                x += diffusion.drift(grid.time(m), x) * dt;
            }
            return chain;
        }
        const double step = sigma * sqrt_dt;
        for (int m = 0; m <= grid.steps; ++m) {
            for (int l = 0; l <= m; ++l) {
                const double x = x0 + step * (2 * l - m);
                chain.nodes[m][l] = x;
                if (m < grid.steps) {
                    const double p = 0.5 + diffusion.drift(grid.time(m), x) * sqrt_dt / (2.0 * sigma);
                    chain.up[m][l] = std::clamp(p, 0.0, 1.0);
                }
            }
        }
        return chain;
    }
    }
    throw std::invalid_argument("build_binomial_chain: unknown diffusion family");
}

ChainModel explicit_chain(TimeGrid grid, std::vector<std::vector<double>> nodes, std::vector<std::vector<double>> up) {
    if (grid.steps < 1 || nodes.size() != static_cast<std::size_t>(grid.steps) + 1 ||
        up.size() != static_cast<std::size_t>(grid.steps)) {
        throw std::invalid_argument("explicit_chain: node/probability layers do not match the grid");
    }
    for (int m = 0; m <= grid.steps; ++m) {
        if (nodes[m].size() != static_cast<std::size_t>(m) + 1) {
            throw std::invalid_argument("explicit_chain: layer " + std::to_string(m) + " must have m + 1 nodes");
        }
        if (m < grid.steps) {
            if (up[m].size() != static_cast<std::size_t>(m) + 1) {
                throw std::invalid_argument("explicit_chain: probability layer size mismatch");
            }
            for (double p : up[m]) {
                if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("explicit_chain: probability outside [0, 1]");
            }
        }
    }
    ChainModel chain;
    chain.grid = grid;
    chain.nodes = std::move(nodes);
    chain.up = std::move(up);
    chain.provenance = "explicit";
    return chain;
}

void require_compatible(const ChainModel& chain, const SwitchingModel& model) {
    require_valid(model);
    if (model.diffusion.dimension() != 1) {
        throw std::invalid_argument("lattice solvers require a 1-D model");
    }
    if (!(chain.grid == model.grid)) {
        throw std::invalid_argument("lattice: chain grid (N=" + std::to_string(chain.grid.steps) +
                                    ") does not match model grid (N=" + std::to_string(model.grid.steps) + ")");
    }
}

ValueLattice solve_fixed_point(const ChainModel& chain, const SwitchingModel& model) {
    require_compatible(chain, model);
    const std::size_t q = model.mode_count();
    const int steps = chain.grid.steps;
    const double dt = chain.grid.dt();

    ValueLattice field(q, chain_coordinates(chain), ValueField::Layout::lattice, {.scheme = "fixed_point"});
    std::vector<std::vector<double>> next(q, std::vector<double>(steps + 1, 0.0));
    std::vector<double> cont(q), y(q);
    int max_sweeps = 0;

    for (int m = steps - 1; m >= 0; --m) {
        const double t = chain.grid.time(m);
        const CostTable costs(model, t);
        std::vector<std::vector<double>> cur(q, std::vector<double>(m + 1));
        for (int l = 0; l <= m; ++l) {
            const double x = chain.nodes[m][l];
            for (std::size_t i = 0; i < q; ++i) {
                cont[i] = model.payoffs[i](t, x) * dt + chain.expectation(m, l, next[i]);
            }
            max_sweeps = std::max(max_sweeps, couple_modes(costs, cont, y));
            for (std::size_t i = 0; i < q; ++i) {
                field.continuation(i, m, l) = cont[i];
                field.value(i, m, l) = y[i];
                cur[i][l] = y[i];
            }
        }
        next = std::move(cur);
    }
    field.meta.iterations = max_sweeps;
    return field;
}

namespace {

// Runs levels 0..n backward together; each level needs its own next-step
// layer and the same-time layer of the level below.
std::vector<ValueLattice> n_switch(const ChainModel& chain, const SwitchingModel& model, int n, bool keep_all) {
    require_compatible(chain, model);
    if (n < 0) throw std::invalid_argument("solve_n_switch: n must be >= 0");
    const std::size_t q = model.mode_count();
    const int steps = chain.grid.steps;
    const double dt = chain.grid.dt();
    const std::size_t levels = static_cast<std::size_t>(n) + 1;

    std::vector<ValueLattice> out;
    for (std::size_t r = keep_all ? 0 : levels - 1; r < levels; ++r) {
        out.emplace_back(q, chain_coordinates(chain), ValueField::Layout::lattice,
                         FieldMeta{.scheme = "n_switch", .switches = static_cast<int>(r)});
    }
    auto stored = [&](std::size_t r) -> ValueLattice* {
        if (keep_all) return &out[r];
        return r + 1 == levels ? &out.back() : nullptr;
    };

    // layer[r][i][l]
    using Layer = std::vector<std::vector<std::vector<double>>>;
    Layer next(levels, std::vector<std::vector<double>>(q, std::vector<double>(steps + 1, 0.0)));
    std::vector<double> same_time(q);

    for (int m = steps - 1; m >= 0; --m) {
        const double t = chain.grid.time(m);
        const CostTable costs(model, t);
        Layer cur(levels, std::vector<std::vector<double>>(q, std::vector<double>(m + 1)));
        for (int l = 0; l <= m; ++l) {
            const double x = chain.nodes[m][l];
            for (std::size_t r = 0; r < levels; ++r) {
                if (r > 0) {
                    for (std::size_t j = 0; j < q; ++j) same_time[j] = cur[r - 1][j][l];
                }
                ValueLattice* target = stored(r);
                for (std::size_t i = 0; i < q; ++i) {
                    const double c = model.payoffs[i](t, x) * dt + chain.expectation(m, l, next[r][i]);
                    double y = c;
                    if (r > 0) y = std::max(c, obstacle(costs, same_time, i));
                    cur[r][i][l] = y;
                    if (target) {
                        target->continuation(i, m, l) = c;
                        target->value(i, m, l) = y;
                    }
                }
            }
        }
        next = std::move(cur);
    }
    return out;
}

} // namespace

ValueLattice solve_n_switch(const ChainModel& chain, const SwitchingModel& model, int n) {
    return std::move(n_switch(chain, model, n, false).back());
}

std::vector<ValueLattice> solve_n_switch_levels(const ChainModel& chain, const SwitchingModel& model, int n) {
    return n_switch(chain, model, n, true);
}

ValueLattice payoff_bound(const ChainModel& chain, const SwitchingModel& model) {
    require_compatible(chain, model);
    const int steps = chain.grid.steps;
    const double dt = chain.grid.dt();
    ValueLattice bound(1, chain_coordinates(chain), ValueField::Layout::lattice, {.scheme = "payoff_bound"});
    std::vector<double> next(steps + 1, 0.0);
    for (int m = steps - 1; m >= 0; --m) {
        const double t = chain.grid.time(m);
        std::vector<double> cur(m + 1);
        for (int l = 0; l <= m; ++l) {
            double rate = 0.0;
            for (const auto& psi : model.payoffs) rate = std::max(rate, std::abs(psi(t, chain.nodes[m][l])));
            cur[l] = rate * dt + chain.expectation(m, l, next);
            bound.value(0, m, l) = cur[l];
            bound.continuation(0, m, l) = cur[l];
        }
        next = std::move(cur);
    }
    return bound;
}

double enumeration_size(std::size_t modes, int steps, int max_switches) {
    // (q-1)^s * C(N, s) * 2^N
    const int s = std::min(max_switches, steps);
    double choose = 1.0;
    for (int k = 1; k <= s; ++k) choose = choose * (steps - s + k) / k;
    return std::pow(static_cast<double>(modes - 1), max_switches) * choose * std::pow(2.0, steps);
}

namespace {

struct TreeSearch {
    const ChainModel& chain;
    const SwitchingModel& model;
    double dt;

    // Best expected profit from node (m, l) of the event tree, in `mode`, with
    // `budget` switches left. Each call explores the subtree independently, so
    // decisions may depend on the full history of the path.
    double best(int m, std::size_t l, std::size_t mode, int budget) const {
        if (m == chain.grid.steps) return 0.0;
        const double t = chain.grid.time(m);
        const double x = chain.nodes[m][l];
        const double p = chain.up[m][l];
        double value = model.payoffs[mode](t, x) * dt + p * best(m + 1, l + 1, mode, budget) +
                       (1.0 - p) * best(m + 1, l, mode, budget);
        if (budget > 0) {
            for (std::size_t j = 0; j < model.mode_count(); ++j) {
                if (j == mode) continue;
                const double switched = -evaluate_cost(model, static_cast<int>(mode), static_cast<int>(j), t) +
                                        best(m, l, j, budget - 1);
                value = std::max(value, switched);
            }
        }
        return value;
    }
};

} // namespace

double enumerate_strategies(const ChainModel& chain, const SwitchingModel& model, int initial_mode, int max_switches) {
    require_compatible(chain, model);
    if (max_switches < 0) throw std::invalid_argument("enumerate_strategies: max_switches must be >= 0");
    if (initial_mode < 0 || static_cast<std::size_t>(initial_mode) >= model.mode_count()) {
        throw std::out_of_range("enumerate_strategies: initial mode out of range");
    }
    const double size = enumeration_size(model.mode_count(), chain.grid.steps, max_switches);
    if (size > kEnumerationLimit) {
        throw std::length_error("enumerate_strategies: estimated search size " + std::to_string(size) +
                                " exceeds limit " + std::to_string(kEnumerationLimit));
    }
    const TreeSearch search{chain, model, chain.grid.dt()};
    return search.best(0, 0, static_cast<std::size_t>(initial_mode), max_switches);
}

} // namespace switching
