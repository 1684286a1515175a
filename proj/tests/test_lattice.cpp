#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "instances.hpp"
#include "switching/coupling.hpp"
#include "switching/lattice.hpp"

using namespace switching;
using switching::testing::deterministic_instance;
using switching::testing::random_instance;

namespace {

// Open-loop brute force for deterministic chains: every mode sequence
// u_0..u_{N-1}, paying for each change (including from the initial mode).
// Only direct switches are priced, so costs must satisfy the triangle inequality.
double best_sequence(const SwitchingModel& model, const ChainModel& chain, int initial_mode, int max_switches) {
    const int steps = chain.grid.steps;
    const int q = static_cast<int>(model.mode_count());
    double best = -INFINITY;
    std::vector<int> u(steps, 0);
    const long total = static_cast<long>(std::pow(q, steps));
    for (long code = 0; code < total; ++code) {
        long c = code;
        for (int m = 0; m < steps; ++m) {
            u[m] = static_cast<int>(c % q);
            c /= q;
        }
        int prev = initial_mode, switches = 0;
        double profit = 0.0;
        for (int m = 0; m < steps; ++m) {
            const double t = chain.grid.time(m);
            if (u[m] != prev) {
                profit -= evaluate_cost(model, prev, u[m], t);
                ++switches;
            }
            profit += evaluate_payoff(model, u[m], t, chain.nodes[m][0]) * chain.grid.dt();
            prev = u[m];
        }
        if (switches <= max_switches) best = std::max(best, profit);
    }
    return best;
}

} // namespace

TEST_CASE("binomial chain node sets") {
    SUBCASE("symmetric random walk") {
        const auto chain = build_binomial_chain(DiffusionSpec::arithmetic(0.0, 0.0, 1.0), {2.0, 2});
        CHECK(chain.nodes[2] == std::vector<double>{-2.0, 0.0, 2.0});
        for (const auto& layer : chain.up)
            for (double p : layer) CHECK(p == 0.5);
    }
    SUBCASE("deterministic drift") {
        const auto chain = build_binomial_chain(DiffusionSpec::arithmetic(0.0, 1.0, 0.0), {3.0, 3});
        for (int m = 0; m <= 3; ++m)
            for (double x : chain.nodes[m]) CHECK(x == doctest::Approx(m).epsilon(1e-15));
    }
    SUBCASE("geometric BM in log space") {
        const double sigma = 0.2, dt = 0.5;
        const auto chain = build_binomial_chain(DiffusionSpec::geometric(1.0, 0.0, sigma), {1.0, 2});
        const double step = sigma * std::sqrt(dt);
        const double shift = -std::log(std::cosh(step));
        for (int l = 0; l <= 2; ++l) {
            CHECK(std::log(chain.nodes[2][l]) == doctest::Approx(2 * shift + step * (2 * l - 2)).epsilon(1e-14));
        }
        // Terminal moments vs the closed form E[X_T] = 1, E[X_T^2] = exp(sigma^2 T).
        double first = 0.0, second = 0.0;
        const double w[] = {0.25, 0.5, 0.25};
        for (int l = 0; l <= 2; ++l) {
            first += w[l] * chain.nodes[2][l];
            second += w[l] * chain.nodes[2][l] * chain.nodes[2][l];
        }
        CHECK(first == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(std::abs(second - std::exp(sigma * sigma)) <= sigma * sigma * sigma * sigma * dt * 2);
    }
    SUBCASE("geometric BM mean is exact on a fine chain") {
        const auto chain = build_binomial_chain(DiffusionSpec::geometric(2.0, 0.05, 0.3), {1.0, 50});
        std::vector<double> mass{1.0};
        for (int m = 0; m < 50; ++m) {
            std::vector<double> next(m + 2, 0.0);
            for (int l = 0; l <= m; ++l) {
                next[l + 1] += chain.up[m][l] * mass[l];
                next[l] += (1 - chain.up[m][l]) * mass[l];
            }
            mass = next;
        }
        double mean = 0.0;
        for (int l = 0; l <= 50; ++l) mean += mass[l] * chain.nodes[50][l];
        CHECK(mean == doctest::Approx(2.0 * std::exp(0.05)).epsilon(1e-12));
    }
    SUBCASE("Ornstein-Uhlenbeck matches the drift") {
        const auto d = DiffusionSpec::ornstein_uhlenbeck(0.5, 2.0, 1.0, 0.4);
        const TimeGrid grid{1.0, 20};
        const auto chain = build_binomial_chain(d, grid);
        const double dt = grid.dt();
        for (int m = 0; m < grid.steps; ++m) {
            for (int l = 0; l <= m; ++l) {
                const double p = chain.up[m][l];
                if (p == 0.0 || p == 1.0) continue;
                const double x = chain.nodes[m][l];
                const double mean = p * chain.nodes[m + 1][l + 1] + (1 - p) * chain.nodes[m + 1][l] - x;
                CHECK(mean == doctest::Approx(d.drift(0.0, x) * dt).epsilon(1e-12));
            }
        }
    }
    SUBCASE("errors") {
        DiffusionSpec two = DiffusionSpec::arithmetic(0.0, 0.0, 1.0);
        two.x0.push_back(0.0);
        two.mu.push_back(0.0);
        two.sigma.push_back(1.0);
        CHECK_THROWS_AS(build_binomial_chain(two, {1.0, 2}), std::invalid_argument);
        CHECK_THROWS_AS(explicit_chain({1.0, 1}, {{0.0}, {0.0, 1.0}}, {{1.5}}), std::invalid_argument);
        CHECK_THROWS_AS(explicit_chain({1.0, 1}, {{0.0}, {0.0}}, {{0.5}}), std::invalid_argument);
    }
}

TEST_CASE("deterministic two-step instance") {
    const auto model = deterministic_instance();
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    const auto fp = solve_fixed_point(chain, model);
    CHECK(fp.value(0, 0, 0) == doctest::Approx(5.0).epsilon(1e-14));
    CHECK(fp.value(1, 0, 0) == doctest::Approx(6.0).epsilon(1e-14));
    CHECK(best_sequence(model, chain, 0, 2) == 5.0);
    CHECK(best_sequence(model, chain, 1, 2) == 6.0);

    CHECK(solve_n_switch(chain, model, 0).value(0, 0, 0) == doctest::Approx(2.0));
    CHECK(solve_n_switch(chain, model, 1).value(0, 0, 0) == doctest::Approx(5.0));
    CHECK(enumerate_strategies(chain, model, 0, 1) == doctest::Approx(5.0));
    CHECK(enumerate_strategies(chain, model, 0, 0) == doctest::Approx(2.0));

    const auto expensive = deterministic_instance(100.0);
    const auto fp2 = solve_fixed_point(chain, expensive);
    CHECK(fp2.value(0, 0, 0) == doctest::Approx(2.0));
    CHECK(fp2.value(1, 0, 0) == doctest::Approx(6.0));
}

TEST_CASE("terminal condition and metadata") {
    const auto model = deterministic_instance();
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    const auto fp = solve_fixed_point(chain, model);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t l = 0; l < fp.nodes(2); ++l) CHECK(fp.value(i, 2, l) == 0.0);
    CHECK(fp.meta.scheme == "fixed_point");
    CHECK(solve_n_switch(chain, model, 3).meta.switches == 3);
}

TEST_CASE("identical modes never switch") {
    auto model = deterministic_instance();
    model.payoffs = {PayoffRate::spread_rate(0.2), PayoffRate::spread_rate(0.2), PayoffRate::spread_rate(0.2)};
    model.modes.labels = {"a", "b", "c"};
    model.costs.base = {{0, 1, 1}, {1, 0, 1}, {1, 1, 0}};
    model.diffusion = DiffusionSpec::arithmetic(0.0, 0.1, 0.5);
    model.grid = {1.0, 8};
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    const auto fp = solve_fixed_point(chain, model);
    const auto base = solve_n_switch(chain, model, 0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(fp.value(i, 0, 0) == doctest::Approx(fp.value(0, 0, 0)));
    CHECK(max_abs_difference(fp, base) == 0.0);
    // Closed form: sum_m (E[X_{t_m}] - 0.2) dt with E[X_t] = 0.1 t.
    double expected = 0.0;
    for (int m = 0; m < 8; ++m) expected += (0.1 * model.grid.time(m) - 0.2) * model.grid.dt();
    CHECK(fp.value(0, 0, 0) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("deterministic chains agree with the open-loop brute force") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        auto model = deterministic_instance();
        const int q = 2 + trial % 2;
        model.modes.labels.resize(q);
        model.payoffs.clear();
        for (int i = 0; i < q; ++i) {
            model.modes.labels[i] = "m" + std::to_string(i);
            model.payoffs.push_back(PayoffRate::affine_rate(u(rng), {u(rng)}));
        }
        model.costs.gamma = 0.05;
        model.costs.base.assign(q, std::vector<double>(q, 0.0));
        for (int i = 0; i < q; ++i)
            for (int j = 0; j < q; ++j)
                if (i != j) model.costs.base[i][j] = 0.2 + 0.15 * std::abs(u(rng));  // triangle inequality holds
        model.diffusion = DiffusionSpec::arithmetic(u(rng), u(rng), 0.0);
        model.grid = {1.0, 5};
        const auto chain = build_binomial_chain(model.diffusion, model.grid);
        const auto fp = solve_fixed_point(chain, model);
        for (int i0 = 0; i0 < q; ++i0) {
            CHECK(fp.value(i0, 0, 0) == doctest::Approx(best_sequence(model, chain, i0, 100)).epsilon(1e-12));
            for (int n = 0; n <= 2; ++n) {
                CHECK(solve_n_switch(chain, model, n).value(i0, 0, 0) ==
                      doctest::Approx(best_sequence(model, chain, i0, n)).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("random chains: enumeration, monotonicity and complementarity") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 15; ++trial) {
        const auto inst = random_instance(rng);
        const auto& model = inst.model;
        const auto& chain = inst.chain;
        const std::size_t q = model.mode_count();
        const int steps = model.grid.steps;
        const auto fp = solve_fixed_point(chain, model);
        const auto bound = payoff_bound(chain, model);
        const auto levels = solve_n_switch_levels(chain, model, static_cast<int>(q) * steps);

        for (int n = 0; n <= 2; ++n) {
            CHECK(enumerate_strategies(chain, model, model.initial_mode, n) ==
                  doctest::Approx(levels[n].value(model.initial_mode, 0, 0)).epsilon(1e-12));
        }
        CHECK(enumerate_strategies(chain, model, model.initial_mode, 0) <=
              enumerate_strategies(chain, model, model.initial_mode, 1) + 1e-12);

        double previous_gap = INFINITY;
        for (std::size_t n = 0; n < levels.size(); ++n) {
            for (int m = 0; m <= steps; ++m) {
                for (std::size_t l = 0; l < fp.nodes(m); ++l) {
                    for (std::size_t i = 0; i < q; ++i) {
                        const double y = levels[n].value(i, m, l);
                        if (n + 1 < levels.size()) CHECK(y <= levels[n + 1].value(i, m, l) + 1e-9);
                        CHECK(y <= fp.value(i, m, l) + 1e-9);
                        CHECK(y <= bound.value(0, m, l) + 1e-9);
                    }
                }
            }
            const double gap = max_abs_difference(levels[n], fp);
            CHECK(gap <= previous_gap + 1e-12);
            previous_gap = gap;
        }
        CHECK(max_abs_difference(levels.back(), fp) == 0.0);

        for (int m = 0; m < steps; ++m) {
            const CostTable costs(model, model.grid.time(m));
            for (std::size_t l = 0; l < fp.nodes(m); ++l) {
                std::vector<double> y(q);
                for (std::size_t i = 0; i < q; ++i) y[i] = fp.value(i, m, l);
                for (std::size_t i = 0; i < q; ++i) {
                    std::size_t j = i;
                    const double obs = obstacle(costs, y, i, &j);
                    const double c = fp.continuation(i, m, l);
                    const double tol = 1e-9 * std::max(1.0, std::abs(y[i]));
                    CHECK(y[i] >= obs - tol);
                    CHECK(y[i] >= c - tol);
                    CHECK(std::abs(y[i] - std::max(obs, c)) <= tol);
                    // A binding obstacle via j does not bind back from j to i.
                    if (obs > c + tol) {
                        std::size_t k = j;
                        const double back = obstacle(costs, y, j, &k);
                        CHECK(!(k == i && std::abs(y[j] - back) <= tol && back > fp.continuation(j, m, l) + tol));
                    }
                }
            }
        }
    }
}

TEST_CASE("enumeration guard and errors") {
    CHECK(enumeration_size(3, 6, 3) == doctest::Approx(8.0 * 20.0 * 64.0));
    auto model = deterministic_instance();
    model.grid = {1.0, 30};
    const auto chain = build_binomial_chain(DiffusionSpec::arithmetic(0.0, 0.0, 1.0), model.grid);
    CHECK_THROWS_AS(enumerate_strategies(chain, model, 0, 2), std::length_error);
    CHECK_THROWS_AS(solve_n_switch(chain, model, -1), std::invalid_argument);

    const auto other = build_binomial_chain(model.diffusion, {1.0, 4});
    CHECK_THROWS_AS(solve_fixed_point(other, model), std::invalid_argument);
}

TEST_CASE("coupling sweeps stay within the mode count") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    auto model = deterministic_instance();
    model.modes.labels = {"a", "b", "c", "d"};
    model.payoffs.assign(4, PayoffRate::constant_rate(0.0));
    model.costs.gamma = 0.01;
    model.costs.base.assign(4, std::vector<double>(4, 0.01));
    for (int i = 0; i < 4; ++i) model.costs.base[i][i] = 0.0;
    const CostTable costs(model, 0.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> c(4), y(4);
        for (double& v : c) v = u(rng);
        const int sweeps = couple_modes(costs, c, y);
        CHECK(sweeps <= 4);
        const double best = *std::max_element(c.begin(), c.end());
        for (int i = 0; i < 4; ++i) {
            const bool is_best = c[i] == best;
            CHECK(y[i] == doctest::Approx(is_best ? best : std::max(c[i], best - 0.01)));
        }
    }
}
