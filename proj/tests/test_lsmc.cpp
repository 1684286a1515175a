#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

#include "instances.hpp"
#include "switching/errors.hpp"
#include "switching/lattice.hpp"
#include "switching/lsmc.hpp"

using namespace switching;
using switching::testing::benchmark;
using switching::testing::deterministic_instance;

TEST_CASE("basis layout") {
    RegressionBasis basis{.degree = 3};
    CHECK(basis.size(1) == 4);
    CHECK(basis.size(2) == 10);
    CHECK(basis.size(3) == 20);
    CHECK(basis.exponents(2).size() == 10);
    CHECK(basis.term_names(1) == std::vector<std::string>{"1", "x1", "x1^2", "x1^3"});
    const auto names = RegressionBasis{.degree = 2}.term_names(2);
    CHECK(names == std::vector<std::string>{"1", "x1", "x2", "x1^2", "x1*x2", "x2^2"});
}

TEST_CASE("constant and exactly representable targets") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> z;
    const std::size_t paths = 500;
    std::vector<double> states(paths * 2), constant(paths, 2.5), linear(paths);
    for (std::size_t p = 0; p < paths; ++p) {
        states[2 * p] = 1.0 + z(rng);
        states[2 * p + 1] = -3.0 + 2.0 * z(rng);
        linear[p] = 0.5 - 2.0 * states[2 * p] + 0.25 * states[2 * p + 1];
    }
    for (bool standardize : {true, false}) {
        const RegressionBasis basis{.degree = 2, .standardize = standardize};
        const auto c = fit_continuation(states, 2, constant, basis);
        for (double v : c.fitted) CHECK(v == doctest::Approx(2.5).epsilon(1e-10));
        const auto l = fit_continuation(states, 2, linear, basis);
        for (std::size_t p = 0; p < paths; ++p) {
            CHECK(std::abs(l.fitted[p] - linear[p]) <= 1e-8 * std::max(1.0, std::abs(linear[p])));
        }
        CHECK_FALSE(l.rank_deficient);
    }
}

TEST_CASE("regression guard and bad targets") {
    std::vector<double> states(30, 1.0), targets(30, 0.0);
    CHECK_THROWS_AS(fit_continuation(states, 1, targets, RegressionBasis{.degree = 3}), std::invalid_argument);
    std::vector<double> states100(100), targets100(100, 0.0);
    for (std::size_t p = 0; p < 100; ++p) states100[p] = 0.01 * p;
    targets100[7] = NAN;
    CHECK_THROWS_AS(fit_continuation(states100, 1, targets100, RegressionBasis{.degree = 1}), std::invalid_argument);
    targets100[7] = 0.0;
    CHECK_THROWS_AS(fit_continuation(states100, 1, std::span<const double>(targets100).first(50),
                                     RegressionBasis{.degree = 1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(fit_continuation(states100, 1, targets100, RegressionBasis{.degree = -1}), std::invalid_argument);
    states100[3] = -1.0;
    CHECK_THROWS_AS(fit_continuation(states100, 1, targets100, RegressionBasis{.degree = 1, .log_state = true}),
                    std::invalid_argument);
}

TEST_CASE("collinear design falls back to the minimum-norm solution") {
    std::vector<double> states(200, 4.0), targets(200);
    for (std::size_t p = 0; p < 200; ++p) targets[p] = p % 2 ? 1.0 : 3.0;
    const auto fit = fit_continuation(states, 1, targets, RegressionBasis{.degree = 3, .standardize = false});
    CHECK(fit.rank_deficient);
    CHECK(fit.rank == 1);
    for (double v : fit.fitted) CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
    // Minimum norm: weights proportional to (1, x, x^2, x^3) at x = 4.
    const double norm = 1 + 16 + 256 + 4096;
    CHECK(fit.coefficients[3] == doctest::Approx(2.0 * 64 / norm).epsilon(1e-8));
}

TEST_CASE("conditional mean of geometric BM") {
    const double mu = 0.05, sigma = 0.3;
    const TimeGrid grid{1.0, 10};
    const auto batch = simulate_euler(DiffusionSpec::geometric(1.0, mu, sigma), grid, 100000, 31);
    const int m = 5;
    std::vector<double> states(batch.paths), targets(batch.paths);
    for (std::size_t p = 0; p < batch.paths; ++p) {
        states[p] = batch.at(p, m);
        targets[p] = batch.at(p, grid.steps);
    }
    const auto fit = fit_continuation(states, 1, targets, RegressionBasis{.degree = 2, .standardize = false});
    const double at_x0 = fit.coefficients[0] + fit.coefficients[1] + fit.coefficients[2];
    double ss = 0.0;
    for (std::size_t p = 0; p < batch.paths; ++p) ss += (targets[p] - fit.fitted[p]) * (targets[p] - fit.fitted[p]);
    const double se = std::sqrt(ss / batch.paths / batch.paths);
    CHECK(std::abs(at_x0 - std::exp(mu * (grid.horizon - grid.time(m)))) <= 3.0 * se);
}

TEST_CASE("deterministic batch reproduces the lattice") {
    const auto model = deterministic_instance();
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    const auto fp = solve_fixed_point(chain, model);
    const auto batch = simulate_euler(model.diffusion, model.grid, 40, 1);
    for (auto update : {ValueUpdate::realized, ValueUpdate::fitted}) {
        const auto field = solve_lsmc_fixed_point(batch, model, {}, {.update = update, .keep_path_values = true});
        CHECK_FALSE(field.rank_deficient_steps.empty());
        for (std::size_t i = 0; i < 2; ++i) {
            for (int m = 0; m <= 2; ++m) {
                CHECK(field.value_mean(i, m) == doctest::Approx(fp.value(i, m, 0)).epsilon(1e-8));
                CHECK(field.value(i, m, 17) == doctest::Approx(fp.value(i, m, 0)).epsilon(1e-8));
            }
            CHECK(field.value(i, 2, 3) == 0.0);
        }
        const auto all = solve_lsmc_n_switch(batch, model, {}, 4, {.update = update});
        for (int n = 0; n <= 1; ++n) {
            const auto level = solve_lsmc_n_switch(batch, model, {}, n, {.update = update});
            CHECK(level.value_mean(0, 0) ==
                  doctest::Approx(solve_n_switch(chain, model, n).value(0, 0, 0)).epsilon(1e-8));
        }
        for (std::size_t i = 0; i < 2; ++i) CHECK(all.value_mean(i, 0) == doctest::Approx(field.value_mean(i, 0)));
    }
}

TEST_CASE("no switching reduces to plain Monte Carlo") {
    auto model = benchmark(20);
    model.costs.base = {{0.0, 100.0}, {100.0, 0.0}};
    const auto batch = simulate_euler(model.diffusion, model.grid, 20000, 8);
    const double dt = model.grid.dt();
    double sum = 0.0;
    for (std::size_t p = 0; p < batch.paths; ++p)
        for (int m = 0; m < 20; ++m) sum += (batch.at(p, m) - 1.0) * dt;
    const double plain = sum / batch.paths;

    const auto fp = solve_lsmc_fixed_point(batch, model, {});
    CHECK(std::abs(fp.value_mean(1, 0) - plain) <= 3.0 * fp.value_stderr(1, 0) + 1e-12);
    CHECK(fp.value_mean(0, 0) == 0.0);

    // n = 0 against the closed-form Euler mean E[X_{t_m}] = (1 + mu dt)^m.
    const auto n0 = solve_lsmc_n_switch(batch, benchmark(20), {}, 0);
    double exact = 0.0;
    for (int m = 0; m < 20; ++m) exact += (std::pow(1.0 + 0.02 * dt, m) - 1.0) * dt;
    CHECK(std::abs(n0.value_mean(1, 0) - exact) <= 3.0 * n0.value_stderr(1, 0));
}

TEST_CASE("benchmark: mean monotone in n and stable across seeds") {
    const auto model = benchmark(50);
    const auto batch = simulate_euler(model.diffusion, model.grid, 20000, 101);
    std::vector<PathValueField> levels;
    for (int n = 0; n <= 3; ++n) levels.push_back(solve_lsmc_n_switch(batch, model, {}, n));
    levels.push_back(solve_lsmc_fixed_point(batch, model, {}));
    for (std::size_t n = 0; n + 1 < levels.size(); ++n) {
        const double se = std::hypot(levels[n].value_stderr(0, 0), levels[n + 1].value_stderr(0, 0));
        CHECK(levels[n].value_mean(0, 0) <= levels[n + 1].value_mean(0, 0) + 3.0 * se);
    }
    const auto other = solve_lsmc_fixed_point(simulate_euler(model.diffusion, model.grid, 20000, 202), model, {});
    const double se = std::hypot(levels.back().value_stderr(0, 0), other.value_stderr(0, 0));
    CHECK(std::abs(levels.back().value_mean(0, 0) - other.value_mean(0, 0)) <= 4.0 * se);
    CHECK(levels.back().coefficients[0].size() == 4);
    CHECK(levels.back().coefficients[50].empty());
    CHECK(levels.back().seed == 101);
}

TEST_CASE("worker count does not change the result") {
    const auto model = benchmark(20);
    const auto batch = simulate_euler(model.diffusion, model.grid, 5000, 4);
    const auto a = solve_lsmc_fixed_point(batch, model, {}, {.workers = 1});
    const auto b = solve_lsmc_fixed_point(batch, model, {}, {.workers = 3});
    CHECK(a.mean == b.mean);
    CHECK(a.initial == b.initial);
}

TEST_CASE("errors") {
    const auto model = benchmark(10);
    auto batch = simulate_euler(model.diffusion, model.grid, 1000, 4);
    CHECK_THROWS_AS(solve_lsmc_fixed_point(batch, benchmark(11), {}), std::invalid_argument);
    CHECK_THROWS_AS(solve_lsmc_n_switch(batch, model, {}, -1), std::invalid_argument);
    CHECK_THROWS_AS(solve_lsmc_fixed_point(simulate_euler(model.diffusion, model.grid, 30, 4), model, {}),
                    std::invalid_argument);
    batch.at(5, 4) = INFINITY;
    CHECK_THROWS_AS(solve_lsmc_fixed_point(batch, model, {}), NumericalError);
}
