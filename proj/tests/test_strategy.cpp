#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "instances.hpp"
#include "switching/lattice.hpp"
#include "switching/pde.hpp"
#include "switching/strategy.hpp"

using namespace switching;
using switching::testing::benchmark;
using switching::testing::deterministic_instance;
using switching::testing::random_instance;

namespace {

DecisionRule random_rule(const ChainModel& chain, std::size_t q, std::mt19937_64& rng) {
    DecisionRule rule(q, chain.nodes, "random");
    std::uniform_int_distribution<int> pick(-3, static_cast<int>(q) - 1);
    for (std::size_t i = 0; i < q; ++i) {
        for (int m = 0; m < chain.grid.steps; ++m) {
            for (std::size_t l = 0; l < chain.nodes[m].size(); ++l) {
                const int a = pick(rng);
                if (a >= 0 && static_cast<std::size_t>(a) != i) rule.set_action(i, m, l, a);
            }
        }
    }
    return rule;
}

} // namespace

TEST_CASE("deterministic instance rule and execution") {
    const auto model = deterministic_instance();
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    const auto fp = solve_fixed_point(chain, model);
    const auto rule = extract_rule(fp, model);
    CHECK(rule.action(0, 0, 0) == 1);
    for (int m = 0; m <= 2; ++m)
        for (std::size_t l = 0; l < rule.nodes(m); ++l) CHECK(rule.action(1, m, l) == kContinue);

    const auto report = execute(rule, chain, model, 0);
    CHECK(report.exact);
    CHECK(report.mean == 5.0);
    CHECK(optimality_gap(report, fp.value(0, 0, 0)).gap == doctest::Approx(0.0).epsilon(1e-12));
    CHECK_FALSE(optimality_gap(report, 5.0).z.has_value());
    CHECK(report.switch_histogram == std::vector<double>{0.0, 1.0});

    const auto batch = simulate_euler(model.diffusion, model.grid, 10, 1);
    const auto sampled = execute(rule, batch, model, 0);
    CHECK(sampled.mean == 5.0);
    CHECK(sampled.stderr_ == 0.0);
    REQUIRE(sampled.log.size() == 10);
    CHECK(sampled.log[3].path == 3);
    CHECK(sampled.log[3].from == 0);
    CHECK(sampled.log[3].to == 1);
    CHECK(sampled.log[3].cost == 1.0);
    CHECK(sampled.clamped == 0);
}

TEST_CASE("rules that never switch") {
    SUBCASE("huge costs") {
        const auto model = deterministic_instance(100.0);
        const auto chain = build_binomial_chain(model.diffusion, model.grid);
        CHECK(extract_rule(solve_fixed_point(chain, model), model).continues_everywhere());
    }
    SUBCASE("identical payoffs") {
        auto model = benchmark(20);
        model.payoffs = {PayoffRate::spread_rate(1.0), PayoffRate::spread_rate(1.0)};
        const auto chain = build_binomial_chain(model.diffusion, model.grid);
        const auto rule = extract_rule(solve_fixed_point(chain, model), model);
        CHECK(rule.continues_everywhere());
        // Executing it from mode 2 is the plain payoff sum of mode 2.
        const auto base = solve_n_switch(chain, model, 0);
        CHECK(execute(rule, chain, model, 1).mean == doctest::Approx(base.value(1, 0, 0)).epsilon(1e-12));
    }
}

TEST_CASE("forced extra switch costs at least gamma") {
    const auto model = deterministic_instance(100.0);
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    const auto fp = solve_fixed_point(chain, model);
    auto rule = extract_rule(fp, model);
    rule.set_action(0, 0, 0, 1);
    const auto gap = optimality_gap(execute(rule, chain, model, 0), fp.value(0, 0, 0));
    CHECK(gap.gap > 0.0);
    CHECK(gap.gap >= model.costs.gamma - 1e-9);
}

TEST_CASE("extracted rules attain the value; random rules do not beat it") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const auto inst = random_instance(rng);
        const auto& model = inst.model;
        const std::size_t q = model.mode_count();
        const auto fp = solve_fixed_point(inst.chain, model);
        const auto rule = extract_rule(fp, model);
        for (std::size_t i0 = 0; i0 < q; ++i0) {
            const auto report = execute(rule, inst.chain, model, static_cast<int>(i0));
            CHECK(report.mean == doctest::Approx(fp.value(i0, 0, 0)).epsilon(1e-12));
            CHECK(report.capped == 0);
            CHECK(report.max_switches <= static_cast<int>(q) * model.grid.steps);
            const double mass = std::accumulate(report.switch_histogram.begin(), report.switch_histogram.end(), 0.0);
            CHECK(mass == doctest::Approx(1.0));
        }
        for (int k = 0; k < 30; ++k) {
            const auto r = random_rule(inst.chain, q, rng);
            CHECK(execute(r, inst.chain, model, model.initial_mode).mean <= fp.value(model.initial_mode, 0, 0) + 1e-9);
        }

        const int n_max = 3;
        const auto levels = solve_n_switch_levels(inst.chain, model, n_max);
        const auto layered = extract_layered_rule(levels, model);
        REQUIRE(layered.layers.size() == levels.size());
        CHECK(layered.layers[0].continues_everywhere());
        for (int n = 0; n <= n_max; ++n) {
            const auto report = execute(layered, inst.chain, model, model.initial_mode, n);
            CHECK(std::abs(report.mean - levels[n].value(model.initial_mode, 0, 0)) <= 1e-9);
            CHECK(report.max_switches <= n);
        }
    }
}

TEST_CASE("grid rules applied to paths") {
    const auto model = benchmark(50);
    const auto field = solve_qvi_fd(model, default_space_grid(model.diffusion, 1.0, 100));
    const auto rule = extract_rule(field, model);
    CHECK_FALSE(rule.continues_everywhere());
    const auto batch = simulate_euler(model.diffusion, model.grid, 20000, 12);
    const auto report = execute(rule, batch, model, 0, {.log_limit = 5});
    CHECK(report.log.size() == 5);
    CHECK(report.samples == 20000);
    const auto gap = optimality_gap(report, field.initial_value(0, 1.0));
    REQUIRE(gap.z.has_value());
    CHECK(std::abs(*gap.z) <= 4.0);
    double mass = 0.0;
    for (double h : report.switch_histogram) mass += h;
    CHECK(mass == doctest::Approx(1.0));
}

TEST_CASE("nearest-node lookup clamps and flags") {
    DecisionRule rule(2, {{0.0}, {-1.0, 1.0}}, "test");
    bool clamped = false;
    CHECK(rule.locate(1, 0.2, &clamped) == 1);
    CHECK_FALSE(clamped);
    CHECK(rule.locate(1, -0.2, &clamped) == 0);
    CHECK(rule.locate(1, 5.0, &clamped) == 1);
    CHECK(clamped);
    CHECK(rule.locate(1, -5.0, &clamped) == 0);
    CHECK(clamped);
}

TEST_CASE("rule invariants and errors") {
    DecisionRule rule(2, {{0.0}, {-1.0, 1.0}}, "test");
    CHECK_THROWS_AS(rule.set_action(0, 0, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(rule.set_action(0, 0, 0, 2), std::invalid_argument);
    CHECK_THROWS_AS(rule.set_action(0, 1, 0, 1), std::invalid_argument);
    CHECK_NOTHROW(rule.set_action(0, 0, 0, 1));

    const auto model = deterministic_instance();
    const auto chain = build_binomial_chain(model.diffusion, model.grid);
    auto fp = solve_fixed_point(chain, model);
    CHECK_THROWS_AS(extract_rule(fp, with_steps(model, 3)), std::invalid_argument);
    fp.value(0, 2, 0) = 1.0;
    CHECK_THROWS_AS(extract_rule(fp, model), std::invalid_argument);
    const auto good = extract_rule(solve_fixed_point(chain, model), model);
    CHECK_THROWS_AS(execute(good, chain, model, 4), std::out_of_range);
    const auto other = build_binomial_chain(model.diffusion, {2.0, 3});
    CHECK_THROWS_AS(execute(good, other, with_steps(model, 3), 0), std::invalid_argument);
}
