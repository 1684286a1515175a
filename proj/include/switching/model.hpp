#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace switching {

/// Operating modes of the production system. Indices are 0-based internally;
/// configuration files and exported artifacts use 1-based labels.
struct ModeSet {
    std::vector<std::string> labels;

    std::size_t size() const { return labels.size(); }
};

enum class PayoffFamily { constant, affine, spread, discounted_spread };

/// Payoff rate per unit time of one mode.
///
/// constant:           c
/// affine:             a + sum_c b[c] * x[c]
/// spread:             x[0] - strike
/// discounted_spread:  exp(-rho * t) * (x[0] - strike)
struct PayoffRate {
    PayoffFamily family = PayoffFamily::constant;
    double c = 0.0;
    double a = 0.0;
    std::vector<double> b;
    double strike = 0.0;
    double rho = 0.0;

    double operator()(double t, std::span<const double> x) const;
    double operator()(double t, double x) const { return (*this)(t, std::span<const double>(&x, 1)); }

    static PayoffRate constant_rate(double c);
    static PayoffRate affine_rate(double a, std::vector<double> b);
    static PayoffRate spread_rate(double strike);
    static PayoffRate discounted_spread_rate(double strike, double rho);
};

/// Switching costs l_ij(t) = exp(-rate * t) * base[i][j].
struct CostSpec {
    std::vector<std::vector<double>> base;
    double rate = 0.0;
    double gamma = 1e-6;
};

enum class DiffusionFamily { arithmetic_bm, geometric_bm, ornstein_uhlenbeck };

/// Diagonal diffusion: coordinate c evolves independently with its own
/// parameters from the shared family.
///
///   arithmetic_bm       dX = mu dt + sigma dW
///   geometric_bm        dX = mu X dt + sigma X dW
///   ornstein_uhlenbeck  dX = kappa (theta - X) dt + sigma dW
struct DiffusionSpec {
    DiffusionFamily family = DiffusionFamily::arithmetic_bm;
    std::vector<double> x0;
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<double> kappa;
    std::vector<double> theta;

    std::size_t dimension() const { return x0.size(); }
    double drift(double t, double x, std::size_t coord = 0) const;
    double volatility(double t, double x, std::size_t coord = 0) const;

    static DiffusionSpec arithmetic(double x0, double mu, double sigma);
    static DiffusionSpec geometric(double x0, double mu, double sigma);
    static DiffusionSpec ornstein_uhlenbeck(double x0, double kappa, double theta, double sigma);
};

/// Uniform grid t_m = m * T / N on [0, T].
struct TimeGrid {
    double horizon = 1.0;
    int steps = 1;

    double dt() const { return horizon / steps; }
    double time(int m) const { return m == steps ? horizon : m * dt(); }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;
};

struct SwitchingModel {
    ModeSet modes;
    std::vector<PayoffRate> payoffs;
    CostSpec costs;
    DiffusionSpec diffusion;
    TimeGrid grid;
    int initial_mode = 0;

    std::size_t mode_count() const { return modes.size(); }
};

struct Violation {
    std::string field;
    std::string rule;
};

using ValidationReport = std::vector<Violation>;

/// Checks every invariant of the model; an empty report means the model is valid.
ValidationReport validate_model(const SwitchingModel& model);

/// Throws std::invalid_argument listing all violations if the model is invalid.
void require_valid(const SwitchingModel& model);

std::string format_report(const ValidationReport& report);

/// psi_i(t, x). Throws std::out_of_range for an unknown mode.
double evaluate_payoff(const SwitchingModel& model, int mode, double t, std::span<const double> x);
double evaluate_payoff(const SwitchingModel& model, int mode, double t, double x);

/// l_ij(t). Throws std::invalid_argument for i == j and std::out_of_range for
/// an unknown mode.
double evaluate_cost(const SwitchingModel& model, int from, int to, double t);

/// Same model with the time grid replaced.
SwitchingModel with_steps(SwitchingModel model, int steps);

} // namespace switching
