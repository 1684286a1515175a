#include "switching/model.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace switching {

double PayoffRate::operator()(double t, std::span<const double> x) const {
    switch (family) {
    case PayoffFamily::constant:
        return c;
    case PayoffFamily::affine: {
        double value = a;
        for (std::size_t k = 0; k < b.size() && k < x.size(); ++k) {
            value += b[k] * x[k];
        }
        return value;
    }
    case PayoffFamily::spread:
        return x[0] - strike;
    case PayoffFamily::discounted_spread:
        return std::exp(-rho * t) * (x[0] - strike);
    }
    return 0.0;
}

PayoffRate PayoffRate::constant_rate(double c) {
    PayoffRate p;
    p.family = PayoffFamily::constant;
    p.c = c;
    return p;
}

PayoffRate PayoffRate::affine_rate(double a, std::vector<double> b) {
    PayoffRate p;
    p.family = PayoffFamily::affine;
    p.a = a;
    p.b = std::move(b);
    return p;
}

PayoffRate PayoffRate::spread_rate(double strike) {
    PayoffRate p;
    p.family = PayoffFamily::spread;
    p.strike = strike;
    return p;
}

PayoffRate PayoffRate::discounted_spread_rate(double strike, double rho) {
    PayoffRate p;
    p.family = PayoffFamily::discounted_spread;
    p.strike = strike;
    p.rho = rho;
    return p;
}

double DiffusionSpec::drift(double, double x, std::size_t coord) const {
    switch (family) {
    case DiffusionFamily::arithmetic_bm:
        return mu[coord];
    case DiffusionFamily::geometric_bm:
        return mu[coord] * x;
    case DiffusionFamily::ornstein_uhlenbeck:
        return kappa[coord] * (theta[coord] - x);
    }
    return 0.0;
}

double DiffusionSpec::volatility(double, double x, std::size_t coord) const {
    switch (family) {
    case DiffusionFamily::arithmetic_bm:
    case DiffusionFamily::ornstein_uhlenbeck:
        return sigma[coord];
    case DiffusionFamily::geometric_bm:
        return sigma[coord] * x;
    }
    return 0.0;
}

DiffusionSpec DiffusionSpec::arithmetic(double x0, double mu, double sigma) {
    DiffusionSpec d;
    d.family = DiffusionFamily::arithmetic_bm;
    d.x0 = {x0};
    d.mu = {mu};
    d.sigma = {sigma};
    return d;
}

DiffusionSpec DiffusionSpec::geometric(double x0, double mu, double sigma) {
    DiffusionSpec d = arithmetic(x0, mu, sigma);
    d.family = DiffusionFamily::geometric_bm;
    return d;
}

DiffusionSpec DiffusionSpec::ornstein_uhlenbeck(double x0, double kappa, double theta, double sigma) {
    DiffusionSpec d;
    d.family = DiffusionFamily::ornstein_uhlenbeck;
    d.x0 = {x0};
    d.kappa = {kappa};
    d.theta = {theta};
    d.sigma = {sigma};
    return d;
}

namespace {

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

void check_payoff(const PayoffRate& p, std::size_t index, std::size_t dim, ValidationReport& out) {
    const std::string field = "payoffs[" + std::to_string(index + 1) + "]";
    bool finite = std::isfinite(p.c) && std::isfinite(p.a) && std::isfinite(p.strike) &&
                  std::isfinite(p.rho) && all_finite(p.b);
    if (!finite) out.push_back({field, "parameters must be finite"});
    if (p.family == PayoffFamily::affine && p.b.size() != dim) {
        out.push_back({field, "affine slope count must equal state dimension"});
    }
}

void check_diffusion(const DiffusionSpec& d, ValidationReport& out) {
    const std::size_t k = d.dimension();
    if (k == 0 || k > 3) {
        out.push_back({"diffusion.x0", "state dimension must be in 1..3"});
        return;
    }
    auto need = [&](const std::vector<double>& v, const char* name) {
        const std::string field = std::string("diffusion.") + name;
        if (v.size() != k) {
            out.push_back({field, "parameter count must equal state dimension"});
        } else if (!all_finite(v)) {
            out.push_back({field, "parameters must be finite"});
        }
    };
    need(d.x0, "x0");
    need(d.sigma, "sigma");
    if (d.family == DiffusionFamily::ornstein_uhlenbeck) {
        need(d.kappa, "kappa");
        need(d.theta, "theta");
    } else {
        need(d.mu, "mu");
    }
    if (d.sigma.size() == k) {
        for (double s : d.sigma) {
            if (s < 0.0) out.push_back({"diffusion.sigma", "volatility must be nonnegative"});
        }
    }
    if (d.family == DiffusionFamily::geometric_bm) {
        for (double x : d.x0) {
            if (!(x > 0.0)) out.push_back({"diffusion.x0", "geometric Brownian motion needs x0 > 0"});
        }
    }
}

} // namespace

ValidationReport validate_model(const SwitchingModel& model) {
    ValidationReport out;
    const std::size_t q = model.mode_count();

    if (q < 2) out.push_back({"modes", "mode count: q < 2"});
    std::set<std::string> distinct(model.modes.labels.begin(), model.modes.labels.end());
    if (distinct.size() != q) out.push_back({"modes", "mode labels must be distinct"});

    if (model.payoffs.size() != q) {
        out.push_back({"payoffs", "payoff count must equal mode count"});
    }
    for (std::size_t i = 0; i < model.payoffs.size(); ++i) {
        check_payoff(model.payoffs[i], i, model.diffusion.dimension(), out);
    }

    const CostSpec& costs = model.costs;
    bool shape_ok = costs.base.size() == q;
    for (const auto& row : costs.base) shape_ok = shape_ok && row.size() == q;
    if (!shape_ok) out.push_back({"costs.base", "cost matrix shape"});
    if (!(costs.rate >= 0.0) || !std::isfinite(costs.rate)) {
        out.push_back({"costs.rate", "discount rate must be finite and >= 0"});
    }
    if (!(costs.gamma > 0.0) || !std::isfinite(costs.gamma)) {
        out.push_back({"costs.gamma", "cost floor gamma must be > 0"});
    }
    if (shape_ok && std::isfinite(costs.rate) && model.grid.horizon > 0.0) {
        // l_ij is nonincreasing in t, so the floor is checked at T.
        const double decay = std::exp(-costs.rate * model.grid.horizon);
        for (std::size_t i = 0; i < q; ++i) {
            for (std::size_t j = 0; j < q; ++j) {
                if (i == j) continue;
                const double a = costs.base[i][j];
                if (!std::isfinite(a) || !(decay * a >= costs.gamma)) {
                    out.push_back({"costs.base", "cost floor: ℓ_" + std::to_string(i + 1) +
                                                     std::to_string(j + 1) + " < γ"});
                }
            }
        }
    }

    check_diffusion(model.diffusion, out);

    if (!(model.grid.horizon > 0.0) || !std::isfinite(model.grid.horizon)) {
        out.push_back({"grid.T", "horizon must be finite and > 0"});
    }
    if (model.grid.steps < 1) out.push_back({"grid.N", "step count must be >= 1"});

    if (model.initial_mode < 0 || static_cast<std::size_t>(model.initial_mode) >= q) {
        out.push_back({"initial_mode", "initial mode out of range"});
    }
    return out;
}

std::string format_report(const ValidationReport& report) {
    std::string text;
    for (const auto& v : report) {
        if (!text.empty()) text += "\n";
        text += v.field + ": " + v.rule;
    }
    return text;
}

void require_valid(const SwitchingModel& model) {
    const auto report = validate_model(model);
    if (!report.empty()) {
        throw std::invalid_argument("invalid model:\n" + format_report(report));
    }
}

namespace {

void check_mode(const SwitchingModel& model, int mode) {
    if (mode < 0 || static_cast<std::size_t>(mode) >= model.mode_count()) {
        throw std::out_of_range("mode " + std::to_string(mode + 1) + " out of range");
    }
}

} // namespace

double evaluate_payoff(const SwitchingModel& model, int mode, double t, std::span<const double> x) {
    check_mode(model, mode);
    return model.payoffs[mode](t, x);
}

double evaluate_payoff(const SwitchingModel& model, int mode, double t, double x) {
    return evaluate_payoff(model, mode, t, std::span<const double>(&x, 1));
}

double evaluate_cost(const SwitchingModel& model, int from, int to, double t) {
    check_mode(model, from);
    check_mode(model, to);
    if (from == to) {
        throw std::invalid_argument("evaluate_cost: self-switch " + std::to_string(from + 1) + " -> " +
                                    std::to_string(to + 1) + " is not a switch");
    }
    return std::exp(-model.costs.rate * t) * model.costs.base[from][to];
}

SwitchingModel with_steps(SwitchingModel model, int steps) {
    model.grid.steps = steps;
    return model;
}

} // namespace switching
