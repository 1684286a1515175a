#include "switching/config.hpp"

#include <fstream>
#include <initializer_list>
#include <set>

namespace switching {

using nlohmann::json;

namespace {

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    std::set<std::string> ok;
    for (const char* k : allowed) ok.insert(k);
    for (const auto& [key, _] : obj.items()) {
        if (!ok.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

const json& required(const json& obj, const std::string& where, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError(where + ": missing key '" + key + "'");
    return *it;
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) throw ConfigError(where + ": expected a number");
    return v.get<double>();
}

double number_or(const json& obj, const std::string& where, const char* key, double fallback) {
    auto it = obj.find(key);
    return it == obj.end() ? fallback : number(*it, where + "." + key);
}

// A scalar or an array of numbers.
std::vector<double> numbers(const json& v, const std::string& where) {
    if (v.is_number()) return {v.get<double>()};
    if (!v.is_array()) throw ConfigError(where + ": expected a number or an array of numbers");
    std::vector<double> out;
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.push_back(number(v[k], where + "[" + std::to_string(k) + "]"));
    }
    return out;
}

PayoffRate parse_payoff(const json& v, const std::string& where) {
    if (!v.is_object()) throw ConfigError(where + ": expected an object");
    const json& fam = required(v, where, "family");
    if (!fam.is_string()) throw ConfigError(where + ".family: expected a string");
    const std::string family = fam.get<std::string>();
    if (family == "constant") {
        only_keys(v, where, {"family", "c"});
        return PayoffRate::constant_rate(number(required(v, where, "c"), where + ".c"));
    }
    if (family == "affine") {
        only_keys(v, where, {"family", "a", "b"});
        return PayoffRate::affine_rate(number(required(v, where, "a"), where + ".a"),
                                       numbers(required(v, where, "b"), where + ".b"));
    }
    if (family == "spread") {
        only_keys(v, where, {"family", "K"});
        return PayoffRate::spread_rate(number(required(v, where, "K"), where + ".K"));
    }
    if (family == "discounted_spread") {
        only_keys(v, where, {"family", "K", "rho"});
        return PayoffRate::discounted_spread_rate(number(required(v, where, "K"), where + ".K"),
                                                  number(required(v, where, "rho"), where + ".rho"));
    }
    throw ConfigError(where + ".family: unknown payoff family '" + family + "'");
}

DiffusionSpec parse_diffusion(const json& v) {
    const std::string where = "diffusion";
    if (!v.is_object()) throw ConfigError(where + ": expected an object");
    const json& fam = required(v, where, "family");
    if (!fam.is_string()) throw ConfigError(where + ".family: expected a string");
    const std::string family = fam.get<std::string>();
    DiffusionSpec d;
    if (family == "abm" || family == "gbm") {
        only_keys(v, where, {"family", "mu", "sigma", "x0"});
        d.family = family == "abm" ? DiffusionFamily::arithmetic_bm : DiffusionFamily::geometric_bm;
        d.mu = numbers(required(v, where, "mu"), where + ".mu");
    } else if (family == "ou") {
        only_keys(v, where, {"family", "kappa", "theta", "sigma", "x0"});
        d.family = DiffusionFamily::ornstein_uhlenbeck;
        d.kappa = numbers(required(v, where, "kappa"), where + ".kappa");
        d.theta = numbers(required(v, where, "theta"), where + ".theta");
    } else {
        throw ConfigError(where + ".family: unknown diffusion family '" + family + "'");
    }
    d.sigma = numbers(required(v, where, "sigma"), where + ".sigma");
    d.x0 = numbers(required(v, where, "x0"), where + ".x0");
    return d;
}

json scalar_or_array(const std::vector<double>& v) {
    if (v.size() == 1) return v[0];
    return v;
}

} // namespace

SwitchingModel parse_model(const json& doc) {
    only_keys(doc, "model", {"modes", "payoffs", "costs", "diffusion", "grid", "initial_mode"});
    SwitchingModel model;

    const json& modes = required(doc, "model", "modes");
    if (!modes.is_array()) throw ConfigError("modes: expected an array of labels");
    for (const auto& m : modes) {
        if (!m.is_string()) throw ConfigError("modes: labels must be strings");
        model.modes.labels.push_back(m.get<std::string>());
    }

    const json& payoffs = required(doc, "model", "payoffs");
    if (!payoffs.is_array()) throw ConfigError("payoffs: expected an array");
    for (std::size_t i = 0; i < payoffs.size(); ++i) {
        model.payoffs.push_back(parse_payoff(payoffs[i], "payoffs[" + std::to_string(i + 1) + "]"));
    }

    const json& costs = required(doc, "model", "costs");
    only_keys(costs, "costs", {"base", "rate", "gamma"});
    const json& base = required(costs, "costs", "base");
    if (!base.is_array()) throw ConfigError("costs.base: expected a 2-D array");
    for (std::size_t i = 0; i < base.size(); ++i) {
        const std::string where = "costs.base[" + std::to_string(i) + "]";
        if (!base[i].is_array()) throw ConfigError(where + ": expected an array");
        model.costs.base.push_back(numbers(base[i], where));
    }
    model.costs.rate = number_or(costs, "costs", "rate", 0.0);
    model.costs.gamma = number_or(costs, "costs", "gamma", 1e-6);

    model.diffusion = parse_diffusion(required(doc, "model", "diffusion"));

    const json& grid = required(doc, "model", "grid");
    only_keys(grid, "grid", {"T", "N"});
    model.grid.horizon = number(required(grid, "grid", "T"), "grid.T");
    const json& steps = required(grid, "grid", "N");
    if (!steps.is_number_integer()) throw ConfigError("grid.N: expected an integer");
    model.grid.steps = steps.get<int>();

    const json& initial = required(doc, "model", "initial_mode");
    if (!initial.is_number_integer()) throw ConfigError("initial_mode: expected an integer");
    model.initial_mode = initial.get<int>() - 1;
    return model;
}

SwitchingModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_model(doc);
}

json model_to_json(const SwitchingModel& model) {
    json payoffs = json::array();
    for (const auto& p : model.payoffs) {
        switch (p.family) {
        case PayoffFamily::constant:
            payoffs.push_back({{"family", "constant"}, {"c", p.c}});
            break;
        case PayoffFamily::affine:
            payoffs.push_back({{"family", "affine"}, {"a", p.a}, {"b", p.b}});
            break;
        case PayoffFamily::spread:
            payoffs.push_back({{"family", "spread"}, {"K", p.strike}});
            break;
        case PayoffFamily::discounted_spread:
            payoffs.push_back({{"family", "discounted_spread"}, {"K", p.strike}, {"rho", p.rho}});
            break;
        }
    }
    const DiffusionSpec& d = model.diffusion;
    json diffusion;
    switch (d.family) {
    case DiffusionFamily::arithmetic_bm:
    case DiffusionFamily::geometric_bm:
        diffusion = {{"family", d.family == DiffusionFamily::arithmetic_bm ? "abm" : "gbm"},
                     {"mu", scalar_or_array(d.mu)}};
        break;
    case DiffusionFamily::ornstein_uhlenbeck:
        diffusion = {{"family", "ou"}, {"kappa", scalar_or_array(d.kappa)}, {"theta", scalar_or_array(d.theta)}};
        break;
    }
    diffusion["sigma"] = scalar_or_array(d.sigma);
    diffusion["x0"] = scalar_or_array(d.x0);

    return {{"modes", model.modes.labels},
            {"payoffs", payoffs},
            {"costs", {{"base", model.costs.base}, {"rate", model.costs.rate}, {"gamma", model.costs.gamma}}},
            {"diffusion", diffusion},
            {"grid", {{"T", model.grid.horizon}, {"N", model.grid.steps}}},
            {"initial_mode", model.initial_mode + 1}};
}

} // namespace switching
