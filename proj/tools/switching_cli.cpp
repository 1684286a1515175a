#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "switching/config.hpp"
#include "switching/errors.hpp"
#include "switching/io.hpp"
#include "switching/lattice.hpp"
#include "switching/lsmc.hpp"
#include "switching/paths.hpp"
#include "switching/pde.hpp"
#include "switching/penalized.hpp"
#include "switching/strategy.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace switching;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kCheckFailed = 1, kInvalid = 2, kNumerical = 3 };

struct Options {
    std::string model_path;
    std::optional<int> steps;
    int intervals = 400;
    std::size_t paths = 100000;
    std::uint64_t seed = 1;
    int degree = 3;
    std::vector<double> penalties{1, 2, 4, 8, 16, 32, 64, 128, 256};
    double theta = 1.0;
    std::string out = "out";
    int switches = 1;
    bool log_state = false;
    std::string update = "realized";
    unsigned workers = 1;
    bool antithetic = false;
    std::string source = "lattice";
};

// Failure raised after artifacts were written; carries the exit code.
struct Flagged : std::runtime_error {
    Exit code;
    Flagged(Exit c, const std::string& what) : std::runtime_error(what), code(c) {}
};

// Where in the pipeline we are, for error messages ("module/operation").
std::string g_stage = "model/load_model";

void stage(const char* module, const char* operation) { g_stage = std::string(module) + "/" + operation; }

std::string utc_timestamp() {
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

SwitchingModel load(const Options& opt) {
    stage("model", "load_model");
    SwitchingModel model = load_model(opt.model_path);
    if (opt.steps) model.grid.steps = *opt.steps;
    stage("model", "validate_model");
    const auto report = validate_model(model);
    if (!report.empty()) throw std::invalid_argument(format_report(report));
    return model;
}

RegressionBasis basis_of(const Options& opt) {
    return RegressionBasis{.degree = opt.degree, .standardize = true, .log_state = opt.log_state};
}

LsmcOptions lsmc_options(const Options& opt) {
    if (opt.update != "realized" && opt.update != "fitted") throw std::invalid_argument("--update must be realized or fitted");
    return {.update = opt.update == "fitted" ? ValueUpdate::fitted : ValueUpdate::realized, .workers = opt.workers};
}

void write_manifest(const fs::path& dir, const std::string& command, const Options& opt, const SwitchingModel& model) {
    json params = {{"N", model.grid.steps},
                   {"J", opt.intervals},
                   {"M", opt.paths},
                   {"seed", opt.seed},
                   {"degree", opt.degree},
                   {"log_state", opt.log_state},
                   {"update", opt.update},
                   {"penalties", opt.penalties},
                   {"theta", opt.theta},
                   {"n", opt.switches},
                   {"workers", opt.workers},
                   {"antithetic", opt.antithetic},
                   {"source", opt.source}};
    const json manifest = {{"model", opt.model_path},
                           {"command", command},
                           {"parameters", params},
                           {"output_dir", opt.out},
                           {"tool_version", kVersion},
                           {"timestamp", utc_timestamp()}};
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
}

json mode_map(const std::vector<double>& values) {
    json out = json::object();
    for (std::size_t i = 0; i < values.size(); ++i) out[std::to_string(i + 1)] = values[i];
    return out;
}

void write_summary(const fs::path& dir, const std::string& method, const SwitchingModel& model,
                   const std::vector<double>& y0, json extra = json::object()) {
    json summary = {{"method", method},
                    {"Y0", mode_map(y0)},
                    {"labels", model.modes.labels},
                    {"initial_mode", model.initial_mode + 1},
                    {"manifest_ref", "manifest.json"}};
    summary.update(extra);
    write_text(dir / "summary.json", summary.dump(2) + "\n");
}

std::vector<double> root_values(const ValueField& field, double x0) {
    std::vector<double> out;
    for (std::size_t i = 0; i < field.modes(); ++i) out.push_back(field.initial_value(i, x0));
    return out;
}

void write_field(const fs::path& dir, const ValueField& field) {
    write_file(dir / "field.csv", [&](std::ostream& os) { write_field_csv(os, field); });
}

ChainModel chain_of(const SwitchingModel& model) {
    stage("lattice_oracle", "build_binomial_chain");
    return build_binomial_chain(model.diffusion, model.grid);
}

SpaceGrid space_of(const SwitchingModel& model, const Options& opt) {
    stage("pde_solver", "default_space_grid");
    return default_space_grid(model.diffusion, model.grid.horizon, opt.intervals);
}

PathBatch paths_of(const SwitchingModel& model, const Options& opt, std::uint64_t seed) {
    stage("mc_engine", "simulate_euler");
    return simulate_euler(model.diffusion, model.grid, opt.paths, seed,
                          {.workers = opt.workers, .antithetic = opt.antithetic});
}

PenaltySchedule schedule_of(const Options& opt) {
    PenaltySchedule s;
    s.penalties = opt.penalties;
    stage("penalized_solver", "require_valid");
    require_valid(s);
    return s;
}

int solve(const std::string& method, const Options& opt) {
    const SwitchingModel model = load(opt);
    const fs::path dir = opt.out;
    fs::create_directories(dir);
    const double x0 = model.diffusion.x0[0];
    int code = kOk;
    std::string note;

    if (method == "lattice") {
        const auto chain = chain_of(model);
        stage("lattice_oracle", "solve_fixed_point");
        const auto field = solve_fixed_point(chain, model);
        write_field(dir, field);
        write_summary(dir, method, model, root_values(field, x0), {{"sweeps_max", field.meta.iterations}});
    } else if (method == "nswitch") {
        const auto chain = chain_of(model);
        stage("lattice_oracle", "solve_n_switch");
        const auto field = solve_n_switch(chain, model, opt.switches);
        write_field(dir, field);
        write_summary(dir, method, model, root_values(field, x0), {{"n", opt.switches}});
    } else if (method == "penalized") {
        const auto chain = chain_of(model);
        const auto schedule = schedule_of(opt);
        stage("penalized_solver", "solve_penalized");
        const double penalty = schedule.penalties.back();
        const auto field = solve_penalized(chain, model, penalty, schedule.max_sweeps, schedule.tolerance);
        write_field(dir, field);
        stage("penalized_solver", "penalty_sweep");
        const auto report = penalty_sweep(chain, model, schedule);
        write_file(dir / "convergence.csv", [&](std::ostream& os) { write_convergence_csv(os, report); });
        write_summary(dir, method, model, root_values(field, x0),
                      {{"penalty", penalty},
                       {"converged", field.meta.converged},
                       {"picard_sweeps", field.meta.iterations},
                       {"slope", report.slope},
                       {"monotone_in_penalty", report.monotone_in_penalty},
                       {"dominated", report.dominated}});
        if (!report.all_converged) {
            code = kNumerical;
            note = "Picard iteration did not converge within " + std::to_string(schedule.max_sweeps) + " sweeps";
        }
    } else if (method == "pde") {
        const auto space = space_of(model, opt);
        stage("pde_solver", "solve_qvi_fd");
        const auto field = solve_qvi_fd(model, space, opt.theta);
        write_field(dir, field);
        write_summary(dir, method, model, root_values(field, x0),
                      {{"x_min", space.x_min}, {"x_max", space.x_max}, {"theta", opt.theta}});
    } else if (method == "lsmc") {
        const auto batch = paths_of(model, opt, opt.seed);
        stage("lsmc_solver", "solve_lsmc_fixed_point");
        const auto field = solve_lsmc_fixed_point(batch, model, basis_of(opt), lsmc_options(opt));
        write_file(dir / "lsmc_summary.csv", [&](std::ostream& os) { write_lsmc_summary_csv(os, field); });
        write_file(dir / "lsmc_coefficients.csv", [&](std::ostream& os) { write_lsmc_coefficients_csv(os, field); });
        std::vector<double> mean, se;
        for (std::size_t i = 0; i < field.modes; ++i) {
            mean.push_back(field.value_mean(i, 0));
            se.push_back(field.value_stderr(i, 0));
        }
        write_summary(dir, method, model, mean,
                      {{"stderr", mode_map(se)}, {"rank_deficient_steps", field.rank_deficient_steps}});
    } else {
        throw std::invalid_argument("unknown method '" + method + "'");
    }
    write_manifest(dir, "solve " + method, opt, model);
    if (code != kOk) throw Flagged(static_cast<Exit>(code), note);
    std::cout << (dir / "summary.json").string() << "\n";
    return kOk;
}

int crosscheck(const Options& opt) {
    const SwitchingModel model = load(opt);
    if (model.diffusion.dimension() != 1) throw std::invalid_argument("crosscheck needs a 1-D model");
    const fs::path dir = opt.out;
    fs::create_directories(dir);
    const std::size_t i0 = static_cast<std::size_t>(model.initial_mode);
    const double x0 = model.diffusion.x0[0];

    const auto chain = chain_of(model);
    stage("lattice_oracle", "solve_fixed_point");
    const double lattice = solve_fixed_point(chain, model).value(i0, 0, 0);
    const auto schedule = schedule_of(opt);
    stage("penalized_solver", "solve_penalized");
    const auto pen = solve_penalized(chain, model, schedule.penalties.back(), schedule.max_sweeps, schedule.tolerance);
    if (!pen.meta.converged) throw Flagged(kNumerical, "penalized solve did not converge");
    const auto space = space_of(model, opt);
    stage("pde_solver", "solve_qvi_fd");
    const double pde = solve_qvi_fd(model, space, opt.theta).initial_value(i0, x0);
    const auto batch = paths_of(model, opt, opt.seed);
    stage("lsmc_solver", "solve_lsmc_fixed_point");
    const auto ls = solve_lsmc_fixed_point(batch, model, basis_of(opt), lsmc_options(opt));

    const std::vector<std::string> names{"lattice", "penalized", "pde", "lsmc"};
    const std::vector<double> values{lattice, pen.value(i0, 0, 0), pde, ls.value_mean(i0, 0)};
    // Tolerance of each method against the lattice; a pair is allowed the sum of its two.
    const double lsmc_se = ls.value_stderr(i0, 0);
    const std::vector<double> tol{0.0, 1e-2, 2e-2 * std::abs(lattice), 3.0 * lsmc_se};

    json matrix = json::array();
    bool all = true;
    std::ostringstream table;
    table << "method";
    for (const auto& n : names) table << "," << n;
    table << "\n";
    for (std::size_t a = 0; a < names.size(); ++a) {
        table << names[a];
        for (std::size_t b = 0; b < names.size(); ++b) {
            const double gap = std::abs(values[a] - values[b]);
            const double allowed = tol[a] + tol[b];
            const bool pass = a == b || gap <= allowed;
            all = all && pass;
            table << "," << format_double(gap);
            if (a < b) {
                matrix.push_back(
                    {{"a", names[a]}, {"b", names[b]}, {"gap", gap}, {"tolerance", allowed}, {"pass", pass}});
            }
        }
        table << "\n";
    }
    write_text(dir / "crosscheck.csv", table.str());
    json values_json = json::object();
    for (std::size_t k = 0; k < names.size(); ++k) values_json[names[k]] = values[k];
    const json report = {{"mode", i0 + 1},
                         {"values", values_json},
                         {"lsmc_stderr", lsmc_se},
                         {"pairs", matrix},
                         {"pass", all},
                         {"manifest_ref", "manifest.json"}};
    write_text(dir / "crosscheck.json", report.dump(2) + "\n");
    write_manifest(dir, "crosscheck", opt, model);

    std::cout << "Y" << i0 + 1 << "_0:";
    for (std::size_t k = 0; k < names.size(); ++k) std::cout << " " << names[k] << "=" << format_double(values[k]);
    std::cout << " (lsmc stderr " << format_double(lsmc_se) << ")\n";
    for (const auto& p : matrix) {
        std::cout << (p["pass"].get<bool>() ? "pass " : "FAIL ") << p["a"].get<std::string>() << " vs "
                  << p["b"].get<std::string>() << ": gap " << format_double(p["gap"].get<double>()) << " <= "
                  << format_double(p["tolerance"].get<double>()) << "\n";
    }
    return all ? kOk : kCheckFailed;
}

int simulate(const Options& opt) {
    const SwitchingModel model = load(opt);
    const fs::path dir = opt.out;
    fs::create_directories(dir);
    const auto batch = paths_of(model, opt, opt.seed);
    stage("mc_engine", "moment_report");
    const auto report = moment_report(batch, 2.0);
    json moments = {{"sup_moment", report.sup_moment},
                    {"stderr", report.stderr_},
                    {"theta", report.theta},
                    {"bound_ratio", report.bound_ratio},
                    {"nonfinite_paths", report.nonfinite_paths},
                    {"finite", report.finite}};
    json terminal = json::array();
    for (std::size_t c = 0; c < batch.dim; ++c) {
        const auto tm = terminal_moments(batch, c);
        terminal.push_back({{"mean", tm.mean},
                            {"mean_stderr", tm.mean_stderr},
                            {"second", tm.second},
                            {"second_stderr", tm.second_stderr}});
    }
    write_text(dir / "moments.json",
               json{{"moment_report", moments}, {"terminal", terminal}, {"manifest_ref", "manifest.json"}}.dump(2) +
                   "\n");
    stage("mc_engine", "write_paths_csv");
    write_file(dir / "paths.csv", [&](std::ostream& os) { write_paths_csv(os, batch); });
    write_manifest(dir, "simulate", opt, model);
    if (!report.finite) throw Flagged(kNumerical, std::to_string(report.nonfinite_paths) + " non-finite paths");
    return kOk;
}

int execute_rule(const Options& opt) {
    const SwitchingModel model = load(opt);
    const fs::path dir = opt.out;
    fs::create_directories(dir);
    const int i0 = model.initial_mode;
    const double x0 = model.diffusion.x0[0];

    ValueField field;
    std::optional<ChainModel> chain;
    if (opt.source == "lattice") {
        chain = chain_of(model);
        stage("lattice_oracle", "solve_fixed_point");
        field = solve_fixed_point(*chain, model);
    } else if (opt.source == "pde") {
        const auto space = space_of(model, opt);
        stage("pde_solver", "solve_qvi_fd");
        field = solve_qvi_fd(model, space, opt.theta);
    } else {
        throw std::invalid_argument("--source must be lattice or pde");
    }
    const double y0 = field.initial_value(static_cast<std::size_t>(i0), x0);
    stage("strategy", "extract_rule");
    const auto rule = extract_rule(field, model);

    const auto batch = paths_of(model, opt, opt.seed);
    stage("strategy", "execute");
    const auto sampled = execute(rule, batch, model, i0);
    json summary = execution_summary(sampled, y0);
    summary["clamped"] = sampled.clamped;
    summary["capped"] = sampled.capped;
    summary["max_switches"] = sampled.max_switches;
    summary["source"] = opt.source;
    if (chain) {
        const auto exact = execute(rule, *chain, model, i0);
        summary["chain_exact"] = execution_summary(exact, y0);
    }
    summary["manifest_ref"] = "manifest.json";
    write_text(dir / "execution.json", summary.dump(2) + "\n");
    stage("strategy", "write_switch_log_csv");
    write_file(dir / "switch_log.csv", [&](std::ostream& os) { write_switch_log_csv(os, sampled); });
    write_manifest(dir, "execute", opt, model);
    const auto gap = optimality_gap(sampled, y0);
    std::cout << "Y0=" << format_double(y0) << " mean=" << format_double(sampled.mean)
              << " stderr=" << format_double(sampled.stderr_);
    if (gap.z) std::cout << " z=" << format_double(*gap.z);
    std::cout << "\n";
    return kOk;
}

void add_common(CLI::App* cmd, Options& opt) {
    cmd->add_option("--model", opt.model_path, "Model configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--N", opt.steps, "Time steps (overrides grid.N)")->check(CLI::PositiveNumber);
    cmd->add_option("--out", opt.out, "Output directory")->capture_default_str();
    cmd->add_option("--workers", opt.workers, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
}

void add_pde(CLI::App* cmd, Options& opt) {
    cmd->add_option("--J", opt.intervals, "Space intervals")->capture_default_str();
    cmd->add_option("--theta", opt.theta, "Time-stepping parameter in [1/2, 1]")->capture_default_str();
}

void add_mc(CLI::App* cmd, Options& opt) {
    cmd->add_option("--M", opt.paths, "Simulated paths")->capture_default_str()->check(CLI::PositiveNumber);
    cmd->add_option("--seed", opt.seed, "Random seed")->capture_default_str();
    cmd->add_flag("--antithetic", opt.antithetic, "Antithetic path pairs");
}

void add_lsmc(CLI::App* cmd, Options& opt) {
    cmd->add_option("--degree", opt.degree, "Polynomial degree")->capture_default_str();
    cmd->add_flag("--log-state", opt.log_state, "Regress on log-state (positive states only)");
    cmd->add_option("--update", opt.update, "Value carried backward: realized or fitted")
        ->capture_default_str()
        ->check(CLI::IsMember({"realized", "fitted"}));
}

void add_penalties(CLI::App* cmd, Options& opt) {
    cmd->add_option("--penalties", opt.penalties, "Penalty schedule, comma separated")
        ->delimiter(',')
        ->capture_default_str();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal multiple switching: lattice, penalized, PDE and regression Monte Carlo solvers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);
    Options opt;
    std::string method;

    auto* solve_cmd = app.add_subcommand("solve", "Solve with one method and write value fields");
    solve_cmd->add_option("method", method, "lattice | nswitch | penalized | lsmc | pde")
        ->required()
        ->check(CLI::IsMember({"lattice", "nswitch", "penalized", "lsmc", "pde"}));
    add_common(solve_cmd, opt);
    add_pde(solve_cmd, opt);
    add_mc(solve_cmd, opt);
    add_lsmc(solve_cmd, opt);
    add_penalties(solve_cmd, opt);
    solve_cmd->add_option("--n", opt.switches, "Switch budget for nswitch")->capture_default_str()->check(
        CLI::NonNegativeNumber);

    auto* cross_cmd = app.add_subcommand("crosscheck", "Cross-method consistency matrix");
    add_common(cross_cmd, opt);
    add_pde(cross_cmd, opt);
    add_mc(cross_cmd, opt);
    add_lsmc(cross_cmd, opt);
    add_penalties(cross_cmd, opt);

    auto* sim_cmd = app.add_subcommand("simulate", "Simulate paths and dump them with moment diagnostics");
    add_common(sim_cmd, opt);
    add_mc(sim_cmd, opt);

    auto* exec_cmd = app.add_subcommand("execute", "Extract the switching rule and execute it on fresh paths");
    add_common(exec_cmd, opt);
    add_pde(exec_cmd, opt);
    add_mc(exec_cmd, opt);
    exec_cmd->add_option("--source", opt.source, "Value field to extract from: lattice or pde")
        ->capture_default_str()
        ->check(CLI::IsMember({"lattice", "pde"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInvalid;
    }

    try {
        if (*solve_cmd) return solve(method, opt);
        if (*cross_cmd) return crosscheck(opt);
        if (*sim_cmd) return simulate(opt);
        if (*exec_cmd) return execute_rule(opt);
    } catch (const Flagged& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return e.code;
    } catch (const ConfigError& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return kInvalid;
    } catch (const NumericalError& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return kNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::logic_error& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        std::cerr << "error [" << g_stage << "]: " << e.what() << "\n";
        return 1;
    }
    return kOk;
}
