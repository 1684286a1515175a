#pragma once

#include <filesystem>
#include <ostream>
#include <string>

#include <json.hpp>

#include "switching/field.hpp"
#include "switching/lsmc.hpp"
#include "switching/paths.hpp"
#include "switching/penalized.hpp"
#include "switching/strategy.hpp"

namespace switching {

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Modes are written 1-based in every export.
void write_field_csv(std::ostream& out, const ValueField& field);          // mode,m,l|j,x,value
void write_paths_csv(std::ostream& out, const PathBatch& batch);          // path,m,coord,value
void write_lsmc_summary_csv(std::ostream& out, const PathValueField& f);  // mode,m,mean,stderr
void write_lsmc_coefficients_csv(std::ostream& out, const PathValueField& f);  // mode,m,term,weight
void write_convergence_csv(std::ostream& out, const ConvergenceReport& report);  // penalty,sup_gap,slope_so_far,converged_flag
void write_switch_log_csv(std::ostream& out, const ExecutionReport& report);    // path,m,from,to,cost

/// Path dumps are refused (std::length_error) above this many rows.
inline constexpr std::size_t kPathDumpLimit = 1'000'000;

/// {mean, stderr, Y0, gap, z, switch_histogram}
nlohmann::json execution_summary(const ExecutionReport& report, double reference_value);

/// Opens `path` for writing and hands the stream to `writer`.
template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer);

void write_text(const std::filesystem::path& path, const std::string& text);

} // namespace switching

#include <fstream>
#include <stdexcept>

template <typename Writer>
void switching::write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    writer(out);
    if (!out) throw std::runtime_error("write failed for " + path.string());
}
