#include "switching/io.hpp"

#include <charconv>
#include <cmath>

namespace switching {

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_field_csv(std::ostream& out, const ValueField& field) {
    out << "mode,m," << (field.layout() == ValueField::Layout::lattice ? "l" : "j") << ",x,value\n";
    for (std::size_t i = 0; i < field.modes(); ++i) {
        for (int m = 0; m <= field.steps(); ++m) {
            const auto xs = field.x(m);
            for (std::size_t k = 0; k < field.nodes(m); ++k) {
                out << i + 1 << ',' << m << ',' << k << ',' << format_double(xs[k]) << ','
                    << format_double(field.value(i, m, k)) << '\n';
            }
        }
    }
}

void write_paths_csv(std::ostream& out, const PathBatch& batch) {
    const std::size_t rows = batch.paths * (batch.steps() + 1) * batch.dim;
    if (rows > kPathDumpLimit) {
        throw std::length_error("path dump of " + std::to_string(rows) + " rows exceeds the limit of " +
                                std::to_string(kPathDumpLimit));
    }
    out << "path,m,coord,value\n";
    for (std::size_t p = 0; p < batch.paths; ++p) {
        for (int m = 0; m <= batch.grid.steps; ++m) {
            for (std::size_t c = 0; c < batch.dim; ++c) {
                out << p << ',' << m << ',' << c + 1 << ',' << format_double(batch.at(p, m, c)) << '\n';
            }
        }
    }
}

void write_lsmc_summary_csv(std::ostream& out, const PathValueField& f) {
    out << "mode,m,mean,stderr\n";
    for (std::size_t i = 0; i < f.modes; ++i) {
        for (int m = 0; m <= f.steps; ++m) {
            out << i + 1 << ',' << m << ',' << format_double(f.value_mean(i, m)) << ','
                << format_double(f.value_stderr(i, m)) << '\n';
        }
    }
}

void write_lsmc_coefficients_csv(std::ostream& out, const PathValueField& f) {
    out << "mode,m,term,weight\n";
    for (std::size_t i = 0; i < f.modes; ++i) {
        for (int m = 0; m < f.steps; ++m) {
            const auto& w = f.coefficients[i * (f.steps + 1) + m];
            for (std::size_t t = 0; t < w.size(); ++t) {
                out << i + 1 << ',' << m << ',' << f.terms[t] << ',' << format_double(w[t]) << '\n';
            }
        }
    }
}

void write_convergence_csv(std::ostream& out, const ConvergenceReport& report) {
    out << "penalty,sup_gap,slope_so_far,converged_flag\n";
    for (const auto& row : report.rows) {
        out << format_double(row.penalty) << ',' << format_double(row.gap) << ','
            << format_double(row.slope_so_far) << ',' << (row.converged ? 1 : 0) << '\n';
    }
}

void write_switch_log_csv(std::ostream& out, const ExecutionReport& report) {
    out << "path,m,from,to,cost\n";
    for (const auto& e : report.log) {
        out << e.path << ',' << e.m << ',' << e.from + 1 << ',' << e.to + 1 << ',' << format_double(e.cost) << '\n';
    }
}

nlohmann::json execution_summary(const ExecutionReport& report, double reference_value) {
    const auto gap = optimality_gap(report, reference_value);
    nlohmann::json z = nullptr;
    if (gap.z) z = *gap.z;
    return {{"mean", report.mean},
            {"stderr", report.stderr_},
            {"Y0", reference_value},
            {"gap", gap.gap},
            {"z", z},
            {"switch_histogram", report.switch_histogram}};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    write_file(path, [&](std::ostream& out) { out << text; });
}

} // namespace switching
