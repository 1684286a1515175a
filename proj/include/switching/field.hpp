#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace switching {

/// Which computation produced a field.
struct FieldMeta {
    std::string scheme;          // "fixed_point", "n_switch", "penalized", "qvi_fd"
    int switches = -1;           // n for n-switch fields
    double penalty = 0.0;        // penalty rate for penalized fields
    double theta = 1.0;          // time-stepping parameter for finite-difference fields
    std::string boundary;        // boundary rule for finite-difference fields
    bool converged = true;
    int iterations = 0;
};

/// Values Y[i][m][k] and continuation values C[i][m][k] indexed by mode, time
/// index and node. Lattice fields have m + 1 nodes at time m; grid fields have
/// the same J + 1 nodes at every time. Node coordinates are stored per time
/// index and are sorted ascending.
class ValueField {
public:
    enum class Layout { lattice, grid };

    ValueField() = default;
    ValueField(std::size_t modes, std::vector<std::vector<double>> node_x, Layout layout, FieldMeta meta = {});

    std::size_t modes() const { return modes_; }
    int steps() const { return static_cast<int>(node_x_.size()) - 1; }
    std::size_t nodes(int m) const { return node_x_[m].size(); }
    Layout layout() const { return layout_; }
    std::span<const double> x(int m) const { return node_x_[m]; }

    double value(std::size_t i, int m, std::size_t k) const { return values_[index(i, m, k)]; }
    double& value(std::size_t i, int m, std::size_t k) { return values_[index(i, m, k)]; }
    double continuation(std::size_t i, int m, std::size_t k) const { return continuation_[index(i, m, k)]; }
    double& continuation(std::size_t i, int m, std::size_t k) { return continuation_[index(i, m, k)]; }

    /// Value at the root node (lattice) or interpolated at x (grid).
    double initial_value(std::size_t i, double x0) const;
    /// Piecewise-linear interpolation in x at time index m; clamps outside the node range.
    double interpolate(std::size_t i, int m, double x) const;

    /// max |a - b| over all (i, m, k); fields must share a layout.
    friend double max_abs_difference(const ValueField& a, const ValueField& b);

    FieldMeta meta;

private:
    std::size_t index(std::size_t i, int m, std::size_t k) const { return i * per_mode_ + offsets_[m] + k; }

    std::size_t modes_ = 0;
    Layout layout_ = Layout::lattice;
    std::vector<std::vector<double>> node_x_;
    std::vector<std::size_t> offsets_;
    std::size_t per_mode_ = 0;
    std::vector<double> values_;
    std::vector<double> continuation_;
};

using ValueLattice = ValueField;
using GridValueField = ValueField;

} // namespace switching
