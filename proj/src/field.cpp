#include "switching/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace switching {

ValueField::ValueField(std::size_t modes, std::vector<std::vector<double>> node_x, Layout layout, FieldMeta meta_)
    : meta(std::move(meta_)), modes_(modes), layout_(layout), node_x_(std::move(node_x)) {
    offsets_.reserve(node_x_.size());
    for (const auto& xs : node_x_) {
        offsets_.push_back(per_mode_);
        per_mode_ += xs.size();
    }
    values_.assign(modes_ * per_mode_, 0.0);
    continuation_.assign(modes_ * per_mode_, 0.0);
}

double ValueField::interpolate(std::size_t i, int m, double x) const {
    const auto xs = this->x(m);
    if (xs.size() == 1 || x <= xs.front()) return value(i, m, 0);
    if (x >= xs.back()) return value(i, m, xs.size() - 1);
    const auto hi = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin());
    const std::size_t lo = hi - 1;
    const double w = (x - xs[lo]) / (xs[hi] - xs[lo]);
    return (1.0 - w) * value(i, m, lo) + w * value(i, m, hi);
}

double ValueField::initial_value(std::size_t i, double x0) const {
    if (layout_ == Layout::lattice) return value(i, 0, 0);
    return interpolate(i, 0, x0);
}

double max_abs_difference(const ValueField& a, const ValueField& b) {
    if (a.modes_ != b.modes_ || a.per_mode_ != b.per_mode_) {
        throw std::invalid_argument("max_abs_difference: field shapes differ");
    }
    double gap = 0.0;
    for (std::size_t n = 0; n < a.values_.size(); ++n) {
        gap = std::max(gap, std::abs(a.values_[n] - b.values_[n]));
    }
    return gap;
}

} // namespace switching
