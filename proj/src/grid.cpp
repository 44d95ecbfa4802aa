#include "quinwave/grid.hpp"

#include <algorithm>
#include <cmath>

namespace quinwave {

Grid::Grid(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Grid::Grid(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows * cols)
        throw DimensionError("grid: " + std::to_string(values_.size()) + " values for a " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " grid");
}

bool Grid::all_finite() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

double Grid::sum() const noexcept {
    double s = 0.0;
    for (double v : values_) s += v;
    return s;
}

Grid& Grid::operator+=(const Grid& other) {
    require_same_shape(*this, other, "grid +=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

Grid& Grid::operator-=(const Grid& other) {
    require_same_shape(*this, other, "grid -=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

Grid& Grid::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

Grid operator+(Grid a, const Grid& b) { return a += b; }
Grid operator-(Grid a, const Grid& b) { return a -= b; }
Grid operator*(double s, Grid a) { return a *= s; }

double max_abs_diff(const Grid& a, const Grid& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < av.size(); ++i) m = std::max(m, std::abs(av[i] - bv[i]));
    return m;
}

void require_same_shape(const Grid& a, const Grid& b, const char* what) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                             shape_string(b));
}

std::string shape_string(const Grid& g) {
    return std::to_string(g.rows()) + "x" + std::to_string(g.cols());
}

} // namespace quinwave
