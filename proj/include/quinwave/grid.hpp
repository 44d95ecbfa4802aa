#ifndef QUINWAVE_GRID_HPP
#define QUINWAVE_GRID_HPP

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace quinwave {

/// Thrown when operands disagree on dimensions or violate a precondition.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Dense row-major grid of doubles. Used for images, filter taps and
/// gradient buffers alike; the domain types wrap it with their own
/// invariants.
class Grid {
public:
    Grid() = default;
    Grid(std::size_t rows, std::size_t cols, double fill = 0.0);
    Grid(std::size_t rows, std::size_t cols, std::vector<double> values);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return values_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return values_[r * cols_ + c]; }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::span<double> row(std::size_t r) noexcept { return {values_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const noexcept {
        return {values_.data() + r * cols_, cols_};
    }

    bool same_shape(const Grid& other) const noexcept {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const noexcept;
    double sum() const noexcept;

    Grid& operator+=(const Grid& other);
    Grid& operator-=(const Grid& other);
    Grid& operator*=(double s) noexcept;

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> values_;
};

Grid operator+(Grid a, const Grid& b);
Grid operator-(Grid a, const Grid& b);
Grid operator*(double s, Grid a);

/// Largest absolute elementwise difference. Shapes must match.
double max_abs_diff(const Grid& a, const Grid& b);

void require_same_shape(const Grid& a, const Grid& b, const char* what);

std::string shape_string(const Grid& g);

} // namespace quinwave

#endif
