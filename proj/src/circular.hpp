#ifndef QUINWAVE_SRC_CIRCULAR_HPP
#define QUINWAVE_SRC_CIRCULAR_HPP

// Periodic-shift kernels shared by the signal path and the gradient code.

#include "quinwave/grid.hpp"

#include <cstddef>
#include <cstdint>

namespace quinwave::detail {

inline std::size_t wrap(std::int64_t x, std::size_t n) noexcept {
    const auto m = static_cast<std::int64_t>(n);
    return static_cast<std::size_t>(((x % m) + m) % m);
}

/// out[r][c] += w * src[(r + dr) mod H][(c + dc) mod W]
inline void add_shifted(Grid& out, const Grid& src, double w, std::int64_t dr,
                        std::int64_t dc) noexcept {
    const std::size_t rows = src.rows();
    const std::size_t cols = src.cols();
    const std::size_t s = wrap(dc, cols);
    const std::size_t head = cols - s;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* in = src.row(wrap(static_cast<std::int64_t>(r) + dr, rows)).data();
        double* o = out.row(r).data();
        for (std::size_t c = 0; c < head; ++c) o[c] += w * in[c + s];
        for (std::size_t c = head; c < cols; ++c) o[c] += w * in[c - head];
    }
}

/// sum_n a[n] * b[(n + (dr, dc)) mod (H, W)], row-major over n.
inline double shifted_dot(const Grid& a, const Grid& b, std::int64_t dr, std::int64_t dc) noexcept {
    const std::size_t rows = a.rows();
    const std::size_t cols = a.cols();
    const std::size_t s = wrap(dc, cols);
    const std::size_t head = cols - s;
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = a.row(r).data();
        const double* y = b.row(wrap(static_cast<std::int64_t>(r) + dr, rows)).data();
        double acc = 0.0;
        for (std::size_t c = 0; c < head; ++c) acc += x[c] * y[c + s];
        for (std::size_t c = head; c < cols; ++c) acc += x[c] * y[c - head];
        total += acc;
    }
    return total;
}

} // namespace quinwave::detail

#endif
