#ifndef QUINWAVE_RENDER_HPP
#define QUINWAVE_RENDER_HPP

#include "quinwave/filterbank.hpp"
#include "quinwave/lattice.hpp"

#include <cstdint>
#include <vector>

namespace quinwave {

/// Real function sampled on the integer grid g / density, g = origin + (i, j).
/// Axis 0 follows filter rows, axis 1 filter columns.
struct SampledSurface {
    Grid values;
    std::int64_t origin_row = 0;
    std::int64_t origin_col = 0;
    std::int64_t density = 1; ///< samples per unit length
    int level = 0;            ///< cascade iteration that produced the values

    double x_row(std::size_t i) const noexcept {
        return static_cast<double>(origin_row + static_cast<std::int64_t>(i)) /
               static_cast<double>(density);
    }
    double x_col(std::size_t j) const noexcept {
        return static_cast<double>(origin_col + static_cast<std::int64_t>(j)) /
               static_cast<double>(density);
    }

    /// Value at integer grid coordinate g (absolute, not relative to origin); 0 outside.
    double at(std::int64_t g_row, std::int64_t g_col) const noexcept;

    /// Riemann sum, sum(values) / density^2.
    double integral() const noexcept;
};

struct CascadeOptions {
    /// Upper bound on samples along either axis; density is the largest
    /// power of two that respects it.
    std::size_t max_samples_per_side = 256;
};

/// Iterates phi_{j+1}(x) = sum_n sqrt2 f0[n] phi_j(M x - n) from the
/// indicator of the unit square and returns phi_0 .. phi_iterations, all
/// sampled on one grid that covers the support of every iterate.
///
/// The iterates are piecewise constant on cells of M^-j Z^2 and are tracked
/// exactly by their cell coefficients, so sampling introduces no
/// interpolation error. When density >= 2^ceil(j/2) the Riemann sum of
/// iterate j equals its exact integral.
std::vector<SampledSurface> cascade_iterates(const Filter2D& f0, const DecimationMatrix& m,
                                             int iterations, const CascadeOptions& options = {});

/// Last cascade iterate.
SampledSurface cascade_scaling(const Filter2D& f0, const DecimationMatrix& m, int iterations,
                               const CascadeOptions& options = {});

/// psi(x) = sum_n sqrt2 f1[n] phi(M x - n), evaluated on the scaling grid
/// (extended to cover psi's support). Rejects surfaces whose density is not
/// a positive even integer.
SampledSurface cascade_wavelet(const Filter2D& f1, const SampledSurface& scaling,
                               const DecimationMatrix& m);

/// RMS over the sampling grid of phi(x) - sum_n sqrt2 f0[n] phi(M x - n).
/// Zero for an exact solution of the two-scale relation.
double two_scale_residual(const Filter2D& f0, const SampledSurface& phi,
                          const DecimationMatrix& m);

/// |sum_n taps[n] exp(-i w.n)| at a single frequency, n = tap index - anchor.
double freq_magnitude(const Filter2D& filter, double w_row, double w_col);

/// grid_size x grid_size samples of freq_magnitude at w_k = pi (2k - N) / N,
/// covering [-pi, pi). For even N the DC term sits at (N/2, N/2).
Grid freq_response(const Filter2D& filter, std::size_t grid_size);

} // namespace quinwave

#endif
