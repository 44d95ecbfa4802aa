#ifndef QUINWAVE_FILTERBANK_HPP
#define QUINWAVE_FILTERBANK_HPP

#include "quinwave/image.hpp"
#include "quinwave/lattice.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace quinwave {

/// Tap index treated as the filter origin.
struct Anchor {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Anchor&, const Anchor&) = default;
};

/// A 2-D FIR filter. Tap (i, j) sits at spatial offset (i - anchor.row, j - anchor.col).
struct Filter2D {
    Grid taps;
    Anchor anchor;

    Filter2D() = default;
    Filter2D(Grid t, Anchor a = {});

    std::size_t rows() const noexcept { return taps.rows(); }
    std::size_t cols() const noexcept { return taps.cols(); }

    /// Throws std::invalid_argument on empty taps, non-finite taps or an
    /// out-of-range anchor.
    void validate() const;

    static Filter2D identity();

    friend bool operator==(const Filter2D&, const Filter2D&) = default;
};

/// Two-channel bank: h0/h1 analyse, f0/f1 synthesise. All four share one tap shape.
struct FilterBank {
    Filter2D h0;
    Filter2D h1;
    Filter2D f0;
    Filter2D f1;

    void validate() const;

    Filter2D& operator[](std::size_t k) noexcept;
    const Filter2D& operator[](std::size_t k) const noexcept;

    friend bool operator==(const FilterBank&, const FilterBank&) = default;
};

inline constexpr std::size_t kFilterCount = 4;
inline constexpr const char* kFilterNames[kFilterCount] = {"h0", "h1", "f0", "f1"};

/// Reference quincunx Haar bank with exact perfect reconstruction under
/// the parity-0 mask:
///   h0 = [1  1]/sqrt2, h1 = [1 -1]/sqrt2, anchors (0,0)
///   f0 = [1  1]/sqrt2, f1 = [-1 1]/sqrt2, anchors (0,1)
/// The synthesis anchors undo the one-sample delay of the causal analysis pair.
FilterBank quincunx_haar_bank();

/// out[n] = sum_p taps[p] * image[(n - p + anchor) mod (H, W)].
/// True convolution, periodic boundary. Taps are accumulated in row-major
/// order for every output sample, so results do not depend on scheduling.
Image conv2_circular(const Image& image, const Filter2D& filter);

/// Adjoint of conv2_circular: out[n] = sum_p taps[p] * image[(n + p - anchor) mod (H, W)].
Image correlate2_circular(const Image& image, const Filter2D& filter);

struct Subbands {
    Image z0;
    Image z1;
};

Subbands analysis(const Image& image, const FilterBank& bank, const CosetMask& mask);
Image synthesis(const Image& z0, const Image& z1, const FilterBank& bank);

/// Intermediates of one pass through the bank, kept for backpropagation.
struct ForwardTrace {
    Image y0, y1;
    Image z0, z1;
    Image recon;
    /// Identifies the (image, bank, mask) triple the trace was computed from.
    std::uint64_t fingerprint = 0;
};

ForwardTrace forward(const Image& image, const FilterBank& bank, const CosetMask& mask);

std::uint64_t fingerprint(const Image& image, const FilterBank& bank, const CosetMask& mask);

inline constexpr double kPsnrInfinity = std::numeric_limits<double>::infinity();

/// 10 log10(peak^2 / MSE); kPsnrInfinity when the images are identical.
double psnr(const Image& reference, const Image& test, double peak = 255.0);

struct ProbeReport {
    double max_abs_error = 0.0;
    double psnr = 0.0;
};

/// Runs every probe through the bank and measures how far the output is
/// from the input. Requires at least one probe.
std::vector<ProbeReport> pr_error(const FilterBank& bank, const CosetMask& mask,
                                  const std::vector<Image>& probes, double peak = 255.0);

} // namespace quinwave

#endif
