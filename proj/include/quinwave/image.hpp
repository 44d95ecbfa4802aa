#ifndef QUINWAVE_IMAGE_HPP
#define QUINWAVE_IMAGE_HPP

#include "quinwave/grid.hpp"

namespace quinwave {

/// Single-channel image of real intensities (0-255 on ingest).
///
/// Construction requires a nonempty grid. Finiteness is checked by
/// `require_finite()` at entry points that accept external data; the
/// signal path itself does not reject non-finite values so that a
/// diverging optimizer can still be observed.
class Image {
public:
    Image() = default;
    explicit Image(Grid samples);
    Image(std::size_t height, std::size_t width, double fill = 0.0);

    std::size_t height() const noexcept { return samples_.rows(); }
    std::size_t width() const noexcept { return samples_.cols(); }
    std::size_t pixel_count() const noexcept { return samples_.size(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return samples_(r, c); }
    double operator()(std::size_t r, std::size_t c) const noexcept { return samples_(r, c); }

    const Grid& samples() const noexcept { return samples_; }
    Grid& samples() noexcept { return samples_; }

    bool same_dims(const Image& other) const noexcept { return samples_.same_shape(other.samples_); }
    void require_finite(const char* what) const;

    Image& operator+=(const Image& other);
    Image& operator*=(double s) noexcept;

    friend bool operator==(const Image&, const Image&) = default;

private:
    Grid samples_;
};

Image operator+(Image a, const Image& b);
Image operator*(double s, Image a);

double max_abs_diff(const Image& a, const Image& b);

/// Copy of the `height`x`width` window whose top-left sample is (row, col).
Image crop(const Image& image, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width);

} // namespace quinwave

#endif
