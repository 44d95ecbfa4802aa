#include "quinwave/image.hpp"

namespace quinwave {

Image::Image(Grid samples) : samples_(std::move(samples)) {
    if (samples_.rows() == 0 || samples_.cols() == 0)
        throw DimensionError("image must have at least one row and one column");
}

Image::Image(std::size_t height, std::size_t width, double fill)
    : Image(Grid(height, width, fill)) {}

void Image::require_finite(const char* what) const {
    if (!samples_.all_finite())
        throw std::invalid_argument(std::string(what) + ": image contains non-finite samples");
}

Image& Image::operator+=(const Image& other) {
    require_same_shape(samples_, other.samples_, "image +=");
    samples_ += other.samples_;
    return *this;
}

Image& Image::operator*=(double s) noexcept {
    samples_ *= s;
    return *this;
}

Image operator+(Image a, const Image& b) { return a += b; }
Image operator*(double s, Image a) { return a *= s; }

double max_abs_diff(const Image& a, const Image& b) {
    return max_abs_diff(a.samples(), b.samples());
}

Image crop(const Image& image, std::size_t row, std::size_t col, std::size_t height,
           std::size_t width) {
    if (height == 0 || width == 0 || row + height > image.height() || col + width > image.width())
        throw DimensionError("crop window outside image");
    Image out(height, width);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c) out(r, c) = image(row + r, col + c);
    return out;
}

} // namespace quinwave
