#include "quinwave/lattice.hpp"

#include <cstdlib>
#include <stdexcept>

namespace quinwave {

DecimationMatrix::DecimationMatrix(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d)
    : m_{{{a, b}, {c, d}}} {
    if (std::llabs(determinant()) != 2)
        throw std::invalid_argument("decimation matrix must have |det| == 2, got det " +
                                    std::to_string(determinant()));
}

std::optional<IntVec2> DecimationMatrix::solve(const IntVec2& x) const noexcept {
    // Cramer's rule; a solution is integral iff both numerators divide by det.
    const std::int64_t det = determinant();
    const std::int64_t n0 = m_[1][1] * x[0] - m_[0][1] * x[1];
    const std::int64_t n1 = m_[0][0] * x[1] - m_[1][0] * x[0];
    if (n0 % det != 0 || n1 % det != 0) return std::nullopt;
    return IntVec2{n0 / det, n1 / det};
}

DecimationMatrix quincunx_matrix() noexcept { return DecimationMatrix(1, 1, 1, -1); }

bool is_quincunx(const DecimationMatrix& m) noexcept {
    // M Z^2 is the even-parity set iff both columns have even coordinate
    // sum (index 2 is guaranteed by |det| == 2).
    return ((m(0, 0) + m(1, 0)) % 2 == 0) && ((m(0, 1) + m(1, 1)) % 2 == 0);
}

CosetMask::CosetMask(std::size_t height, std::size_t width, int parity)
    : height_(height), width_(width), parity_(parity) {
    if (height == 0 || width == 0) throw DimensionError("coset mask: zero-sized dimension");
    if (parity != 0 && parity != 1) throw std::invalid_argument("coset mask: parity must be 0 or 1");
}

std::size_t CosetMask::kept_count() const noexcept {
    const std::size_t total = height_ * width_;
    // Parity-0 gets the extra sample when the count is odd.
    return parity_ == 0 ? (total + 1) / 2 : total / 2;
}

CosetMask coset_mask(std::size_t height, std::size_t width, int parity) {
    return CosetMask(height, width, parity);
}

Image apply_mask(const Image& image, const CosetMask& mask) {
    Image out = image;
    apply_mask_in_place(out, mask);
    return out;
}

void apply_mask_in_place(Image& image, const CosetMask& mask) {
    if (image.height() != mask.height() || image.width() != mask.width())
        throw DimensionError("apply_mask: image " + shape_string(image.samples()) + " vs mask " +
                             std::to_string(mask.height()) + "x" + std::to_string(mask.width()));
    for (std::size_t r = 0; r < image.height(); ++r) {
        auto row = image.samples().row(r);
        const std::size_t first_dropped = (r + 1 + static_cast<std::size_t>(mask.parity())) & 1u;
        for (std::size_t c = first_dropped; c < row.size(); c += 2) row[c] = 0.0;
    }
}

} // namespace quinwave
