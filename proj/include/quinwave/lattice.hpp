#ifndef QUINWAVE_LATTICE_HPP
#define QUINWAVE_LATTICE_HPP

#include "quinwave/image.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace quinwave {

using IntVec2 = std::array<std::int64_t, 2>;

/// 2x2 integer sampling matrix. Only matrices with |det| == 2 are accepted.
class DecimationMatrix {
public:
    /// Throws std::invalid_argument unless |a*d - b*c| == 2.
    DecimationMatrix(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d);

    std::int64_t operator()(int r, int c) const noexcept { return m_[r][c]; }
    std::int64_t determinant() const noexcept { return m_[0][0] * m_[1][1] - m_[0][1] * m_[1][0]; }

    IntVec2 apply(const IntVec2& v) const noexcept {
        return {m_[0][0] * v[0] + m_[0][1] * v[1], m_[1][0] * v[0] + m_[1][1] * v[1]};
    }

    /// Integer n with M n == x, if one exists.
    std::optional<IntVec2> solve(const IntVec2& x) const noexcept;

    friend bool operator==(const DecimationMatrix&, const DecimationMatrix&) = default;

private:
    std::array<std::array<std::int64_t, 2>, 2> m_;
};

/// M = [1 1; 1 -1], generator of the quincunx lattice.
DecimationMatrix quincunx_matrix() noexcept;

/// True when M maps Z^2 onto the quincunx sublattice {n : n1 + n2 even}.
bool is_quincunx(const DecimationMatrix& m) noexcept;

/// Which samples survive quincunx down/upsampling: those with
/// (row + col) mod 2 == parity. Parity 0 is the lattice M Z^2 itself.
class CosetMask {
public:
    CosetMask(std::size_t height, std::size_t width, int parity);

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    int parity() const noexcept { return parity_; }

    bool kept(std::size_t r, std::size_t c) const noexcept {
        return static_cast<int>((r + c) & 1u) == parity_;
    }
    std::size_t kept_count() const noexcept;

    friend bool operator==(const CosetMask&, const CosetMask&) = default;

private:
    std::size_t height_;
    std::size_t width_;
    int parity_;
};

/// Throws DimensionError on zero-sized dimensions, std::invalid_argument
/// on a parity other than 0 or 1.
CosetMask coset_mask(std::size_t height, std::size_t width, int parity);

/// Zeroes every sample the mask discards.
Image apply_mask(const Image& image, const CosetMask& mask);
void apply_mask_in_place(Image& image, const CosetMask& mask);

} // namespace quinwave

#endif
