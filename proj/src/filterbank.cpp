#include "quinwave/filterbank.hpp"

#include "circular.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace quinwave {

Filter2D::Filter2D(Grid t, Anchor a) : taps(std::move(t)), anchor(a) {}

void Filter2D::validate() const {
    if (taps.rows() == 0 || taps.cols() == 0) throw std::invalid_argument("filter has no taps");
    if (!taps.all_finite()) throw std::invalid_argument("filter has non-finite taps");
    if (anchor.row >= taps.rows() || anchor.col >= taps.cols())
        throw std::invalid_argument("filter anchor (" + std::to_string(anchor.row) + "," +
                                    std::to_string(anchor.col) + ") outside " +
                                    shape_string(taps));
}

Filter2D Filter2D::identity() { return Filter2D(Grid(1, 1, 1.0), Anchor{0, 0}); }

void FilterBank::validate() const {
    for (std::size_t k = 0; k < kFilterCount; ++k) {
        (*this)[k].validate();
        if (!(*this)[k].taps.same_shape(h0.taps))
            throw std::invalid_argument(std::string("filter bank: ") + kFilterNames[k] +
                                        " shape differs from h0");
    }
}

Filter2D& FilterBank::operator[](std::size_t k) noexcept {
    switch (k) {
    case 0: return h0;
    case 1: return h1;
    case 2: return f0;
    default: return f1;
    }
}

const Filter2D& FilterBank::operator[](std::size_t k) const noexcept {
    return const_cast<FilterBank&>(*this)[k];
}

FilterBank quincunx_haar_bank() {
    const double s = 1.0 / std::sqrt(2.0);
    FilterBank bank;
    bank.h0 = Filter2D(Grid(1, 2, {s, s}), Anchor{0, 0});
    bank.h1 = Filter2D(Grid(1, 2, {s, -s}), Anchor{0, 0});
    bank.f0 = Filter2D(Grid(1, 2, {s, s}), Anchor{0, 1});
    bank.f1 = Filter2D(Grid(1, 2, {-s, s}), Anchor{0, 1});
    return bank;
}

namespace {

void require_fits(const Image& image, const Filter2D& filter, const char* what) {
    filter.validate();
    if (filter.rows() > image.height() || filter.cols() > image.width())
        throw DimensionError(std::string(what) + ": filter " + shape_string(filter.taps) +
                             " larger than image " + shape_string(image.samples()));
}

} // namespace

Image conv2_circular(const Image& image, const Filter2D& filter) {
    require_fits(image, filter, "conv2_circular");
    Image out(image.height(), image.width());
    const auto ar = static_cast<std::int64_t>(filter.anchor.row);
    const auto ac = static_cast<std::int64_t>(filter.anchor.col);
    for (std::size_t i = 0; i < filter.rows(); ++i)
        for (std::size_t j = 0; j < filter.cols(); ++j)
            detail::add_shifted(out.samples(), image.samples(), filter.taps(i, j),
                                ar - static_cast<std::int64_t>(i),
                                ac - static_cast<std::int64_t>(j));
    return out;
}

Image correlate2_circular(const Image& image, const Filter2D& filter) {
    require_fits(image, filter, "correlate2_circular");
    Image out(image.height(), image.width());
    const auto ar = static_cast<std::int64_t>(filter.anchor.row);
    const auto ac = static_cast<std::int64_t>(filter.anchor.col);
    for (std::size_t i = 0; i < filter.rows(); ++i)
        for (std::size_t j = 0; j < filter.cols(); ++j)
            detail::add_shifted(out.samples(), image.samples(), filter.taps(i, j),
                                static_cast<std::int64_t>(i) - ar,
                                static_cast<std::int64_t>(j) - ac);
    return out;
}

Subbands analysis(const Image& image, const FilterBank& bank, const CosetMask& mask) {
    Subbands out{conv2_circular(image, bank.h0), conv2_circular(image, bank.h1)};
    apply_mask_in_place(out.z0, mask);
    apply_mask_in_place(out.z1, mask);
    return out;
}

Image synthesis(const Image& z0, const Image& z1, const FilterBank& bank) {
    if (!z0.same_dims(z1))
        throw DimensionError("synthesis: subband shapes " + shape_string(z0.samples()) + " vs " +
                             shape_string(z1.samples()));
    Image out = conv2_circular(z0, bank.f0);
    out += conv2_circular(z1, bank.f1);
    return out;
}

ForwardTrace forward(const Image& image, const FilterBank& bank, const CosetMask& mask) {
    bank.validate();
    ForwardTrace t;
    t.y0 = conv2_circular(image, bank.h0);
    t.y1 = conv2_circular(image, bank.h1);
    t.z0 = apply_mask(t.y0, mask);
    t.z1 = apply_mask(t.y1, mask);
    t.recon = synthesis(t.z0, t.z1, bank);
    t.fingerprint = fingerprint(image, bank, mask);
    return t;
}

namespace {

// FNV-1a over the raw bytes of every input that shapes the trace.
class Fnv1a {
public:
    void add(std::uint64_t v) noexcept {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xffu;
            h_ *= 0x100000001b3ull;
        }
    }
    void add(double v) noexcept { add(std::bit_cast<std::uint64_t>(v)); }
    void add(const Grid& g) noexcept {
        add(static_cast<std::uint64_t>(g.rows()));
        add(static_cast<std::uint64_t>(g.cols()));
        for (double v : g.values()) add(v);
    }
    std::uint64_t value() const noexcept { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ull;
};

} // namespace

std::uint64_t fingerprint(const Image& image, const FilterBank& bank, const CosetMask& mask) {
    Fnv1a h;
    h.add(image.samples());
    for (std::size_t k = 0; k < kFilterCount; ++k) {
        h.add(bank[k].taps);
        h.add(static_cast<std::uint64_t>(bank[k].anchor.row));
        h.add(static_cast<std::uint64_t>(bank[k].anchor.col));
    }
    h.add(static_cast<std::uint64_t>(mask.height()));
    h.add(static_cast<std::uint64_t>(mask.width()));
    h.add(static_cast<std::uint64_t>(mask.parity()));
    return h.value();
}

double psnr(const Image& reference, const Image& test, double peak) {
    require_same_shape(reference.samples(), test.samples(), "psnr");
    auto a = reference.samples().values();
    auto b = test.samples().values();
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sse += d * d;
    }
    if (sse == 0.0) return kPsnrInfinity;
    const double mse = sse / static_cast<double>(a.size());
    return 10.0 * std::log10(peak * peak / mse);
}

std::vector<ProbeReport> pr_error(const FilterBank& bank, const CosetMask& mask,
                                  const std::vector<Image>& probes, double peak) {
    if (probes.empty()) throw std::invalid_argument("pr_error: no probes");
    std::vector<ProbeReport> out;
    out.reserve(probes.size());
    for (const Image& probe : probes) {
        const ForwardTrace t = forward(probe, bank, mask);
        out.push_back({max_abs_diff(probe, t.recon), psnr(probe, t.recon, peak)});
    }
    return out;
}

} // namespace quinwave
