#include "quinwave/render.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace quinwave {

namespace {

struct Mat2 {
    std::int64_t a, b, c, d;

    Mat2 operator*(const Mat2& o) const noexcept {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    IntVec2 apply(std::int64_t x, std::int64_t y) const noexcept {
        return {a * x + b * y, c * x + d * y};
    }
};

Mat2 to_mat(const DecimationMatrix& m) { return {m(0, 0), m(0, 1), m(1, 0), m(1, 1)}; }

std::int64_t floor_div(std::int64_t a, std::int64_t d) noexcept {
    const std::int64_t q = a / d;
    return (a % d != 0 && (a < 0) != (d < 0)) ? q - 1 : q;
}

struct Tap {
    IntVec2 offset; // spatial position n
    double weight;  // sqrt2 * tap
};

std::vector<Tap> weighted_taps(const Filter2D& f) {
    f.validate();
    std::vector<Tap> out;
    for (std::size_t i = 0; i < f.rows(); ++i)
        for (std::size_t j = 0; j < f.cols(); ++j)
            out.push_back({{static_cast<std::int64_t>(i) - static_cast<std::int64_t>(f.anchor.row),
                            static_cast<std::int64_t>(j) - static_cast<std::int64_t>(f.anchor.col)},
                           std::sqrt(2.0) * f.taps(i, j)});
    return out;
}

struct Box {
    double lo[2];
    double hi[2];
};

struct RealMat2 {
    double a, b, c, d;

    RealMat2 operator*(const RealMat2& o) const noexcept {
        return {a * o.a + b * o.c, a * o.b + b * o.d, c * o.a + d * o.c, c * o.b + d * o.d};
    }
    double norm_inf() const noexcept {
        return std::max(std::abs(a) + std::abs(b), std::abs(c) + std::abs(d));
    }
};

RealMat2 to_real(const Mat2& m) {
    return {static_cast<double>(m.a), static_cast<double>(m.b), static_cast<double>(m.c),
            static_cast<double>(m.d)};
}

RealMat2 inverse(const Mat2& m) {
    const double det = static_cast<double>(m.a * m.d - m.b * m.c);
    return {m.d / det, -m.b / det, -m.c / det, m.a / det};
}

Box hull(const Box& x, const Box& y) {
    Box out = x;
    for (int ax = 0; ax < 2; ++ax) {
        out.lo[ax] = std::min(x.lo[ax], y.lo[ax]);
        out.hi[ax] = std::max(x.hi[ax], y.hi[ax]);
    }
    return out;
}

Box sum(const Box& x, const Box& y) {
    return {{x.lo[0] + y.lo[0], x.lo[1] + y.lo[1]}, {x.hi[0] + y.hi[0], x.hi[1] + y.hi[1]}};
}

Box image(const RealMat2& t, const Box& b) {
    Box out{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
    for (int cr = 0; cr < 2; ++cr) {
        for (int cc = 0; cc < 2; ++cc) {
            const double x = cr ? b.hi[0] : b.lo[0];
            const double y = cc ? b.hi[1] : b.lo[1];
            const double v[2] = {t.a * x + t.b * y, t.c * x + t.d * y};
            for (int ax = 0; ax < 2; ++ax) {
                out.lo[ax] = std::min(out.lo[ax], v[ax]);
                out.hi[ax] = std::max(out.hi[ax], v[ax]);
            }
        }
    }
    return out;
}

Box offset_box(const std::vector<Tap>& taps) {
    Box b{{INFINITY, INFINITY}, {-INFINITY, -INFINITY}};
    for (const Tap& t : taps)
        for (int ax = 0; ax < 2; ++ax) {
            b.lo[ax] = std::min(b.lo[ax], static_cast<double>(t.offset[ax]));
            b.hi[ax] = std::max(b.hi[ax], static_cast<double>(t.offset[ax]));
        }
    return b;
}

// Bounding box of M^-1 (box + offsets), the support map of one cascade step.
Box contract(const Box& b, const std::vector<Tap>& taps, const Mat2& m) {
    return image(inverse(m), sum(b, offset_box(taps)));
}

// A box containing the support of every cascade iterate. One step of M^-1
// need not shrink bounding boxes (for [1 1; 1 -1] it rotates by 45 degrees),
// so the search runs k steps at a time, with k chosen so M^-k contracts in
// the max norm:
//   supp phi_{j+k} = M^-k (supp phi_j + N + M N + ... + M^{k-1} N).
Box invariant_box(const std::vector<Tap>& taps, const Mat2& m) {
    const RealMat2 inv = inverse(m);
    RealMat2 inv_k = inv;
    int k = 1;
    while (inv_k.norm_inf() >= 1.0) {
        if (++k > 32) throw std::invalid_argument("cascade: decimation matrix is not expanding");
        inv_k = inv_k * inv;
    }

    const Box n = offset_box(taps);
    Box lifted = n; // bbox of N + M N + ... + M^{k-1} N
    RealMat2 mi = to_real(m);
    for (int i = 1; i < k; ++i) {
        lifted = sum(lifted, image(mi, n));
        mi = mi * to_real(m);
    }

    Box b{{0.0, 0.0}, {1.0, 1.0}};
    Box step = b;
    for (int i = 1; i < k; ++i) {
        step = contract(step, taps, m);
        b = hull(b, step);
    }
    for (int it = 0; it < 10000; ++it) {
        const Box u = hull(b, image(inv_k, sum(b, lifted)));
        double change = 0.0;
        for (int ax = 0; ax < 2; ++ax)
            change = std::max({change, b.lo[ax] - u.lo[ax], u.hi[ax] - b.hi[ax]});
        b = u;
        if (change < 1e-12) break;
    }
    for (int ax = 0; ax < 2; ++ax) {
        b.lo[ax] -= 1e-9;
        b.hi[ax] += 1e-9;
    }
    return b;
}

struct GridRange {
    std::int64_t lo[2];
    std::int64_t hi[2]; // inclusive
};

GridRange cover(const Box& b, std::int64_t density) {
    GridRange r{};
    for (int ax = 0; ax < 2; ++ax) {
        r.lo[ax] = static_cast<std::int64_t>(std::floor(b.lo[ax] * static_cast<double>(density))) - 1;
        r.hi[ax] = static_cast<std::int64_t>(std::ceil(b.hi[ax] * static_cast<double>(density))) + 1;
    }
    return r;
}

std::int64_t choose_density(const Box& b, std::size_t cap) {
    std::int64_t d = 2;
    for (;;) {
        const std::int64_t next = d * 2;
        const GridRange r = cover(b, next);
        const auto side = static_cast<std::size_t>(std::max(r.hi[0] - r.lo[0], r.hi[1] - r.lo[1]) + 1);
        if (side > cap || next > (std::int64_t{1} << 30)) return d;
        d = next;
    }
}

SampledSurface blank_surface(const GridRange& r, std::int64_t density, int level) {
    SampledSurface s;
    s.values = Grid(static_cast<std::size_t>(r.hi[0] - r.lo[0] + 1),
                    static_cast<std::size_t>(r.hi[1] - r.lo[1] + 1));
    s.origin_row = r.lo[0];
    s.origin_col = r.lo[1];
    s.density = density;
    s.level = level;
    return s;
}

// Coefficients c_j of phi_j(x) = sum_k c_j[k] 1[M^j x - k in [0,1)^2].
struct CellCoefficients {
    std::int64_t r0 = 0, c0 = 0;
    Grid values{1, 1, 1.0};

    double at(std::int64_t r, std::int64_t c) const noexcept {
        const std::int64_t i = r - r0, j = c - c0;
        if (i < 0 || j < 0 || i >= static_cast<std::int64_t>(values.rows()) ||
            j >= static_cast<std::int64_t>(values.cols()))
            return 0.0;
        return values(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
};

// c_{j+1}[k] = sum_n w_n c_j[k - M^j n]
CellCoefficients refine(const CellCoefficients& c, const std::vector<Tap>& taps, const Mat2& mj) {
    std::vector<IntVec2> shifts;
    std::int64_t lo[2] = {0, 0}, hi[2] = {0, 0};
    for (std::size_t t = 0; t < taps.size(); ++t) {
        const IntVec2 s = mj.apply(taps[t].offset[0], taps[t].offset[1]);
        shifts.push_back(s);
        for (int ax = 0; ax < 2; ++ax) {
            lo[ax] = t == 0 ? s[ax] : std::min(lo[ax], s[ax]);
            hi[ax] = t == 0 ? s[ax] : std::max(hi[ax], s[ax]);
        }
    }
    CellCoefficients out;
    out.r0 = c.r0 + lo[0];
    out.c0 = c.c0 + lo[1];
    out.values = Grid(c.values.rows() + static_cast<std::size_t>(hi[0] - lo[0]),
                      c.values.cols() + static_cast<std::size_t>(hi[1] - lo[1]));
    for (std::size_t t = 0; t < taps.size(); ++t) {
        const auto dr = static_cast<std::size_t>(shifts[t][0] - lo[0]);
        const auto dc = static_cast<std::size_t>(shifts[t][1] - lo[1]);
        const double w = taps[t].weight;
        for (std::size_t i = 0; i < c.values.rows(); ++i)
            for (std::size_t j = 0; j < c.values.cols(); ++j)
                out.values(i + dr, j + dc) += w * c.values(i, j);
    }
    return out;
}

SampledSurface sample(const CellCoefficients& c, const Mat2& mj, const GridRange& r,
                      std::int64_t density, int level) {
    SampledSurface s = blank_surface(r, density, level);
    for (std::size_t i = 0; i < s.values.rows(); ++i) {
        for (std::size_t j = 0; j < s.values.cols(); ++j) {
            const IntVec2 v = mj.apply(r.lo[0] + static_cast<std::int64_t>(i),
                                       r.lo[1] + static_cast<std::int64_t>(j));
            s.values(i, j) = c.at(floor_div(v[0], density), floor_div(v[1], density));
        }
    }
    return s;
}

void require_quincunx(const DecimationMatrix& m) {
    if (!is_quincunx(m))
        throw std::invalid_argument("cascade: decimation matrix does not generate the quincunx lattice");
}

// sum_n w_n phi(M g - D n) at integer grid point g.
double two_scale_sum(const std::vector<Tap>& taps, const SampledSurface& phi, const Mat2& m,
                     std::int64_t gr, std::int64_t gc) {
    const IntVec2 mg = m.apply(gr, gc);
    double acc = 0.0;
    for (const Tap& t : taps)
        acc += t.weight * phi.at(mg[0] - phi.density * t.offset[0], mg[1] - phi.density * t.offset[1]);
    return acc;
}

} // namespace

double SampledSurface::at(std::int64_t g_row, std::int64_t g_col) const noexcept {
    const std::int64_t i = g_row - origin_row, j = g_col - origin_col;
    if (i < 0 || j < 0 || i >= static_cast<std::int64_t>(values.rows()) ||
        j >= static_cast<std::int64_t>(values.cols()))
        return 0.0;
    return values(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
}

double SampledSurface::integral() const noexcept {
    const auto d = static_cast<double>(density);
    return values.sum() / (d * d);
}

std::vector<SampledSurface> cascade_iterates(const Filter2D& f0, const DecimationMatrix& m,
                                             int iterations, const CascadeOptions& options) {
    require_quincunx(m);
    if (iterations < 1) throw std::invalid_argument("cascade: iterations must be at least 1");
    if (iterations > 40) throw std::invalid_argument("cascade: at most 40 iterations supported");
    const std::vector<Tap> taps = weighted_taps(f0);
    const Mat2 mm = to_mat(m);
    const Box box = invariant_box(taps, mm);
    const std::int64_t density = choose_density(box, options.max_samples_per_side);
    const GridRange range = cover(box, density);

    std::vector<SampledSurface> out;
    CellCoefficients c;
    Mat2 mj{1, 0, 0, 1};
    out.push_back(sample(c, mj, range, density, 0));
    for (int level = 1; level <= iterations; ++level) {
        c = refine(c, taps, mj);
        mj = mj * mm;
        out.push_back(sample(c, mj, range, density, level));
    }
    return out;
}

SampledSurface cascade_scaling(const Filter2D& f0, const DecimationMatrix& m, int iterations,
                               const CascadeOptions& options) {
    return cascade_iterates(f0, m, iterations, options).back();
}

SampledSurface cascade_wavelet(const Filter2D& f1, const SampledSurface& scaling,
                               const DecimationMatrix& m) {
    require_quincunx(m);
    if (scaling.density <= 0 || scaling.density % 2 != 0)
        throw DimensionError("cascade_wavelet: scaling density " + std::to_string(scaling.density) +
                             " is not a positive even integer");
    if (scaling.values.empty()) throw DimensionError("cascade_wavelet: empty scaling surface");
    const std::vector<Tap> taps = weighted_taps(f1);
    const Mat2 mm = to_mat(m);
    const auto d = static_cast<double>(scaling.density);
    const Box support{{static_cast<double>(scaling.origin_row) / d,
                       static_cast<double>(scaling.origin_col) / d},
                      {scaling.x_row(scaling.values.rows() - 1),
                       scaling.x_col(scaling.values.cols() - 1)}};
    const GridRange range = cover(contract(support, taps, mm), scaling.density);
    SampledSurface psi = blank_surface(range, scaling.density, scaling.level + 1);
    for (std::size_t i = 0; i < psi.values.rows(); ++i)
        for (std::size_t j = 0; j < psi.values.cols(); ++j)
            psi.values(i, j) = two_scale_sum(taps, scaling, mm, range.lo[0] + static_cast<std::int64_t>(i),
                                             range.lo[1] + static_cast<std::int64_t>(j));
    return psi;
}

double two_scale_residual(const Filter2D& f0, const SampledSurface& phi, const DecimationMatrix& m) {
    require_quincunx(m);
    if (phi.values.empty()) return 0.0;
    const std::vector<Tap> taps = weighted_taps(f0);
    const Mat2 mm = to_mat(m);
    double sq = 0.0;
    for (std::size_t i = 0; i < phi.values.rows(); ++i) {
        for (std::size_t j = 0; j < phi.values.cols(); ++j) {
            const double rhs = two_scale_sum(taps, phi, mm, phi.origin_row + static_cast<std::int64_t>(i),
                                             phi.origin_col + static_cast<std::int64_t>(j));
            const double r = phi.values(i, j) - rhs;
            sq += r * r;
        }
    }
    return std::sqrt(sq / static_cast<double>(phi.values.size()));
}

double freq_magnitude(const Filter2D& filter, double w_row, double w_col) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t i = 0; i < filter.rows(); ++i) {
        for (std::size_t j = 0; j < filter.cols(); ++j) {
            const double n0 = static_cast<double>(i) - static_cast<double>(filter.anchor.row);
            const double n1 = static_cast<double>(j) - static_cast<double>(filter.anchor.col);
            acc += filter.taps(i, j) * std::polar(1.0, -(w_row * n0 + w_col * n1));
        }
    }
    return std::abs(acc);
}

Grid freq_response(const Filter2D& filter, std::size_t grid_size) {
    filter.validate();
    if (grid_size < 2) throw std::invalid_argument("freq_response: grid_size must be at least 2");
    Grid out(grid_size, grid_size);
    const auto n = static_cast<double>(grid_size);
    auto omega = [&](std::size_t k) {
        return std::numbers::pi * (2.0 * static_cast<double>(k) - n) / n;
    };
    for (std::size_t r = 0; r < grid_size; ++r)
        for (std::size_t c = 0; c < grid_size; ++c) out(r, c) = freq_magnitude(filter, omega(r), omega(c));
    return out;
}

} // namespace quinwave
