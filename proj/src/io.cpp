#include "quinwave/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <vector>

namespace quinwave {

namespace {

std::vector<unsigned char> read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoErrorKind::Open, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_all(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoErrorKind::Open, "cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(IoErrorKind::Open, "write failed for " + path.string());
}

std::uint32_t le_u32(const std::vector<unsigned char>& b, std::size_t at) {
    return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
           (static_cast<std::uint32_t>(b[at + 2]) << 16) |
           (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t le_u16(const std::vector<unsigned char>& b, std::size_t at) {
    return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put_u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

void put_u16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xffu));
    s.push_back(static_cast<char>(v >> 8));
}

// Rec. 601 weights in integer thousandths so that grey pixels map exactly.
double luminance(unsigned r, unsigned g, unsigned b) {
    return static_cast<double>(299u * r + 587u * g + 114u * b) / 1000.0;
}

unsigned char to_byte(double v) {
    return static_cast<unsigned char>(std::clamp<long>(std::lround(v), 0, 255));
}

constexpr std::size_t kFileHeaderSize = 14;
constexpr std::size_t kInfoHeaderSize = 40;

} // namespace

Image read_bmp(const std::filesystem::path& path) {
    const std::vector<unsigned char> b = read_all(path);
    const std::string name = path.string();
    if (b.size() < 2 || b[0] != 'B' || b[1] != 'M')
        throw IoError(IoErrorKind::NotBmp, name + ": missing BM signature");
    if (b.size() < kFileHeaderSize + kInfoHeaderSize)
        throw IoError(IoErrorKind::Truncated, name + ": truncated header");

    const std::uint32_t data_offset = le_u32(b, 10);
    const std::uint32_t info_size = le_u32(b, 14);
    if (info_size < kInfoHeaderSize)
        throw IoError(IoErrorKind::NotBmp, name + ": unsupported info header size " +
                                               std::to_string(info_size));
    const auto width = static_cast<std::int32_t>(le_u32(b, 18));
    const auto height_field = static_cast<std::int32_t>(le_u32(b, 22));
    const std::uint16_t bits = le_u16(b, 28);
    const std::uint32_t compression = le_u32(b, 30);
    const std::uint32_t colours_used = le_u32(b, 46);

    if (compression != 0)
        throw IoError(IoErrorKind::CompressedBmp,
                      name + ": compression type " + std::to_string(compression) +
                          " (only uncompressed BI_RGB is supported)");
    if (bits != 8 && bits != 24)
        throw IoError(IoErrorKind::UnsupportedDepth,
                      name + ": " + std::to_string(bits) + "-bit BMP (only 8 and 24 supported)");
    if (width <= 0 || height_field == 0)
        throw IoError(IoErrorKind::NotBmp, name + ": invalid dimensions");

    const bool top_down = height_field < 0;
    const std::size_t h = static_cast<std::size_t>(std::abs(static_cast<std::int64_t>(height_field)));
    const auto w = static_cast<std::size_t>(width);
    const std::size_t stride = ((w * bits + 31) / 32) * 4;

    std::array<double, 256> palette{};
    if (bits == 8) {
        const std::size_t entries = colours_used == 0 ? 256 : colours_used;
        if (entries > 256) throw IoError(IoErrorKind::NotBmp, name + ": palette too large");
        const std::size_t at = kFileHeaderSize + info_size;
        if (b.size() < at + 4 * entries)
            throw IoError(IoErrorKind::Truncated, name + ": truncated palette");
        for (std::size_t i = 0; i < entries; ++i)
            palette[i] = luminance(b[at + 4 * i + 2], b[at + 4 * i + 1], b[at + 4 * i]);
    }
    if (b.size() < static_cast<std::size_t>(data_offset) + stride * h)
        throw IoError(IoErrorKind::Truncated, name + ": truncated pixel data");

    Image image(h, w);
    for (std::size_t r = 0; r < h; ++r) {
        const std::size_t stored = top_down ? r : h - 1 - r;
        const unsigned char* row = b.data() + data_offset + stored * stride;
        for (std::size_t c = 0; c < w; ++c) {
            image(r, c) = bits == 8 ? palette[row[c]]
                                    : luminance(row[3 * c + 2], row[3 * c + 1], row[3 * c]);
        }
    }
    return image;
}

void write_bmp_gray8(const Image& image, const std::filesystem::path& path) {
    const std::size_t w = image.width();
    const std::size_t h = image.height();
    const std::size_t stride = (w + 3) / 4 * 4;
    const std::size_t offset = kFileHeaderSize + kInfoHeaderSize + 256 * 4;

    std::string s;
    s.reserve(offset + stride * h);
    s += "BM";
    put_u32(s, static_cast<std::uint32_t>(offset + stride * h));
    put_u32(s, 0);
    put_u32(s, static_cast<std::uint32_t>(offset));
    put_u32(s, kInfoHeaderSize);
    put_u32(s, static_cast<std::uint32_t>(w));
    put_u32(s, static_cast<std::uint32_t>(h));
    put_u16(s, 1);
    put_u16(s, 8);
    put_u32(s, 0);
    put_u32(s, static_cast<std::uint32_t>(stride * h));
    put_u32(s, 2835); // 72 dpi
    put_u32(s, 2835);
    put_u32(s, 256);
    put_u32(s, 0);
    for (unsigned i = 0; i < 256; ++i) {
        s.push_back(static_cast<char>(i));
        s.push_back(static_cast<char>(i));
        s.push_back(static_cast<char>(i));
        s.push_back('\0');
    }
    for (std::size_t r = h; r-- > 0;) {
        for (std::size_t c = 0; c < w; ++c) s.push_back(static_cast<char>(to_byte(image(r, c))));
        s.append(stride - w, '\0');
    }
    write_all(path, s);
}

void write_pgm(const Image& image, const std::filesystem::path& path, bool normalize) {
    image.require_finite("write_pgm");
    std::string s = "P5\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) +
                    "\n255\n";
    auto v = image.samples().values();
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    for (double x : v) {
        if (!normalize)
            s.push_back(static_cast<char>(to_byte(x)));
        else if (hi == lo)
            s.push_back(static_cast<char>(128));
        else
            s.push_back(static_cast<char>(to_byte((x - lo) * 255.0 / (hi - lo))));
    }
    write_all(path, s);
}

void write_csv_grid(const Grid& grid, const std::filesystem::path& path) {
    std::string s;
    char buf[64];
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            if (c) s.push_back(',');
            const auto res = std::to_chars(buf, buf + sizeof buf, grid(r, c));
            s.append(buf, res.ptr);
        }
        s.push_back('\n');
    }
    write_all(path, s);
}

std::string format_filters(const FilterBank& bank, const FilterMetadata& metadata) {
    bank.validate();
    std::ostringstream out;
    out << "quinwave-filterbank " << kFilterFileVersion << '\n';
    for (const auto& [key, value] : metadata) {
        if (key.empty() || key.find_first_of(" \t\n") != std::string::npos ||
            value.find('\n') != std::string::npos)
            throw std::invalid_argument("filter metadata key/value not representable: " + key);
        out << "meta " << key << ' ' << value << '\n';
    }
    char buf[40];
    for (std::size_t k = 0; k < kFilterCount; ++k) {
        const Filter2D& f = bank[k];
        out << "filter " << kFilterNames[k] << ' ' << f.rows() << ' ' << f.cols() << ' '
            << f.anchor.row << ' ' << f.anchor.col << '\n';
        for (std::size_t r = 0; r < f.rows(); ++r) {
            for (std::size_t c = 0; c < f.cols(); ++c) {
                std::snprintf(buf, sizeof buf, "%.17g", f.taps(r, c));
                out << (c ? " " : "") << buf;
            }
            out << '\n';
        }
    }
    return out.str();
}

void export_filters(const FilterBank& bank, const FilterMetadata& metadata,
                    const std::filesystem::path& path) {
    write_all(path, format_filters(bank, metadata));
}

namespace {

struct PendingFilter {
    std::string name;
    std::size_t rows = 0, cols = 0;
    Anchor anchor;
    std::vector<double> values;
    std::size_t line = 0;
};

[[noreturn]] void malformed(std::size_t line, const std::string& msg) {
    throw IoError(IoErrorKind::Malformed, "filter file line " + std::to_string(line) + ": " + msg);
}

Filter2D finish(const PendingFilter& p) {
    if (p.values.size() != p.rows * p.cols)
        throw IoError(IoErrorKind::Shape, "filter " + p.name + " declares " +
                                              std::to_string(p.rows) + "x" +
                                              std::to_string(p.cols) + " but lists " +
                                              std::to_string(p.values.size()) + " coefficients");
    if (p.anchor.row >= p.rows || p.anchor.col >= p.cols)
        throw IoError(IoErrorKind::Shape, "filter " + p.name + " anchor outside its taps");
    return Filter2D(Grid(p.rows, p.cols, p.values), p.anchor);
}

} // namespace

LoadedFilterBank parse_filters(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    bool have_version = false;
    LoadedFilterBank out;
    std::array<std::optional<Filter2D>, kFilterCount> filters;
    std::optional<PendingFilter> pending;

    auto flush = [&] {
        if (!pending) return;
        const auto it = std::find_if(std::begin(kFilterNames), std::end(kFilterNames),
                                     [&](const char* n) { return pending->name == n; });
        const auto k = static_cast<std::size_t>(it - std::begin(kFilterNames));
        if (filters[k]) malformed(pending->line, "duplicate filter " + pending->name);
        filters[k] = finish(*pending);
        pending.reset();
    };

    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos || line[first] == '#') continue;

        std::istringstream ls(line);
        std::string word;
        ls >> word;
        if (!have_version) {
            if (word != "quinwave-filterbank") malformed(lineno, "missing format header");
            int version = 0;
            if (!(ls >> version)) malformed(lineno, "missing format version");
            if (version != kFilterFileVersion)
                throw IoError(IoErrorKind::VersionMismatch,
                              "filter file version " + std::to_string(version) + ", expected " +
                                  std::to_string(kFilterFileVersion));
            have_version = true;
        } else if (word == "meta") {
            std::string key;
            if (!(ls >> key)) malformed(lineno, "meta without key");
            std::string value;
            std::getline(ls >> std::ws, value);
            out.metadata[key] = value;
        } else if (word == "filter") {
            flush();
            PendingFilter p;
            p.line = lineno;
            if (!(ls >> p.name >> p.rows >> p.cols >> p.anchor.row >> p.anchor.col))
                malformed(lineno, "expected: filter <name> <rows> <cols> <anchor-row> <anchor-col>");
            const bool known = std::any_of(std::begin(kFilterNames), std::end(kFilterNames),
                                           [&](const char* n) { return p.name == n; });
            if (!known) malformed(lineno, "unknown filter name " + p.name);
            if (p.rows == 0 || p.cols == 0)
                throw IoError(IoErrorKind::Shape, "filter " + p.name + " has no taps");
            pending = std::move(p);
        } else {
            if (!pending) malformed(lineno, "coefficients outside a filter block");
            std::istringstream vs(line);
            std::string token;
            while (vs >> token) {
                double v = 0.0;
                const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
                if (res.ec != std::errc() || res.ptr != token.data() + token.size() ||
                    !std::isfinite(v))
                    malformed(lineno, "bad coefficient '" + token + "'");
                pending->values.push_back(v);
            }
        }
    }
    if (!have_version) malformed(lineno, "empty filter file");
    flush();

    for (std::size_t k = 0; k < kFilterCount; ++k) {
        if (!filters[k])
            throw IoError(IoErrorKind::Malformed,
                          std::string("filter file has no ") + kFilterNames[k] + " block");
        out.bank[k] = *filters[k];
    }
    for (std::size_t k = 1; k < kFilterCount; ++k)
        if (!out.bank[k].taps.same_shape(out.bank.h0.taps))
            throw IoError(IoErrorKind::Shape, "filters in one bank must share a shape");
    return out;
}

LoadedFilterBank load_filters(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_all(path);
    return parse_filters(std::string(bytes.begin(), bytes.end()));
}

} // namespace quinwave
