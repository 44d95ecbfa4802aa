#ifndef QUINWAVE_IO_HPP
#define QUINWAVE_IO_HPP

#include "quinwave/filterbank.hpp"
#include "quinwave/image.hpp"

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

namespace quinwave {

enum class IoErrorKind {
    Open,             ///< cannot open or create the file
    NotBmp,           ///< missing "BM" signature or unusable header
    CompressedBmp,    ///< anything but BI_RGB
    UnsupportedDepth, ///< bit depth other than 8 or 24
    Truncated,        ///< file ends before the declared data
    VersionMismatch,  ///< filter file of an unknown format version
    Malformed,        ///< unparsable filter file line
    Shape,            ///< coefficient count or filter shapes inconsistent
};

class IoError : public std::runtime_error {
public:
    IoError(IoErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    IoErrorKind kind() const noexcept { return kind_; }

private:
    IoErrorKind kind_;
};

/// Reads an uncompressed 8-bit (palettised) or 24-bit BMP.
///
/// 8-bit samples take the luminance of their palette entry, which is the
/// index itself for the usual identity grey palette. 24-bit samples are
/// 0.299 R + 0.587 G + 0.114 B. Rows come back top-down regardless of
/// the storage order in the file.
Image read_bmp(const std::filesystem::path& path);

/// 8-bit grey BMP with an identity palette. Samples are rounded and clamped to 0..255.
void write_bmp_gray8(const Image& image, const std::filesystem::path& path);

/// Binary PGM (P5, maxval 255). With `normalize` the range [min, max] is
/// mapped affinely onto [0, 255] and a constant image becomes 128;
/// otherwise samples are rounded and clamped.
void write_pgm(const Image& image, const std::filesystem::path& path, bool normalize);

/// Row-major CSV with shortest round-trip decimal formatting.
void write_csv_grid(const Grid& grid, const std::filesystem::path& path);

/// Free-form key/value pairs stored alongside the filters.
using FilterMetadata = std::map<std::string, std::string>;

inline constexpr int kFilterFileVersion = 1;

struct LoadedFilterBank {
    FilterBank bank;
    FilterMetadata metadata;
};

/// Text format, one item per line:
///
///     quinwave-filterbank 1
///     meta <key> <value...>
///     filter <name> <rows> <cols> <anchor-row> <anchor-col>
///     <cols coefficients>            (rows lines, %.17g)
///
/// Blank lines and lines starting with '#' are ignored. The 17-digit
/// coefficients make export/load bit-exact.
void export_filters(const FilterBank& bank, const FilterMetadata& metadata,
                    const std::filesystem::path& path);
LoadedFilterBank load_filters(const std::filesystem::path& path);

/// Streams used by export_filters/load_filters, exposed for in-memory use.
std::string format_filters(const FilterBank& bank, const FilterMetadata& metadata);
LoadedFilterBank parse_filters(const std::string& text);

} // namespace quinwave

#endif
