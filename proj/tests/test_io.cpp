#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "quinwave/io.hpp"
#include "quinwave/training.hpp"

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unistd.h>

using namespace quinwave;
namespace fs = std::filesystem;

namespace {

struct Rgb {
    unsigned char r, g, b;
};

void u16(std::string& s, unsigned v) {
    s.push_back(static_cast<char>(v & 0xff));
    s.push_back(static_cast<char>((v >> 8) & 0xff));
}

void u32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

// 24-bit BMP built byte by byte; `pixels` is top-down, stored bottom-up
// unless `top_down`.
std::string bmp24(const std::vector<std::vector<Rgb>>& pixels, bool top_down = false,
                  std::uint32_t compression = 0, unsigned bits = 24) {
    const std::size_t h = pixels.size(), w = pixels[0].size();
    const std::size_t stride = (w * 3 + 3) / 4 * 4;
    std::string s = "BM";
    u32(s, static_cast<std::uint32_t>(54 + stride * h));
    u32(s, 0);
    u32(s, 54);
    u32(s, 40);
    u32(s, static_cast<std::uint32_t>(w));
    u32(s, static_cast<std::uint32_t>(top_down ? -static_cast<std::int32_t>(h) : static_cast<std::int32_t>(h)));
    u16(s, 1);
    u16(s, bits);
    u32(s, compression);
    u32(s, static_cast<std::uint32_t>(stride * h));
    u32(s, 2835);
    u32(s, 2835);
    u32(s, 0);
    u32(s, 0);
    for (std::size_t i = 0; i < h; ++i) {
        const auto& row = pixels[top_down ? i : h - 1 - i];
        std::string line;
        for (const Rgb& p : row) {
            line.push_back(static_cast<char>(p.b));
            line.push_back(static_cast<char>(p.g));
            line.push_back(static_cast<char>(p.r));
        }
        line.resize(stride, '\0');
        s += line;
    }
    return s;
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("quinwave_io_" + std::to_string(::getpid()))) {
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream(p, std::ios::binary) << bytes;
}

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Independent P5 reader.
Image read_pgm(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::string magic;
    std::size_t w = 0, h = 0, maxval = 0;
    in >> magic >> w >> h >> maxval;
    in.get();
    REQUIRE(magic == "P5");
    REQUIRE(maxval == 255);
    Image out(h, w);
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) out(r, c) = static_cast<unsigned char>(in.get());
    REQUIRE(in.good());
    return out;
}

IoErrorKind kind_of(const fs::path& p) {
    try {
        read_bmp(p);
    } catch (const IoError& e) {
        return e.kind();
    }
    FAIL("read_bmp did not throw");
    return IoErrorKind::Open;
}

} // namespace

TEST_CASE("24-bit BMP luminance") {
    TempDir dir;
    write_bytes(dir / "white.bmp", bmp24({{{255, 255, 255}, {255, 255, 255}}, {{255, 255, 255}, {255, 255, 255}}}));
    const Image white = read_bmp(dir / "white.bmp");
    CHECK(white.height() == 2);
    CHECK(white.width() == 2);
    for (double v : white.samples().values()) CHECK(v == 255.0);

    write_bytes(dir / "red.bmp", bmp24({{{255, 0, 0}, {0, 0, 0}}, {{0, 0, 0}, {0, 0, 0}}}));
    const Image red = read_bmp(dir / "red.bmp");
    CHECK(red(0, 0) == 76.245);
    CHECK(red(1, 1) == 0.0);
}

TEST_CASE("BMP row order and padding") {
    TempDir dir;
    // 3 wide so rows carry 3 bytes of padding.
    const std::vector<std::vector<Rgb>> px = {
        {{10, 10, 10}, {20, 20, 20}, {30, 30, 30}},
        {{40, 40, 40}, {0, 255, 0}, {0, 0, 255}},
    };
    const Image expect(Grid(2, 3, {10, 20, 30, 40, 149.685, 29.07}));
    write_bytes(dir / "up.bmp", bmp24(px, false));
    write_bytes(dir / "down.bmp", bmp24(px, true));
    CHECK(max_abs_diff(read_bmp(dir / "up.bmp"), expect) < 1e-12);
    CHECK(read_bmp(dir / "down.bmp") == read_bmp(dir / "up.bmp"));
}

TEST_CASE("BMP errors are distinct") {
    TempDir dir;
    const std::vector<std::vector<Rgb>> px = {{{1, 2, 3}, {4, 5, 6}}, {{7, 8, 9}, {1, 1, 1}}};

    write_bytes(dir / "rle.bmp", bmp24(px, false, 1));
    CHECK(kind_of(dir / "rle.bmp") == IoErrorKind::CompressedBmp);

    write_bytes(dir / "deep.bmp", bmp24(px, false, 0, 32));
    CHECK(kind_of(dir / "deep.bmp") == IoErrorKind::UnsupportedDepth);

    const std::string full = bmp24(px);
    write_bytes(dir / "short.bmp", full.substr(0, full.size() - 3));
    CHECK(kind_of(dir / "short.bmp") == IoErrorKind::Truncated);
    write_bytes(dir / "header.bmp", full.substr(0, 30));
    CHECK(kind_of(dir / "header.bmp") == IoErrorKind::Truncated);

    write_bytes(dir / "text.bmp", "hello world, this is not a bitmap at all......................");
    CHECK(kind_of(dir / "text.bmp") == IoErrorKind::NotBmp);

    CHECK(kind_of(dir / "missing.bmp") == IoErrorKind::Open);
}

TEST_CASE("8-bit BMP write/read is the identity on byte values") {
    TempDir dir;
    std::mt19937_64 rng(50);
    for (auto [h, w] : {std::pair{5, 7}, std::pair{4, 4}, std::pair{1, 9}}) {
        Image a(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
        std::uniform_int_distribution<int> byte(0, 255);
        for (double& v : a.samples().values()) v = byte(rng);
        write_bmp_gray8(a, dir / "g.bmp");
        CHECK(read_bmp(dir / "g.bmp") == a);
    }
}

TEST_CASE("camera fixture") {
    const Image cam = read_bmp(fs::path(QUINWAVE_TEST_DATA) / "camera.bmp");
    CHECK(cam.height() == 512);
    CHECK(cam.width() == 512);
    std::size_t bad = 0;
    for (double v : cam.samples().values()) bad += !(v >= 0.0 && v <= 255.0 && v == std::round(v));
    CHECK(bad == 0);
}

TEST_CASE("PGM output") {
    TempDir dir;
    write_pgm(Image(1, 1, 0.0), dir / "zero.pgm", false);
    const std::string zero = read_bytes(dir / "zero.pgm");
    CHECK(zero == std::string("P5\n1 1\n255\n") + '\0');

    write_pgm(Image(2, 3, -4.5), dir / "flat.pgm", true);
    const Image flat = read_pgm(dir / "flat.pgm");
    for (double v : flat.samples().values()) CHECK(v == 128.0);

    const Image ramp(Grid(1, 3, {-1.0, 0.0, 3.0}));
    write_pgm(ramp, dir / "ramp.pgm", true);
    CHECK(read_pgm(dir / "ramp.pgm") == Image(Grid(1, 3, {0.0, 64.0, 255.0})));

    const Image clip(Grid(1, 4, {-3.0, 12.4, 12.6, 300.0}));
    write_pgm(clip, dir / "clip.pgm", false);
    CHECK(read_pgm(dir / "clip.pgm") == Image(Grid(1, 4, {0.0, 12.0, 13.0, 255.0})));

    std::mt19937_64 rng(51);
    Image bytes(6, 5);
    std::uniform_int_distribution<int> byte(0, 255);
    for (double& v : bytes.samples().values()) v = byte(rng);
    write_pgm(bytes, dir / "bytes.pgm", false);
    CHECK(read_pgm(dir / "bytes.pgm") == bytes);
}

TEST_CASE("CSV output") {
    TempDir dir;
    write_csv_grid(Grid(1, 1, 1.5), dir / "one.csv");
    CHECK(read_bytes(dir / "one.csv") == "1.5\n");

    write_csv_grid(Grid(2, 2, {1, -2, 0.25, 3}), dir / "two.csv");
    CHECK(read_bytes(dir / "two.csv") == "1,-2\n0.25,3\n");

    std::mt19937_64 rng(52);
    const Grid g = oracle::random_grid(rng, 4, 3, -1e6, 1e6);
    write_csv_grid(g, dir / "r.csv");
    std::istringstream in(read_bytes(dir / "r.csv"));
    std::string line;
    std::vector<double> back;
    std::size_t lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        std::stringstream fields(line);
        std::string cell;
        while (std::getline(fields, cell, ',')) {
            double v = 0.0;
            std::from_chars(cell.data(), cell.data() + cell.size(), v);
            back.push_back(v);
        }
    }
    CHECK(lines == 4);
    CHECK(back == std::vector<double>(g.values().begin(), g.values().end()));
}

TEST_CASE("filter file round trip is bit-exact") {
    TempDir dir;
    std::mt19937_64 rng(53);
    const FilterMetadata meta{{"source", "camera.bmp"}, {"note", "two words"}, {"mask_parity", "0"}};

    for (const FilterBank& bank : {quincunx_haar_bank(), oracle::random_bank(rng, 3, 3), oracle::random_bank(rng, 2, 5)}) {
        export_filters(bank, meta, dir / "bank.txt");
        const LoadedFilterBank loaded = load_filters(dir / "bank.txt");
        CHECK(loaded.bank == bank);
        CHECK(loaded.metadata == meta);
        export_filters(loaded.bank, loaded.metadata, dir / "again.txt");
        CHECK(read_bytes(dir / "bank.txt") == read_bytes(dir / "again.txt"));
    }

    // Awkward doubles survive too.
    FilterBank odd = quincunx_haar_bank();
    odd.h0.taps(0, 0) = 0.1 + 0.2;
    odd.h0.taps(0, 1) = -5e-324;
    odd.h1.taps(0, 0) = 1.7976931348623157e308;
    odd.h1.taps(0, 1) = -0.0;
    const LoadedFilterBank back = parse_filters(format_filters(odd, {}));
    CHECK(back.bank == odd);
    CHECK(std::signbit(back.bank.h1.taps(0, 1)));
}

TEST_CASE("trained bank reloads to the same PSNR") {
    TempDir dir;
    std::mt19937_64 rng(54);
    const Image a = oracle::random_image(rng, 16, 16, 0, 255);
    TrainConfig cfg;
    cfg.max_iterations = 50;
    cfg.filter_size = 3;
    const TrainResult r = train(a, cfg);
    const Image x = r.intensity.apply(a);
    const CosetMask mask = coset_mask(16, 16, cfg.mask_parity);
    export_filters(r.bank, {}, dir / "trained.txt");
    const FilterBank reloaded = load_filters(dir / "trained.txt").bank;
    const double before = psnr(x, forward(x, r.bank, mask).recon, 255.0 * r.intensity.scale);
    const double after = psnr(x, forward(x, reloaded, mask).recon, 255.0 * r.intensity.scale);
    CHECK(before == after);
    CHECK(before == doctest::Approx(r.final_psnr).epsilon(1e-12));
}

TEST_CASE("filter file errors") {
    const std::string good = format_filters(quincunx_haar_bank(), {});
    auto kind = [](const std::string& text) {
        try {
            parse_filters(text);
        } catch (const IoError& e) {
            return e.kind();
        }
        FAIL("parse_filters did not throw");
        return IoErrorKind::Open;
    };

    CHECK_NOTHROW(parse_filters("# comment\n\n" + good));
    CHECK(kind("quinwave-filterbank 2\n") == IoErrorKind::VersionMismatch);
    CHECK(kind("not-a-filter-file 1\n") == IoErrorKind::Malformed);
    CHECK(kind("") == IoErrorKind::Malformed);

    std::string count = good;
    count.replace(count.find("filter h0 1 2"), 13, "filter h0 1 3");
    CHECK(kind(count) == IoErrorKind::Shape);

    std::string anchor = good;
    anchor.replace(anchor.find("filter h1 1 2 0 0"), 17, "filter h1 1 2 0 5");
    CHECK(kind(anchor) == IoErrorKind::Shape);

    std::string missing = good.substr(0, good.find("filter f1"));
    CHECK(kind(missing) == IoErrorKind::Malformed);

    std::string unknown = good;
    unknown.replace(unknown.find("filter f1"), 9, "filter g9");
    CHECK(kind(unknown) == IoErrorKind::Malformed);

    std::string bad_number = good;
    bad_number.replace(bad_number.find("filter h0 1 2 0 0\n") + 19, 1, "x");
    CHECK(kind(bad_number) == IoErrorKind::Malformed);

    FilterBank mixed = quincunx_haar_bank();
    std::string shapes = format_filters(mixed, {});
    shapes = shapes.substr(0, shapes.find("filter f1")) + "filter f1 1 1 0 0\n0.5\n";
    CHECK(kind(shapes) == IoErrorKind::Shape);

    TempDir dir;
    try {
        load_filters(dir / "absent.txt");
        FAIL("no throw");
    } catch (const IoError& e) {
        CHECK(e.kind() == IoErrorKind::Open);
    }
}

TEST_CASE("writers are deterministic") {
    TempDir dir;
    std::mt19937_64 rng(55);
    const Image a = oracle::random_image(rng, 9, 11, -3, 3);
    write_pgm(a, dir / "a.pgm", true);
    write_pgm(a, dir / "b.pgm", true);
    CHECK(read_bytes(dir / "a.pgm") == read_bytes(dir / "b.pgm"));
    write_csv_grid(a.samples(), dir / "a.csv");
    write_csv_grid(a.samples(), dir / "b.csv");
    CHECK(read_bytes(dir / "a.csv") == read_bytes(dir / "b.csv"));
    write_bmp_gray8(a, dir / "a.bmp");
    write_bmp_gray8(a, dir / "b.bmp");
    CHECK(read_bytes(dir / "a.bmp") == read_bytes(dir / "b.bmp"));
}

TEST_CASE("unwritable paths") {
    const fs::path nowhere = "/nonexistent-dir-for-quinwave/x";
    auto kind = [](auto fn) {
        try {
            fn();
        } catch (const IoError& e) {
            return e.kind();
        }
        return IoErrorKind::Malformed;
    };
    CHECK(kind([&] { write_pgm(Image(1, 1), nowhere, false); }) == IoErrorKind::Open);
    CHECK(kind([&] { write_csv_grid(Grid(1, 1), nowhere); }) == IoErrorKind::Open);
    CHECK(kind([&] { export_filters(quincunx_haar_bank(), {}, nowhere); }) == IoErrorKind::Open);
}
