#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "quinwave/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace quinwave;
namespace fs = std::filesystem;

namespace {

const fs::path kData = QUINWAVE_TEST_DATA;

struct Run {
    int status;
    std::string out;
};

std::string read_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class Sandbox {
public:
    Sandbox() : root_(fs::temp_directory_path() / ("quinwave_cli_" + std::to_string(::getpid()))) {
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    ~Sandbox() { fs::remove_all(root_); }
    fs::path operator/(const std::string& name) const { return root_ / name; }

    Run run(const std::string& args) const {
        const fs::path log = root_ / "stdout.txt";
        const std::string cmd = std::string(QUINWAVE_CLI) + " " + args + " > " + log.string() +
                                " 2> " + (root_ / "stderr.txt").string();
        const int raw = std::system(cmd.c_str());
        return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, read_bytes(log)};
    }

private:
    fs::path root_;
};

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

} // namespace

TEST_CASE("gradcheck") {
    Sandbox box;
    const Run a = box.run("gradcheck");
    CHECK(a.status == 0);
    CHECK(a.out.find("PASS") != std::string::npos);
    CHECK(box.run("gradcheck").out == a.out);
    CHECK(box.run("gradcheck --seed 7 --instances 3").status == 0);

    const Run bad = box.run("gradcheck --corrupt");
    CHECK(bad.status == 5);
    CHECK(bad.out.find("FAIL") != std::string::npos);
}

TEST_CASE("usage errors") {
    Sandbox box;
    CHECK(box.run("").status == 2);
    CHECK(box.run("frobnicate").status == 2);
    CHECK(box.run("gradcheck --no-such-flag").status == 2);
    CHECK(box.run("train").status == 2);
    CHECK(box.run("train " + (kData / "camera64.bmp").string() + " --momentum 1.5 -o " +
                  (box / "m").string())
              .status == 2);
    CHECK(box.run("train " + (kData / "camera64.bmp").string() + " --normalization sideways")
              .status == 2);
    CHECK_FALSE(fs::exists(box / "m"));
    CHECK(box.run("--help").status == 0);
}

TEST_CASE("train with an unreadable input leaves no artifacts") {
    Sandbox box;
    const Run r = box.run("train " + (box / "missing.bmp").string() + " -o " + (box / "out").string());
    CHECK(r.status == 3);
    CHECK_FALSE(fs::exists(box / "out"));
}

TEST_CASE("train for one iteration") {
    Sandbox box;
    const Run r = box.run("train " + (kData / "camera64.bmp").string() +
                          " --max-iterations 1 -o " + (box / "one").string());
    CHECK(r.status == 0);
    CHECK(r.out.find("config learning_rate=2e-07") != std::string::npos);
    CHECK(r.out.find("config effective_learning_rate=1.28e-05") != std::string::npos);
    CHECK(r.out.find("stop=max-iterations") != std::string::npos);
    const std::string trace = read_bytes(box / "one" / "trace.csv");
    CHECK(trace.rfind("iteration,loss,psnr\n", 0) == 0);
    CHECK(count_lines(trace) == 2); // header plus exactly one row
    CHECK(fs::exists(box / "one" / "filters.txt"));
    CHECK(fs::exists(box / "one" / "recon.pgm"));
}

TEST_CASE("train is byte-for-byte repeatable") {
    Sandbox box;
    const std::string common = "train " + (kData / "camera.bmp").string() +
                               " --crop 100 300 32 32 --max-iterations 40 --filter-size 3 -o ";
    const Run a = box.run(common + (box / "a").string());
    const Run b = box.run(common + (box / "b").string());
    CHECK(a.status == 0);
    CHECK(b.status == 0);
    for (const char* f : {"filters.txt", "trace.csv", "recon.pgm"})
        CHECK(read_bytes(box / "a" / f) == read_bytes(box / "b" / f));
    CHECK(count_lines(read_bytes(box / "a" / "trace.csv")) == 41);
    CHECK(a.out.substr(a.out.find("config size")) == b.out.substr(b.out.find("config size")));
}

TEST_CASE("train reports divergence") {
    Sandbox box;
    const Run r = box.run("train " + (kData / "camera64.bmp").string() +
                          " --learning-rate 1 --max-iterations 100 -o " + (box / "d").string());
    CHECK(r.status == 4);
    CHECK(r.out.find("stop=divergence") != std::string::npos);
}

TEST_CASE("desk-scale training reaches 70 dB and passes prcheck on its image") {
    Sandbox box;
    const Run r = box.run("train " + (kData / "camera64.bmp").string() + " --max-iterations 30000 -o " +
                          (box / "t").string());
    REQUIRE(r.status == 0);
    CHECK(r.out.find("stop=target-psnr") != std::string::npos);
    const std::size_t at = r.out.find("psnr=");
    REQUIRE(at != std::string::npos);
    CHECK(std::stod(r.out.substr(at + 5)) >= 70.0);

    const Run pr = box.run("prcheck " + (box / "t" / "filters.txt").string() + " --image " +
                           (kData / "camera64.bmp").string());
    CHECK(pr.status == 0);
}

TEST_CASE("prcheck") {
    Sandbox box;
    export_filters(quincunx_haar_bank(), {{"mask_parity", "0"}}, box / "haar.txt");
    const Filter2D zero(Grid(2, 2), Anchor{});
    export_filters(FilterBank{zero, zero, zero, zero}, {}, box / "zero.txt");

    const Run haar = box.run("prcheck " + (box / "haar.txt").string());
    CHECK(haar.status == 0);
    CHECK(haar.out.find("probe 4") != std::string::npos);
    CHECK(box.run("prcheck " + (box / "haar.txt").string()).out == haar.out);

    CHECK(box.run("prcheck " + (box / "zero.txt").string()).status == 5);
    CHECK(box.run("prcheck " + (box / "zero.txt").string() + " --threshold 0").status == 0);
    CHECK(box.run("prcheck " + (box / "haar.txt").string() + " --threshold 0").status == 0);

    // The odd coset is the even one shifted by a sample; Haar still reconstructs.
    export_filters(quincunx_haar_bank(), {{"mask_parity", "1"}}, box / "haar1.txt");
    const Run odd = box.run("prcheck " + (box / "haar1.txt").string());
    CHECK(odd.status == 0);
    CHECK(odd.out.find("mask_parity=1") != std::string::npos);

    CHECK(box.run("prcheck " + (box / "absent.txt").string()).status == 3);
    std::ofstream(box / "broken.txt") << "quinwave-filterbank 9\n";
    CHECK(box.run("prcheck " + (box / "broken.txt").string()).status == 3);
}

TEST_CASE("render") {
    Sandbox box;
    export_filters(quincunx_haar_bank(), {}, box / "haar.txt");
    const fs::path out = box / "deep" / "render";
    const Run r = box.run("render " + (box / "haar.txt").string() + " -o " + out.string());
    CHECK(r.status == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(out)) files += e.is_regular_file();
    CHECK(files == 12);
    for (const char* stem : {"freq_h0", "freq_h1", "freq_f0", "freq_f1", "scaling", "wavelet"}) {
        CHECK(fs::exists(out / (std::string(stem) + ".pgm")));
        CHECK(fs::exists(out / (std::string(stem) + ".csv")));
    }

    const fs::path again = box / "again";
    CHECK(box.run("render " + (box / "haar.txt").string() + " -o " + again.string()).status == 0);
    for (const auto& e : fs::directory_iterator(out))
        CHECK(read_bytes(e.path()) == read_bytes(again / e.path().filename()));

    CHECK(box.run("render " + (box / "haar.txt").string() + " --iterations 0 -o " + out.string())
              .status == 2);
}
