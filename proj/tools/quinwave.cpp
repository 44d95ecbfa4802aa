// Command-line front end: train, gradcheck, prcheck, render.
//
// Exit status: 0 success, 2 usage, 3 I/O, 4 divergence, 5 check failed.

#include "quinwave/filterbank.hpp"
#include "quinwave/io.hpp"
#include "quinwave/render.hpp"
#include "quinwave/training.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace quinwave;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kIo = 3, kDiverged = 4, kCheckFailed = 5 };

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest decimal that reads back to the same double.
std::string num(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string fixed(double v, int digits) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

const std::map<std::string, LrScaling> kLrScaling{
    {"auto", LrScaling::Auto}, {"on", LrScaling::On}, {"off", LrScaling::Off}};
const std::map<std::string, Normalization> kNormalization{
    {"standardize", Normalization::Standardize},
    {"unit", Normalization::UnitRange},
    {"raw", Normalization::Raw}};

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::string image;
    fs::path out_dir = "quinwave-out";
    TrainConfig config;
    std::vector<std::size_t> crop;
    std::int64_t progress_every = 1000;
    double time_limit = 0.0;
};

void add_train(CLI::App& app, TrainArgs& a) {
    auto* cmd = app.add_subcommand("train", "Train a filter bank on one image");
    TrainConfig& c = a.config;
    cmd->add_option("image", a.image, "Input BMP (8-bit or 24-bit, uncompressed)")->required();
    cmd->add_option("-o,--output-dir", a.out_dir,
                    "Directory for filters.txt, trace.csv and recon.pgm")
        ->capture_default_str();
    cmd->add_option("--learning-rate", c.learning_rate, "Step size before pixel-count scaling")
        ->capture_default_str();
    cmd->add_option("--momentum", c.momentum, "Nesterov momentum")->capture_default_str();
    cmd->add_option("--max-iterations", c.max_iterations, "Iteration budget")->capture_default_str();
    cmd->add_option("--target-psnr", c.target_psnr, "Stop once PSNR reaches this (dB)")
        ->capture_default_str();
    cmd->add_option("--filter-size", c.filter_size, "Taps per side of every filter")
        ->capture_default_str();
    cmd->add_option("--loss-floor", c.loss_floor, "Stop once the loss drops to this")
        ->capture_default_str();
    cmd->add_option("--seed", c.seed, "Seed for randomized choices")->capture_default_str();
    cmd->add_option("--mask-parity", c.mask_parity, "Retained quincunx coset (0 or 1)")
        ->capture_default_str();
    cmd->add_option("--lr-scaling", c.lr_scaling,
                    "Scale the learning rate by 512*512/(H*W): auto (non-512x512 only), on, off")
        ->transform(CLI::CheckedTransformer(kLrScaling, CLI::ignore_case))
        ->default_str("auto");
    cmd->add_option("--normalization", c.normalization,
                    "Intensity mapping before training: standardize, unit (a/255), raw")
        ->transform(CLI::CheckedTransformer(kNormalization, CLI::ignore_case))
        ->default_str("standardize");
    cmd->add_option("--stddev", c.standardized_stddev, "Standard deviation used by standardize")
        ->capture_default_str();
    cmd->add_option("--crop", a.crop, "Train on the window ROW COL HEIGHT WIDTH")->expected(4);
    cmd->add_option("--progress-every", a.progress_every,
                    "Progress line to stderr every N iterations (0: quiet)")
        ->capture_default_str();
    cmd->add_option("--time-limit", a.time_limit,
                    "Stop with reason 'cancelled' after this many seconds (0: none)")
        ->capture_default_str();
}

void print_config(const TrainArgs& a, std::size_t h, std::size_t w) {
    const TrainConfig& c = a.config;
    std::printf("config image=%s\n", a.image.c_str());
    if (!a.crop.empty())
        std::printf("config crop=%zu,%zu,%zu,%zu\n", a.crop[0], a.crop[1], a.crop[2], a.crop[3]);
    std::printf("config size=%zux%zu\n", h, w);
    std::printf("config learning_rate=%s\n", num(c.learning_rate).c_str());
    std::printf("config effective_learning_rate=%s\n", num(effective_learning_rate(c, h, w)).c_str());
    std::printf("config momentum=%s\n", num(c.momentum).c_str());
    std::printf("config max_iterations=%lld\n", static_cast<long long>(c.max_iterations));
    std::printf("config target_psnr=%s\n", num(c.target_psnr).c_str());
    std::printf("config filter_size=%zu\n", c.filter_size);
    std::printf("config loss_floor=%s\n", num(c.loss_floor).c_str());
    std::printf("config seed=%llu\n", static_cast<unsigned long long>(c.seed));
    std::printf("config mask_parity=%d\n", c.mask_parity);
    std::printf("config lr_scaling=%s\n", to_string(c.lr_scaling).c_str());
    std::printf("config normalization=%s\n", to_string(c.normalization).c_str());
    std::printf("config stddev=%s\n", num(c.standardized_stddev).c_str());
    std::printf("config time_limit=%s\n", num(a.time_limit).c_str());
    std::fflush(stdout);
}

int run_train(const TrainArgs& a) {
    // Everything that can fail on input happens before any output exists.
    Image image = read_bmp(a.image);
    if (!a.crop.empty()) {
        if (a.crop[0] + a.crop[2] > image.height() || a.crop[1] + a.crop[3] > image.width() ||
            a.crop[2] == 0 || a.crop[3] == 0)
            throw UsageError("--crop window lies outside the " + std::to_string(image.height()) +
                             "x" + std::to_string(image.width()) + " image");
        image = crop(image, a.crop[0], a.crop[1], a.crop[2], a.crop[3]);
    }
    try {
        a.config.validate();
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (image.height() % 2 != 0 || image.width() % 2 != 0)
        throw UsageError("image dimensions must be even");
    if (a.time_limit < 0.0) throw UsageError("--time-limit must be nonnegative");

    print_config(a, image.height(), image.width());

    const auto start = std::chrono::steady_clock::now();
    const ProgressCallback progress = [&](std::int64_t it, double loss_value, double psnr_value) {
        if (a.progress_every > 0 && it % a.progress_every == 0)
            std::fprintf(stderr, "iter %lld loss %.6g psnr %.3f\n", static_cast<long long>(it),
                         loss_value, psnr_value);
        if (a.time_limit > 0.0) {
            const double elapsed =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (elapsed > a.time_limit) return false;
        }
        return true;
    };
    const TrainResult r = train(image, a.config, std::nullopt, progress);

    fs::create_directories(a.out_dir);
    FilterMetadata meta{
        {"source", fs::path(a.image).filename().string()},
        {"size", std::to_string(image.height()) + "x" + std::to_string(image.width())},
        {"learning_rate", num(a.config.learning_rate)},
        {"effective_learning_rate", num(r.learning_rate)},
        {"momentum", num(a.config.momentum)},
        {"max_iterations", std::to_string(a.config.max_iterations)},
        {"target_psnr", num(a.config.target_psnr)},
        {"filter_size", std::to_string(a.config.filter_size)},
        {"loss_floor", num(a.config.loss_floor)},
        {"seed", std::to_string(a.config.seed)},
        {"mask_parity", std::to_string(a.config.mask_parity)},
        {"lr_scaling", to_string(a.config.lr_scaling)},
        {"normalization", to_string(a.config.normalization)},
        {"intensity_scale", num(r.intensity.scale)},
        {"intensity_offset", num(r.intensity.offset)},
        {"final_loss", num(r.final_loss)},
        {"final_psnr", num(r.final_psnr)},
        {"iterations", std::to_string(r.iterations)},
        {"stop_reason", to_string(r.stop_reason)},
    };
    if (!a.crop.empty())
        meta["crop"] = std::to_string(a.crop[0]) + "," + std::to_string(a.crop[1]) + "," +
                       std::to_string(a.crop[2]) + "," + std::to_string(a.crop[3]);
    export_filters(r.bank, meta, a.out_dir / "filters.txt");

    {
        const fs::path trace = a.out_dir / "trace.csv";
        std::ofstream out(trace, std::ios::binary);
        if (!out) throw IoError(IoErrorKind::Open, trace.string() + ": cannot create");
        out << "iteration,loss,psnr\n";
        for (std::size_t i = 0; i < r.loss_history.size(); ++i)
            out << i << ',' << num(r.loss_history[i]) << ',' << num(r.psnr_history[i]) << '\n';
        if (!out) throw IoError(IoErrorKind::Open, trace.string() + ": write failed");
    }

    const Image scaled = r.intensity.apply(image);
    const ForwardTrace t = forward(scaled, r.bank, coset_mask(image.height(), image.width(),
                                                              a.config.mask_parity));
    write_pgm(r.intensity.invert(t.recon), a.out_dir / "recon.pgm", false);

    std::printf("summary final_loss=%s psnr=%s iterations=%lld stop=%s\n", num(r.final_loss).c_str(),
                fixed(r.final_psnr, 4).c_str(), static_cast<long long>(r.iterations),
                to_string(r.stop_reason).c_str());
    return r.stop_reason == StopReason::Divergence ? kDiverged : kOk;
}

// ------------------------------------------------------------ gradcheck

struct GradcheckArgs {
    std::size_t size = 8;
    std::size_t filter_size = 3;
    int instances = 20;
    std::uint64_t seed = 0;
    double eps = 1e-5;
    double tolerance = 1e-6;
    int mask_parity = 0;
    bool corrupt = false;
};

void add_gradcheck(CLI::App& app, GradcheckArgs& a) {
    auto* cmd = app.add_subcommand(
        "gradcheck", "Compare analytic gradients with central differences on random instances");
    cmd->add_option("--size", a.size, "Side of the random square images")->capture_default_str();
    cmd->add_option("--filter-size", a.filter_size, "Side of the random filters")
        ->capture_default_str();
    cmd->add_option("--instances", a.instances, "Number of random instances")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed")->capture_default_str();
    cmd->add_option("--eps", a.eps, "Central-difference step")->capture_default_str();
    cmd->add_option("--tolerance", a.tolerance, "Pass when max relative error is below this")
        ->capture_default_str();
    cmd->add_option("--mask-parity", a.mask_parity, "Retained quincunx coset")->capture_default_str();
    cmd->add_flag("--corrupt", a.corrupt, "Perturb the analytic gradient (self-test of the check)");
}

int run_gradcheck(const GradcheckArgs& a) {
    if (a.size < 1 || a.filter_size < 1 || a.filter_size > a.size || a.instances < 1 ||
        !(a.eps > 0.0) || (a.mask_parity != 0 && a.mask_parity != 1))
        throw UsageError("gradcheck: invalid sizes, instance count, eps or parity");
    std::printf("config size=%zu filter_size=%zu instances=%d seed=%llu eps=%s tolerance=%s "
                "mask_parity=%d corrupt=%d\n",
                a.size, a.filter_size, a.instances, static_cast<unsigned long long>(a.seed),
                num(a.eps).c_str(), num(a.tolerance).c_str(), a.mask_parity, a.corrupt ? 1 : 0);

    std::mt19937_64 rng(a.seed);
    std::uniform_real_distribution<double> pixel(0.0, 1.0), tap(-1.0, 1.0);
    std::uniform_int_distribution<std::size_t> anchor(0, a.filter_size - 1);
    const CosetMask mask = coset_mask(a.size, a.size, a.mask_parity);
    double worst = 0.0;
    for (int i = 0; i < a.instances; ++i) {
        Image img(a.size, a.size);
        for (double& v : img.samples().values()) v = pixel(rng);
        FilterBank bank;
        for (std::size_t k = 0; k < kFilterCount; ++k) {
            Grid taps(a.filter_size, a.filter_size);
            for (double& v : taps.values()) v = tap(rng);
            const Anchor an{anchor(rng), anchor(rng)};
            bank[k] = Filter2D(std::move(taps), an);
        }
        Gradients g = gradients(img, bank, mask, forward(img, bank, mask));
        if (a.corrupt) g[1](0, 0) += 1e-3 * (1.0 + std::abs(g[1](0, 0)));
        const double err = max_relative_error(g, finite_diff_grad(img, bank, mask, a.eps));
        std::printf("instance %d max_relative_error=%s\n", i, num(err).c_str());
        worst = std::max(worst, err);
    }
    const bool ok = worst < a.tolerance;
    std::printf("max relative error %s: %s\n", num(worst).c_str(), ok ? "PASS" : "FAIL");
    return ok ? kOk : kCheckFailed;
}

// -------------------------------------------------------------- prcheck

struct PrcheckArgs {
    std::string filters;
    std::string image;
    int probes = 5;
    std::size_t size = 64;
    std::uint64_t seed = 0;
    double threshold = 70.0;
};

void add_prcheck(CLI::App& app, PrcheckArgs& a) {
    auto* cmd = app.add_subcommand("prcheck", "Measure how well a filter bank reconstructs probes");
    cmd->add_option("filters", a.filters, "Filter file written by train")->required();
    cmd->add_option("--image", a.image,
                    "Use this BMP as the only probe, mapped by the file's intensity settings");
    cmd->add_option("--probes", a.probes, "Number of random probes (values 0..255)")
        ->capture_default_str();
    cmd->add_option("--size", a.size, "Side of the random square probes")->capture_default_str();
    cmd->add_option("--seed", a.seed, "Random seed for the probes")->capture_default_str();
    cmd->add_option("--threshold", a.threshold, "Pass when every probe reaches this PSNR (dB)")
        ->capture_default_str();
}

double meta_number(const FilterMetadata& meta, const std::string& key, double fallback) {
    const auto it = meta.find(key);
    if (it == meta.end()) return fallback;
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw IoError(IoErrorKind::Malformed, "metadata " + key + " is not a number");
    }
}

int run_prcheck(const PrcheckArgs& a) {
    const LoadedFilterBank loaded = load_filters(a.filters);
    const int parity = static_cast<int>(meta_number(loaded.metadata, "mask_parity", 0.0));
    if (parity != 0 && parity != 1) throw IoError(IoErrorKind::Malformed, "mask_parity must be 0 or 1");

    std::vector<Image> probes;
    double peak = 255.0;
    if (!a.image.empty()) {
        const IntensityMap map{meta_number(loaded.metadata, "intensity_scale", 1.0),
                               meta_number(loaded.metadata, "intensity_offset", 0.0)};
        Image probe = read_bmp(a.image);
        // A bank trained on a window is checked on that same window.
        if (const auto it = loaded.metadata.find("crop"); it != loaded.metadata.end()) {
            std::size_t w[4] = {};
            if (std::sscanf(it->second.c_str(), "%zu,%zu,%zu,%zu", &w[0], &w[1], &w[2], &w[3]) != 4)
                throw IoError(IoErrorKind::Malformed, "metadata crop is not ROW,COL,HEIGHT,WIDTH");
            if (w[0] + w[2] > probe.height() || w[1] + w[3] > probe.width() || w[2] == 0 || w[3] == 0)
                throw UsageError("prcheck: the recorded crop does not fit " + a.image);
            probe = crop(probe, w[0], w[1], w[2], w[3]);
            std::printf("config crop=%s\n", it->second.c_str());
        }
        probes.push_back(map.apply(probe));
        peak = 255.0 * map.scale;
    } else {
        if (a.probes < 1 || a.size < 1) throw UsageError("prcheck: need at least one probe of size >= 1");
        std::mt19937_64 rng(a.seed);
        std::uniform_real_distribution<double> pixel(0.0, 255.0);
        for (int i = 0; i < a.probes; ++i) {
            Image p(a.size, a.size);
            for (double& v : p.samples().values()) v = pixel(rng);
            probes.push_back(std::move(p));
        }
    }
    const Image& first = probes.front();
    if (loaded.bank.h0.rows() > first.height() || loaded.bank.h0.cols() > first.width())
        throw UsageError("prcheck: probes are smaller than the filters");

    std::printf("config filters=%s probes=%zu seed=%llu threshold=%s mask_parity=%d\n",
                a.filters.c_str(), probes.size(), static_cast<unsigned long long>(a.seed),
                num(a.threshold).c_str(), parity);
    const std::vector<ProbeReport> reports =
        pr_error(loaded.bank, coset_mask(first.height(), first.width(), parity), probes, peak);
    bool ok = true;
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const bool pass = reports[i].psnr >= a.threshold;
        ok = ok && pass;
        std::printf("probe %zu max_abs_error=%s psnr=%s %s\n", i, num(reports[i].max_abs_error).c_str(),
                    fixed(reports[i].psnr, 4).c_str(), pass ? "PASS" : "FAIL");
    }
    std::printf("prcheck: %s\n", ok ? "PASS" : "FAIL");
    return ok ? kOk : kCheckFailed;
}

// --------------------------------------------------------------- render

struct RenderArgs {
    std::string filters;
    fs::path out_dir = "quinwave-render";
    int iterations = 8;
    std::size_t grid = 64;
    std::size_t max_samples = 256;
};

void add_render(CLI::App& app, RenderArgs& a) {
    auto* cmd = app.add_subcommand(
        "render", "Write frequency responses and cascade scaling/wavelet surfaces");
    cmd->add_option("filters", a.filters, "Filter file written by train")->required();
    cmd->add_option("-o,--output-dir", a.out_dir, "Created if missing")->capture_default_str();
    cmd->add_option("--iterations", a.iterations, "Cascade iterations")->capture_default_str();
    cmd->add_option("--grid", a.grid, "Frequency grid side")->capture_default_str();
    cmd->add_option("--max-samples", a.max_samples, "Cap on surface samples per side")
        ->capture_default_str();
}

void write_pair(const Grid& g, const fs::path& dir, const std::string& stem) {
    write_pgm(Image(g), dir / (stem + ".pgm"), true);
    write_csv_grid(g, dir / (stem + ".csv"));
    std::printf("wrote %s.pgm %s.csv\n", (dir / stem).string().c_str(), (dir / stem).string().c_str());
}

int run_render(const RenderArgs& a) {
    const LoadedFilterBank loaded = load_filters(a.filters);
    if (a.iterations < 1 || a.iterations > 40) throw UsageError("render: --iterations must be 1..40");
    if (a.grid < 2) throw UsageError("render: --grid must be at least 2");
    if (a.max_samples < 4) throw UsageError("render: --max-samples must be at least 4");
    std::printf("config filters=%s iterations=%d grid=%zu max_samples=%zu\n", a.filters.c_str(),
                a.iterations, a.grid, a.max_samples);

    fs::create_directories(a.out_dir);
    for (std::size_t k = 0; k < kFilterCount; ++k)
        write_pair(freq_response(loaded.bank[k], a.grid), a.out_dir,
                   std::string("freq_") + kFilterNames[k]);

    const DecimationMatrix m = quincunx_matrix();
    const SampledSurface phi = cascade_scaling(loaded.bank.f0, m, a.iterations, {a.max_samples});
    const SampledSurface psi = cascade_wavelet(loaded.bank.f1, phi, m);
    write_pair(phi.values, a.out_dir, "scaling");
    write_pair(psi.values, a.out_dir, "wavelet");
    std::printf("scaling density=%lld origin=(%s,%s) integral=%s two_scale_residual=%s\n",
                static_cast<long long>(phi.density), num(phi.x_row(0)).c_str(),
                num(phi.x_col(0)).c_str(), num(phi.integral()).c_str(),
                num(two_scale_residual(loaded.bank.f0, phi, m)).c_str());
    std::printf("wavelet density=%lld origin=(%s,%s) integral=%s\n",
                static_cast<long long>(psi.density), num(psi.x_row(0)).c_str(),
                num(psi.x_col(0)).c_str(), num(psi.integral()).c_str());
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Image-matched quincunx wavelet design by filter-bank training"};
    app.require_subcommand(1);
    TrainArgs train_args;
    GradcheckArgs gradcheck_args;
    PrcheckArgs prcheck_args;
    RenderArgs render_args;
    add_train(app, train_args);
    add_gradcheck(app, gradcheck_args);
    add_prcheck(app, prcheck_args);
    add_render(app, render_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (app.got_subcommand("train")) return run_train(train_args);
        if (app.got_subcommand("gradcheck")) return run_gradcheck(gradcheck_args);
        if (app.got_subcommand("prcheck")) return run_prcheck(prcheck_args);
        if (app.got_subcommand("render")) return run_render(render_args);
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kIo;
    } catch (const DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kDiverged;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    }
    return kUsage;
}
