#include "quinwave/training.hpp"

#include "circular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace quinwave {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning_rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("momentum must lie in [0, 1)");
    if (max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");
    if (!(target_psnr > 0.0)) throw std::invalid_argument("target_psnr must be positive");
    if (filter_size < 2) throw std::invalid_argument("filter_size must be at least 2");
    if (!(loss_floor >= 0.0)) throw std::invalid_argument("loss_floor must be nonnegative");
    if (mask_parity != 0 && mask_parity != 1)
        throw std::invalid_argument("mask_parity must be 0 or 1");
    if (!(standardized_stddev > 0.0) || !std::isfinite(standardized_stddev))
        throw std::invalid_argument("standardized_stddev must be positive");
}

Image IntensityMap::apply(const Image& image) const {
    Image out = image;
    for (double& v : out.samples().values()) v = scale * v + offset;
    return out;
}

Image IntensityMap::invert(const Image& normalized) const {
    Image out = normalized;
    for (double& v : out.samples().values()) v = (v - offset) / scale;
    return out;
}

IntensityMap intensity_map(const Image& image, Normalization mode, double stddev) {
    switch (mode) {
    case Normalization::Raw: return {};
    case Normalization::UnitRange: return {1.0 / 255.0, 0.0};
    case Normalization::Standardize: break;
    }
    const auto v = image.samples().values();
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    if (!(sd > 0.0)) throw std::invalid_argument("cannot standardize a constant image");
    return {stddev / sd, -mean * stddev / sd};
}

IntensityMap intensity_map(const Image& image, const TrainConfig& config) {
    return intensity_map(image, config.normalization, config.standardized_stddev);
}

std::string to_string(Normalization mode) {
    switch (mode) {
    case Normalization::Raw: return "raw";
    case Normalization::UnitRange: return "unit";
    case Normalization::Standardize: return "standardize";
    }
    return "unknown";
}

std::string to_string(LrScaling mode) {
    switch (mode) {
    case LrScaling::Auto: return "auto";
    case LrScaling::On: return "on";
    case LrScaling::Off: return "off";
    }
    return "unknown";
}

double effective_learning_rate(const TrainConfig& config, std::size_t height, std::size_t width) {
    const double pixels = static_cast<double>(height) * static_cast<double>(width);
    const bool scale = config.lr_scaling == LrScaling::On ||
                       (config.lr_scaling == LrScaling::Auto && pixels != kReferencePixels);
    return scale ? config.learning_rate * (kReferencePixels / pixels) : config.learning_rate;
}

bool Gradients::all_finite() const noexcept {
    return std::all_of(g.begin(), g.end(), [](const Grid& x) { return x.all_finite(); });
}

double Gradients::max_abs() const noexcept {
    double m = 0.0;
    for (const Grid& x : g)
        for (double v : x.values()) m = std::max(m, std::abs(v));
    return m;
}

double loss(const Image& image, const Image& recon) {
    require_same_shape(image.samples(), recon.samples(), "loss");
    auto a = image.samples().values();
    auto b = recon.samples().values();
    double total = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

namespace {

// d/dtaps of sum_n weight[n] * conv2_circular(signal, filter)[n].
Grid tap_gradient(const Image& weight, const Image& signal, const Filter2D& filter) {
    Grid g(filter.rows(), filter.cols());
    const auto ar = static_cast<std::int64_t>(filter.anchor.row);
    const auto ac = static_cast<std::int64_t>(filter.anchor.col);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j)
            g(i, j) = detail::shifted_dot(weight.samples(), signal.samples(),
                                          ar - static_cast<std::int64_t>(i),
                                          ac - static_cast<std::int64_t>(j));
    return g;
}

} // namespace

Gradients gradients(const Image& image, const FilterBank& bank, const CosetMask& mask,
                    const ForwardTrace& trace) {
    if (trace.fingerprint != fingerprint(image, bank, mask))
        throw StaleTraceError("gradients: trace was computed for a different image, bank or mask");

    Image residual = trace.recon;
    auto rv = residual.samples().values();
    auto av = image.samples().values();
    for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = -2.0 * (av[i] - rv[i]);

    Gradients out;
    out[2] = tap_gradient(residual, trace.z0, bank.f0);
    out[3] = tap_gradient(residual, trace.z1, bank.f1);

    Image back0 = correlate2_circular(residual, bank.f0);
    Image back1 = correlate2_circular(residual, bank.f1);
    apply_mask_in_place(back0, mask);
    apply_mask_in_place(back1, mask);
    out[0] = tap_gradient(back0, image, bank.h0);
    out[1] = tap_gradient(back1, image, bank.h1);
    return out;
}

Gradients finite_diff_grad(const Image& image, const FilterBank& bank, const CosetMask& mask,
                           double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
    Gradients out;
    FilterBank probe = bank;
    for (std::size_t k = 0; k < kFilterCount; ++k) {
        Grid& taps = probe[k].taps;
        out[k] = Grid(taps.rows(), taps.cols());
        for (std::size_t i = 0; i < taps.rows(); ++i) {
            for (std::size_t j = 0; j < taps.cols(); ++j) {
                const double original = taps(i, j);
                taps(i, j) = original + eps;
                const double up = loss(image, forward(image, probe, mask).recon);
                taps(i, j) = original - eps;
                const double down = loss(image, forward(image, probe, mask).recon);
                taps(i, j) = original;
                out[k](i, j) = (up - down) / (2.0 * eps);
            }
        }
    }
    return out;
}

double max_relative_error(const Gradients& a, const Gradients& b, double floor) {
    double worst = 0.0;
    for (std::size_t k = 0; k < kFilterCount; ++k) {
        require_same_shape(a[k], b[k], "max_relative_error");
        auto x = a[k].values();
        auto y = b[k].values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (!std::isfinite(x[i]) || !std::isfinite(y[i]))
                return std::numeric_limits<double>::infinity();
            const double denom = std::max({std::abs(x[i]), std::abs(y[i]), floor});
            worst = std::max(worst, std::abs(x[i] - y[i]) / denom);
        }
    }
    return worst;
}

Anchor analysis_anchor(std::size_t size) noexcept {
    const std::size_t c = size == 0 ? 0 : (size - 1) / 2;
    return Anchor{c, c};
}

Anchor synthesis_anchor(std::size_t size) noexcept {
    const std::size_t c = size / 2;
    return Anchor{c, c};
}

FilterBank init_filters(const TrainConfig& config) {
    const std::size_t n = config.filter_size;
    if (n < 2) throw std::invalid_argument("init_filters: filter_size must be at least 2");
    const double tap = std::sqrt(2.0) / static_cast<double>(n * n);
    Grid low(n, n, tap);
    Grid high(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) high(i, j) = (j % 2 == 0) ? tap : -tap;
    const Anchor a = analysis_anchor(n);
    const Anchor s = synthesis_anchor(n);
    return FilterBank{Filter2D(low, a), Filter2D(high, a), Filter2D(low, s), Filter2D(high, s)};
}

TrainState TrainState::start(FilterBank bank) {
    TrainState s;
    for (std::size_t k = 0; k < kFilterCount; ++k)
        s.velocity[k] = Grid(bank[k].rows(), bank[k].cols());
    s.bank = std::move(bank);
    return s;
}

void sgd_nesterov_step(TrainState& state, const Gradients& grads, double learning_rate,
                       double momentum) {
    for (std::size_t k = 0; k < kFilterCount; ++k) {
        if (!grads[k].same_shape(state.bank[k].taps) || !grads[k].same_shape(state.velocity[k]))
            throw DimensionError(std::string("sgd_nesterov_step: gradient shape mismatch for ") +
                                 kFilterNames[k]);
    }
    if (!grads.all_finite()) throw DivergenceError("non-finite gradient");

    for (std::size_t k = 0; k < kFilterCount; ++k) {
        auto theta = state.bank[k].taps.values();
        auto v = state.velocity[k].values();
        auto g = grads[k].values();
        for (std::size_t i = 0; i < theta.size(); ++i) {
            v[i] = momentum * v[i] - learning_rate * g[i];
            theta[i] += momentum * v[i] - learning_rate * g[i];
        }
    }
    ++state.iteration;
}

void sgd_nesterov_step(TrainState& state, const Gradients& grads, const TrainConfig& config) {
    sgd_nesterov_step(state, grads, config.learning_rate, config.momentum);
}

std::string to_string(StopReason reason) {
    switch (reason) {
    case StopReason::TargetPsnr: return "target-psnr";
    case StopReason::LossFloor: return "loss-floor";
    case StopReason::MaxIterations: return "max-iterations";
    case StopReason::Divergence: return "divergence";
    case StopReason::Cancelled: return "cancelled";
    }
    return "unknown";
}

TrainResult train(const Image& image, const TrainConfig& config,
                  const std::optional<FilterBank>& initial, const ProgressCallback& progress) {
    config.validate();
    image.require_finite("train");
    if (image.height() % 2 != 0 || image.width() % 2 != 0)
        throw DimensionError("train: image dimensions must be even, got " +
                             shape_string(image.samples()));

    const IntensityMap map = intensity_map(image, config);
    const Image scaled = map.apply(image);
    const double peak = 255.0 * map.scale;
    const CosetMask mask = coset_mask(image.height(), image.width(), config.mask_parity);
    const double eta = effective_learning_rate(config, image.height(), image.width());

    TrainState state = TrainState::start(initial ? *initial : init_filters(config));
    state.bank.validate();

    auto record = [&](double l, double p) {
        state.loss_history.push_back(l);
        state.psnr_history.push_back(p);
    };

    double initial_loss = 0.0;
    double last_loss = 0.0;
    double last_psnr = 0.0;
    StopReason reason = StopReason::MaxIterations;
    for (;;) {
        const ForwardTrace trace = forward(scaled, state.bank, mask);
        last_loss = loss(scaled, trace.recon);
        last_psnr = psnr(scaled, trace.recon, peak);
        if (state.iteration == 0) initial_loss = last_loss;

        std::optional<StopReason> stop;
        if (!std::isfinite(last_loss) || last_loss > 1e3 * initial_loss)
            stop = StopReason::Divergence;
        else if (last_psnr >= config.target_psnr)
            stop = StopReason::TargetPsnr;
        else if (last_loss <= config.loss_floor)
            stop = StopReason::LossFloor;
        else if (state.iteration + 1 >= config.max_iterations)
            stop = StopReason::MaxIterations;
        else if (progress && !progress(state.iteration, last_loss, last_psnr))
            stop = StopReason::Cancelled;

        if (stop) {
            record(last_loss, last_psnr);
            ++state.iteration;
            reason = *stop;
            break;
        }

        try {
            sgd_nesterov_step(state, gradients(scaled, state.bank, mask, trace), eta,
                              config.momentum);
        } catch (const DivergenceError&) {
            record(last_loss, last_psnr);
            ++state.iteration;
            reason = StopReason::Divergence;
            break;
        }
        record(last_loss, last_psnr);
    }

    TrainResult result;
    result.bank = std::move(state.bank);
    result.final_loss = last_loss;
    result.final_psnr = last_psnr;
    result.iterations = state.iteration;
    result.stop_reason = reason;
    result.loss_history = std::move(state.loss_history);
    result.psnr_history = std::move(state.psnr_history);
    result.learning_rate = eta;
    result.intensity = map;
    return result;
}

} // namespace quinwave
