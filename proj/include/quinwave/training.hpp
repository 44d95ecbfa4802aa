#ifndef QUINWAVE_TRAINING_HPP
#define QUINWAVE_TRAINING_HPP

#include "quinwave/filterbank.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace quinwave {

/// Raised when the optimizer sees a non-finite gradient.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a ForwardTrace does not belong to the (image, bank, mask) it is used with.
class StaleTraceError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class LrScaling { Auto, On, Off };

/// How pixel intensities are mapped before training.
///   Raw:         native 0-255 values.
///   UnitRange:   a / 255.
///   Standardize: zero mean and a fixed standard deviation.
enum class Normalization { Raw, UnitRange, Standardize };

struct TrainConfig {
    double learning_rate = 2e-7;
    double momentum = 0.9;
    std::int64_t max_iterations = 15000;
    double target_psnr = 70.0;
    std::size_t filter_size = 4;
    double loss_floor = 1e-6;
    std::uint64_t seed = 0;
    int mask_parity = 0;
    /// Multiply the learning rate by 512*512 / (H*W). Auto applies it to
    /// any image that is not 512x512.
    LrScaling lr_scaling = LrScaling::Auto;
    /// The loss is measured in normalized units. PSNR is invariant to the
    /// mapping and always equals PSNR of the 0-255 image against peak 255.
    Normalization normalization = Normalization::Standardize;
    /// Target standard deviation for Standardize. Unit variance sits at the
    /// edge of stability for a full 512x512 natural image at the default
    /// learning rate; 0.8 leaves margin.
    double standardized_stddev = 0.8;

    /// Throws std::invalid_argument when a field is out of range.
    void validate() const;
};

/// Affine intensity map value -> scale * value + offset.
struct IntensityMap {
    double scale = 1.0;
    double offset = 0.0;

    /// Reconstruction in normalized units back to 0-255 units.
    Image invert(const Image& normalized) const;
    Image apply(const Image& image) const;
};

/// Throws std::invalid_argument when standardizing a constant image.
IntensityMap intensity_map(const Image& image, Normalization mode, double stddev = 1.0);
IntensityMap intensity_map(const Image& image, const TrainConfig& config);

std::string to_string(Normalization mode);
std::string to_string(LrScaling mode);

/// Pixel count the default learning rate was tuned for.
inline constexpr double kReferencePixels = 512.0 * 512.0;

double effective_learning_rate(const TrainConfig& config, std::size_t height, std::size_t width);

/// One coefficient grid per filter, same order as FilterBank (h0, h1, f0, f1).
struct Gradients {
    std::array<Grid, kFilterCount> g;

    Grid& operator[](std::size_t k) noexcept { return g[k]; }
    const Grid& operator[](std::size_t k) const noexcept { return g[k]; }

    bool all_finite() const noexcept;
    /// Largest magnitude over all four grids.
    double max_abs() const noexcept;
};

/// sum_n (image[n] - recon[n])^2
double loss(const Image& image, const Image& recon);

/// Exact gradient of the squared reconstruction error with respect to every
/// tap, by backpropagation through synthesis, masking and analysis.
/// Throws StaleTraceError if `trace` was not produced by forward(image, bank, mask).
Gradients gradients(const Image& image, const FilterBank& bank, const CosetMask& mask,
                    const ForwardTrace& trace);

/// Central differences, re-running forward for every perturbed tap.
Gradients finite_diff_grad(const Image& image, const FilterBank& bank, const CosetMask& mask,
                           double eps);

/// Largest per-coefficient |a - b| / max(|a|, |b|, floor).
double max_relative_error(const Gradients& a, const Gradients& b, double floor = 1e-12);

/// Anchors of the starting bank. For odd sizes both are the centre tap. For
/// even sizes the analysis anchor rounds the centre down and the synthesis
/// anchor rounds it up, so the two supports mirror each other and the
/// cascade has no net delay.
Anchor analysis_anchor(std::size_t size) noexcept;
Anchor synthesis_anchor(std::size_t size) noexcept;

/// Deterministic lowpass/highpass starting bank.
///   h0, f0: constant taps, sum = sqrt2.
///   h1, f1: column signs +,-,+,-..., sum |taps| = sqrt2.
/// Every filter is filter_size x filter_size.
FilterBank init_filters(const TrainConfig& config);

struct TrainState {
    FilterBank bank;
    std::array<Grid, kFilterCount> velocity;
    std::int64_t iteration = 0;
    std::vector<double> loss_history;
    std::vector<double> psnr_history;

    /// Zero velocities shaped like `bank`.
    static TrainState start(FilterBank bank);
};

/// Nesterov momentum, per coefficient:
///   v <- mu v - eta g
///   theta <- theta + mu v - eta g
/// Increments `iteration`. Throws DivergenceError on a non-finite gradient
/// and leaves the state untouched in that case.
void sgd_nesterov_step(TrainState& state, const Gradients& grads, double learning_rate,
                       double momentum);
void sgd_nesterov_step(TrainState& state, const Gradients& grads, const TrainConfig& config);

enum class StopReason { TargetPsnr, LossFloor, MaxIterations, Divergence, Cancelled };

std::string to_string(StopReason reason);

struct TrainResult {
    FilterBank bank;
    double final_loss = 0.0;
    double final_psnr = 0.0;
    std::int64_t iterations = 0;
    StopReason stop_reason = StopReason::MaxIterations;
    std::vector<double> loss_history;
    std::vector<double> psnr_history;
    double learning_rate = 0.0; ///< after pixel-count scaling
    IntensityMap intensity;     ///< what the bank was trained on
};

/// Called after every evaluated iteration with (iteration, loss, psnr);
/// returning false stops training with StopReason::Cancelled.
using ProgressCallback = std::function<bool(std::int64_t, double, double)>;

/// Full-batch training loop. Each iteration evaluates the current bank and
/// records its loss and PSNR, then either stops or takes one optimizer step.
/// Stops on divergence (non-finite loss or loss > 1e3 x initial), PSNR at or
/// above the target, loss at or below the floor, or the iteration budget.
/// `initial` overrides init_filters(config).
TrainResult train(const Image& image, const TrainConfig& config,
                  const std::optional<FilterBank>& initial = std::nullopt,
                  const ProgressCallback& progress = {});

} // namespace quinwave

#endif
