#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "csc/convop.hpp"
#include "csc/dict.hpp"
#include "csc/feature_maps.hpp"
#include "csc/image.hpp"

namespace csc {

/// Unrolled convolutional LISTA:
///   Gamma_{k+1} = S_tau(Gamma_k + inv_c * A (Y - B Gamma_k)),  X = C Gamma_L,
/// evaluated for each of the stride^2 lattice offsets and averaged.
struct CscNetParams {
    std::size_t num_maps = 0;
    std::size_t filter_side = 0;
    std::size_t stride = 1;
    std::size_t unroll = 1;
    // Each bank is filter_side^2 x num_maps, column-major by filter.
    std::vector<double> filters_a;
    std::vector<double> filters_b;
    std::vector<double> filters_c;
    std::vector<double> tau;  // one threshold per map
    double inv_c = 1.0;

    std::size_t filter_dim() const { return filter_side * filter_side; }
    void validate() const;

    friend bool operator==(const CscNetParams&, const CscNetParams&) = default;
};

std::size_t parameter_count(std::size_t num_maps, std::size_t filter_side);
std::size_t parameter_count(const CscNetParams& params);

inline constexpr double kInitialThreshold = 0.01;

/// Random unit-norm filters scaled by 1/sqrt(sigma_max(D^T D)) of the strided operator
/// on an image_h x image_w grid; A = B = C = that bank, tau = 0.01, inv_c = 1.
CscNetParams init_params(std::uint64_t dict_seed, std::size_t num_maps, std::size_t filter_side,
                         std::size_t stride, std::size_t unroll, std::size_t image_h,
                         std::size_t image_w);

/// Parameters that make every layer one ISTA iteration with dictionary dict.
CscNetParams params_from_dictionary(const LocalDictionary& dict, std::size_t stride,
                                    std::size_t unroll, double lambda, double step_c);

LocalDictionary bank_as_dictionary(const CscNetParams& p, const std::vector<double>& bank);

struct LayerCache {
    Image residual;      // Y - B Gamma_{l-1}
    FeatureMaps update;  // A residual
    FeatureMaps pre;     // Gamma_{l-1} + inv_c * update
};

struct ShiftCache {
    Offset offset;
    std::vector<FeatureMaps> gammas;  // Gamma_0 .. Gamma_L
    std::vector<LayerCache> layers;   // 1 .. L
    Image estimate;
};

struct ForwardResult {
    Image estimate;
    std::vector<ShiftCache> shifts;
};

/// Image dimensions must be divisible by the stride.
ForwardResult forward(const CscNetParams& params, const Image& y);

double loss_l2(const Image& estimate, const Image& clean);

struct Gradients {
    std::vector<double> filters_a;
    std::vector<double> filters_b;
    std::vector<double> filters_c;
    std::vector<double> tau;
    double inv_c = 0.0;

    static Gradients zeros_like(const CscNetParams& p);
    void add(const Gradients& other);
    void scale(double s);
};

/// Exact gradient of loss_l2(forward(params, y).estimate, clean) from a cached pass.
/// The soft-threshold derivative is taken as 0 at the kink.
Gradients backward(const CscNetParams& params, const Image& y, const Image& clean,
                   const ForwardResult& cache);

struct TrainConfig {
    double lr = 1e-4;
    double lr_decay = 0.7;
    std::size_t decay_every = 50;
    double adam_eps = 1e-3;
    std::array<double, 2> adam_betas{0.9, 0.999};
    std::size_t epochs = 250;
    std::size_t steps_per_epoch = 0;  // 0: ceil(dataset size / batch)
    std::size_t crop_size = 128;
    std::size_t batch = 1;
    double sigma = 25.0;
    std::uint64_t seed = 0;

    void validate() const;
    double lr_at_epoch(std::size_t epoch) const;
};

struct AdamState {
    Gradients first;
    Gradients second;
    std::size_t step = 0;
};

AdamState make_adam_state(const CscNetParams& params);

/// One bias-corrected ADAM update at step t (1-based) with learning rate lr. Thresholds
/// are clamped at zero after the update.
void adam_step(CscNetParams& params, AdamState& state, const Gradients& grads,
               const TrainConfig& cfg, std::size_t t, double lr);

struct TrainState {
    CscNetParams params;
    AdamState adam;
    std::size_t epochs_done = 0;
    std::vector<double> loss_history;  // epoch-mean loss per pixel
    std::vector<double> lr_history;
};

using EpochCallback = std::function<void(const TrainState&)>;

/// Crop + fresh noise per sample, forward, backward, ADAM. Deterministic in
/// (dataset, cfg, starting state). Resumes from state.epochs_done.
TrainState train(const std::vector<Image>& dataset, const TrainConfig& cfg, TrainState state,
                 const EpochCallback& on_epoch = {});

/// Convenience overload starting from freshly initialized parameters.
TrainState train(const std::vector<Image>& dataset, const TrainConfig& cfg,
                 const CscNetParams& init);

/// Sample (clean crop, noisy crop) for (seed, epoch, index) exactly as train() does.
std::pair<Image, Image> training_sample(const std::vector<Image>& dataset, const TrainConfig& cfg,
                                        std::size_t epoch, std::size_t index);

/// Mean per-pixel MSE of params over `count` fixed samples drawn like training samples but
/// from a reserved epoch index, so the same set is scored before and after training.
double fixed_sample_mse(const CscNetParams& params, const std::vector<Image>& dataset,
                        const TrainConfig& cfg, std::size_t count);

inline constexpr std::size_t kHeldOutEpoch = 1u << 30;

struct Preset {
    std::size_t num_maps;
    std::size_t filter_side;
    std::size_t stride;
    std::size_t unroll;
    TrainConfig train;
};

/// "desk": m=16, 5x5, q=4, L=4, crop 16. "paper": m=175, 11x11, q=8, L=12, crop 128.
Preset preset(const std::string& name);

}  // namespace csc
