#include "csc/cscnet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csc/errors.hpp"
#include "csc/parallel.hpp"
#include "csc/pursuit.hpp"
#include "csc/rng.hpp"

namespace csc {

void CscNetParams::validate() const {
    if (num_maps == 0 || filter_side == 0 || unroll == 0) {
        throw UsageError("CSCNet dimensions must be positive");
    }
    if (stride == 0 || stride > filter_side) throw UsageError("stride must satisfy 1 <= q <= filter side");
    const std::size_t bank = num_maps * filter_dim();
    if (filters_a.size() != bank || filters_b.size() != bank || filters_c.size() != bank) {
        throw UsageError("filter banks must all be filter_side^2 x num_maps");
    }
    if (tau.size() != num_maps) throw UsageError("one threshold per map expected");
    for (double t : tau) {
        if (!(t >= 0.0)) throw UsageError("thresholds must be non-negative");
    }
}

std::size_t parameter_count(std::size_t num_maps, std::size_t filter_side) {
    return 3 * num_maps * filter_side * filter_side + num_maps;
}

std::size_t parameter_count(const CscNetParams& p) { return parameter_count(p.num_maps, p.filter_side); }

LocalDictionary bank_as_dictionary(const CscNetParams& p, const std::vector<double>& bank) {
    return LocalDictionary::raw(p.filter_side, p.filter_side, p.num_maps, bank);
}

CscNetParams init_params(std::uint64_t dict_seed, std::size_t num_maps, std::size_t filter_side,
                         std::size_t stride, std::size_t unroll, std::size_t image_h,
                         std::size_t image_w) {
    if (num_maps == 0) throw UsageError("num_maps must be positive");
    if (stride == 0 || stride > filter_side) throw UsageError("stride must satisfy 1 <= q <= filter side");
    const std::size_t n = filter_side * filter_side;
    std::vector<double> bank(n * num_maps);
    CounterRng rng(dict_seed, Stream::filters);
    for (double& v : bank) v = rng.normal();
    LocalDictionary dict(filter_side, num_maps, std::move(bank));  // unit-norm columns

    const StridedConvOp op(dict, stride, {0, 0}, image_h, image_w);
    const double sigma_max = spectral_norm_sq(op, {.iters = 500, .tol = 1e-12, .seed = dict_seed});
    const LocalDictionary normalized = dict.scaled(1.0 / std::sqrt(sigma_max));

    CscNetParams p;
    p.num_maps = num_maps;
    p.filter_side = filter_side;
    p.stride = stride;
    p.unroll = unroll;
    p.filters_a = normalized.atoms();
    p.filters_b = normalized.atoms();
    p.filters_c = normalized.atoms();
    p.tau.assign(num_maps, kInitialThreshold);
    p.inv_c = 1.0;
    p.validate();
    return p;
}

CscNetParams params_from_dictionary(const LocalDictionary& dict, std::size_t stride,
                                    std::size_t unroll, double lambda, double step_c) {
    CscNetParams p;
    p.num_maps = dict.num_atoms();
    p.filter_side = dict.patch_side();
    p.stride = stride;
    p.unroll = unroll;
    p.filters_a = dict.atoms();
    p.filters_b = dict.atoms();
    p.filters_c = dict.atoms();
    p.tau.assign(p.num_maps, lambda / step_c);
    p.inv_c = 1.0 / step_c;
    p.validate();
    return p;
}

namespace {

struct ShiftOps {
    StridedConvOp a, b, c;
};

ShiftOps make_ops(const CscNetParams& p, Offset k, std::size_t h, std::size_t w) {
    return {StridedConvOp(bank_as_dictionary(p, p.filters_a), p.stride, k, h, w),
            StridedConvOp(bank_as_dictionary(p, p.filters_b), p.stride, k, h, w),
            StridedConvOp(bank_as_dictionary(p, p.filters_c), p.stride, k, h, w)};
}

std::vector<Offset> all_offsets(std::size_t q) {
    std::vector<Offset> out;
    for (std::size_t r = 0; r < q; ++r) {
        for (std::size_t c = 0; c < q; ++c) out.push_back({r, c});
    }
    return out;
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

ShiftCache forward_shift(const CscNetParams& p, const Image& y, Offset k) {
    const ShiftOps ops = make_ops(p, k, y.height(), y.width());
    ShiftCache sc;
    sc.offset = k;
    sc.gammas.push_back(ops.b.zero_maps());
    for (std::size_t l = 0; l < p.unroll; ++l) {
        LayerCache layer;
        const Image synth = ops.b.synthesize(sc.gammas.back());
        layer.residual = y;
        for (std::size_t i = 0; i < y.size(); ++i) layer.residual.data()[i] -= synth.data()[i];
        layer.update = ops.a.analyze(layer.residual);
        layer.pre = sc.gammas.back();
        for (std::size_t i = 0; i < layer.pre.data.size(); ++i) {
            layer.pre.data[i] += p.inv_c * layer.update.data[i];
        }
        FeatureMaps next = layer.pre;
        soft_threshold_inplace(next, p.tau);
        if (!finite(next.data)) throw NumericalError("non-finite activations in CSCNet forward pass");
        sc.layers.push_back(std::move(layer));
        sc.gammas.push_back(std::move(next));
    }
    sc.estimate = ops.c.synthesize(sc.gammas.back());
    return sc;
}

}  // namespace

ForwardResult forward(const CscNetParams& params, const Image& y) {
    params.validate();
    if (y.height() % params.stride != 0 || y.width() % params.stride != 0) {
        throw UsageError("image dimensions must be divisible by the stride");
    }
    const std::vector<Offset> offsets = all_offsets(params.stride);
    ForwardResult out;
    out.shifts.resize(offsets.size());
    parallel_for(offsets.size(), 1, [&](std::size_t i) { out.shifts[i] = forward_shift(params, y, offsets[i]); });
    std::vector<Image> estimates;
    estimates.reserve(out.shifts.size());
    for (const auto& s : out.shifts) estimates.push_back(s.estimate);
    out.estimate = pairwise_mean(estimates);
    return out;
}

double loss_l2(const Image& estimate, const Image& clean) {
    if (!estimate.same_shape(clean)) throw UsageError("image dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const double d = estimate.data()[i] - clean.data()[i];
        acc += d * d;
    }
    return acc;
}

Gradients Gradients::zeros_like(const CscNetParams& p) {
    Gradients g;
    g.filters_a.assign(p.filters_a.size(), 0.0);
    g.filters_b.assign(p.filters_b.size(), 0.0);
    g.filters_c.assign(p.filters_c.size(), 0.0);
    g.tau.assign(p.tau.size(), 0.0);
    return g;
}

void Gradients::add(const Gradients& o) {
    for (std::size_t i = 0; i < filters_a.size(); ++i) filters_a[i] += o.filters_a[i];
    for (std::size_t i = 0; i < filters_b.size(); ++i) filters_b[i] += o.filters_b[i];
    for (std::size_t i = 0; i < filters_c.size(); ++i) filters_c[i] += o.filters_c[i];
    for (std::size_t i = 0; i < tau.size(); ++i) tau[i] += o.tau[i];
    inv_c += o.inv_c;
}

void Gradients::scale(double s) {
    for (double& v : filters_a) v *= s;
    for (double& v : filters_b) v *= s;
    for (double& v : filters_c) v *= s;
    for (double& v : tau) v *= s;
    inv_c *= s;
}

namespace {

Gradients backward_shift(const CscNetParams& p, const ShiftCache& sc, const Image& grad_out) {
    const ShiftOps ops = make_ops(p, sc.offset, grad_out.height(), grad_out.width());
    const kernels::Geometry& geom = ops.a.geometry();
    Gradients g = Gradients::zeros_like(p);

    // Decoder X_k = C Gamma_L.
    kernels::parallel::filter_gradient(geom, grad_out.data(), sc.gammas.back().data, g.filters_c);
    FeatureMaps grad_gamma = ops.c.analyze(grad_out);

    for (std::size_t l = p.unroll; l-- > 0;) {
        const LayerCache& layer = sc.layers[l];
        const FeatureMaps& gamma_prev = sc.gammas[l];
        const std::size_t sites = grad_gamma.sites();

        // Gamma_l = S_tau(Z_l).
        FeatureMaps grad_pre = grad_gamma.zeros_like();
        for (std::size_t j = 0; j < p.num_maps; ++j) {
            for (std::size_t s = 0; s < sites; ++s) {
                const std::size_t i = j * sites + s;
                const double z = layer.pre.data[i];
                if (std::abs(z) > p.tau[j]) {
                    grad_pre.data[i] = grad_gamma.data[i];
                    g.tau[j] -= std::copysign(1.0, z) * grad_gamma.data[i];
                }
            }
        }

        // Z_l = Gamma_{l-1} + inv_c * U_l, U_l = A R_l.
        g.inv_c += dot(grad_pre, layer.update);
        FeatureMaps grad_update = grad_pre;
        for (double& v : grad_update.data) v *= p.inv_c;
        kernels::parallel::filter_gradient(geom, layer.residual.data(), grad_update.data, g.filters_a);
        Image grad_residual = ops.a.synthesize(grad_update);

        // R_l = Y - B Gamma_{l-1}.
        Image neg_grad_residual = grad_residual;
        for (double& v : neg_grad_residual.data()) v = -v;
        kernels::parallel::filter_gradient(geom, neg_grad_residual.data(), gamma_prev.data, g.filters_b);
        const FeatureMaps back = ops.b.analyze(grad_residual);
        grad_gamma = std::move(grad_pre);
        for (std::size_t i = 0; i < grad_gamma.data.size(); ++i) grad_gamma.data[i] -= back.data[i];
    }
    return g;
}

}  // namespace

Gradients backward(const CscNetParams& params, const Image& y, const Image& clean,
                   const ForwardResult& cache) {
    if (cache.shifts.size() != params.stride * params.stride || cache.estimate.empty()) {
        throw UsageError("backward requires the cached forward pass of the same parameters");
    }
    if (!clean.same_shape(y) || !cache.estimate.same_shape(y)) throw UsageError("image dimensions differ");
    for (const auto& s : cache.shifts) {
        if (s.layers.size() != params.unroll) throw UsageError("forward cache has the wrong depth");
    }

    // d/dX of ||X - clean||^2, split evenly over the averaged shifts.
    Image grad_out(y.height(), y.width());
    const double share = 2.0 / static_cast<double>(cache.shifts.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        grad_out.data()[i] = share * (cache.estimate.data()[i] - clean.data()[i]);
    }

    std::vector<Gradients> per_shift(cache.shifts.size());
    parallel_for(cache.shifts.size(), 1,
                 [&](std::size_t i) { per_shift[i] = backward_shift(params, cache.shifts[i], grad_out); });
    Gradients total = Gradients::zeros_like(params);
    for (const auto& g : per_shift) total.add(g);
    return total;
}

void TrainConfig::validate() const {
    if (!(lr >= 0.0)) throw UsageError("learning rate must be non-negative");
    if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw UsageError("lr_decay must lie in (0, 1]");
    if (decay_every == 0) throw UsageError("decay_every must be positive");
    if (!(adam_eps > 0.0)) throw UsageError("adam_eps must be positive");
    if (batch == 0 || crop_size == 0) throw UsageError("batch and crop_size must be positive");
    if (!(sigma >= 0.0)) throw UsageError("sigma must be non-negative");
}

double TrainConfig::lr_at_epoch(std::size_t epoch) const {
    return lr * std::pow(lr_decay, static_cast<double>(epoch / decay_every));
}

AdamState make_adam_state(const CscNetParams& params) {
    return {Gradients::zeros_like(params), Gradients::zeros_like(params), 0};
}

namespace {

void adam_update(std::vector<double>& theta, std::vector<double>& m, std::vector<double>& v,
                 const std::vector<double>& g, double b1, double b2, double c1, double c2, double lr,
                 double eps) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        theta[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
}

}  // namespace

void adam_step(CscNetParams& params, AdamState& state, const Gradients& grads, const TrainConfig& cfg,
               std::size_t t, double lr) {
    if (t == 0) throw UsageError("ADAM step index is 1-based");
    const double b1 = cfg.adam_betas[0];
    const double b2 = cfg.adam_betas[1];
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
    adam_update(params.filters_a, state.first.filters_a, state.second.filters_a, grads.filters_a, b1, b2,
                c1, c2, lr, cfg.adam_eps);
    adam_update(params.filters_b, state.first.filters_b, state.second.filters_b, grads.filters_b, b1, b2,
                c1, c2, lr, cfg.adam_eps);
    adam_update(params.filters_c, state.first.filters_c, state.second.filters_c, grads.filters_c, b1, b2,
                c1, c2, lr, cfg.adam_eps);
    adam_update(params.tau, state.first.tau, state.second.tau, grads.tau, b1, b2, c1, c2, lr, cfg.adam_eps);
    std::vector<double> ic{params.inv_c}, im{state.first.inv_c}, iv{state.second.inv_c};
    adam_update(ic, im, iv, {grads.inv_c}, b1, b2, c1, c2, lr, cfg.adam_eps);
    params.inv_c = ic[0];
    state.first.inv_c = im[0];
    state.second.inv_c = iv[0];
    for (double& t_j : params.tau) t_j = std::max(t_j, 0.0);
    state.step = t;
}

std::pair<Image, Image> training_sample(const std::vector<Image>& dataset, const TrainConfig& cfg,
                                        std::size_t epoch, std::size_t index) {
    CounterRng rng(cfg.seed, Stream::crop, {epoch, index});
    const Image& src = dataset[rng.below(dataset.size())];
    if (src.height() < cfg.crop_size || src.width() < cfg.crop_size) {
        throw DataError("training image smaller than the crop size");
    }
    const std::size_t top = rng.below(src.height() - cfg.crop_size + 1);
    const std::size_t left = rng.below(src.width() - cfg.crop_size + 1);
    Image clean = crop(src, top, left, cfg.crop_size, cfg.crop_size);
    Image noisy = add_gaussian_noise(clean, cfg.sigma, derive_key(cfg.seed, {epoch, index}));
    return {std::move(clean), std::move(noisy)};
}

TrainState train(const std::vector<Image>& dataset, const TrainConfig& cfg, TrainState state,
                 const EpochCallback& on_epoch) {
    if (dataset.empty()) throw DataError("training corpus is empty");
    cfg.validate();
    state.params.validate();
    if (cfg.crop_size % state.params.stride != 0) {
        throw UsageError("crop size must be divisible by the stride");
    }
    if (state.adam.first.filters_a.size() != state.params.filters_a.size()) {
        state.adam = make_adam_state(state.params);
    }
    const std::size_t steps = cfg.steps_per_epoch > 0 ? cfg.steps_per_epoch
                                                      : (dataset.size() + cfg.batch - 1) / cfg.batch;
    const double pixels = static_cast<double>(cfg.crop_size * cfg.crop_size);

    for (std::size_t epoch = state.epochs_done; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.lr_at_epoch(epoch);
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            std::vector<Gradients> grads(cfg.batch);
            std::vector<double> losses(cfg.batch);
            parallel_for(cfg.batch, 1, [&](std::size_t b) {
                const auto [clean, noisy] = training_sample(dataset, cfg, epoch, step * cfg.batch + b);
                const ForwardResult fr = forward(state.params, noisy);
                losses[b] = loss_l2(fr.estimate, clean);
                grads[b] = backward(state.params, noisy, clean, fr);
            });
            Gradients total = Gradients::zeros_like(state.params);
            double loss = 0.0;
            for (std::size_t b = 0; b < cfg.batch; ++b) {
                total.add(grads[b]);
                loss += losses[b];
            }
            if (!std::isfinite(loss)) {
                throw NumericalError("training diverged at epoch " + std::to_string(epoch) + ", step " +
                                     std::to_string(step) + ": non-finite loss");
            }
            total.scale(1.0 / static_cast<double>(cfg.batch));
            epoch_loss += loss / (static_cast<double>(cfg.batch) * pixels);
            adam_step(state.params, state.adam, total, cfg, state.adam.step + 1, lr);
        }
        state.loss_history.push_back(epoch_loss / static_cast<double>(steps));
        state.lr_history.push_back(lr);
        state.epochs_done = epoch + 1;
        if (on_epoch) on_epoch(state);
    }
    return state;
}

double fixed_sample_mse(const CscNetParams& params, const std::vector<Image>& dataset,
                        const TrainConfig& cfg, std::size_t count) {
    if (count == 0) throw UsageError("fixed_sample_mse needs at least one sample");
    std::vector<double> per(count);
    parallel_for(count, 1, [&](std::size_t i) {
        auto [clean, noisy] = training_sample(dataset, cfg, kHeldOutEpoch, i);
        per[i] = loss_l2(forward(params, noisy).estimate, clean) / static_cast<double>(clean.data().size());
    });
    double acc = 0.0;
    for (double v : per) acc += v;
    return acc / static_cast<double>(count);
}

TrainState train(const std::vector<Image>& dataset, const TrainConfig& cfg, const CscNetParams& init) {
    TrainState st;
    st.params = init;
    st.adam = make_adam_state(init);
    return train(dataset, cfg, std::move(st));
}

Preset preset(const std::string& name) {
    Preset p{};
    if (name == "desk") {
        p.num_maps = 16;
        p.filter_side = 5;
        p.stride = 4;
        p.unroll = 4;
        p.train.lr = 3e-3;
        p.train.crop_size = 16;
        p.train.epochs = 50;
        p.train.steps_per_epoch = 4;
        p.train.batch = 4;
        p.train.decay_every = 50;
    } else if (name == "paper") {
        p.num_maps = 175;
        p.filter_side = 11;
        p.stride = 8;
        p.unroll = 12;
        p.train.lr = 1e-4;
        p.train.crop_size = 128;
        p.train.epochs = 250;
        p.train.decay_every = 50;
    } else {
        throw UsageError("unknown preset: " + name + " (expected desk or paper)");
    }
    p.train.lr_decay = 0.7;
    p.train.adam_eps = 1e-3;
    p.train.sigma = 25.0;
    return p;
}

}  // namespace csc
