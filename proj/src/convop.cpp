#include "csc/convop.hpp"

#include <algorithm>
#include <cmath>

#include "csc/errors.hpp"
#include "csc/rng.hpp"

namespace csc {

std::vector<double> FeatureMaps::needle(std::size_t i, std::size_t k) const {
    std::vector<double> out(num_maps);
    for (std::size_t j = 0; j < num_maps; ++j) out[j] = at(j, i, k);
    return out;
}

std::size_t FeatureMaps::count_nonzero() const {
    return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](double v) { return v != 0.0; }));
}

StridedConvOp::StridedConvOp(LocalDictionary dict, std::size_t stride, Offset offset,
                             std::size_t image_h, std::size_t image_w)
    : dict_(std::move(dict)) {
    if (stride == 0 || stride > std::max(dict_.rows(), dict_.cols())) {
        throw UsageError("stride must satisfy 1 <= q <= filter side");
    }
    if (offset.row >= stride || offset.col >= stride) {
        throw UsageError("offset components must lie in [0, q)");
    }
    if (image_h == 0 || image_w == 0) throw UsageError("image dimensions must be positive");
    if (offset.row >= image_h || offset.col >= image_w) {
        throw UsageError("offset exceeds the image");
    }
    geom_ = kernels::Geometry{image_h,   image_w, dict_.rows(), dict_.cols(), dict_.num_atoms(),
                              stride,    offset.row, offset.col};
}

FeatureMaps StridedConvOp::zero_maps() const {
    return {geom_.num_atoms, geom_.lattice_h(), geom_.lattice_w(), geom_.stride, offset()};
}

void StridedConvOp::check_maps(const FeatureMaps& gamma) const {
    if (gamma.num_maps != geom_.num_atoms || gamma.lattice_h != geom_.lattice_h() ||
        gamma.lattice_w != geom_.lattice_w() || gamma.data.size() != geom_.num_atoms * geom_.sites() ||
        gamma.stride != geom_.stride || !(gamma.offset == offset())) {
        throw UsageError("feature maps do not match the operator");
    }
}

Image StridedConvOp::synthesize(const FeatureMaps& gamma) const {
    check_maps(gamma);
    Image out(geom_.image_h, geom_.image_w);
    kernels::parallel::synthesize(geom_, dict_.atoms(), gamma.data, out.data());
    if (!weights_.empty()) {
        for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= weights_.data()[i];
    }
    return out;
}

FeatureMaps StridedConvOp::analyze(const Image& img) const {
    if (img.height() != geom_.image_h || img.width() != geom_.image_w) {
        throw UsageError("image does not match the operator");
    }
    FeatureMaps out = zero_maps();
    if (weights_.empty()) {
        kernels::parallel::analyze(geom_, dict_.atoms(), img.data(), out.data);
    } else {
        Image weighted = img;
        for (std::size_t i = 0; i < weighted.size(); ++i) weighted.data()[i] *= weights_.data()[i];
        kernels::parallel::analyze(geom_, dict_.atoms(), weighted.data(), out.data);
    }
    return out;
}

StridedConvOp StridedConvOp::with_offset(Offset k) const {
    return {dict_, geom_.stride, k, geom_.image_h, geom_.image_w};
}

StridedConvOp StridedConvOp::with_pixel_weights(Image weights) const {
    if (!weights.empty() && (weights.height() != geom_.image_h || weights.width() != geom_.image_w)) {
        throw UsageError("pixel weights do not match the operator");
    }
    StridedConvOp out = *this;
    out.weights_ = std::move(weights);
    return out;
}

double dot(const FeatureMaps& a, const FeatureMaps& b) {
    if (a.data.size() != b.data.size()) throw UsageError("feature map sizes differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double dot(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw UsageError("image dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
    return acc;
}

double spectral_norm_sq(const StridedConvOp& op, PowerMethodOptions opts) {
    if (opts.iters == 0) throw UsageError("power method needs at least one iteration");
    FeatureMaps x = op.zero_maps();
    CounterRng rng(opts.seed, Stream::power_method);
    for (double& v : x.data) v = rng.normal();
    double nrm = std::sqrt(dot(x, x));
    for (double& v : x.data) v /= nrm;

    double estimate = 0.0;
    for (std::size_t it = 0; it < opts.iters; ++it) {
        FeatureMaps y = op.analyze(op.synthesize(x));
        const double rayleigh = dot(x, y);  // x has unit norm
        nrm = std::sqrt(dot(y, y));
        if (nrm == 0.0) return 0.0;
        for (std::size_t i = 0; i < y.data.size(); ++i) x.data[i] = y.data[i] / nrm;
        const double prev = estimate;
        estimate = rayleigh;
        if (it > 0 && std::abs(estimate - prev) <= opts.tol * std::abs(estimate)) break;
    }
    return estimate;
}

Image coverage_map(const StridedConvOp& op) {
    const auto& g = op.geometry();
    std::vector<double> ones_atom(g.signal_dim(), 1.0);
    kernels::Geometry single = g;
    single.num_atoms = 1;
    std::vector<double> ones_maps(g.sites(), 1.0);
    Image out(g.image_h, g.image_w);
    kernels::serial::synthesize(single, ones_atom, ones_maps, out.data());
    return out;
}

}  // namespace csc
