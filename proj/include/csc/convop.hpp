#pragma once

#include <cstddef>
#include <cstdint>

#include "csc/dict.hpp"
#include "csc/feature_maps.hpp"
#include "csc/image.hpp"
#include "csc/kernels.hpp"

namespace csc {

/// Global strided dictionary D_k: every atom of a local dictionary placed on the
/// lattice {offset + stride * (i, k)} of an image with periodic wraparound.
class StridedConvOp {
public:
    StridedConvOp(LocalDictionary dict, std::size_t stride, Offset offset, std::size_t image_h,
                  std::size_t image_w);

    const LocalDictionary& dictionary() const { return dict_; }
    std::size_t stride() const { return geom_.stride; }
    Offset offset() const { return {geom_.offset_row, geom_.offset_col}; }
    std::size_t image_h() const { return geom_.image_h; }
    std::size_t image_w() const { return geom_.image_w; }
    std::size_t lattice_h() const { return geom_.lattice_h(); }
    std::size_t lattice_w() const { return geom_.lattice_w(); }
    const kernels::Geometry& geometry() const { return geom_; }

    FeatureMaps zero_maps() const;
    Image zero_image() const { return Image(geom_.image_h, geom_.image_w); }

    /// D Gamma: sum of slices D_L * needle placed at each lattice site.
    Image synthesize(const FeatureMaps& gamma) const;
    /// D^T X: needle D_L^T * patch at every lattice site. Exact adjoint of synthesize.
    FeatureMaps analyze(const Image& img) const;

    /// Same operator with a different offset (pixel weights are dropped).
    StridedConvOp with_offset(Offset k) const;

    /// W D: synthesis followed by a pixel-wise weight; analysis applies W first so the
    /// pair stays adjoint. An empty image removes the weighting.
    StridedConvOp with_pixel_weights(Image weights) const;
    const Image& pixel_weights() const { return weights_; }

private:
    void check_maps(const FeatureMaps& gamma) const;

    LocalDictionary dict_;
    kernels::Geometry geom_;
    Image weights_;
};

struct PowerMethodOptions {
    std::size_t iters = 100;
    double tol = 1e-9;
    std::uint64_t seed = 0;
};

/// sigma_max(D^T D) by power iteration on analyze(synthesize(.)).
double spectral_norm_sq(const StridedConvOp& op, PowerMethodOptions opts = {});

/// Step constant used by ISTA: spectral_norm_sq inflated by 1%.
inline constexpr double kStepInflation = 1.01;

/// Number of slices covering each pixel.
Image coverage_map(const StridedConvOp& op);

double dot(const FeatureMaps& a, const FeatureMaps& b);
double dot(const Image& a, const Image& b);

}  // namespace csc
