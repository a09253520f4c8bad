#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace csc {

/// Grayscale raster, row-major, intensities on the nominal [0, 255] scale.
class Image {
public:
    Image() = default;
    Image(std::size_t height, std::size_t width, double fill = 0.0);
    Image(std::size_t height, std::size_t width, std::vector<double> data);

    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * width_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * width_ + c]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }
    std::vector<double>& storage() { return data_; }
    const std::vector<double>& storage() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<double> data_;
};

enum class Boundary { periodic, clamped };

struct PatchIndex {
    std::size_t row = 0;
    std::size_t col = 0;
    std::size_t size = 1;
};

/// Row-major vectorization of the size x size window at idx.
std::vector<double> extract_patch(const Image& img, PatchIndex idx, Boundary boundary);

/// Adds patch into img over the window and bumps weights by one there.
void place_patch_accumulate(Image& img, Image& weights, PatchIndex idx,
                            std::span<const double> patch, Boundary boundary);

/// img / weights, pixel-wise; pixels with zero weight stay zero.
Image normalize_by_weights(const Image& img, const Image& weights);

Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed);

inline constexpr double kPsnrInfinite = std::numeric_limits<double>::infinity();

double mse(const Image& a, const Image& b);
/// 10 log10(peak^2 / MSE); kPsnrInfinite when the images agree exactly.
double psnr(const Image& ref, const Image& est, double peak = 255.0);
/// PSNR after clamping est to [0, peak].
double psnr_clamped(const Image& ref, const Image& est, double peak = 255.0);

Image clamp(const Image& img, double lo = 0.0, double hi = 255.0);
Image circular_shift(const Image& img, std::ptrdiff_t dr, std::ptrdiff_t dc);
Image crop(const Image& img, std::size_t top, std::size_t left, std::size_t height,
           std::size_t width);

double sample_mean(const Image& img);
double sample_std(const Image& img);

/// Uniform mean of equally shaped images, combined by pairwise summation so the
/// result does not depend on how the inputs were produced.
Image pairwise_mean(std::span<const Image> images);

}  // namespace csc
