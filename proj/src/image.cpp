#include "csc/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "csc/errors.hpp"
#include "csc/rng.hpp"

namespace csc {

Image::Image(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {
    if (height == 0 || width == 0) throw UsageError("image dimensions must be positive");
}

Image::Image(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
    if (height == 0 || width == 0) throw UsageError("image dimensions must be positive");
    if (data_.size() != height * width) throw UsageError("image data length != height * width");
}

namespace {

std::size_t wrap(std::size_t v, std::size_t n) { return v % n; }

void check_window(const Image& img, PatchIndex idx, Boundary boundary) {
    if (idx.size == 0) throw UsageError("patch size must be positive");
    if (boundary == Boundary::clamped &&
        (idx.row + idx.size > img.height() || idx.col + idx.size > img.width())) {
        throw UsageError("patch window exceeds the image");
    }
}

}  // namespace

std::vector<double> extract_patch(const Image& img, PatchIndex idx, Boundary boundary) {
    check_window(img, idx, boundary);
    std::vector<double> out(idx.size * idx.size);
    for (std::size_t r = 0; r < idx.size; ++r) {
        const std::size_t rr = wrap(idx.row + r, img.height());
        for (std::size_t c = 0; c < idx.size; ++c) {
            out[r * idx.size + c] = img(rr, wrap(idx.col + c, img.width()));
        }
    }
    return out;
}

void place_patch_accumulate(Image& img, Image& weights, PatchIndex idx,
                            std::span<const double> patch, Boundary boundary) {
    if (!img.same_shape(weights)) throw UsageError("accumulator shapes differ");
    check_window(img, idx, boundary);
    if (patch.size() != idx.size * idx.size) throw UsageError("patch length != size^2");
    for (std::size_t r = 0; r < idx.size; ++r) {
        const std::size_t rr = wrap(idx.row + r, img.height());
        for (std::size_t c = 0; c < idx.size; ++c) {
            const std::size_t cc = wrap(idx.col + c, img.width());
            img(rr, cc) += patch[r * idx.size + c];
            weights(rr, cc) += 1.0;
        }
    }
}

Image normalize_by_weights(const Image& img, const Image& weights) {
    if (!img.same_shape(weights)) throw UsageError("accumulator shapes differ");
    Image out(img.height(), img.width());
    for (std::size_t i = 0; i < img.size(); ++i) {
        const double w = weights.data()[i];
        out.data()[i] = w > 0.0 ? img.data()[i] / w : 0.0;
    }
    return out;
}

Image add_gaussian_noise(const Image& img, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw UsageError("sigma must be non-negative");
    Image out = img;
    if (sigma == 0.0) return out;
    CounterRng rng(seed, Stream::noise);
    for (double& v : out.data()) v += sigma * rng.normal();
    return out;
}

double mse(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw UsageError("image dimensions differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.data()[i] - b.data()[i];
        acc += d * d;
    }
    return acc / static_cast<double>(a.size());
}

double psnr(const Image& ref, const Image& est, double peak) {
    const double err = mse(ref, est);
    if (err == 0.0) return kPsnrInfinite;
    return 10.0 * std::log10(peak * peak / err);
}

double psnr_clamped(const Image& ref, const Image& est, double peak) {
    return psnr(ref, clamp(est, 0.0, peak), peak);
}

Image clamp(const Image& img, double lo, double hi) {
    Image out = img;
    for (double& v : out.data()) v = std::clamp(v, lo, hi);
    return out;
}

Image circular_shift(const Image& img, std::ptrdiff_t dr, std::ptrdiff_t dc) {
    const auto h = static_cast<std::ptrdiff_t>(img.height());
    const auto w = static_cast<std::ptrdiff_t>(img.width());
    Image out(img.height(), img.width());
    for (std::ptrdiff_t r = 0; r < h; ++r) {
        const auto rr = static_cast<std::size_t>(((r + dr) % h + h) % h);
        for (std::ptrdiff_t c = 0; c < w; ++c) {
            const auto cc = static_cast<std::size_t>(((c + dc) % w + w) % w);
            out(rr, cc) = img(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
        }
    }
    return out;
}

Image crop(const Image& img, std::size_t top, std::size_t left, std::size_t height,
           std::size_t width) {
    if (top + height > img.height() || left + width > img.width()) {
        throw UsageError("crop window exceeds the image");
    }
    Image out(height, width);
    for (std::size_t r = 0; r < height; ++r) {
        std::copy_n(img.data().begin() + static_cast<std::ptrdiff_t>((top + r) * img.width() + left),
                    width, out.data().begin() + static_cast<std::ptrdiff_t>(r * width));
    }
    return out;
}

double sample_mean(const Image& img) {
    double acc = 0.0;
    for (double v : img.data()) acc += v;
    return acc / static_cast<double>(img.size());
}

double sample_std(const Image& img) {
    const double mean = sample_mean(img);
    double acc = 0.0;
    for (double v : img.data()) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(img.size()));
}

namespace {

void pairwise_sum(std::span<const Image> images, std::vector<double>& out) {
    if (images.size() == 1) {
        out.assign(images[0].data().begin(), images[0].data().end());
        return;
    }
    const std::size_t half = images.size() / 2;
    std::vector<double> right;
    pairwise_sum(images.first(half), out);
    pairwise_sum(images.subspan(half), right);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += right[i];
}

}  // namespace

Image pairwise_mean(std::span<const Image> images) {
    if (images.empty()) throw UsageError("cannot average zero images");
    for (const Image& im : images) {
        if (!im.same_shape(images[0])) throw UsageError("image dimensions differ");
    }
    std::vector<double> sum;
    pairwise_sum(images, sum);
    const double inv = 1.0 / static_cast<double>(images.size());
    for (double& v : sum) v *= inv;
    return Image(images[0].height(), images[0].width(), std::move(sum));
}

}  // namespace csc
