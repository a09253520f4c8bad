#pragma once

// Strided periodic convolution kernels. Two implementations share one contract:
// the serial reference (direct loops, kept for tests and benchmarks) and the
// OpenMP/GEMM path used by the operators.

#include <cstddef>
#include <span>

namespace csc::kernels {

struct Geometry {
    std::size_t image_h = 0;
    std::size_t image_w = 0;
    std::size_t filter_rows = 0;
    std::size_t filter_cols = 0;
    std::size_t num_atoms = 0;
    std::size_t stride = 1;
    std::size_t offset_row = 0;
    std::size_t offset_col = 0;

    std::size_t lattice_h() const { return (image_h - offset_row + stride - 1) / stride; }
    std::size_t lattice_w() const { return (image_w - offset_col + stride - 1) / stride; }
    std::size_t sites() const { return lattice_h() * lattice_w(); }
    std::size_t signal_dim() const { return filter_rows * filter_cols; }
    std::size_t pixels() const { return image_h * image_w; }
};

// atoms: signal_dim x num_atoms column-major; coeffs: num_atoms x sites, map-major;
// image: image_h x image_w row-major.
namespace serial {
void synthesize(const Geometry& g, std::span<const double> atoms, std::span<const double> coeffs,
                std::span<double> image);
void analyze(const Geometry& g, std::span<const double> atoms, std::span<const double> image,
             std::span<double> coeffs);
/// grad (signal_dim x num_atoms) += sum over sites of coeffs[:, s] (x) patch_s(image).
void filter_gradient(const Geometry& g, std::span<const double> image,
                     std::span<const double> coeffs, std::span<double> grad);
}  // namespace serial

namespace parallel {
void synthesize(const Geometry& g, std::span<const double> atoms, std::span<const double> coeffs,
                std::span<double> image);
void analyze(const Geometry& g, std::span<const double> atoms, std::span<const double> image,
             std::span<double> coeffs);
void filter_gradient(const Geometry& g, std::span<const double> image,
                     std::span<const double> coeffs, std::span<double> grad);
}  // namespace parallel

}  // namespace csc::kernels
