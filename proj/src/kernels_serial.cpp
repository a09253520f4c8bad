#include <algorithm>

#include "csc/kernels.hpp"

namespace csc::kernels::serial {

void synthesize(const Geometry& g, std::span<const double> atoms, std::span<const double> coeffs,
                std::span<double> image) {
    std::fill(image.begin(), image.end(), 0.0);
    const std::size_t n = g.signal_dim();
    const std::size_t lh = g.lattice_h();
    const std::size_t lw = g.lattice_w();
    for (std::size_t j = 0; j < g.num_atoms; ++j) {
        const double* atom = atoms.data() + j * n;
        for (std::size_t i = 0; i < lh; ++i) {
            for (std::size_t k = 0; k < lw; ++k) {
                const double coef = coeffs[(j * lh + i) * lw + k];
                if (coef == 0.0) continue;
                const std::size_t pr = g.offset_row + g.stride * i;
                const std::size_t pc = g.offset_col + g.stride * k;
                for (std::size_t dr = 0; dr < g.filter_rows; ++dr) {
                    const std::size_t r = (pr + dr) % g.image_h;
                    for (std::size_t dc = 0; dc < g.filter_cols; ++dc) {
                        image[r * g.image_w + (pc + dc) % g.image_w] +=
                            coef * atom[dr * g.filter_cols + dc];
                    }
                }
            }
        }
    }
}

void analyze(const Geometry& g, std::span<const double> atoms, std::span<const double> image,
             std::span<double> coeffs) {
    const std::size_t n = g.signal_dim();
    const std::size_t lh = g.lattice_h();
    const std::size_t lw = g.lattice_w();
    for (std::size_t j = 0; j < g.num_atoms; ++j) {
        const double* atom = atoms.data() + j * n;
        for (std::size_t i = 0; i < lh; ++i) {
            for (std::size_t k = 0; k < lw; ++k) {
                const std::size_t pr = g.offset_row + g.stride * i;
                const std::size_t pc = g.offset_col + g.stride * k;
                double acc = 0.0;
                for (std::size_t dr = 0; dr < g.filter_rows; ++dr) {
                    const std::size_t r = (pr + dr) % g.image_h;
                    for (std::size_t dc = 0; dc < g.filter_cols; ++dc) {
                        acc += atom[dr * g.filter_cols + dc] *
                               image[r * g.image_w + (pc + dc) % g.image_w];
                    }
                }
                coeffs[(j * lh + i) * lw + k] = acc;
            }
        }
    }
}

void filter_gradient(const Geometry& g, std::span<const double> image,
                     std::span<const double> coeffs, std::span<double> grad) {
    const std::size_t n = g.signal_dim();
    const std::size_t lh = g.lattice_h();
    const std::size_t lw = g.lattice_w();
    for (std::size_t j = 0; j < g.num_atoms; ++j) {
        double* gj = grad.data() + j * n;
        for (std::size_t i = 0; i < lh; ++i) {
            for (std::size_t k = 0; k < lw; ++k) {
                const double coef = coeffs[(j * lh + i) * lw + k];
                if (coef == 0.0) continue;
                const std::size_t pr = g.offset_row + g.stride * i;
                const std::size_t pc = g.offset_col + g.stride * k;
                for (std::size_t dr = 0; dr < g.filter_rows; ++dr) {
                    const std::size_t r = (pr + dr) % g.image_h;
                    for (std::size_t dc = 0; dc < g.filter_cols; ++dc) {
                        gj[dr * g.filter_cols + dc] +=
                            coef * image[r * g.image_w + (pc + dc) % g.image_w];
                    }
                }
            }
        }
    }
}

}  // namespace csc::kernels::serial
