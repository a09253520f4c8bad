#include <Eigen/Core>
#include <vector>

#include "csc/kernels.hpp"

namespace csc::kernels::parallel {

namespace {

using ColMatrix = Eigen::MatrixXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// n x sites matrix whose column s is the vectorized patch under lattice site s.
ColMatrix im2col(const Geometry& g, std::span<const double> image) {
    const std::size_t n = g.signal_dim();
    const std::size_t lw = g.lattice_w();
    const auto sites = static_cast<std::ptrdiff_t>(g.sites());
    ColMatrix patches(static_cast<Eigen::Index>(n), sites);
#pragma omp parallel for schedule(static) if (sites > 64)
    for (std::ptrdiff_t s = 0; s < sites; ++s) {
        const std::size_t pr = g.offset_row + g.stride * (static_cast<std::size_t>(s) / lw);
        const std::size_t pc = g.offset_col + g.stride * (static_cast<std::size_t>(s) % lw);
        double* col = patches.data() + s * static_cast<std::ptrdiff_t>(n);
        for (std::size_t dr = 0; dr < g.filter_rows; ++dr) {
            const double* row = image.data() + ((pr + dr) % g.image_h) * g.image_w;
            for (std::size_t dc = 0; dc < g.filter_cols; ++dc) {
                col[dr * g.filter_cols + dc] = row[(pc + dc) % g.image_w];
            }
        }
    }
    return patches;
}

// For every pixel coordinate along one axis: the (filter tap, lattice index) pairs
// whose slice lands on it.
std::vector<std::vector<std::pair<std::size_t, std::size_t>>> contributors(
    std::size_t extent, std::size_t taps, std::size_t stride, std::size_t offset,
    std::size_t lattice) {
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> out(extent);
    for (std::size_t i = 0; i < lattice; ++i) {
        const std::size_t p = offset + stride * i;
        for (std::size_t d = 0; d < taps; ++d) out[(p + d) % extent].emplace_back(d, i);
    }
    return out;
}

}  // namespace

void synthesize(const Geometry& g, std::span<const double> atoms, std::span<const double> coeffs,
                std::span<double> image) {
    const auto n = static_cast<Eigen::Index>(g.signal_dim());
    const auto m = static_cast<Eigen::Index>(g.num_atoms);
    const auto sites = static_cast<Eigen::Index>(g.sites());
    Eigen::Map<const ColMatrix> dict(atoms.data(), n, m);
    Eigen::Map<const RowMatrix> gamma(coeffs.data(), m, sites);
    const ColMatrix slices = dict * gamma;

    const std::size_t lw = g.lattice_w();
    const auto rows = contributors(g.image_h, g.filter_rows, g.stride, g.offset_row, g.lattice_h());
    const auto cols = contributors(g.image_w, g.filter_cols, g.stride, g.offset_col, lw);
    const auto height = static_cast<std::ptrdiff_t>(g.image_h);
#pragma omp parallel for schedule(static) if (height > 16)
    for (std::ptrdiff_t r = 0; r < height; ++r) {
        const auto& row_taps = rows[static_cast<std::size_t>(r)];
        double* out = image.data() + static_cast<std::size_t>(r) * g.image_w;
        for (std::size_t c = 0; c < g.image_w; ++c) {
            double acc = 0.0;
            for (const auto& [dr, i] : row_taps) {
                for (const auto& [dc, k] : cols[c]) {
                    acc += slices(static_cast<Eigen::Index>(dr * g.filter_cols + dc),
                                  static_cast<Eigen::Index>(i * lw + k));
                }
            }
            out[c] = acc;
        }
    }
}

void analyze(const Geometry& g, std::span<const double> atoms, std::span<const double> image,
             std::span<double> coeffs) {
    const auto n = static_cast<Eigen::Index>(g.signal_dim());
    const auto m = static_cast<Eigen::Index>(g.num_atoms);
    const auto sites = static_cast<Eigen::Index>(g.sites());
    Eigen::Map<const ColMatrix> dict(atoms.data(), n, m);
    Eigen::Map<RowMatrix> gamma(coeffs.data(), m, sites);
    const ColMatrix patches = im2col(g, image);
    gamma.noalias() = dict.transpose() * patches;
}

void filter_gradient(const Geometry& g, std::span<const double> image,
                     std::span<const double> coeffs, std::span<double> grad) {
    const auto n = static_cast<Eigen::Index>(g.signal_dim());
    const auto m = static_cast<Eigen::Index>(g.num_atoms);
    const auto sites = static_cast<Eigen::Index>(g.sites());
    Eigen::Map<ColMatrix> out(grad.data(), n, m);
    Eigen::Map<const RowMatrix> gamma(coeffs.data(), m, sites);
    const ColMatrix patches = im2col(g, image);
    out.noalias() += patches * gamma.transpose();
}

}  // namespace csc::kernels::parallel
