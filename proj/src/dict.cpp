#include "csc/dict.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "csc/errors.hpp"
#include "csc/feature_maps.hpp"

namespace csc {

namespace {

double norm2(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
}

}  // namespace

LocalDictionary::LocalDictionary(std::size_t patch_side, std::size_t num_atoms,
                                 std::vector<double> atoms, std::string provenance)
    : LocalDictionary(raw(patch_side, patch_side, num_atoms, std::move(atoms), std::move(provenance))) {
    for (std::size_t j = 0; j < num_atoms_; ++j) {
        auto a = atom(j);
        const double nrm = norm2(a);
        if (nrm == 0.0) throw UsageError("dictionary atom has zero norm");
        for (double& v : a) v /= nrm;
    }
}

LocalDictionary LocalDictionary::raw(std::size_t rows, std::size_t cols, std::size_t num_atoms,
                                     std::vector<double> atoms, std::string provenance) {
    if (rows == 0 || cols == 0 || num_atoms == 0) {
        throw UsageError("dictionary dimensions must be positive");
    }
    if (atoms.size() != rows * cols * num_atoms) {
        throw UsageError("dictionary atom matrix has the wrong size");
    }
    LocalDictionary d;
    d.rows_ = rows;
    d.cols_ = cols;
    d.num_atoms_ = num_atoms;
    d.atoms_ = std::move(atoms);
    d.provenance_ = std::move(provenance);
    return d;
}

std::size_t LocalDictionary::patch_side() const {
    if (rows_ != cols_) throw UsageError("dictionary filters are not square");
    return rows_;
}

LocalDictionary LocalDictionary::scaled(double s) const {
    LocalDictionary out = *this;
    for (double& v : out.atoms_) v *= s;
    return out;
}

bool LocalDictionary::has_unit_columns(double tol) const {
    for (std::size_t j = 0; j < num_atoms_; ++j) {
        if (std::abs(norm2(atom(j)) - 1.0) > tol) return false;
    }
    return true;
}

std::size_t twice_redundant_atoms_per_dim(std::size_t patch_side) {
    return static_cast<std::size_t>(std::ceil(std::numbers::sqrt2 * static_cast<double>(patch_side)));
}

LocalDictionary make_overcomplete_dct(std::size_t patch_side, std::size_t atoms_per_dim,
                                      DctOptions opts) {
    if (patch_side == 0) throw UsageError("patch_side must be positive");
    if (atoms_per_dim < patch_side) throw UsageError("atoms_per_dim must be >= patch_side");

    // 1D overcomplete DCT, patch_side x atoms_per_dim, column-major.
    std::vector<double> dct1(patch_side * atoms_per_dim);
    for (std::size_t k = 0; k < atoms_per_dim; ++k) {
        double* col = dct1.data() + k * patch_side;
        for (std::size_t x = 0; x < patch_side; ++x) {
            col[x] = std::cos(std::numbers::pi * static_cast<double>((2 * x + 1) * k) /
                              (2.0 * static_cast<double>(atoms_per_dim)));
        }
        if (k > 0 && opts.demean) {
            double mean = 0.0;
            for (std::size_t x = 0; x < patch_side; ++x) mean += col[x];
            mean /= static_cast<double>(patch_side);
            for (std::size_t x = 0; x < patch_side; ++x) col[x] -= mean;
        }
        const double nrm = norm2({col, patch_side});
        if (nrm < 1e-12) throw UsageError("degenerate DCT atom");
        for (std::size_t x = 0; x < patch_side; ++x) col[x] /= nrm;
    }

    const std::size_t n = patch_side * patch_side;
    const std::size_t m = atoms_per_dim * atoms_per_dim;
    std::vector<double> atoms(n * m);
    for (std::size_t kr = 0; kr < atoms_per_dim; ++kr) {
        for (std::size_t kc = 0; kc < atoms_per_dim; ++kc) {
            double* a = atoms.data() + (kr * atoms_per_dim + kc) * n;
            for (std::size_t xr = 0; xr < patch_side; ++xr) {
                for (std::size_t xc = 0; xc < patch_side; ++xc) {
                    a[xr * patch_side + xc] =
                        dct1[kr * patch_side + xr] * dct1[kc * patch_side + xc];
                }
            }
        }
    }
    std::string prov = "overcomplete-dct patch_side=" + std::to_string(patch_side) +
                       " atoms_per_dim=" + std::to_string(atoms_per_dim) +
                       " demean=" + (opts.demean ? "1" : "0");
    return LocalDictionary(patch_side, m, std::move(atoms), std::move(prov));
}

double mutual_coherence(const LocalDictionary& dict, std::size_t stride, bool shifts_2d) {
    const std::size_t rows = dict.rows();
    const std::size_t cols = dict.cols();
    if (stride == 0 || stride > std::max(rows, cols)) {
        throw UsageError("stride must be in [1, filter side]");
    }
    const std::size_t m = dict.num_atoms();
    std::vector<double> norms(m);
    for (std::size_t j = 0; j < m; ++j) norms[j] = norm2(dict.atom(j));

    const auto r_ext = static_cast<std::ptrdiff_t>(rows);
    const auto c_ext = static_cast<std::ptrdiff_t>(cols);
    const auto q = static_cast<std::ptrdiff_t>(stride);
    double best = 0.0;
    // Relative placements of atom j with respect to atom i; multiples of q only.
    for (std::ptrdiff_t ur = shifts_2d ? -((r_ext - 1) / q) * q : 0; ur < r_ext; ur += q) {
        if (!shifts_2d && ur != 0) break;
        for (std::ptrdiff_t uc = -((c_ext - 1) / q) * q; uc < c_ext; uc += q) {
            for (std::size_t i = 0; i < m; ++i) {
                const auto ai = dict.atom(i);
                for (std::size_t j = 0; j < m; ++j) {
                    if (i == j && ur == 0 && uc == 0) continue;
                    const auto aj = dict.atom(j);
                    double ip = 0.0;
                    for (std::ptrdiff_t r = std::max<std::ptrdiff_t>(0, ur);
                         r < std::min(r_ext, r_ext + ur); ++r) {
                        for (std::ptrdiff_t c = std::max<std::ptrdiff_t>(0, uc);
                             c < std::min(c_ext, c_ext + uc); ++c) {
                            ip += ai[static_cast<std::size_t>(r * c_ext + c)] *
                                  aj[static_cast<std::size_t>((r - ur) * c_ext + (c - uc))];
                        }
                    }
                    best = std::max(best, std::abs(ip) / (norms[i] * norms[j]));
                }
            }
        }
    }
    return std::min(best, 1.0);
}

std::size_t stripe_sparsity(const FeatureMaps& gamma, std::size_t image_h, std::size_t image_w,
                            std::size_t filter_rows, std::size_t filter_cols) {
    const std::size_t lh = gamma.lattice_h;
    const std::size_t lw = gamma.lattice_w;
    std::vector<std::size_t> nnz(lh * lw, 0);
    bool any = false;
    for (std::size_t j = 0; j < gamma.num_maps; ++j) {
        for (std::size_t s = 0; s < lh * lw; ++s) {
            if (gamma.map(j)[s] != 0.0) {
                ++nnz[s];
                any = true;
            }
        }
    }
    if (!any) return 0;

    // Window at pixel r intersects the slice at site row p iff (p - r) mod H lies in
    // [0, filter_rows) or the slice wraps onto the window from above.
    auto hits = [](std::size_t site_pos, std::size_t win_pos, std::size_t extent, std::size_t len) {
        const std::size_t d_fwd = (site_pos + extent - win_pos % extent) % extent;  // site - win
        const std::size_t d_bwd = (win_pos + extent - site_pos % extent) % extent;  // win - site
        return d_fwd < len || d_bwd < len;
    };

    std::size_t best = 0;
    for (std::size_t r = 0; r < image_h; ++r) {
        std::vector<std::size_t> rows_hit;
        for (std::size_t i = 0; i < lh; ++i) {
            if (hits(gamma.offset.row + gamma.stride * i, r, image_h, filter_rows)) rows_hit.push_back(i);
        }
        for (std::size_t c = 0; c < image_w; ++c) {
            std::size_t count = 0;
            for (std::size_t k = 0; k < lw; ++k) {
                if (!hits(gamma.offset.col + gamma.stride * k, c, image_w, filter_cols)) continue;
                for (std::size_t i : rows_hit) count += nnz[i * lw + k];
            }
            best = std::max(best, count);
        }
    }
    return best;
}

}  // namespace csc
