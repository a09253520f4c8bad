#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace csc {

struct FeatureMaps;

/// Local dictionary: n x m matrix of vectorized filters, stored column-major by atom
/// (atom j occupies atoms[j*n .. j*n + n)). Filters are rows x cols, row-major.
class LocalDictionary {
public:
    LocalDictionary() = default;
    /// Square patch_side x patch_side filters; columns are normalized to unit norm.
    LocalDictionary(std::size_t patch_side, std::size_t num_atoms, std::vector<double> atoms,
                    std::string provenance = {});
    /// Rectangular filters (rows == 1 describes a 1D dictionary). No normalization.
    static LocalDictionary raw(std::size_t rows, std::size_t cols, std::size_t num_atoms,
                               std::vector<double> atoms, std::string provenance = {});

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    /// Throws if the filters are not square.
    std::size_t patch_side() const;
    std::size_t signal_dim() const { return rows_ * cols_; }
    std::size_t num_atoms() const { return num_atoms_; }

    std::span<const double> atom(std::size_t j) const {
        return {atoms_.data() + j * signal_dim(), signal_dim()};
    }
    std::span<double> atom(std::size_t j) { return {atoms_.data() + j * signal_dim(), signal_dim()}; }
    const std::vector<double>& atoms() const { return atoms_; }
    std::vector<double>& atoms() { return atoms_; }
    const std::string& provenance() const { return provenance_; }

    /// Copy with every atom multiplied by s.
    LocalDictionary scaled(double s) const;
    bool has_unit_columns(double tol = 1e-12) const;

    friend bool operator==(const LocalDictionary&, const LocalDictionary&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t num_atoms_ = 0;
    std::vector<double> atoms_;
    std::string provenance_;
};

struct DctOptions {
    // Subtract the mean from every non-DC 1D atom before normalizing.
    bool demean = true;
};

/// Separable overcomplete 2D-DCT: Kronecker product of a patch_side x atoms_per_dim
/// 1D overcomplete DCT with itself. Atom index is k_row * atoms_per_dim + k_col.
LocalDictionary make_overcomplete_dct(std::size_t patch_side, std::size_t atoms_per_dim,
                                      DctOptions opts = {});

/// atoms_per_dim giving roughly twice the patch dimension: ceil(sqrt(2) * patch_side).
std::size_t twice_redundant_atoms_per_dim(std::size_t patch_side);

/// Mutual coherence of the global dictionary generated by placing every atom on a
/// stride-q lattice: max |<d_i shifted by u, d_j shifted by v>| / (|d_i||d_j|) over
/// distinct (atom, placement) pairs. With shifts_2d false only horizontal
/// offsets are enumerated.
double mutual_coherence(const LocalDictionary& dict, std::size_t stride, bool shifts_2d = true);

/// ||Gamma||_{0,inf}: max over patch windows of the number of nonzero coefficients in
/// needles whose slices intersect that window (periodic boundary).
std::size_t stripe_sparsity(const FeatureMaps& gamma, std::size_t image_h, std::size_t image_w,
                            std::size_t filter_rows, std::size_t filter_cols);

}  // namespace csc
