#pragma once

// Independent reference implementations used by the unit tests: dense
// materializations of the operators and plain Eigen solves.

#include <Eigen/Dense>
#include <cstdint>

#include "csc/convop.hpp"
#include "csc/dict.hpp"
#include "csc/feature_maps.hpp"
#include "csc/image.hpp"

namespace oracle {

/// Dense D_k (pixels x coefficients), column (j, i, k) holds atom j with its top-left
/// corner at (off_r + q i, off_c + q k) wrapped modulo the image size. Pixel weights of
/// the operator, if any, scale the rows.
Eigen::MatrixXd dense_operator(const csc::StridedConvOp& op);

Eigen::VectorXd vec(const csc::FeatureMaps& g);
Eigen::VectorXd vec(const csc::Image& img);
csc::FeatureMaps maps_from(const csc::StridedConvOp& op, const Eigen::VectorXd& v);

/// Largest eigenvalue of the symmetric matrix m.
double max_eigenvalue(const Eigen::MatrixXd& m);

/// Long-run proximal gradient on the dense problem 1/2||D x - y||^2 + lambda ||x||_1.
Eigen::VectorXd dense_ista(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, double lambda,
                           std::size_t iters);

double dense_objective(const Eigen::MatrixXd& d, const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                       double lambda);

/// Gaussian atoms (not normalized), deterministic in seed.
csc::LocalDictionary random_dictionary(std::size_t rows, std::size_t cols, std::size_t m,
                                       std::uint64_t seed, bool unit_columns = true);
csc::FeatureMaps random_maps(const csc::StridedConvOp& op, std::uint64_t seed, double density = 1.0);
csc::Image random_image(std::size_t h, std::size_t w, std::uint64_t seed, double scale = 1.0);

double max_abs_diff(const csc::Image& a, const csc::Image& b);
double max_abs_diff(const csc::FeatureMaps& a, const csc::FeatureMaps& b);

}  // namespace oracle
