#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "csc/convop.hpp"

namespace csc {

enum class Acceleration { ista, fista };

struct PursuitConfig {
    double lambda = 0.0;
    std::size_t max_iters = 400;
    double rel_tol = 1e-5;
    double step_c = 1.0;  // must dominate sigma_max(D^T D)
    Acceleration acceleration = Acceleration::ista;

    void validate() const;
};

enum class PursuitStatus {
    converged,           // relative change fell below rel_tol
    iteration_budget,    // max_iters reached
    zero_feasible,       // error bound already met by the zero solution
    bisection_budget,    // lambda search ran out of steps; best feasible returned
    infeasible,          // no lambda in the search range met the error bound
};

std::string to_string(PursuitStatus s);

struct PursuitResult {
    FeatureMaps gamma;
    std::vector<double> objective_trace;  // objective at every iterate, starting with gamma0
    std::size_t iters_used = 0;
    double residual_norm = 0.0;  // ||D gamma - y||
    double lambda = 0.0;
    PursuitStatus status = PursuitStatus::iteration_budget;
    std::size_t lambda_steps = 0;  // inner solves performed by bp_error_bounded
};

double soft_threshold(double y, double tau);
void soft_threshold_inplace(std::span<double> v, double tau);
/// Per-map thresholds: tau[j] applies to map j.
void soft_threshold_inplace(FeatureMaps& gamma, std::span<const double> tau);

/// 1/2 ||D gamma - y||^2 + lambda ||gamma||_1
double objective(const StridedConvOp& op, const Image& y, const FeatureMaps& gamma, double lambda);

/// Proximal gradient for the Lagrangian basis pursuit:
/// gamma <- S_{lambda/c}(gamma + (1/c) D^T (y - D gamma)).
PursuitResult ista_solve(const StridedConvOp& op, const Image& y, const PursuitConfig& cfg,
                         const FeatureMaps& gamma0);

struct BisectionOptions {
    double initial_fraction = 0.1;  // lambda_0 = fraction * ||D^T y||_inf
    double expand_factor = 2.0;
    std::size_t max_expansions = 60;
    std::size_t max_bisections = 30;
    double lower_ratio = 0.95;  // accept residual in [lower_ratio * eps, eps]
};

/// Error-bounded basis pursuit, min ||gamma||_1 s.t. ||D gamma - y|| <= eps, solved by
/// a geometric search on lambda with warm-started ista_solve. Returns the feasible
/// solution with the largest lambda found.
PursuitResult bp_error_bounded(const StridedConvOp& op, const Image& y, double epsilon,
                               const PursuitConfig& cfg, const BisectionOptions& bisect = {});

// Run close to convergence: a loose tolerance makes the refit depend on where CG
// happened to stop, which breaks shift equivariance at the 1e-7 level.
struct DebiasOptions {
    std::size_t cg_iters = 500;
    double cg_tol = 1e-13;
};

/// Least-squares refit of the coefficients on supp(gamma) by conjugate gradient on the
/// support-restricted normal equations. Zeros stay zero.
FeatureMaps debias(const StridedConvOp& op, const Image& y, const FeatureMaps& gamma,
                   const DebiasOptions& opts = {});

}  // namespace csc
