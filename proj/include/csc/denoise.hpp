#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csc/convop.hpp"
#include "csc/pursuit.hpp"

namespace csc {

enum class PursuitMode {
    error_bounded,  // lambda chosen so that the residual meets eps = C * sigma * sqrt(dim)
    lagrangian,     // fixed lambda from the pursuit config
};

struct DenoiseConfig {
    PursuitConfig pursuit;  // lambda is ignored in error_bounded mode
    PursuitMode mode = PursuitMode::error_bounded;
    // The C in eps = C * sigma * sqrt(dim). Debiasing pulls the residual back under the
    // noise level, so the bound is set somewhat above sigma * sqrt(dim).
    double epsilon_factor = 1.25;
    bool debias = true;
    DebiasOptions debias_opts;
    BisectionOptions bisection;
    PowerMethodOptions power;
    // Strided CSC only: the operator of every offset is W D_k with W = coverage^-power,
    // so overlapping slices are averaged rather than summed. 0 disables the weighting.
    double coverage_power = 1.0;
    // Fixed ISTA step constant; by default the power method estimate of every operator.
    std::optional<double> step_c;
    // Patch averaging only: wrap windows around the border instead of interior windows.
    bool periodic_patches = false;
};

struct DenoiseReport {
    Image estimate;
    std::optional<double> psnr_vs_clean;
    std::optional<double> psnr_clamped_vs_clean;
    std::vector<double> per_shift_psnr;
    std::vector<Image> per_shift_estimates;
    std::map<std::string, std::string> config_echo;
};

/// Patch averaging: independent pursuit per unit-stride patch, overlaps averaged.
DenoiseReport denoise_pa(const Image& y, const LocalDictionary& dict, double sigma,
                         const DenoiseConfig& cfg, const Image* clean = nullptr);

/// Strided-CSC MMSE approximation: one global pursuit per lattice offset, estimates
/// averaged uniformly over the q^2 offsets.
DenoiseReport denoise_strided_csc(const Image& y, const LocalDictionary& dict, double sigma,
                                  std::size_t stride, const DenoiseConfig& cfg,
                                  const Image* clean = nullptr);

}  // namespace csc
