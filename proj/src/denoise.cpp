#include "csc/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "csc/errors.hpp"
#include "csc/parallel.hpp"

namespace csc {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

double norm(const Image& img) {
    double acc = 0.0;
    for (double v : img.data()) acc += v * v;
    return std::sqrt(acc);
}

std::map<std::string, std::string> echo(const DenoiseConfig& cfg, const LocalDictionary& dict,
                                        double sigma) {
    std::map<std::string, std::string> e;
    e["sigma"] = num(sigma);
    e["mode"] = cfg.mode == PursuitMode::error_bounded ? "error_bounded" : "lagrangian";
    e["epsilon_factor"] = num(cfg.epsilon_factor);
    e["lambda"] = num(cfg.pursuit.lambda);
    e["max_iters"] = std::to_string(cfg.pursuit.max_iters);
    e["rel_tol"] = num(cfg.pursuit.rel_tol);
    e["acceleration"] = cfg.pursuit.acceleration == Acceleration::ista ? "ista" : "fista";
    e["debias"] = cfg.debias ? "1" : "0";
    e["cg_iters"] = std::to_string(cfg.debias_opts.cg_iters);
    e["cg_tol"] = num(cfg.debias_opts.cg_tol);
    e["bisection_max"] = std::to_string(cfg.bisection.max_bisections);
    e["power_iters"] = std::to_string(cfg.power.iters);
    e["power_tol"] = num(cfg.power.tol);
    e["dictionary"] = dict.provenance();
    e["coverage_power"] = num(cfg.coverage_power);
    e["num_atoms"] = std::to_string(dict.num_atoms());
    e["psnr"] = "unclamped (primary) and clamped to [0,255]";
    return e;
}

// Error bound for a signal of dimension dim. A zero noise level still needs a
// positive bound; a tiny multiple of the signal norm asks for near-exact fit.
double error_bound(const DenoiseConfig& cfg, double sigma, std::size_t dim, const Image& y) {
    const double eps = cfg.epsilon_factor * sigma * std::sqrt(static_cast<double>(dim));
    return eps > 0.0 ? eps : 1e-10 * norm(y);
}

// Pursuit, optional debias, and synthesis for one operator.
struct CodeResult {
    Image estimate;
    PursuitResult pursuit;
};

// fit_dim: number of pixels the operator can reach (the error bound is set over those).
CodeResult code_and_synthesize(const StridedConvOp& op, const Image& y, double sigma,
                               const DenoiseConfig& cfg, double step_c, std::size_t fit_dim = 0) {
    PursuitConfig pc = cfg.pursuit;
    pc.step_c = step_c;
    CodeResult out;
    if (cfg.mode == PursuitMode::error_bounded) {
        const double eps = error_bound(cfg, sigma, fit_dim ? fit_dim : y.size(), y);
        if (eps == 0.0) {  // zero signal
            out.pursuit.gamma = op.zero_maps();
            out.pursuit.status = PursuitStatus::zero_feasible;
        } else {
            out.pursuit = bp_error_bounded(op, y, eps, pc, cfg.bisection);
        }
    } else {
        out.pursuit = ista_solve(op, y, pc, op.zero_maps());
    }
    if (cfg.debias) out.pursuit.gamma = debias(op, y, out.pursuit.gamma, cfg.debias_opts);
    out.estimate = op.synthesize(out.pursuit.gamma);
    return out;
}

}  // namespace

DenoiseReport denoise_pa(const Image& y, const LocalDictionary& dict, double sigma,
                         const DenoiseConfig& cfg, const Image* clean) {
    if (!(sigma >= 0.0)) throw UsageError("sigma must be non-negative");
    const std::size_t side = dict.patch_side();
    if (y.height() < side || y.width() < side) throw UsageError("image is smaller than the patch");
    if (clean && !clean->same_shape(y)) throw UsageError("clean image dimensions differ");

    const Boundary boundary = cfg.periodic_patches ? Boundary::periodic : Boundary::clamped;
    const std::size_t rows = cfg.periodic_patches ? y.height() : y.height() - side + 1;
    const std::size_t cols = cfg.periodic_patches ? y.width() : y.width() - side + 1;
    const StridedConvOp patch_op(dict, side, {0, 0}, side, side);
    const double step_c = cfg.step_c ? *cfg.step_c : kStepInflation * spectral_norm_sq(patch_op, cfg.power);

    std::vector<std::vector<double>> estimates(rows * cols);
    parallel_for(rows * cols, 16, [&](std::size_t idx) {
        const PatchIndex at{idx / cols, idx % cols, side};
        Image patch(side, side, extract_patch(y, at, boundary));
        CodeResult r = code_and_synthesize(patch_op, patch, sigma, cfg, step_c);
        estimates[idx] = std::move(r.estimate.storage());
    });

    Image acc(y.height(), y.width());
    Image weights(y.height(), y.width());
    for (std::size_t idx = 0; idx < estimates.size(); ++idx) {
        place_patch_accumulate(acc, weights, {idx / cols, idx % cols, side}, estimates[idx], boundary);
    }

    DenoiseReport rep;
    rep.estimate = normalize_by_weights(acc, weights);
    rep.config_echo = echo(cfg, dict, sigma);
    rep.config_echo["method"] = "pa";
    rep.config_echo["patch_boundary"] = cfg.periodic_patches ? "periodic" : "clamped";
    rep.config_echo["step_c"] = num(step_c);
    if (clean) {
        rep.psnr_vs_clean = psnr(*clean, rep.estimate);
        rep.psnr_clamped_vs_clean = psnr_clamped(*clean, rep.estimate);
    }
    return rep;
}

namespace {

// Uncovered pixels (stride not dividing the image) get weight 0.
Image inverse_coverage(const Image& cover, double power) {
    Image w = cover;
    for (double& v : w.data()) v = v > 0.0 ? std::pow(v, -power) : 0.0;
    return w;
}

}  // namespace

DenoiseReport denoise_strided_csc(const Image& y, const LocalDictionary& dict, double sigma,
                                  std::size_t stride, const DenoiseConfig& cfg, const Image* clean) {
    if (!(sigma >= 0.0)) throw UsageError("sigma must be non-negative");
    const std::size_t side = std::max(dict.rows(), dict.cols());
    if (stride == 0 || stride > side) throw UsageError("stride must satisfy 1 <= q <= patch side");
    if (clean && !clean->same_shape(y)) throw UsageError("clean image dimensions differ");

    const StridedConvOp base(dict, stride, {0, 0}, y.height(), y.width());
    auto weighted = [&](const StridedConvOp& op) {
        if (cfg.coverage_power == 0.0) return op;
        return op.with_pixel_weights(inverse_coverage(coverage_map(op), cfg.coverage_power));
    };
    // Under periodic boundary the offsets are translates of each other when the stride
    // divides both image dimensions, so one spectral estimate serves all of them.
    const bool translates = y.height() % stride == 0 && y.width() % stride == 0;
    double shared_c = 0.0;
    if (cfg.step_c) {
        shared_c = *cfg.step_c;
    } else if (translates) {
        shared_c = kStepInflation * spectral_norm_sq(weighted(base), cfg.power);
    }

    std::vector<Offset> offsets;
    for (std::size_t kr = 0; kr < stride; ++kr) {
        for (std::size_t kc = 0; kc < stride; ++kc) offsets.push_back({kr, kc});
    }
    std::vector<Image> shift_estimates(offsets.size());
    std::vector<PursuitStatus> statuses(offsets.size());
    // Pixels an offset cannot reach are left out of its fit (and are 0 in its estimate).
    std::vector<Image> reach(offsets.size());
    parallel_for(offsets.size(), 1, [&](std::size_t i) {
        const StridedConvOp plain = base.with_offset(offsets[i]);
        Image mask = coverage_map(plain);
        std::size_t covered = 0;
        for (double& v : mask.data()) {
            v = v > 0.0 ? 1.0 : 0.0;
            covered += v > 0.0;
        }
        Image yk = y;
        for (std::size_t p = 0; p < yk.size(); ++p) yk.data()[p] *= mask.data()[p];
        const StridedConvOp op = weighted(plain);
        const double step_c = shared_c > 0.0 ? shared_c : kStepInflation * spectral_norm_sq(op, cfg.power);
        CodeResult r = code_and_synthesize(op, yk, sigma, cfg, step_c, covered);
        shift_estimates[i] = std::move(r.estimate);
        statuses[i] = r.pursuit.status;
        reach[i] = std::move(mask);
    });

    DenoiseReport rep;
    rep.estimate = pairwise_mean(shift_estimates);
    if (!translates) {
        // average each pixel over the offsets that reach it
        const Image count = pairwise_mean(reach);
        for (std::size_t p = 0; p < count.size(); ++p) rep.estimate.data()[p] /= count.data()[p];
    }
    rep.config_echo = echo(cfg, dict, sigma);
    rep.config_echo["method"] = "csc";
    rep.config_echo["stride"] = std::to_string(stride);
    rep.config_echo["shifts"] = std::to_string(offsets.size());
    if (shared_c > 0.0) rep.config_echo["step_c"] = num(shared_c);
    const Image cover = coverage_map(base);
    double cmin = cover.data()[0], cmax = cover.data()[0];
    for (double v : cover.data()) {
        cmin = std::min(cmin, v);
        cmax = std::max(cmax, v);
    }
    rep.config_echo["coverage_min"] = num(cmin);
    rep.config_echo["coverage_max"] = num(cmax);
    if (stride == side && translates && y.height() % side == 0 && y.width() % side == 0) {
        rep.config_echo["pa_equivalence"] = "non-overlapping tiling: equivalent to periodic patch averaging";
    }
    std::size_t unconverged = 0;
    for (PursuitStatus s : statuses) {
        if (s == PursuitStatus::bisection_budget || s == PursuitStatus::infeasible) ++unconverged;
    }
    rep.config_echo["shifts_without_lambda_match"] = std::to_string(unconverged);
    if (clean) {
        rep.psnr_vs_clean = psnr(*clean, rep.estimate);
        rep.psnr_clamped_vs_clean = psnr_clamped(*clean, rep.estimate);
        for (const Image& e : shift_estimates) rep.per_shift_psnr.push_back(psnr(*clean, e));
    }
    rep.per_shift_estimates = std::move(shift_estimates);
    return rep;
}

}  // namespace csc
