#include "csc/pursuit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "csc/errors.hpp"

namespace csc {

void PursuitConfig::validate() const {
    if (!(lambda >= 0.0)) throw UsageError("lambda must be non-negative");
    if (!(step_c > 0.0)) throw UsageError("step_c must be positive");
    if (max_iters == 0) throw UsageError("max_iters must be at least 1");
    if (!(rel_tol >= 0.0)) throw UsageError("rel_tol must be non-negative");
}

std::string to_string(PursuitStatus s) {
    switch (s) {
        case PursuitStatus::converged: return "converged";
        case PursuitStatus::iteration_budget: return "iteration_budget";
        case PursuitStatus::zero_feasible: return "zero_feasible";
        case PursuitStatus::bisection_budget: return "bisection_budget";
        case PursuitStatus::infeasible: return "infeasible";
    }
    return "unknown";
}

double soft_threshold(double y, double tau) {
    if (!(tau >= 0.0)) throw UsageError("threshold must be non-negative");
    const double mag = std::abs(y) - tau;
    return mag > 0.0 ? std::copysign(mag, y) : 0.0;
}

void soft_threshold_inplace(std::span<double> v, double tau) {
    if (!(tau >= 0.0)) throw UsageError("threshold must be non-negative");
    for (double& x : v) {
        const double mag = std::abs(x) - tau;
        x = mag > 0.0 ? std::copysign(mag, x) : 0.0;
    }
}

void soft_threshold_inplace(FeatureMaps& gamma, std::span<const double> tau) {
    if (tau.size() != gamma.num_maps) throw UsageError("one threshold per map expected");
    for (std::size_t j = 0; j < gamma.num_maps; ++j) soft_threshold_inplace(gamma.map(j), tau[j]);
}

namespace {

double l1(const FeatureMaps& g) {
    double acc = 0.0;
    for (double v : g.data) acc += std::abs(v);
    return acc;
}

double sq_norm(std::span<const double> v) {
    double acc = 0.0;
    for (double x : v) acc += x * x;
    return acc;
}

Image subtract(const Image& a, const Image& b) {
    Image out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

double objective(const StridedConvOp& op, const Image& y, const FeatureMaps& gamma, double lambda) {
    const Image r = subtract(op.synthesize(gamma), y);
    return 0.5 * sq_norm(r.data()) + lambda * l1(gamma);
}

PursuitResult ista_solve(const StridedConvOp& op, const Image& y, const PursuitConfig& cfg,
                         const FeatureMaps& gamma0) {
    cfg.validate();
    if (y.height() != op.image_h() || y.width() != op.image_w()) {
        throw UsageError("image does not match the operator");
    }
    const double inv_c = 1.0 / cfg.step_c;
    const double thr = cfg.lambda * inv_c;
    const bool fista = cfg.acceleration == Acceleration::fista;

    PursuitResult res;
    res.lambda = cfg.lambda;
    res.gamma = gamma0;
    Image synth = op.synthesize(res.gamma);
    Image resid = subtract(y, synth);
    res.objective_trace.push_back(0.5 * sq_norm(resid.data()) + cfg.lambda * l1(res.gamma));

    // FISTA extrapolation point and its synthesis.
    FeatureMaps z = res.gamma;
    Image z_resid = resid;
    double t = 1.0;

    res.status = PursuitStatus::iteration_budget;
    for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
        const FeatureMaps& point = fista ? z : res.gamma;
        const Image& point_resid = fista ? z_resid : resid;
        FeatureMaps next = op.analyze(point_resid);
        for (std::size_t i = 0; i < next.data.size(); ++i) {
            next.data[i] = point.data[i] + inv_c * next.data[i];
        }
        soft_threshold_inplace(next.data, thr);
        if (!all_finite(next.data)) {
            throw NumericalError("non-finite coefficients in ISTA; step constant too small?");
        }

        double diff = 0.0;
        for (std::size_t i = 0; i < next.data.size(); ++i) {
            const double d = next.data[i] - res.gamma.data[i];
            diff += d * d;
        }
        const double next_norm = std::sqrt(sq_norm(next.data));
        const double change = std::sqrt(diff) / std::max(next_norm, std::numeric_limits<double>::min());

        Image next_synth = op.synthesize(next);
        if (fista) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            t = t_next;
            for (std::size_t i = 0; i < z.data.size(); ++i) {
                z.data[i] = next.data[i] + beta * (next.data[i] - res.gamma.data[i]);
            }
            for (std::size_t i = 0; i < z_resid.size(); ++i) {
                const double zs = next_synth.data()[i] + beta * (next_synth.data()[i] - synth.data()[i]);
                z_resid.data()[i] = y.data()[i] - zs;
            }
        }
        res.gamma = std::move(next);
        synth = std::move(next_synth);
        resid = subtract(y, synth);
        res.objective_trace.push_back(0.5 * sq_norm(resid.data()) + cfg.lambda * l1(res.gamma));
        res.iters_used = it;
        if (diff == 0.0 || change < cfg.rel_tol) {
            res.status = PursuitStatus::converged;
            break;
        }
    }
    res.residual_norm = std::sqrt(sq_norm(resid.data()));
    return res;
}

PursuitResult bp_error_bounded(const StridedConvOp& op, const Image& y, double epsilon,
                               const PursuitConfig& cfg, const BisectionOptions& bisect) {
    if (!(epsilon > 0.0)) throw UsageError("epsilon must be positive");
    const double y_norm = std::sqrt(sq_norm(y.data()));
    if (epsilon >= y_norm) {
        PursuitResult zero;
        zero.gamma = op.zero_maps();
        zero.residual_norm = y_norm;
        zero.objective_trace.push_back(0.5 * y_norm * y_norm);
        zero.lambda = std::numeric_limits<double>::infinity();
        zero.status = PursuitStatus::zero_feasible;
        return zero;
    }

    const FeatureMaps corr = op.analyze(y);
    double lambda_max = 0.0;
    for (double v : corr.data) lambda_max = std::max(lambda_max, std::abs(v));

    std::size_t steps = 0;
    FeatureMaps warm = op.zero_maps();
    auto solve = [&](double lambda) {
        PursuitConfig inner = cfg;
        inner.lambda = lambda;
        PursuitResult r = ista_solve(op, y, inner, warm);
        warm = r.gamma;
        ++steps;
        return r;
    };
    const double accept_lo = bisect.lower_ratio * epsilon;
    auto accepted = [&](const PursuitResult& r) {
        return r.residual_norm <= epsilon && r.residual_norm >= accept_lo;
    };

    std::optional<PursuitResult> best;  // feasible with the largest lambda
    double lo = 0.0;                    // largest feasible lambda
    double hi = lambda_max;             // smallest infeasible lambda
    PursuitResult last;  // most recent solve, for the infeasible exit
    auto record = [&](PursuitResult r) {
        last = r;
        if (r.residual_norm <= epsilon) {
            if (!best || r.lambda > best->lambda) {
                lo = r.lambda;
                best = std::move(r);
            }
        } else {
            hi = std::min(hi, r.lambda);
        }
    };
    auto finish = [&](PursuitStatus status) {
        PursuitResult out = std::move(*best);
        out.status = status;
        out.lambda_steps = steps;
        return out;
    };

    double lambda = bisect.initial_fraction * lambda_max;
    PursuitResult cur = solve(lambda);
    if (accepted(cur)) {
        record(std::move(cur));
        return finish(PursuitStatus::converged);
    }
    const bool feasible_start = cur.residual_norm <= epsilon;
    record(std::move(cur));
    for (std::size_t e = 0; e < bisect.max_expansions; ++e) {
        if (feasible_start) {
            lambda *= bisect.expand_factor;
            if (lambda >= lambda_max) break;  // hi = lambda_max: zero solution is infeasible
        } else {
            lambda /= bisect.expand_factor;
        }
        cur = solve(lambda);
        const bool ok = accepted(cur);
        const bool feasible = cur.residual_norm <= epsilon;
        record(std::move(cur));
        if (ok) return finish(PursuitStatus::converged);
        if (feasible != feasible_start) break;
    }
    if (!best) {
        PursuitResult out = std::move(last);
        out.status = PursuitStatus::infeasible;
        out.lambda_steps = steps;
        return out;
    }

    for (std::size_t b = 0; b < bisect.max_bisections; ++b) {
        const double mid = std::sqrt(lo * hi);
        if (!(mid > lo && mid < hi)) break;
        warm = best->gamma;
        cur = solve(mid);
        const bool ok = accepted(cur);
        record(std::move(cur));
        if (ok) return finish(PursuitStatus::converged);
    }
    return finish(PursuitStatus::bisection_budget);
}

FeatureMaps debias(const StridedConvOp& op, const Image& y, const FeatureMaps& gamma,
                   const DebiasOptions& opts) {
    std::vector<char> mask(gamma.data.size());
    bool any = false;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = gamma.data[i] != 0.0;
        any = any || mask[i];
    }
    if (!any) return gamma;

    auto normal_apply = [&](const FeatureMaps& v) {
        FeatureMaps out = op.analyze(op.synthesize(v));
        for (std::size_t i = 0; i < mask.size(); ++i) {
            if (!mask[i]) out.data[i] = 0.0;
        }
        return out;
    };

    FeatureMaps x = gamma;
    FeatureMaps b = op.analyze(y);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) b.data[i] = 0.0;
    }
    const double b_norm = std::sqrt(sq_norm(b.data));
    FeatureMaps r = normal_apply(x);
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] = b.data[i] - r.data[i];
    double rs = sq_norm(r.data);
    const double stop = opts.cg_tol * b_norm;
    if (std::sqrt(rs) <= stop) return x;

    FeatureMaps p = r;
    for (std::size_t it = 0; it < opts.cg_iters; ++it) {
        const FeatureMaps ap = normal_apply(p);
        const double curv = dot(p, ap);
        if (!(curv > 0.0)) break;
        const double alpha = rs / curv;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            x.data[i] += alpha * p.data[i];
            r.data[i] -= alpha * ap.data[i];
        }
        const double rs_next = sq_norm(r.data);
        if (std::sqrt(rs_next) <= stop) break;
        const double beta = rs_next / rs;
        rs = rs_next;
        for (std::size_t i = 0; i < p.data.size(); ++i) p.data[i] = r.data[i] + beta * p.data[i];
    }
    return x;
}

}  // namespace csc
