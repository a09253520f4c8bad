// One PASS/FAIL line per acceptance criterion. Exit status is nonzero if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "csc/container.hpp"
#include "csc/convop.hpp"
#include "csc/cscnet.hpp"
#include "csc/dict.hpp"
#include "csc/experiment.hpp"
#include "csc/pgm.hpp"
#include "csc/pursuit.hpp"
#include "csc/rng.hpp"
#include "oracles.hpp"

using namespace csc;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail, double seconds) {
    std::printf("[%s] criterion %2d  %-28s %s (%.1fs)\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str(), seconds);
    std::fflush(stdout);
    if (!ok) ++failures;
}

template <class F>
void criterion(int id, const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    bool ok = false;
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report(id, name, ok, detail, s);
}

std::string fmt(double v, int prec = 3) {
    std::ostringstream o;
    o.precision(prec);
    o << v;
    return o.str();
}

// --- 2 ---
bool operator_correctness(std::string& detail) {
    CounterRng rng(2, Stream::test);
    double worst_adj = 0.0;
    for (int draw = 0; draw < 100; ++draw) {
        const std::size_t side = 1 + rng.below(6);
        const std::size_t q = 1 + rng.below(side);
        const std::size_t m = 1 + rng.below(6);
        const std::size_t h = side + rng.below(14), w = side + rng.below(14);
        const auto d = oracle::random_dictionary(side, side, m, 1000 + draw, false);
        const StridedConvOp op(d, q, {rng.below(q), rng.below(q)}, h, w);
        const FeatureMaps g = oracle::random_maps(op, 2000 + draw);
        const Image x = oracle::random_image(h, w, 3000 + draw);
        const double lhs = dot(op.synthesize(g), x), rhs = dot(g, op.analyze(x));
        worst_adj = std::max(worst_adj, std::abs(lhs - rhs) / std::max({std::abs(lhs), std::abs(rhs), 1e-300}));
    }
    double worst_dense = 0.0;
    for (int draw = 0; draw < 40; ++draw) {
        const std::size_t side = 1 + rng.below(5);
        const std::size_t q = 1 + rng.below(side);
        const std::size_t m = 1 + rng.below(4);
        const std::size_t h = side + rng.below(13 - side), w = side + rng.below(13 - side);
        const auto d = oracle::random_dictionary(side, side, m, 4000 + draw);
        const StridedConvOp op(d, q, {rng.below(q), rng.below(q)}, h, w);
        const Eigen::MatrixXd dense = oracle::dense_operator(op);
        const FeatureMaps g = oracle::random_maps(op, 5000 + draw);
        const Image x = oracle::random_image(h, w, 6000 + draw);
        worst_dense = std::max(worst_dense, (oracle::vec(op.synthesize(g)) - dense * oracle::vec(g)).cwiseAbs().maxCoeff());
        worst_dense = std::max(worst_dense, (oracle::vec(op.analyze(x)) - dense.transpose() * oracle::vec(x)).cwiseAbs().maxCoeff());
    }
    detail = "adjoint rel " + fmt(worst_adj) + ", dense abs " + fmt(worst_dense);
    return worst_adj <= 1e-10 && worst_dense <= 1e-12;
}

// --- 3 ---
bool spectral(std::string& detail) {
    CounterRng rng(3, Stream::test);
    double worst = 0.0;
    for (int draw = 0; draw < 30; ++draw) {
        const std::size_t side = 1 + rng.below(4);
        const std::size_t q = 1 + rng.below(side);
        const std::size_t m = 1 + rng.below(4);
        const std::size_t h = side + rng.below(8), w = side + rng.below(8);
        const StridedConvOp op(oracle::random_dictionary(side, side, m, 7000 + draw), q, {0, 0}, h, w);
        const Eigen::MatrixXd dense = oracle::dense_operator(op);
        const Eigen::MatrixXd gram = dense.rows() <= dense.cols() ? Eigen::MatrixXd(dense * dense.transpose())
                                                                  : Eigen::MatrixXd(dense.transpose() * dense);
        if (gram.rows() > 16) continue;  // up to 256 entries
        const double ref = oracle::max_eigenvalue(gram);
        const double got = spectral_norm_sq(op, {.iters = 5000, .tol = 1e-14});
        worst = std::max(worst, std::abs(got - ref) / ref);
    }
    const CscNetParams p = init_params(7, 16, 5, 4, 4, 16, 16);
    const StridedConvOp b(bank_as_dictionary(p, p.filters_b), 4, {0, 0}, 16, 16);
    const Eigen::MatrixXd dense = oracle::dense_operator(b);
    const double norm = oracle::max_eigenvalue(dense.transpose() * dense);
    detail = "power-method rel err " + fmt(worst) + ", init sigma_max " + fmt(norm, 5);
    return worst <= 1e-6 && std::abs(norm - 1.0) <= 0.02;
}

// --- 4 ---
bool ista_contract(std::string& detail) {
    bool ok = true;
    double worst_kkt = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const StridedConvOp op(oracle::random_dictionary(3, 3, 3, 20 + seed), 1 + seed % 3, {0, 0}, 7, 7);
        const Image y = oracle::random_image(7, 7, 30 + seed);
        const double lambda = 0.1 + 0.05 * double(seed);
        PursuitConfig c;
        c.lambda = lambda;
        c.max_iters = 200000;
        c.rel_tol = 1e-13;
        c.step_c = kStepInflation * spectral_norm_sq(op, {.iters = 2000, .tol = 1e-13});
        const PursuitResult r = ista_solve(op, y, c, op.zero_maps());
        ok = ok && r.status == PursuitStatus::converged;
        for (std::size_t i = 1; i < r.objective_trace.size(); ++i)
            ok = ok && r.objective_trace[i] <= r.objective_trace[i - 1] + 1e-10;
        Image resid = op.synthesize(r.gamma);
        for (std::size_t i = 0; i < resid.size(); ++i) resid.data()[i] = y.data()[i] - resid.data()[i];
        const FeatureMaps corr = op.analyze(resid);
        for (std::size_t i = 0; i < corr.data.size(); ++i) {
            const double g = r.gamma.data[i];
            const double v = g == 0.0 ? std::max(0.0, std::abs(corr.data[i]) - lambda)
                                      : std::abs(corr.data[i] - lambda * (g > 0 ? 1.0 : -1.0));
            worst_kkt = std::max(worst_kkt, v / lambda);
        }
        PursuitConfig huge = c;
        huge.lambda = 1e12;
        const PursuitResult z = ista_solve(op, y, huge, op.zero_maps());
        ok = ok && std::all_of(z.gamma.data.begin(), z.gamma.data.end(), [](double v) { return v == 0.0; });
    }
    ok = ok && worst_kkt <= 1e-4;

    const std::size_t side = 4;
    const auto d = make_overcomplete_dct(side, 5);
    const StridedConvOp op(d, side, {0, 0}, 12, 16);
    const StridedConvOp patch_op(d, side, {0, 0}, side, side);
    const Image y = oracle::random_image(12, 16, 8, 10.0);
    PursuitConfig c;
    c.lambda = 2.0;
    c.max_iters = 80;
    c.rel_tol = 0.0;
    c.step_c = kStepInflation * spectral_norm_sq(patch_op);
    const PursuitResult global = ista_solve(op, y, c, op.zero_maps());
    double worst = 0.0;
    for (std::size_t i = 0; i < op.lattice_h(); ++i) {
        for (std::size_t k = 0; k < op.lattice_w(); ++k) {
            const Image p(side, side, extract_patch(y, {i * side, k * side, side}, Boundary::periodic));
            const PursuitResult local = ista_solve(patch_op, p, c, patch_op.zero_maps());
            for (std::size_t j = 0; j < d.num_atoms(); ++j)
                worst = std::max(worst, std::abs(global.gamma.at(j, i, k) - local.gamma.data[j]));
        }
    }
    detail = "KKT/lambda " + fmt(worst_kkt) + ", q=n vs patches " + fmt(worst);
    return ok && worst <= 1e-10;
}

// --- 5, 6 ---
struct DeskResult {
    double q1 = 0, q4 = 0, q8 = 0, pa = 0;
    bool done = false;
};

DeskResult desk_table() {
    DeskResult r;
    const auto corpus = load_corpus(CSC_DATA_DIR "/desk");
    Denoisers d;
    d.dict = DictSpec{}.build();
    std::vector<Method> methods;
    for (const char* m : {"csc_q1", "csc_q4", "csc_q8", "pa"}) methods.push_back(Method::parse(m));
    const EvalTable t = evaluate(corpus, methods, 25.0, {1}, d);
    std::cout << to_csv(t);
    const auto mean = t.mean();
    r.q1 = mean[0];
    r.q4 = mean[1];
    r.q8 = mean[2];
    r.pa = mean[3];
    r.done = true;
    return r;
}

// --- 7 ---
CscNetParams random_params(std::uint64_t seed, std::size_t m, std::size_t side, std::size_t q, std::size_t l) {
    CscNetParams p;
    p.num_maps = m;
    p.filter_side = side;
    p.stride = q;
    p.unroll = l;
    CounterRng rng(seed, Stream::test, {m, side, q, l});
    for (auto* bank : {&p.filters_a, &p.filters_b, &p.filters_c}) {
        bank->resize(m * side * side);
        for (double& v : *bank) v = rng.normal() / double(side);
    }
    p.tau.resize(m);
    for (double& t : p.tau) t = 0.05 + 0.1 * rng.uniform();
    p.inv_c = 0.5 + 0.5 * rng.uniform();
    return p;
}

std::vector<signed char> pattern(const CscNetParams& p, const Image& y) {
    std::vector<signed char> out;
    for (const auto& s : forward(p, y).shifts)
        for (std::size_t l = 1; l < s.gammas.size(); ++l)
            for (double v : s.gammas[l].data) out.push_back(static_cast<signed char>((v > 0) - (v < 0)));
    return out;
}

bool gradients(std::string& detail) {
    CounterRng rng(7, Stream::test);
    const double h = 1e-5;
    std::size_t configs = 0, checked = 0, excluded = 0;
    double worst = 0.0;
    for (std::uint64_t trial = 0; trial < 60; ++trial) {
        const std::size_t m = 1 + rng.below(4), side = 1 + rng.below(5);
        const std::size_t q = 1 + rng.below(std::min<std::size_t>(side, 3)), l = 1 + rng.below(3);
        std::size_t hw = q * (1 + rng.below(3));
        while (hw < side) hw += q;
        CscNetParams p = random_params(500 + trial, m, side, q, l);
        const Image clean = oracle::random_image(hw, hw, 600 + trial);
        Image y = clean;
        const Image noise = oracle::random_image(hw, hw, 700 + trial, 0.3);
        for (std::size_t i = 0; i < y.size(); ++i) y.data()[i] += noise.data()[i];
        const ForwardResult fr = forward(p, y);
        const Gradients g = backward(p, y, clean, fr);
        std::vector<double> grad;
        for (const auto* b : {&g.filters_a, &g.filters_b, &g.filters_c, &g.tau}) grad.insert(grad.end(), b->begin(), b->end());
        grad.push_back(g.inv_c);
        std::vector<double*> coords;
        for (auto* b : {&p.filters_a, &p.filters_b, &p.filters_c, &p.tau})
            for (double& v : *b) coords.push_back(&v);
        coords.push_back(&p.inv_c);
        const auto base = pattern(p, y);
        const double base_loss = loss_l2(fr.estimate, clean);
        ++configs;
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const double saved = *coords[i];
            // exclude coordinates within 10h of a kink: the sign pattern must survive +-10h
            *coords[i] = saved + 10 * h;
            bool smooth = pattern(p, y) == base;
            *coords[i] = saved - 10 * h;
            smooth = smooth && pattern(p, y) == base;
            if (!smooth) {
                *coords[i] = saved;
                ++excluded;
                continue;
            }
            *coords[i] = saved + h;
            const double up = loss_l2(forward(p, y).estimate, clean);
            *coords[i] = saved - h;
            const double down = loss_l2(forward(p, y).estimate, clean);
            *coords[i] = saved;
            const double fd = (up - down) / (2 * h);
            const double denom = std::max({std::abs(fd), std::abs(grad[i]), 1e-7 * (1.0 + base_loss)});
            worst = std::max(worst, std::abs(fd - grad[i]) / denom);
            ++checked;
        }
    }
    detail = std::to_string(configs) + " configs, " + std::to_string(checked) + " coords (" +
             std::to_string(excluded) + " near kinks), worst rel " + fmt(worst);
    return configs >= 50 && worst <= 1e-4 && checked > 10 * excluded;
}

// --- 8 ---
bool unrolled_equals_ista(std::string& detail) {
    double worst = 0.0;
    const auto d = make_overcomplete_dct(5, 6);
    for (std::size_t q : {1u, 2u, 5u}) {
        const std::size_t l = 6;
        const StridedConvOp base(d, q, {0, 0}, 10, 20);
        const double c = kStepInflation * spectral_norm_sq(base);
        const CscNetParams p = params_from_dictionary(d, q, l, 4.0, c);
        const Image y = oracle::random_image(10, 20, 40 + q, 30.0);
        PursuitConfig cfg;
        cfg.lambda = 4.0;
        cfg.step_c = c;
        cfg.max_iters = l;
        cfg.rel_tol = 0.0;
        const ForwardResult fr = forward(p, y);
        std::vector<Image> per;
        for (std::size_t kr = 0; kr < q; ++kr) {
            for (std::size_t kc = 0; kc < q; ++kc) {
                const StridedConvOp op = base.with_offset({kr, kc});
                const PursuitResult r = ista_solve(op, y, cfg, op.zero_maps());
                worst = std::max(worst, oracle::max_abs_diff(fr.shifts[kr * q + kc].gammas.back(), r.gamma));
                per.push_back(op.synthesize(r.gamma));
            }
        }
        worst = std::max(worst, oracle::max_abs_diff(fr.estimate, pairwise_mean(per)));
    }
    detail = "max abs diff " + fmt(worst);
    return worst <= 1e-10;
}

// --- 9 ---
bool desk_training(std::string& detail) {
    const auto corpus = load_corpus(CSC_DATA_DIR "/train");
    std::vector<Image> data;
    for (const auto& n : corpus) data.push_back(n.image);
    const Preset p = preset("desk");
    TrainConfig cfg = p.train;
    cfg.seed = 0;
    const CscNetParams init =
        init_params(cfg.seed, p.num_maps, p.filter_side, p.stride, p.unroll, cfg.crop_size, cfg.crop_size);
    const double before = fixed_sample_mse(init, data, cfg, 32);
    const TrainState a = train(data, cfg, init);
    const TrainState b = train(data, cfg, init);
    const double after = fixed_sample_mse(a.params, data, cfg, 32);
    const bool finite = std::all_of(a.loss_history.begin(), a.loss_history.end(), [](double v) { return std::isfinite(v); });
    const std::size_t steps = cfg.epochs * cfg.steps_per_epoch;
    detail = std::to_string(steps) + " steps, crop " + std::to_string(cfg.crop_size) + ", held-out MSE " +
             fmt(before, 5) + " -> " + fmt(after, 5) + " (ratio " + fmt(after / before) + ")" +
             (a.loss_history == b.loss_history ? ", reruns identical" : ", reruns DIFFER");
    return steps == 200 && cfg.crop_size == 16 && cfg.sigma == 25.0 && finite && after <= 0.5 * before &&
           a.loss_history == b.loss_history && a.params == b.params;
}

// --- 10 ---
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int cli(const std::string& args) {
    const std::string cmd = std::string(CSC_CLI) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

bool determinism(std::string& detail) {
    const fs::path dir = fs::temp_directory_path() / "csc_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const auto corpus = load_corpus(CSC_DATA_DIR "/desk");
    const fs::path clean = dir / "clean.pgm";
    write_pgm(clean, crop(corpus[0].image, 16, 16, 32, 32));
    {
        std::ofstream spec(dir / "denoise.spec");
        spec << "# small csc run\nmethod=csc\nstride=4\nsigma=25\npatch-side=8\natoms-per-dim=10\nmax-iters=60\n";
    }
    const std::vector<std::string> files{"noisy.bin", "noisy.pgm", "pa.bin", "pa.pgm", "pa.json", "csc.bin",
                                         "csc.json", "sweep.json", "sweep.csv", "dict.bin", "init.bin",
                                         "ckpt.bin", "loss.csv", "net.bin", "eval.csv"};
    bool ok = true;
    for (int run = 0; run < 2; ++run) {
        const std::string o = (dir / ("r" + std::to_string(run))).string() + "/";
        fs::create_directories(o);
        const std::string s = " --patch-side 8 --atoms-per-dim 10 --max-iters 60";
        const std::string c = clean.string();
        ok = ok && cli("noise --input " + c + " --sigma 25 --seed 4 --output " + o + "noisy.bin") == 0;
        ok = ok && cli("denoise --method pa --noisy " + o + "noisy.bin --clean " + c + " --sigma 25 --output " + o +
                       "pa.bin --preview " + o + "pa.pgm --report " + o + "pa.json" + s) == 0;
        ok = ok && cli("denoise --spec " + (dir / "denoise.spec").string() + " --noisy " + o + "noisy.bin --clean " +
                       c + " --output " + o + "csc.bin --report " + o + "csc.json") == 0;
        ok = ok && cli("denoise --method csc --sweep --strides 1,4,8 --noisy " + o + "noisy.bin --clean " + c +
                       " --sigma 25 --report " + o + "sweep.json --table " + o + "sweep.csv" + s) == 0;
        ok = ok && cli("dict --output " + o + "dict.bin") == 0;
        ok = ok && cli("init --preset desk --seed 1 --output " + o + "init.bin") == 0;
        ok = ok && cli("train --corpus " CSC_DATA_DIR "/train --preset desk --epochs 3 --checkpoint-out " + o +
                       "ckpt.bin --loss-csv " + o + "loss.csv") == 0;
        ok = ok && cli("denoise --method cscnet --checkpoint " + o + "ckpt.bin --noisy " + o + "noisy.bin --clean " +
                       c + " --output " + o + "net.bin") == 0;
        ok = ok && cli("eval --corpus " + dir.string() + " --methods pa,csc_q8 --seeds 1,2 --output " + o + "eval.csv" +
                       s) == 0;
    }
    std::size_t same = 0;
    for (const auto& f : files) {
        const std::string a = slurp(dir / "r0" / f);
        if (!a.empty() && a == slurp(dir / "r1" / f)) ++same;
    }
    // container round trips
    bool bitexact = true;
    for (const char* f : {"noisy.bin", "pa.bin", "dict.bin", "ckpt.bin"}) {
        const auto bytes = read_file(dir / "r0" / f);
        bitexact = bitexact && serialize(deserialize(bytes)) == bytes;
    }
    const Image noisy = image_from(read_container(dir / "r0" / "noisy.bin"));
    bitexact = bitexact && image_from(deserialize(serialize(to_container(noisy)))) == noisy;
    const TrainState st = train_state_from(read_container(dir / "r0" / "ckpt.bin"));
    const TrainConfig tc = train_config_from(read_container(dir / "r0" / "ckpt.bin"));
    bitexact = bitexact && serialize(to_container(st, tc)) == read_file(dir / "r0" / "ckpt.bin");
    detail = std::to_string(same) + "/" + std::to_string(files.size()) + " outputs identical across reruns, " +
             (bitexact ? "containers bit-exact" : "container round trip MISMATCH");
    fs::remove_all(dir);
    return ok && same == files.size() && bitexact;
}

}  // namespace

int main() {
    criterion(1, "parameter accounting", [](std::string& d) {
        const auto n = parameter_count(175, 11);
        d = "parameter_count(175, 11) = " + std::to_string(n);
        return n == 63700;
    });
    criterion(2, "operator correctness", operator_correctness);
    criterion(3, "spectral normalization", spectral);
    criterion(4, "ISTA contract", ista_contract);

    DeskResult desk;
    std::string desk_error;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        desk = desk_table();
    } catch (const std::exception& e) {
        desk_error = e.what();
    }
    const double desk_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (desk.done) {
        report(5, "strided MMSE trend", desk.q1 < desk.q4 && desk.q4 < desk.q8 && desk.q8 - desk.q1 >= 1.0,
               "q1 " + fmt(desk.q1, 4) + " < q4 " + fmt(desk.q4, 4) + " < q8 " + fmt(desk.q8, 4) + " dB, gap " +
                   fmt(desk.q8 - desk.q1) + " (need >= 1.0)",
               desk_s);
        report(6, "PA vs CSC ordering", desk.q8 >= desk.pa - 0.3,
               "csc_q8 " + fmt(desk.q8, 4) + " vs PA " + fmt(desk.pa, 4) + " dB, margin " + fmt(desk.q8 - desk.pa) +
                   " (need >= -0.3)",
               0.0);
        std::printf("         informational: q8 %.2f vs 28.75 (delta %+.2f), PA %.2f vs 28.73 (delta %+.2f); band +-0.7\n",
                    desk.q8, desk.q8 - 28.75, desk.pa, desk.pa - 28.73);
    } else {
        report(5, "strided MMSE trend", false, "exception: " + desk_error, desk_s);
        report(6, "PA vs CSC ordering", false, "exception: " + desk_error, 0.0);
    }
    criterion(7, "gradient exactness", gradients);
    criterion(8, "unrolled = ISTA", unrolled_equals_ista);
    criterion(9, "desk-scale training", desk_training);
    criterion(10, "determinism & serialization", determinism);

    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
