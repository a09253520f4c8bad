// csc: noise / denoise / train / eval / init / dict front end.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "csc/container.hpp"
#include "csc/cscnet.hpp"
#include "csc/denoise.hpp"
#include "csc/errors.hpp"
#include "csc/experiment.hpp"
#include "csc/pgm.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace csc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// --spec FILE: key=value lines become --key=value tokens placed right after the
// subcommand, so flags given explicitly on the command line win (last value is kept).
std::vector<std::string> expand_spec(std::vector<std::string> args) {
    std::string spec_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--spec" && i + 1 < args.size()) spec_path = args[i + 1];
        if (args[i].rfind("--spec=", 0) == 0) spec_path = args[i].substr(7);
    }
    if (spec_path.empty()) return args;
    std::ifstream in(spec_path);
    if (!in) throw DataError("cannot read spec file " + spec_path);
    std::vector<std::string> injected;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw UsageError(spec_path + ":" + std::to_string(lineno) + ": expected key=value");
        }
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string{} : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || key == "spec") throw UsageError(spec_path + ":" + std::to_string(lineno) + ": bad key");
        if (value == "true") {
            injected.push_back("--" + key);
        } else if (value != "false") {
            injected.push_back("--" + key + "=" + value);
        }
    }
    // args[0] is the program, args[1] the subcommand.
    const std::size_t at = args.size() > 1 ? 2 : 1;
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), injected.begin(), injected.end());
    return args;
}

fs::path preview_path(const fs::path& output, const std::string& preview) {
    if (!preview.empty()) return preview;
    fs::path p = output;
    p.replace_extension(".pgm");
    if (p == output) p += ".preview.pgm";
    return p;
}

void write_image_outputs(const Image& img, const fs::path& output, const std::string& preview,
                         std::map<std::string, std::string> meta) {
    write_container(output, to_container(img, std::move(meta)));
    write_pgm(preview_path(output, preview), img);
}

std::string fmt(double v) { return fmt_double(v); }

struct DenoiseFlags {
    std::size_t patch_side = 11;
    std::size_t atoms_per_dim = 16;
    bool no_demean = false;
    double epsilon_factor = DenoiseConfig{}.epsilon_factor;
    std::size_t max_iters = DenoiseConfig{}.pursuit.max_iters;
    double rel_tol = DenoiseConfig{}.pursuit.rel_tol;
    std::string solver = "ista";
    bool no_debias = false;
    double lambda = 0.0;
    double coverage_power = DenoiseConfig{}.coverage_power;
    bool periodic_patches = false;
    std::string dictionary;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--patch-side", patch_side, "DCT patch side")->capture_default_str();
        cmd->add_option("--atoms-per-dim", atoms_per_dim, "1D DCT atoms per dimension")->capture_default_str();
        cmd->add_flag("--no-demean", no_demean, "keep the mean of non-DC DCT atoms");
        cmd->add_option("--dictionary", dictionary, "dictionary container (overrides the DCT flags)");
        cmd->add_option("--epsilon-factor", epsilon_factor, "C in eps = C sigma sqrt(dim)")->capture_default_str();
        cmd->add_option("--max-iters", max_iters, "ISTA/FISTA iteration cap")->capture_default_str();
        cmd->add_option("--rel-tol", rel_tol, "relative change stopping tolerance")->capture_default_str();
        cmd->add_option("--solver", solver, "ista or fista")
            ->check(CLI::IsMember({"ista", "fista"}))
            ->capture_default_str();
        cmd->add_flag("--no-debias", no_debias, "skip the least-squares support refit");
        cmd->add_option("--lambda", lambda, "fixed lambda: Lagrangian mode instead of error-bounded");
        cmd->add_option("--coverage-power", coverage_power, "strided CSC coverage weighting exponent")
            ->capture_default_str();
        cmd->add_flag("--periodic-patches", periodic_patches, "PA with wraparound windows");
    }

    Denoisers build() const {
        Denoisers d;
        d.dict = dictionary.empty() ? DictSpec{patch_side, atoms_per_dim, !no_demean}.build()
                                    : dictionary_from(read_container(dictionary));
        d.config.epsilon_factor = epsilon_factor;
        d.config.pursuit.max_iters = max_iters;
        d.config.pursuit.rel_tol = rel_tol;
        d.config.pursuit.acceleration = solver == "ista" ? Acceleration::ista : Acceleration::fista;
        d.config.debias = !no_debias;
        if (lambda > 0.0) {
            d.config.mode = PursuitMode::lagrangian;
            d.config.pursuit.lambda = lambda;
        }
        d.config.coverage_power = coverage_power;
        d.config.periodic_patches = periodic_patches;
        return d;
    }
};

json report_json(const DenoiseReport& rep) {
    json j;
    j["config"] = rep.config_echo;
    if (rep.psnr_vs_clean) {
        j["psnr"] = *rep.psnr_vs_clean;
        j["psnr_clamped"] = *rep.psnr_clamped_vs_clean;
    }
    if (!rep.per_shift_psnr.empty()) j["per_shift_psnr"] = rep.per_shift_psnr;
    j["height"] = rep.estimate.height();
    j["width"] = rep.estimate.width();
    return j;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

int run(int argc, char** argv) {
    CLI::App app{"Strided convolutional sparse coding denoising toolkit"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::string spec_unused;
    auto spec_opt = [&](CLI::App* cmd) {
        cmd->add_option("--spec", spec_unused, "key=value file supplying any of the long flags");
    };

    // noise
    auto* noise = app.add_subcommand("noise", "add white Gaussian noise");
    std::string n_input, n_output, n_preview;
    double n_sigma = 25.0;
    std::uint64_t n_seed = 0;
    noise->add_option("--input", n_input, "clean image (PGM or container)")->required();
    noise->add_option("--sigma", n_sigma, "noise standard deviation")->required()->check(CLI::NonNegativeNumber);
    noise->add_option("--seed", n_seed, "noise seed")->capture_default_str();
    noise->add_option("--output", n_output, "float image container")->required();
    noise->add_option("--preview", n_preview, "8-bit PGM preview (default: output with .pgm)");
    spec_opt(noise);

    // denoise
    auto* den = app.add_subcommand("denoise", "denoise one image with pa, csc or cscnet");
    std::string d_method = "csc", d_noisy, d_clean, d_output, d_preview, d_report, d_checkpoint, d_table;
    double d_sigma = 25.0;
    std::size_t d_stride = 0;
    bool d_sweep = false;
    std::vector<std::size_t> d_strides;
    DenoiseFlags d_flags;
    den->add_option("--method", d_method, "pa, csc or cscnet")
        ->check(CLI::IsMember({"pa", "csc", "cscnet"}))
        ->capture_default_str();
    den->add_option("--noisy", d_noisy, "noisy image (PGM or container)")->required();
    den->add_option("--clean", d_clean, "clean reference for PSNR");
    den->add_option("--sigma", d_sigma, "noise level")->capture_default_str()->check(CLI::NonNegativeNumber);
    auto* stride_opt = den->add_option("--stride", d_stride, "csc stride q");
    den->add_option("--checkpoint", d_checkpoint, "cscnet checkpoint");
    den->add_flag("--sweep", d_sweep, "csc stride sweep (q = 1..patch side unless --strides)");
    den->add_option("--strides", d_strides, "strides for --sweep")->delimiter(',');
    den->add_option("--output", d_output, "estimate container (single run)");
    den->add_option("--preview", d_preview, "estimate PGM preview");
    den->add_option("--report", d_report, "JSON report");
    den->add_option("--table", d_table, "sweep CSV table (stride,psnr,psnr_clamped)");
    d_flags.add_to(den);
    spec_opt(den);

    // train
    auto* tr = app.add_subcommand("train", "train CSCNet on a PGM corpus");
    std::string t_corpus, t_checkpoint, t_loss, t_resume, t_preset = "desk";
    std::uint64_t t_seed = 0;
    std::optional<double> t_lr, t_sigma;
    std::optional<std::size_t> t_epochs, t_steps, t_batch, t_crop, t_maps, t_side, t_stride, t_unroll;
    tr->add_option("--corpus", t_corpus, "directory of PGM training images")->required();
    tr->add_option("--preset", t_preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
    tr->add_option("--seed", t_seed, "root seed")->capture_default_str();
    tr->add_option("--lr", t_lr, "learning rate");
    tr->add_option("--sigma", t_sigma, "training noise level");
    tr->add_option("--epochs", t_epochs, "total epochs");
    tr->add_option("--steps-per-epoch", t_steps, "ADAM steps per epoch");
    tr->add_option("--batch", t_batch, "crops per step");
    tr->add_option("--crop", t_crop, "crop side");
    tr->add_option("--num-maps", t_maps, "number of feature maps");
    tr->add_option("--filter-side", t_side, "filter side");
    tr->add_option("--stride", t_stride, "stride q");
    tr->add_option("--unroll", t_unroll, "unrolled layers L");
    tr->add_option("--checkpoint-out", t_checkpoint, "checkpoint container")->required();
    tr->add_option("--loss-csv", t_loss, "loss curve CSV (epoch,mean_loss,lr)");
    tr->add_option("--resume", t_resume, "continue from this checkpoint");
    spec_opt(tr);

    // init
    auto* ini = app.add_subcommand("init", "write a freshly initialized CSCNet checkpoint");
    std::string i_out, i_preset = "desk";
    std::uint64_t i_seed = 0;
    ini->add_option("--preset", i_preset, "desk or paper")->check(CLI::IsMember({"desk", "paper"}))->capture_default_str();
    ini->add_option("--seed", i_seed, "root seed")->capture_default_str();
    ini->add_option("--output", i_out, "checkpoint container")->required();
    spec_opt(ini);

    // dict
    auto* dc = app.add_subcommand("dict", "write an overcomplete DCT dictionary container");
    std::string dc_out;
    std::size_t dc_side = 11, dc_atoms = 16;
    bool dc_no_demean = false;
    dc->add_option("--patch-side", dc_side, "patch side")->capture_default_str();
    dc->add_option("--atoms-per-dim", dc_atoms, "1D atoms per dimension")->capture_default_str();
    dc->add_flag("--no-demean", dc_no_demean, "keep the mean of non-DC atoms");
    dc->add_option("--output", dc_out, "dictionary container")->required();
    spec_opt(dc);

    // eval
    auto* ev = app.add_subcommand("eval", "PSNR table over a corpus, methods and noise seeds");
    std::string e_corpus, e_out, e_checkpoint;
    std::vector<std::string> e_methods{"pa", "csc_q8"};
    std::vector<std::uint64_t> e_seeds{1};
    double e_sigma = 25.0;
    DenoiseFlags e_flags;
    ev->add_option("--corpus", e_corpus, "directory of clean PGM images")->required();
    ev->add_option("--methods", e_methods, "pa, csc_q<stride>, cscnet")->delimiter(',');
    ev->add_option("--seeds", e_seeds, "noise seeds")->delimiter(',');
    ev->add_option("--sigma", e_sigma, "noise level")->capture_default_str()->check(CLI::NonNegativeNumber);
    ev->add_option("--checkpoint", e_checkpoint, "cscnet checkpoint");
    ev->add_option("--output", e_out, "CSV output (stdout when omitted)");
    e_flags.add_to(ev);
    spec_opt(ev);

    std::vector<std::string> args(argv, argv + argc);
    args = expand_spec(std::move(args));
    std::vector<const char*> cargs;
    for (const auto& a : args) cargs.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(cargs.size()), cargs.data());
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*noise) {
        const Image clean = read_image(n_input);
        const Image noisy = add_gaussian_noise(clean, n_sigma, n_seed);
        write_image_outputs(noisy, n_output, n_preview,
                            {{"sigma", fmt(n_sigma)},
                             {"seed", std::to_string(n_seed)},
                             {"source", fs::path(n_input).filename().string()}});
        return kExitOk;
    }

    if (*den) {
        if (d_method != "csc" && (stride_opt->count() > 0 || d_sweep)) {
            throw UsageError("--stride and --sweep apply to method csc only");
        }
        if (d_method != "cscnet" && !d_checkpoint.empty()) throw UsageError("--checkpoint applies to method cscnet only");
        const Image noisy = read_image(d_noisy);
        std::optional<Image> clean;
        if (!d_clean.empty()) clean = read_image(d_clean);
        Denoisers d = d_flags.build();
        if (d_method == "cscnet") {
            if (d_checkpoint.empty()) throw UsageError("method cscnet needs --checkpoint");
            d.cscnet = train_state_from(read_container(d_checkpoint)).params;
        }
        const Image* clean_ptr = clean ? &*clean : nullptr;

        if (d_sweep) {
            if (!clean) throw UsageError("--sweep needs --clean");
            std::vector<std::size_t> strides = d_strides;
            if (strides.empty()) {
                for (std::size_t q = 1; q <= std::max(d.dict.rows(), d.dict.cols()); ++q) strides.push_back(q);
            }
            json rows = json::array();
            std::vector<double> values;
            std::string csv = "stride,psnr,psnr_clamped\n";
            for (std::size_t q : strides) {
                const DenoiseReport rep = run_method({Method::Kind::csc, q}, noisy, d_sigma, d, clean_ptr);
                values.push_back(*rep.psnr_vs_clean);
                rows.push_back({{"stride", q}, {"psnr", *rep.psnr_vs_clean}, {"psnr_clamped", *rep.psnr_clamped_vs_clean}});
                csv += std::to_string(q) + "," + fmt(*rep.psnr_vs_clean) + "," + fmt(*rep.psnr_clamped_vs_clean) + "\n";
            }
            json j;
            j["method"] = "csc";
            j["sweep"] = rows;
            j["monotone_increasing"] = strictly_increasing(values);
            j["verdict"] = strictly_increasing(values) ? "PSNR increases strictly with the stride"
                                                       : "PSNR is not strictly increasing in the stride";
            if (!d_table.empty()) write_file_atomic(d_table, csv);
            if (!d_report.empty()) {
                write_file_atomic(d_report, dump(j));
            } else {
                std::cout << csv;
            }
            return kExitOk;
        }

        Method m;
        if (d_method == "pa") {
            m = {Method::Kind::pa, 0};
        } else if (d_method == "csc") {
            if (stride_opt->count() == 0) throw UsageError("method csc needs --stride");
            m = {Method::Kind::csc, d_stride};
        } else {
            m = {Method::Kind::cscnet, 0};
        }
        const DenoiseReport rep = run_method(m, noisy, d_sigma, d, clean_ptr);
        if (!d_output.empty()) {
            write_image_outputs(rep.estimate, d_output, d_preview, {{"method", m.label()}, {"sigma", fmt(d_sigma)}});
        } else if (!d_preview.empty()) {
            write_pgm(d_preview, rep.estimate);
        }
        json j = report_json(rep);
        j["method"] = m.label();
        if (!d_report.empty()) {
            write_file_atomic(d_report, dump(j));
        } else {
            std::cout << dump(j);
        }
        return kExitOk;
    }

    if (*tr) {
        std::vector<Image> dataset;
        for (auto& ni : load_corpus(t_corpus)) dataset.push_back(std::move(ni.image));
        TrainState state;
        TrainConfig cfg;
        if (!t_resume.empty()) {
            const Container c = read_container(t_resume);
            state = train_state_from(c);
            cfg = train_config_from(c);
        } else {
            const Preset p = preset(t_preset);
            cfg = p.train;
            cfg.seed = t_seed;
            if (t_crop) cfg.crop_size = *t_crop;
            state.params = init_params(t_seed,
                                       t_maps.value_or(p.num_maps), t_side.value_or(p.filter_side),
                                       t_stride.value_or(p.stride), t_unroll.value_or(p.unroll),
                                       cfg.crop_size, cfg.crop_size);
            state.adam = make_adam_state(state.params);
        }
        // Schedule and budget flags may extend or adjust a resumed run.
        if (t_lr) cfg.lr = *t_lr;
        if (t_sigma) cfg.sigma = *t_sigma;
        if (t_epochs) cfg.epochs = *t_epochs;
        if (t_steps) cfg.steps_per_epoch = *t_steps;
        if (t_batch) cfg.batch = *t_batch;
        if (!t_resume.empty() && (t_crop || t_maps || t_side || t_stride || t_unroll)) {
            throw UsageError("architecture and crop flags cannot change on --resume");
        }
        cfg.validate();
        const fs::path ckpt = t_checkpoint;
        state = train(dataset, cfg, std::move(state), [&](const TrainState& s) {
            write_container(ckpt, to_container(s, cfg));
        });
        write_container(ckpt, to_container(state, cfg));
        if (!t_loss.empty()) {
            std::string csv = "epoch,mean_loss,lr\n";
            for (std::size_t e = 0; e < state.loss_history.size(); ++e) {
                csv += std::to_string(e) + "," + fmt(state.loss_history[e]) + "," + fmt(state.lr_history[e]) + "\n";
            }
            write_file_atomic(t_loss, csv);
        }
        return kExitOk;
    }

    if (*ini) {
        const Preset p = preset(i_preset);
        TrainConfig cfg = p.train;
        cfg.seed = i_seed;
        TrainState state;
        state.params = init_params(i_seed, p.num_maps,
                                   p.filter_side, p.stride, p.unroll, cfg.crop_size, cfg.crop_size);
        state.adam = make_adam_state(state.params);
        write_container(i_out, to_container(state, cfg));
        return kExitOk;
    }

    if (*dc) {
        write_container(dc_out, to_container(DictSpec{dc_side, dc_atoms, !dc_no_demean}.build()));
        return kExitOk;
    }

    if (*ev) {
        const auto corpus = load_corpus(e_corpus);
        std::vector<Method> methods;
        for (const auto& s : e_methods) methods.push_back(Method::parse(s));
        if (e_seeds.empty()) throw UsageError("--seeds must not be empty");
        Denoisers d = e_flags.build();
        if (!e_checkpoint.empty()) d.cscnet = train_state_from(read_container(e_checkpoint)).params;
        const std::string csv = to_csv(evaluate(corpus, methods, e_sigma, e_seeds, d));
        if (e_out.empty()) {
            std::cout << csv;
        } else {
            write_file_atomic(e_out, csv);
        }
        return kExitOk;
    }
    return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
}
