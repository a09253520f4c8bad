#include "csc/experiment.hpp"

#include <cstdio>
#include <sstream>

#include "csc/errors.hpp"
#include "csc/pgm.hpp"
#include "csc/rng.hpp"

namespace csc {

LocalDictionary DictSpec::build() const {
    return make_overcomplete_dct(patch_side, atoms_per_dim, DctOptions{demean});
}

std::string Method::label() const {
    switch (kind) {
        case Kind::pa: return "pa";
        case Kind::csc: return "csc_q" + std::to_string(stride);
        case Kind::cscnet: return "cscnet";
    }
    return "?";
}

Method Method::parse(const std::string& text) {
    if (text == "pa") return {Kind::pa, 0};
    if (text == "cscnet") return {Kind::cscnet, 0};
    if (text.rfind("csc_q", 0) == 0 || text.rfind("csc:", 0) == 0) {
        const std::string digits = text.substr(text[3] == ':' ? 4 : 5);
        try {
            std::size_t used = 0;
            const auto q = std::stoul(digits, &used);
            if (used == digits.size() && q > 0) return {Kind::csc, q};
        } catch (const std::exception&) {
        }
    }
    throw UsageError("unknown method '" + text + "' (expected pa, cscnet, csc_q<stride>)");
}

Image noisy_version(const Image& clean, double sigma, std::uint64_t seed, std::size_t index) {
    return add_gaussian_noise(clean, sigma, derive_key(seed, {static_cast<std::uint64_t>(index)}));
}

DenoiseReport run_method(const Method& m, const Image& noisy, double sigma, const Denoisers& d,
                         const Image* clean) {
    switch (m.kind) {
        case Method::Kind::pa: return denoise_pa(noisy, d.dict, sigma, d.config, clean);
        case Method::Kind::csc: return denoise_strided_csc(noisy, d.dict, sigma, m.stride, d.config, clean);
        case Method::Kind::cscnet: {
            if (!d.cscnet) throw UsageError("method cscnet needs a checkpoint");
            DenoiseReport rep;
            rep.estimate = forward(*d.cscnet, noisy).estimate;
            rep.config_echo["method"] = "cscnet";
            rep.config_echo["stride"] = std::to_string(d.cscnet->stride);
            rep.config_echo["unroll"] = std::to_string(d.cscnet->unroll);
            rep.config_echo["num_maps"] = std::to_string(d.cscnet->num_maps);
            rep.config_echo["psnr"] = "unclamped (primary) and clamped to [0,255]";
            if (clean) {
                rep.psnr_vs_clean = psnr(*clean, rep.estimate);
                rep.psnr_clamped_vs_clean = psnr_clamped(*clean, rep.estimate);
            }
            return rep;
        }
    }
    throw UsageError("unknown method");
}

namespace {

std::vector<double> column_means(const std::vector<std::vector<double>>& m) {
    if (m.empty()) return {};
    std::vector<double> out(m[0].size(), 0.0);
    for (const auto& row : m) {
        for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
    }
    for (double& v : out) v /= static_cast<double>(m.size());
    return out;
}

}  // namespace

std::vector<double> EvalTable::mean() const { return column_means(psnr); }
std::vector<double> EvalTable::mean_clamped() const { return column_means(psnr_clamped); }

EvalTable evaluate(const std::vector<NamedImage>& corpus, const std::vector<Method>& methods,
                   double sigma, const std::vector<std::uint64_t>& seeds, const Denoisers& d) {
    if (corpus.empty()) throw DataError("evaluation corpus is empty");
    if (seeds.empty()) throw UsageError("at least one seed is required");
    EvalTable t;
    for (const auto& m : methods) t.columns.push_back(m.label());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        t.images.push_back(corpus[i].name);
        std::vector<double> row(methods.size(), 0.0);
        std::vector<double> row_clamped(methods.size(), 0.0);
        for (std::uint64_t seed : seeds) {
            const Image noisy = noisy_version(corpus[i].image, sigma, seed, i);
            for (std::size_t j = 0; j < methods.size(); ++j) {
                const DenoiseReport rep = run_method(methods[j], noisy, sigma, d, &corpus[i].image);
                row[j] += *rep.psnr_vs_clean;
                row_clamped[j] += *rep.psnr_clamped_vs_clean;
            }
        }
        for (double& v : row) v /= static_cast<double>(seeds.size());
        for (double& v : row_clamped) v /= static_cast<double>(seeds.size());
        t.psnr.push_back(std::move(row));
        t.psnr_clamped.push_back(std::move(row_clamped));
    }
    return t;
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string to_csv(const EvalTable& t) {
    std::ostringstream out;
    out << "image";
    for (const auto& c : t.columns) out << ',' << c;
    for (const auto& c : t.columns) out << ',' << c << "_clamped";
    out << '\n';
    auto emit = [&](const std::string& name, const std::vector<double>& a, const std::vector<double>& b) {
        out << name;
        for (double v : a) out << ',' << fmt_double(v);
        for (double v : b) out << ',' << fmt_double(v);
        out << '\n';
    };
    for (std::size_t i = 0; i < t.images.size(); ++i) emit(t.images[i], t.psnr[i], t.psnr_clamped[i]);
    if (t.images.size() > 1) emit("Average", t.mean(), t.mean_clamped());
    return out.str();
}

CsvTable parse_csv(const std::string& text) {
    CsvTable t;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

bool strictly_increasing(const std::vector<double>& values) {
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (!(values[i - 1] < values[i])) return false;
    }
    return true;
}

std::vector<NamedImage> load_corpus(const std::string& dir) {
    std::vector<NamedImage> out;
    for (const auto& f : corpus_files(dir)) out.push_back({f.stem().string(), read_pgm(f)});
    return out;
}

}  // namespace csc
