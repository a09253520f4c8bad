#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "csc/cscnet.hpp"
#include "csc/denoise.hpp"
#include "csc/dict.hpp"

namespace csc {

struct DictSpec {
    std::size_t patch_side = 11;
    std::size_t atoms_per_dim = 16;
    bool demean = true;

    LocalDictionary build() const;
};

struct Method {
    enum class Kind { pa, csc, cscnet };
    Kind kind = Kind::pa;
    std::size_t stride = 0;  // csc only

    std::string label() const;  // "pa", "csc_q8", "cscnet"
    static Method parse(const std::string& text);
};

struct NamedImage {
    std::string name;
    Image image;
};

/// Noise realization for image `index` under root seed `seed`.
Image noisy_version(const Image& clean, double sigma, std::uint64_t seed, std::size_t index);

struct Denoisers {
    LocalDictionary dict;
    DenoiseConfig config;
    std::optional<CscNetParams> cscnet;
};

DenoiseReport run_method(const Method& m, const Image& noisy, double sigma, const Denoisers& d,
                         const Image* clean);

struct EvalTable {
    std::vector<std::string> columns;                // method labels
    std::vector<std::string> images;                 // row labels
    std::vector<std::vector<double>> psnr;           // [image][method], mean over seeds
    std::vector<std::vector<double>> psnr_clamped;   // same, estimates clamped to [0, 255]
    std::vector<double> mean() const;                // column means over images
    std::vector<double> mean_clamped() const;
};

EvalTable evaluate(const std::vector<NamedImage>& corpus, const std::vector<Method>& methods,
                   double sigma, const std::vector<std::uint64_t>& seeds, const Denoisers& d);

/// One row per image plus an Average row when the corpus has several images.
std::string to_csv(const EvalTable& t);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable parse_csv(const std::string& text);

/// True when values[i] < values[i+1] for every i.
bool strictly_increasing(const std::vector<double>& values);

std::vector<NamedImage> load_corpus(const std::string& dir);

/// Formats with 10 significant digits.
std::string fmt_double(double v);

}  // namespace csc
