#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace csc {

struct Offset {
    std::size_t row = 0;
    std::size_t col = 0;
    friend bool operator==(const Offset&, const Offset&) = default;
};

/// m sparse maps on a stride-q lattice. data is map-major: map j, lattice site
/// (i, k) lives at j * lattice_h * lattice_w + i * lattice_w + k. The needle of a
/// site is the length-m fiber across maps.
struct FeatureMaps {
    std::size_t num_maps = 0;
    std::size_t lattice_h = 0;
    std::size_t lattice_w = 0;
    std::size_t stride = 1;
    Offset offset;
    std::vector<double> data;

    FeatureMaps() = default;
    FeatureMaps(std::size_t maps, std::size_t lh, std::size_t lw, std::size_t q, Offset k)
        : num_maps(maps), lattice_h(lh), lattice_w(lw), stride(q), offset(k),
          data(maps * lh * lw, 0.0) {}

    std::size_t sites() const { return lattice_h * lattice_w; }
    std::size_t size() const { return data.size(); }

    double& at(std::size_t map, std::size_t i, std::size_t k) {
        return data[(map * lattice_h + i) * lattice_w + k];
    }
    double at(std::size_t map, std::size_t i, std::size_t k) const {
        return data[(map * lattice_h + i) * lattice_w + k];
    }
    std::span<double> map(std::size_t j) { return {data.data() + j * sites(), sites()}; }
    std::span<const double> map(std::size_t j) const { return {data.data() + j * sites(), sites()}; }

    std::vector<double> needle(std::size_t i, std::size_t k) const;

    bool same_shape(const FeatureMaps& o) const {
        return num_maps == o.num_maps && lattice_h == o.lattice_h && lattice_w == o.lattice_w &&
               stride == o.stride && offset == o.offset;
    }
    FeatureMaps zeros_like() const { return {num_maps, lattice_h, lattice_w, stride, offset}; }
    std::size_t count_nonzero() const;

    friend bool operator==(const FeatureMaps&, const FeatureMaps&) = default;
};

}  // namespace csc
