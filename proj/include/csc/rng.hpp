#pragma once

#include <cstdint>
#include <initializer_list>

namespace csc {

// Purpose-specific stream ids split off a root seed. Values are part of the
// reproducibility contract; see docs/FORMATS.md.
enum class Stream : std::uint64_t {
    noise = 1,
    crop = 2,
    filters = 3,
    power_method = 4,
    shuffle = 5,
    test = 99,
};

std::uint64_t splitmix64_mix(std::uint64_t z);

/// Derives a child key from a parent key and a list of indices.
std::uint64_t derive_key(std::uint64_t root, std::initializer_list<std::uint64_t> path);

/// Counter-based generator: the i-th output is splitmix64_mix(key + (i + 1) * golden).
class CounterRng {
public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}
    CounterRng(std::uint64_t root, Stream stream, std::initializer_list<std::uint64_t> path = {});

    std::uint64_t next_u64();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Standard normal via Box-Muller; outputs are produced in pairs.
    double normal();
    /// Uniform integer in [0, bound).
    std::uint64_t below(std::uint64_t bound);

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace csc
