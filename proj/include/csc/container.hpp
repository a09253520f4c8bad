#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "csc/cscnet.hpp"
#include "csc/dict.hpp"
#include "csc/image.hpp"

namespace csc {

// Binary container, little-endian throughout (layout in docs/FORMATS.md):
//   magic "CSCTKIT\n", u32 version, u32 kind,
//   u32 n_meta, { u32 len, key bytes, u32 len, value bytes } sorted by key,
//   u32 n_arrays, { u32 len, name, u32 ndim, u64 dims[ndim], f64 payload } sorted by name.
inline constexpr char kContainerMagic[9] = "CSCTKIT\n";
inline constexpr std::uint32_t kContainerVersion = 1;

enum class ContainerKind : std::uint32_t { image = 1, dictionary = 2, checkpoint = 3, report = 4 };

struct Array {
    std::vector<std::uint64_t> shape;
    std::vector<double> values;
    friend bool operator==(const Array&, const Array&) = default;
};

struct Container {
    ContainerKind kind = ContainerKind::image;
    std::map<std::string, std::string> meta;
    std::map<std::string, Array> arrays;

    const Array& array(const std::string& name) const;
    const std::string& get(const std::string& key) const;

    friend bool operator==(const Container&, const Container&) = default;
};

std::vector<std::uint8_t> serialize(const Container& c);
Container deserialize(const std::vector<std::uint8_t>& bytes);

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes);
void write_file_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

void write_container(const std::filesystem::path& path, const Container& c);
Container read_container(const std::filesystem::path& path);
bool is_container(const std::filesystem::path& path);

Container to_container(const Image& img, std::map<std::string, std::string> meta = {});
Image image_from(const Container& c);

Container to_container(const LocalDictionary& dict);
LocalDictionary dictionary_from(const Container& c);

/// Checkpoint: parameters, optimizer state, progress and the training config echo.
Container to_container(const TrainState& state, const TrainConfig& cfg);
TrainState train_state_from(const Container& c);
TrainConfig train_config_from(const Container& c);

}  // namespace csc
