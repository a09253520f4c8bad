#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "csc/image.hpp"

namespace csc {

/// Binary P5, maxval <= 255.
Image read_pgm(const std::filesystem::path& path);
Image decode_pgm(const std::vector<std::uint8_t>& bytes);

/// Rounds and clamps to [0, 255].
std::vector<std::uint8_t> encode_pgm(const Image& img);
void write_pgm(const std::filesystem::path& path, const Image& img);

/// Reads a PGM or a float image container, detected by magic bytes.
Image read_image(const std::filesystem::path& path);

std::vector<Image> read_corpus(const std::filesystem::path& dir);
std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& dir);

}  // namespace csc
