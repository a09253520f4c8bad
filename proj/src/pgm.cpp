#include "csc/pgm.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string>

#include "csc/container.hpp"
#include "csc/errors.hpp"

namespace csc {

namespace {

class HeaderReader {
public:
    explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::size_t number() {
        skip_space_and_comments();
        std::size_t value = 0;
        std::size_t digits = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
            ++pos_;
            ++digits;
        }
        if (digits == 0) throw DataError("malformed PGM header");
        return value;
    }

    std::size_t pos() const { return pos_; }
    void advance() { ++pos_; }

private:
    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 2;
};

}  // namespace

Image decode_pgm(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        throw DataError("not a binary PGM (P5) file");
    }
    HeaderReader hdr(bytes);
    const std::size_t width = hdr.number();
    const std::size_t height = hdr.number();
    const std::size_t maxval = hdr.number();
    if (width == 0 || height == 0) throw DataError("PGM has zero size");
    if (maxval == 0 || maxval > 255) throw DataError("only 8-bit PGM is supported");
    hdr.advance();  // single whitespace byte before the raster
    if (bytes.size() < hdr.pos() + width * height) throw DataError("truncated PGM raster");
    std::vector<double> data(width * height);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = bytes[hdr.pos() + i];
    return Image(height, width, std::move(data));
}

Image read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

std::vector<std::uint8_t> encode_pgm(const Image& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(header.size() + img.size());
    for (double v : img.data()) {
        out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)));
    }
    return out;
}

void write_pgm(const std::filesystem::path& path, const Image& img) {
    write_file_atomic(path, encode_pgm(img));
}

Image read_image(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), kContainerMagic, 8) == 0) {
        return image_from(deserialize(bytes));
    }
    return decode_pgm(bytes);
}

std::vector<std::filesystem::path> corpus_files(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) {
        throw DataError("corpus directory not found: " + dir.string());
    }
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".pgm") {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw DataError("corpus contains no .pgm files: " + dir.string());
    return files;
}

std::vector<Image> read_corpus(const std::filesystem::path& dir) {
    std::vector<Image> out;
    for (const auto& f : corpus_files(dir)) out.push_back(read_pgm(f));
    return out;
}

}  // namespace csc
