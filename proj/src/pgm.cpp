#include <cctype>
#include <fstream>
#include <iterator>

#include "porogen/grid.hpp"

namespace porogen {
namespace {

class PgmReader {
public:
    explicit PgmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }
    // Offset of the first byte of the most recent integer token.
    std::size_t token_start() const { return token_start_; }
    bool at_end() const { return pos_ >= bytes_.size(); }

    // Skips whitespace and '#' comments running to end of line.
    void skip_separators() {
        while (!at_end()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (!at_end() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
            } else if (std::isspace(c)) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_uint(const char* what) {
        skip_separators();
        const std::size_t start = pos_;
        token_start_ = start;
        if (at_end()) throw ParseError(std::string("unexpected end of file reading ") + what, pos_);
        long value = 0;
        while (!at_end() && std::isdigit(bytes_[pos_])) {
            value = value * 10 + (bytes_[pos_] - '0');
            if (value > 1'000'000'000L) throw ParseError(std::string(what) + " too large", start);
            ++pos_;
        }
        if (pos_ == start) throw ParseError(std::string("expected integer for ") + what, start);
        if (!at_end() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#')
            throw ParseError(std::string("unexpected character after ") + what, pos_);
        return value;
    }

    std::uint8_t byte_at(std::size_t i) const { return bytes_[i]; }
    std::size_t remaining() const { return bytes_.size() - pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
    std::size_t token_start_ = 0;
};

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("failed reading " + path.string());
    return bytes;
}

} // namespace

GrayImage parse_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
        throw ParseError("unsupported magic number (expected P2 or P5)", 0);
    const bool binary = bytes[1] == '5';

    PgmReader reader(bytes);
    reader.advance(2);
    if (reader.at_end() || !(std::isspace(reader.byte_at(2)) || reader.byte_at(2) == '#'))
        throw ParseError("malformed magic number", 2);
    const long width = reader.read_uint("width");
    const std::size_t width_offset = reader.token_start();
    const long height = reader.read_uint("height");
    const std::size_t height_offset = reader.token_start();
    const long maxval = reader.read_uint("maxval");
    const std::size_t maxval_offset = reader.token_start();
    if (width <= 0) throw ParseError("image width must be positive", width_offset);
    if (height <= 0) throw ParseError("image height must be positive", height_offset);
    if (maxval != 255) throw ParseError("unsupported maxval (only 255)", maxval_offset);

    const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    std::vector<std::uint8_t> pixels(count);
    if (binary) {
        // Exactly one whitespace byte separates the header from the raster.
        if (reader.at_end()) throw ParseError("truncated header", reader.pos());
        reader.advance(1);
        if (reader.remaining() < count)
            throw ParseError("truncated payload: expected " + std::to_string(count) + " bytes, got " +
                                 std::to_string(reader.remaining()),
                             reader.pos());
        for (std::size_t i = 0; i < count; ++i) pixels[i] = reader.byte_at(reader.pos() + i);
    } else {
        for (std::size_t i = 0; i < count; ++i) {
            const long v = reader.read_uint("pixel");
            if (v > maxval) throw ParseError("pixel value exceeds maxval", reader.token_start());
            pixels[i] = static_cast<std::uint8_t>(v);
        }
    }
    return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

GrayImage read_pgm(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    return parse_pgm(bytes);
}

void write_pgm(const GrayImage& img, const std::filesystem::path& path) {
    const auto bytes = encode_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

namespace {

std::vector<std::uint8_t> threshold_gray(const GrayImage& gray) {
    std::vector<std::uint8_t> bits(gray.size());
    for (std::size_t i = 0; i < bits.size(); ++i) bits[i] = gray.data()[i] >= 128 ? 1 : 0;
    return bits;
}

GrayImage to_gray(int width, int height, std::span<const std::uint8_t> bits) {
    std::vector<std::uint8_t> gray(bits.size());
    for (std::size_t i = 0; i < gray.size(); ++i) gray[i] = bits[i] ? 255 : 0;
    return GrayImage(width, height, std::move(gray));
}

} // namespace

BinaryImage load_image(const std::filesystem::path& path) {
    const auto gray = read_pgm(path);
    return BinaryImage(gray.width(), gray.height(), threshold_gray(gray));
}

void save_image(const BinaryImage& img, const std::filesystem::path& path) {
    write_pgm(to_gray(img.width(), img.height(), img.data()), path);
}

Mask load_mask(const std::filesystem::path& path) {
    const auto gray = read_pgm(path);
    return Mask(gray.width(), gray.height(), threshold_gray(gray));
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
    write_pgm(to_gray(mask.width(), mask.height(), mask.data()), path);
}

} // namespace porogen
