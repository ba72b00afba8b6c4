#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "porogen/error.hpp"

namespace porogen {

// Row-major 2D raster. Index (x, y) maps to y * width + x.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int width, int height, T fill = T{}) : width_(width), height_(height) {
        if (width < 0 || height < 0) throw ValueError("negative image dimensions");
        data_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
    }
    Grid(int width, int height, std::vector<T> data)
        : width_(width), height_(height), data_(std::move(data)) {
        if (width < 0 || height < 0) throw ValueError("negative image dimensions");
        if (data_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
            throw ValueError("pixel count does not match width*height");
    }

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T operator()(int x, int y) const { return data_[index(x, y)]; }
    std::span<const T> data() const noexcept { return data_; }

    bool same_shape(int width, int height) const noexcept {
        return width_ == width && height_ == height;
    }
    template <typename U>
    bool same_shape(const Grid<U>& other) const noexcept {
        return same_shape(other.width(), other.height());
    }

    friend bool operator==(const Grid&, const Grid&) = default;

protected:
    std::size_t index(int x, int y) const noexcept {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

// Two-phase microstructure: 1 = pore, 0 = solid.
class BinaryImage : public Grid<std::uint8_t> {
public:
    BinaryImage() = default;
    BinaryImage(int width, int height, bool pore = false);
    BinaryImage(int width, int height, std::vector<std::uint8_t> phases);

    bool pore(int x, int y) const { return (*this)(x, y) != 0; }
    void set(int x, int y, bool pore) { data_[index(x, y)] = pore ? 1 : 0; }
    void set(std::size_t i, bool pore) { data_[i] = pore ? 1 : 0; }
    std::size_t pore_count() const;
};

// Per-pixel pore probability in [0, 1].
class SoftImage : public Grid<double> {
public:
    SoftImage() = default;
    SoftImage(int width, int height, double fill = 0.0);
    SoftImage(int width, int height, std::vector<double> values);

    static SoftImage from_binary(const BinaryImage& img);

    void set(int x, int y, double v);
    double mean() const;
};

// 1 = informed (hard data), 0 = unknown.
class Mask : public Grid<std::uint8_t> {
public:
    Mask() = default;
    Mask(int width, int height, bool informed = false);
    Mask(int width, int height, std::vector<std::uint8_t> flags);

    bool informed(int x, int y) const { return (*this)(x, y) != 0; }
    void set(int x, int y, bool informed) { data_[index(x, y)] = informed ? 1 : 0; }
    std::size_t informed_count() const;
};

// Network conditioning: hard-data values (0 at unknown pixels) plus the mask.
class ConditionalInput {
public:
    ConditionalInput(SoftImage values, Mask mask);

    const SoftImage& values() const noexcept { return values_; }
    const Mask& mask() const noexcept { return mask_; }
    int width() const noexcept { return values_.width(); }
    int height() const noexcept { return values_.height(); }

private:
    SoftImage values_;
    Mask mask_;
};

double porosity(const BinaryImage& img);

BinaryImage binarize(const SoftImage& img, double threshold = 0.5);

ConditionalInput make_conditional_input(const BinaryImage& target, const Mask& mask);

// Hard-data layer of a conditional input as a binary image (unknown pixels solid).
BinaryImage conditional_values_image(const ConditionalInput& cond);

// 8-bit gray raster as stored in a PGM file.
using GrayImage = Grid<std::uint8_t>;

// Accepts P2 and P5 with maxval 255.
GrayImage parse_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_pgm(const GrayImage& img);

GrayImage read_pgm(const std::filesystem::path& path);
void write_pgm(const GrayImage& img, const std::filesystem::path& path);

// Gray >= 128 is pore.
BinaryImage load_image(const std::filesystem::path& path);
void save_image(const BinaryImage& img, const std::filesystem::path& path);

// Gray >= 128 is informed; written as 255 / 0.
Mask load_mask(const std::filesystem::path& path);
void save_mask(const Mask& mask, const std::filesystem::path& path);

} // namespace porogen
