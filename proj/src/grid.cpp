#include "porogen/grid.hpp"

#include <algorithm>
#include <numeric>

namespace porogen {

BinaryImage::BinaryImage(int width, int height, bool pore)
    : Grid(width, height, static_cast<std::uint8_t>(pore ? 1 : 0)) {}

BinaryImage::BinaryImage(int width, int height, std::vector<std::uint8_t> phases)
    : Grid(width, height, std::move(phases)) {
    if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; }))
        throw ValueError("binary image values must be 0 or 1");
}

std::size_t BinaryImage::pore_count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

SoftImage::SoftImage(int width, int height, double fill) : Grid(width, height, fill) {
    if (!(fill >= 0.0 && fill <= 1.0)) throw ValueError("soft image values must lie in [0,1]");
}

SoftImage::SoftImage(int width, int height, std::vector<double> values)
    : Grid(width, height, std::move(values)) {
    for (double v : data_)
        if (!(v >= 0.0 && v <= 1.0)) throw ValueError("soft image values must lie in [0,1]");
}

SoftImage SoftImage::from_binary(const BinaryImage& img) {
    std::vector<double> values(img.data().begin(), img.data().end());
    return SoftImage(img.width(), img.height(), std::move(values));
}

void SoftImage::set(int x, int y, double v) {
    if (!(v >= 0.0 && v <= 1.0)) throw ValueError("soft image values must lie in [0,1]");
    data_[index(x, y)] = v;
}

double SoftImage::mean() const {
    if (data_.empty()) throw ValueError("mean of empty image");
    return std::accumulate(data_.begin(), data_.end(), 0.0) / static_cast<double>(data_.size());
}

Mask::Mask(int width, int height, bool informed)
    : Grid(width, height, static_cast<std::uint8_t>(informed ? 1 : 0)) {}

Mask::Mask(int width, int height, std::vector<std::uint8_t> flags)
    : Grid(width, height, std::move(flags)) {
    if (std::any_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v > 1; }))
        throw ValueError("mask values must be 0 or 1");
}

std::size_t Mask::informed_count() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

ConditionalInput::ConditionalInput(SoftImage values, Mask mask)
    : values_(std::move(values)), mask_(std::move(mask)) {
    if (!values_.same_shape(mask_)) throw ValueError("conditional values and mask differ in shape");
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_.data()[i] == 0 && values_.data()[i] != 0.0)
            throw ValueError("conditional values must be 0 at unknown pixels");
}

double porosity(const BinaryImage& img) {
    if (img.empty()) throw ValueError("porosity of zero-area image");
    return static_cast<double>(img.pore_count()) / static_cast<double>(img.size());
}

BinaryImage binarize(const SoftImage& img, double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) throw ValueError("threshold must lie in (0,1)");
    std::vector<std::uint8_t> phases(img.size());
    std::transform(img.data().begin(), img.data().end(), phases.begin(),
                   [threshold](double v) { return static_cast<std::uint8_t>(v >= threshold ? 1 : 0); });
    return BinaryImage(img.width(), img.height(), std::move(phases));
}

ConditionalInput make_conditional_input(const BinaryImage& target, const Mask& mask) {
    if (!target.same_shape(mask)) throw ValueError("target and mask differ in shape");
    std::vector<double> values(target.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i)
        if (mask.data()[i]) values[i] = target.data()[i];
    return ConditionalInput(SoftImage(target.width(), target.height(), std::move(values)), mask);
}

BinaryImage conditional_values_image(const ConditionalInput& cond) {
    return binarize(cond.values(), 0.5);
}

} // namespace porogen
