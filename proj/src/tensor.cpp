#include "porogen/tensor.hpp"

#include <algorithm>

namespace porogen::nn {

std::string Shape::str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(shape) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) throw ValueError("negative tensor dimension");
    data_.assign(shape.numel(), fill);
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (shape.n < 0 || shape.c < 0 || shape.h < 0 || shape.w < 0) throw ValueError("negative tensor dimension");
    if (data_.size() != shape.numel())
        throw ValueError("tensor data length " + std::to_string(data_.size()) + " does not match shape " + shape.str());
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor& Tensor::operator+=(const Tensor& other) {
    if (other.shape_ != shape_) throw ValueError("tensor shape mismatch in +=: " + shape_.str() + " vs " + other.shape_.str());
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

double dot(const Tensor& a, const Tensor& b) {
    if (a.shape() != b.shape()) throw ValueError("tensor shape mismatch in dot");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.numel(); ++i) sum += a[i] * b[i];
    return sum;
}

} // namespace porogen::nn
