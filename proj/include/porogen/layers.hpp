#pragma once

#include <cstdint>

#include "porogen/autograd.hpp"

namespace porogen::nn {

struct ConvGeometry {
    int kernel = 4;
    int stride = 2;
    int padding = 1;
};

// floor((in + 2p - k) / s) + 1
int conv_output_size(int in, const ConvGeometry& g);
// (in - 1) * s - 2p + k
int conv_transpose_output_size(int in, const ConvGeometry& g);

// Cross-correlation. weight: (c_out, c_in, k, k); bias: (1, c_out, 1, 1) or null.
Var conv2d(const Var& input, const Var& weight, const Var& bias, const ConvGeometry& g);

// Adjoint of conv2d. weight: (c_in, c_out, k, k); bias: (1, c_out, 1, 1) or null.
Var conv_transpose2d(const Var& input, const Var& weight, const Var& bias, const ConvGeometry& g);

inline constexpr double kInstanceNormEps = 1e-5;

// Per (sample, channel) standardization, then gamma * x + beta per channel.
// gamma/beta: (1, c, 1, 1); pass null for the plain standardization.
Var instance_norm(const Var& input, const Var& gamma, const Var& beta, double eps = kInstanceNormEps);

// While alive, folds the sign of every relu/leaky_relu input on this thread
// into a hash. Equal signatures at x - h and x + h mean a central difference
// did not straddle an activation kink.
class KinkProbe {
public:
    KinkProbe();
    ~KinkProbe();
    KinkProbe(const KinkProbe&) = delete;
    KinkProbe& operator=(const KinkProbe&) = delete;

    std::uint64_t signature() const { return hash_; }
    void reset() { hash_ = 14695981039346656037ull; }
    void record(const Tensor& input);

private:
    KinkProbe* previous_;
    std::uint64_t hash_ = 14695981039346656037ull;
};

Var relu(const Var& input);
Var leaky_relu(const Var& input, double slope = 0.2);
Var sigmoid(const Var& input);

// Channel-wise concatenation of equally sized maps.
Var concat_channels(const Var& a, const Var& b);

// noise (n, n_z, 1, 1) is broadcast over the spatial extent of features and
// appended after the feature channels: (n, c + n_z, h, w).
Var replicate_concat(const Var& features, const Var& noise);

// Mean over (c, h, w) per sample: (n, 1, 1, 1).
Var spatial_mean(const Var& input);

} // namespace porogen::nn
