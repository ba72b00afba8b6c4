#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "porogen/checkpoint.hpp"
#include "porogen/grid.hpp"
#include "porogen/layers.hpp"

namespace porogen::models {

enum class NormOrder { ActThenNorm, NormThenAct };

struct NetConfig {
    int image_size = 128;
    int base_channels = 64;
    int n_z = 8;
    int max_channels = 512;
    double leaky_slope = 0.2;
    NormOrder order = NormOrder::ActThenNorm;
    // Encoder levels; 0 means log2(image_size), i.e. down to a 1x1 code.
    int depth = 0;

    int levels() const;
    void validate() const;
};

nlohmann::json to_json(const NetConfig& cfg);
// Missing keys keep the defaults of `base`.
NetConfig net_config_from_json(const nlohmann::json& j, NetConfig base = {});

// Conditioning channels fed to both networks: hard-data values and mask.
inline constexpr int kConditionChannels = 2;

// Writes cond into sample n of a (batch, 2, h, w) tensor.
void write_condition(nn::Tensor& t, int n, const ConditionalInput& cond);
void write_image(nn::Tensor& t, int n, const SoftImage& img);
void write_image(nn::Tensor& t, int n, const BinaryImage& img);
SoftImage read_image(const nn::Tensor& t, int n);

struct ConvBlock {
    nn::Var weight;
    nn::Var bias;
    nn::Var gamma; // null when the block has no normalization
    nn::Var beta;
    nn::ConvGeometry geometry;
};

// U-Net encoder/decoder with noise replicated and concatenated in front of
// every encoder convolution.
class Generator {
public:
    Generator(NetConfig cfg, std::uint64_t seed);

    const NetConfig& config() const noexcept { return cfg_; }

    // cond: (n, 2, s, s); noise: (n, n_z, 1, 1) -> (n, 1, s, s) in (0, 1).
    nn::Var forward(const nn::Var& cond, const nn::Var& noise) const;

    std::vector<nn::Var> parameters() const;
    std::vector<nn::NamedTensor> named_tensors() const;
    void load(const nn::CheckpointData& data);
    std::size_t parameter_count() const;

private:
    NetConfig cfg_;
    std::vector<ConvBlock> encoder_;
    std::vector<ConvBlock> decoder_; // decoder_[i] produces the map at encoder level i's input size
};

// Five convolutions over the (condition, image) pair; sigmoid map averaged
// to one probability per sample.
class Discriminator {
public:
    Discriminator(NetConfig cfg, std::uint64_t seed);

    const NetConfig& config() const noexcept { return cfg_; }

    // cond: (n, 2, s, s); image: (n, 1, s, s) -> (n, 1, 1, 1).
    nn::Var forward(const nn::Var& cond, const nn::Var& image) const;

    std::vector<nn::Var> parameters() const;
    std::vector<nn::NamedTensor> named_tensors() const;
    void load(const nn::CheckpointData& data);
    std::size_t parameter_count() const;
    const std::vector<ConvBlock>& layers() const noexcept { return layers_; }

private:
    NetConfig cfg_;
    std::vector<ConvBlock> layers_;
};

Generator build_generator(const NetConfig& cfg, std::uint64_t seed);
Discriminator build_discriminator(const NetConfig& cfg, std::uint64_t seed);

// Single-sample conveniences. z must have n_z entries.
SoftImage generator_forward(const Generator& g, const ConditionalInput& cond, std::span<const double> z);
double discriminator_forward(const Discriminator& d, const ConditionalInput& cond, const SoftImage& img);

// Marks parameters non-trainable for its lifetime (no gradient bookkeeping).
class FrozenScope {
public:
    explicit FrozenScope(std::vector<nn::Var> params);
    ~FrozenScope();
    FrozenScope(const FrozenScope&) = delete;
    FrozenScope& operator=(const FrozenScope&) = delete;

private:
    std::vector<nn::Var> params_;
    std::vector<bool> previous_;
};

} // namespace porogen::models
