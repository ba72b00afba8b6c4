#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "porogen/tensor.hpp"

namespace porogen::nn {

inline constexpr char kCheckpointMagic[] = "POROGEN1";

struct NamedTensor {
    std::string name;
    Tensor tensor;
};

struct CheckpointData {
    nlohmann::json metadata;
    std::vector<NamedTensor> tensors;

    const Tensor& find(const std::string& name) const;
};

// Layout: 8-byte magic "POROGEN1", u64 little-endian manifest length, JSON
// manifest {metadata, tensors: [{name, shape, offset, count}]}, then the
// little-endian float64 blobs (offsets relative to the blob section).
std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes);

void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path);
CheckpointData read_checkpoint(const std::filesystem::path& path);

} // namespace porogen::nn
