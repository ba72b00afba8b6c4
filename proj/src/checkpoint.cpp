#include "porogen/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace porogen::nn {
namespace {

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t pos) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[pos + i]) << (8 * i);
    return v;
}

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

} // namespace

const Tensor& CheckpointData::find(const std::string& name) const {
    for (const auto& t : tensors)
        if (t.name == name) return t.tensor;
    throw ValueError("checkpoint has no tensor named '" + name + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data) {
    nlohmann::json manifest;
    manifest["metadata"] = data.metadata;
    manifest["tensors"] = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& t : data.tensors) {
        const Shape s = t.tensor.shape();
        manifest["tensors"].push_back({{"name", t.name},
                                       {"shape", {s.n, s.c, s.h, s.w}},
                                       {"offset", offset},
                                       {"count", t.tensor.numel()}});
        offset += 8 * t.tensor.numel();
    }
    const std::string text = manifest.dump();

    std::vector<std::uint8_t> out(kCheckpointMagic, kCheckpointMagic + kMagicLen);
    put_u64(out, text.size());
    out.insert(out.end(), text.begin(), text.end());
    out.reserve(out.size() + offset);
    for (const auto& t : data.tensors)
        for (double v : t.tensor.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
    return out;
}

CheckpointData decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < kMagicLen + 8 || std::memcmp(bytes.data(), kCheckpointMagic, kMagicLen) != 0)
        throw ParseError("not a POROGEN1 checkpoint", 0);
    const std::uint64_t len = get_u64(bytes, kMagicLen);
    const std::size_t manifest_pos = kMagicLen + 8;
    if (len > bytes.size() - manifest_pos) throw ParseError("truncated checkpoint manifest", manifest_pos);
    nlohmann::json manifest;
    try {
        manifest = nlohmann::json::parse(bytes.begin() + manifest_pos, bytes.begin() + manifest_pos + len);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid checkpoint manifest: ") + e.what(), manifest_pos);
    }
    const std::size_t blob_pos = manifest_pos + len;

    CheckpointData data;
    data.metadata = manifest.value("metadata", nlohmann::json::object());
    for (const auto& entry : manifest.at("tensors")) {
        const auto dims = entry.at("shape").get<std::vector<int>>();
        if (dims.size() != 4) throw ParseError("tensor shape must have 4 dimensions", manifest_pos);
        const Shape shape{dims[0], dims[1], dims[2], dims[3]};
        const auto offset = entry.at("offset").get<std::uint64_t>();
        const auto count = entry.at("count").get<std::uint64_t>();
        if (count != shape.numel()) throw ParseError("tensor count does not match its shape", manifest_pos);
        const std::size_t start = blob_pos + offset;
        if (offset > bytes.size() || start + 8 * count > bytes.size())
            throw ParseError("truncated tensor blob for '" + entry.at("name").get<std::string>() + "'", start);
        std::vector<double> values(count);
        for (std::size_t i = 0; i < count; ++i) values[i] = std::bit_cast<double>(get_u64(bytes, start + 8 * i));
        data.tensors.push_back({entry.at("name").get<std::string>(), Tensor(shape, std::move(values))});
    }
    return data;
}

void write_checkpoint(const CheckpointData& data, const std::filesystem::path& path) {
    const auto bytes = encode_checkpoint(data);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

} // namespace porogen::nn
