#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "porogen/grid.hpp"
#include "porogen/train.hpp"

namespace porogen::synth {

enum class MediumKind { Blob, Disks, AnisotropicBlob };

struct MediumSpec {
    MediumKind kind = MediumKind::Blob;
    double porosity = 0.3;
    double correlation_length = 3.0; // pixels
    std::uint64_t seed = 0;

    void validate() const;
};

enum class MaskKind { CornerSquare, RandomSquares, HorizontalStrip, VerticalStrip };

struct MaskSpec {
    MaskKind kind = MaskKind::CornerSquare;
    int extent = 26; // square side, or strip thickness
    int count = 1;   // squares for RandomSquares

    void validate(int size) const;
};

// "blob", "disks", "aniso"
MediumKind parse_medium_kind(const std::string& s);
std::string to_string(MediumKind k);

// "corner:26", "squares:13x4", "hstrip:20", "vstrip:10"
MaskSpec parse_mask_spec(const std::string& s);
std::string to_string(const MaskSpec& m);

// Square size x size medium; the pore set is the round(phi*size^2) largest
// field values (ties broken by pixel index), so porosity is exact.
BinaryImage generate_medium(const MediumSpec& spec, int size);

Mask generate_mask(const MaskSpec& spec, int size, std::uint64_t seed);
// random_position moves squares and strips to a seeded offset.
Mask generate_mask_at(const MaskSpec& spec, int size, std::uint64_t seed, bool random_position);

struct DatasetManifest {
    int sample_count = 0;
    int image_size = 0;
    std::vector<int> train;
    std::vector<int> test;
    MediumSpec medium;
    MaskSpec mask;
    bool random_mask_placement = false;
    std::uint64_t seed = 0;
};

nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);

struct DatasetOptions {
    int sample_count = 600;
    int image_size = 128;
    MediumSpec medium;
    MaskSpec mask;
    bool random_mask_placement = false;
    std::uint64_t seed = 0;
    double train_fraction = 0.7;
};

// Writes pairs/NNNN_{input,mask,target}.pgm and manifest.json under dir.
DatasetManifest build_dataset(const DatasetOptions& opts, const std::filesystem::path& dir);

// Seeded 70/30-style split: round(train_fraction * n) train indices, rest test,
// both sorted ascending.
void split_indices(int n, double train_fraction, std::uint64_t seed, std::vector<int>& train, std::vector<int>& test);

struct Dataset {
    DatasetManifest manifest;
    std::vector<train::TrainingPair> pairs; // indexed by sample number
};

Dataset load_dataset(const std::filesystem::path& dir);

std::string pair_stem(int index);

} // namespace porogen::synth
