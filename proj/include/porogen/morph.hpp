#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "porogen/grid.hpp"

namespace porogen::morph {

enum class Descriptor { S2, L, C2 };
enum class Phase { Solid = 0, Pore = 1 };
enum class Direction { X, Y, XYAveraged, SEDiagonal };
enum class Connectivity { Four = 4, Eight = 8 };

std::string_view to_string(Descriptor d);
std::string_view to_string(Phase p);
std::string_view to_string(Direction d);
Descriptor parse_descriptor(std::string_view s);
Phase parse_phase(std::string_view s);
Direction parse_direction(std::string_view s);

// A descriptor sampled at integer lags r = 0..values.size()-1.
struct CurveStatistic {
    Descriptor kind = Descriptor::S2;
    Phase phase = Phase::Pore;
    Direction direction = Direction::X;
    std::vector<double> values;

    bool compatible_with(const CurveStatistic& other) const {
        return kind == other.kind && phase == other.phase && direction == other.direction &&
               values.size() == other.values.size();
    }
};

// Largest admissible r_max for a direction (lags must leave at least one pair inside).
int max_lag(const BinaryImage& img, Direction dir);

// Non-periodic estimators: only pairs/segments lying fully inside the image count.
CurveStatistic two_point_correlation(const BinaryImage& img, Phase phase, Direction dir, int r_max);
CurveStatistic lineal_path(const BinaryImage& img, Phase phase, Direction dir, int r_max);
CurveStatistic two_point_cluster(const BinaryImage& img, Phase phase, Direction dir, int r_max,
                                 Connectivity conn = Connectivity::Four);

// Row-major labels; 0 for pixels outside the phase, clusters numbered 1..count
// in raster order of their first pixel.
struct ClusterLabels {
    int width = 0;
    int height = 0;
    int count = 0;
    std::vector<std::int32_t> labels;

    std::int32_t operator()(int x, int y) const {
        return labels[static_cast<std::size_t>(y) * static_cast<std::size_t>(width) + x];
    }
};

ClusterLabels label_clusters(const BinaryImage& img, Phase phase, Connectivity conn = Connectivity::Four);

// Normalized histogram of N x N window codes. Window pixels are flattened
// row-major with the first pixel as the most significant bit. Only nonzero
// entries are stored, sorted by code.
class PatternDistribution {
public:
    PatternDistribution() = default;
    PatternDistribution(int template_size, std::vector<std::pair<std::uint64_t, double>> entries);

    // Dense probabilities indexed by code; template_size^2 must be <= 20.
    static PatternDistribution from_dense(int template_size, std::span<const double> probabilities);

    int template_size() const noexcept { return template_size_; }
    std::size_t code_count() const noexcept;
    std::span<const std::pair<std::uint64_t, double>> entries() const noexcept { return entries_; }
    double probability(std::uint64_t code) const;
    std::vector<double> to_dense() const;
    double total() const;

private:
    int template_size_ = 0;
    std::vector<std::pair<std::uint64_t, double>> entries_;
};

// Requires N*N <= 63.
PatternDistribution pattern_distribution(const BinaryImage& img, int template_size);

// Raw window-code counts (dense, N*N <= 20) used by incremental updates.
std::vector<std::uint32_t> pattern_counts(const BinaryImage& img, int template_size);

// Code of the N x N window whose top-left pixel is (x, y).
std::uint64_t window_code(const BinaryImage& img, int x, int y, int template_size);

// Squared Euclidean distance between probability vectors.
double pattern_distance(const PatternDistribution& a, const PatternDistribution& b);

CurveStatistic average_curves(std::span<const CurveStatistic> curves);

// CSV columns: kind,phase,direction,r,value
void write_curves_csv(std::ostream& out, std::span<const CurveStatistic> curves, bool header = true);

// S2, L and C2 of one phase along the given direction, r = 0..r_max.
std::vector<CurveStatistic> descriptor_suite(const BinaryImage& img, Phase phase, Direction dir, int r_max);

} // namespace porogen::morph
