#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "porogen/grid.hpp"
#include "porogen/morph.hpp"

namespace porogen::anneal {

struct AnnealConfig {
    double initial_temperature = 1e-6;
    double cooling = 0.95; // temperature multiplier per sweep
    int sweeps = 200;      // one sweep = one proposal per unknown pixel
    double pattern_weight = 1.0;
    double porosity_weight = 1.0;
    double s2_weight = 0.0;
    int template_size = 3;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TargetStats {
    morph::PatternDistribution pattern;
    double porosity = 0.0;
    // Pore-phase S2 averaged over X and Y; used when s2_weight > 0.
    std::optional<morph::CurveStatistic> s2;
};

TargetStats target_stats_from_image(const BinaryImage& img, int template_size, int s2_r_max = 0);

struct EnergyBreakdown {
    double pattern = 0.0;
    double porosity = 0.0;
    double s2 = 0.0;
    double total = 0.0;
};

// Energy evaluated from scratch on a binary image.
EnergyBreakdown energy(const BinaryImage& img, const TargetStats& target, const AnnealConfig& cfg);

struct TracePoint {
    int sweep = 0;
    double temperature = 0.0;
    double pattern_energy = 0.0;
    double total_energy = 0.0;
};

struct AnnealResult {
    BinaryImage image;
    std::vector<TracePoint> trace;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    // Largest |incremental - recomputed| energy seen at per-sweep validation.
    double max_drift = 0.0;
    std::int64_t accepted = 0;
    std::int64_t proposed = 0;
};

// Simulated annealing over the unknown pixels with porosity-preserving swap
// moves; informed pixels are never touched.
AnnealResult anneal_reconstruct(const ConditionalInput& cond, const TargetStats& target, const AnnealConfig& cfg);

// CSV columns: sweep,temperature,pattern_energy,total_energy
void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace);

} // namespace porogen::anneal
