#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "porogen/grid.hpp"
#include "porogen/morph.hpp"

namespace porogen::report {

struct EvalOptions {
    morph::Phase phase = morph::Phase::Pore;
    morph::Direction direction = morph::Direction::XYAveraged;
    int r_max = 0; // 0 = half the image side, clipped to the admissible lag
};

struct EvalReport {
    std::vector<double> porosities;
    double porosity_mean = 0.0;
    double porosity_std = 0.0; // sample standard deviation (n - 1)
    std::optional<double> target_porosity;
    std::vector<morph::CurveStatistic> mean_curves;   // S2, L, C2 averaged over realizations
    std::vector<morph::CurveStatistic> target_curves; // empty without a target
    std::vector<double> fidelity;                     // per realization, before overwrite
    double fidelity_mean = 0.0;
    double diversity = 0.0;
    std::int64_t unknown_pixels = 0;
};

// Mean pairwise Hamming distance on unknown pixels divided by their count.
double diversity_score(std::span<const BinaryImage> images, const ConditionalInput& cond);

double mean(std::span<const double> v);
double sample_std(std::span<const double> v);

// "0.099 ± 0.003"
std::string format_mean_std(double mean, double std, int decimals = 3);

// `raw` holds the binarized outputs before hard-data overwrite; when empty the
// fidelity is measured on `images` themselves.
EvalReport evaluate(std::span<const BinaryImage> images, std::span<const BinaryImage> raw,
                    const ConditionalInput& cond, const BinaryImage* target, const EvalOptions& opts = {});

// Largest absolute gap between matching target and mean curves.
double max_curve_gap(std::span<const morph::CurveStatistic> target, std::span<const morph::CurveStatistic> mean);

nlohmann::json to_json(const EvalReport& r);

// Human-readable summary; the first line is the porosity mean ± std.
std::string summary(const EvalReport& r);

// CSV columns: series,kind,phase,direction,r,value (series = target or mean)
void write_curves_csv(std::ostream& out, const EvalReport& r);

// CSV columns: realization,porosity,fidelity
void write_porosity_csv(std::ostream& out, const EvalReport& r);

struct PlotSeries {
    std::vector<morph::CurveStatistic> target;
    std::vector<std::vector<morph::CurveStatistic>> realizations;
    std::vector<morph::CurveStatistic> average;
};

// One panel per descriptor: realizations in grey, their average and the target
// on top, with the max target/average gap in each panel title.
std::string render_svg(const PlotSeries& series);

} // namespace porogen::report
