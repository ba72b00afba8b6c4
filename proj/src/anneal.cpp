#include "porogen/anneal.hpp"

#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "porogen/random.hpp"

namespace porogen::anneal {

void AnnealConfig::validate() const {
    if (!(initial_temperature > 0.0)) throw ValueError("initial temperature must be positive");
    if (!(cooling > 0.0 && cooling < 1.0)) throw ValueError("cooling factor must lie in (0,1)");
    if (sweeps < 0) throw ValueError("sweeps must be nonnegative");
    if (!(pattern_weight >= 0.0 && porosity_weight >= 0.0 && s2_weight >= 0.0))
        throw ValueError("energy weights must be nonnegative");
    if (template_size < 1 || template_size * template_size > 20) throw ValueError("template size must satisfy N*N <= 20");
}

TargetStats target_stats_from_image(const BinaryImage& img, int template_size, int s2_r_max) {
    TargetStats t{morph::pattern_distribution(img, template_size), porosity(img), std::nullopt};
    if (s2_r_max > 0)
        t.s2 = morph::two_point_correlation(img, morph::Phase::Pore, morph::Direction::XYAveraged, s2_r_max);
    return t;
}

namespace {

void check_target(const BinaryImage& img, const TargetStats& target, const AnnealConfig& cfg) {
    if (target.pattern.template_size() != cfg.template_size)
        throw ValueError("target pattern template size does not match the anneal config");
    if (cfg.s2_weight > 0.0) {
        if (!target.s2) throw ValueError("s2_weight > 0 requires a target S2 curve");
        const auto& c = *target.s2;
        if (c.kind != morph::Descriptor::S2 || c.phase != morph::Phase::Pore ||
            c.direction != morph::Direction::XYAveraged)
            throw ValueError("target S2 curve must be pore-phase, XY-averaged");
        if (static_cast<int>(c.values.size()) - 1 > morph::max_lag(img, morph::Direction::XYAveraged))
            throw ValueError("target S2 curve is longer than the image allows");
    }
}

double s2_mismatch(const morph::CurveStatistic& mine, const morph::CurveStatistic& target) {
    double sum = 0.0;
    for (std::size_t r = 0; r < target.values.size(); ++r) {
        const double d = mine.values[r] - target.values[r];
        sum += d * d;
    }
    return sum;
}

} // namespace

EnergyBreakdown energy(const BinaryImage& img, const TargetStats& target, const AnnealConfig& cfg) {
    check_target(img, target, cfg);
    EnergyBreakdown e;
    e.pattern = morph::pattern_distance(morph::pattern_distribution(img, cfg.template_size), target.pattern);
    const double dphi = porosity(img) - target.porosity;
    e.porosity = dphi * dphi;
    if (cfg.s2_weight > 0.0) {
        const int r_max = static_cast<int>(target.s2->values.size()) - 1;
        e.s2 = s2_mismatch(
            morph::two_point_correlation(img, morph::Phase::Pore, morph::Direction::XYAveraged, r_max), *target.s2);
    }
    e.total = cfg.pattern_weight * e.pattern + cfg.porosity_weight * e.porosity + cfg.s2_weight * e.s2;
    return e;
}

namespace {

// Image plus the integer statistics needed to update the energy in O(N^2 + r_max)
// per pixel flip.
class IncrementalState {
public:
    IncrementalState(BinaryImage img, const TargetStats& target, const AnnealConfig& cfg)
        : img_(std::move(img)), cfg_(cfg), n_(cfg.template_size), w_(img_.width()), h_(img_.height()),
          wx_(w_ - n_ + 1), wy_(h_ - n_ + 1), windows_(static_cast<double>(wx_) * wy_),
          target_pattern_(target.pattern.to_dense()), target_phi_(target.porosity) {
        const auto counts = morph::pattern_counts(img_, n_);
        counts_.assign(counts.begin(), counts.end());
        codes_.resize(static_cast<std::size_t>(wx_) * wy_);
        for (int y = 0; y < wy_; ++y)
            for (int x = 0; x < wx_; ++x)
                codes_[static_cast<std::size_t>(y) * wx_ + x] = morph::window_code(img_, x, y, n_);
        pores_ = static_cast<std::int64_t>(img_.pore_count());
        if (cfg.s2_weight > 0.0) {
            target_s2_ = target.s2->values;
            r_max_ = static_cast<int>(target_s2_.size()) - 1;
            x_pairs_.assign(static_cast<std::size_t>(r_max_) + 1, 0);
            y_pairs_.assign(static_cast<std::size_t>(r_max_) + 1, 0);
            for (int r = 0; r <= r_max_; ++r)
                for (int y = 0; y < h_; ++y)
                    for (int x = 0; x < w_; ++x) {
                        if (!img_.pore(x, y)) continue;
                        if (x + r < w_ && img_.pore(x + r, y)) ++x_pairs_[r];
                        if (y + r < h_ && img_.pore(x, y + r)) ++y_pairs_[r];
                    }
        }
        resync_pattern();
    }

    const BinaryImage& image() const { return img_; }

    double pattern_energy() const { return pattern_sq_; }

    double total_energy() const {
        const double dphi = static_cast<double>(pores_) / static_cast<double>(img_.size()) - target_phi_;
        double e = cfg_.pattern_weight * pattern_sq_ + cfg_.porosity_weight * dphi * dphi;
        if (cfg_.s2_weight > 0.0) e += cfg_.s2_weight * s2_energy();
        return e;
    }

    void flip(std::size_t index) {
        const int x = static_cast<int>(index % static_cast<std::size_t>(w_));
        const int y = static_cast<int>(index / static_cast<std::size_t>(w_));
        const bool was_pore = img_.pore(x, y);
        const int delta = was_pore ? -1 : 1;

        const int x0 = std::max(0, x - n_ + 1);
        const int x1 = std::min(x, wx_ - 1);
        const int y0 = std::max(0, y - n_ + 1);
        const int y1 = std::min(y, wy_ - 1);
        for (int wy = y0; wy <= y1; ++wy) {
            for (int wx = x0; wx <= x1; ++wx) {
                std::uint64_t& code = codes_[static_cast<std::size_t>(wy) * wx_ + wx];
                const int bit = n_ * n_ - 1 - ((y - wy) * n_ + (x - wx));
                bump(code, -1);
                code ^= std::uint64_t{1} << bit;
                bump(code, +1);
            }
        }

        if (cfg_.s2_weight > 0.0) {
            x_pairs_[0] += delta;
            y_pairs_[0] += delta;
            for (int r = 1; r <= r_max_; ++r) {
                int nx = 0;
                if (x - r >= 0 && img_.pore(x - r, y)) ++nx;
                if (x + r < w_ && img_.pore(x + r, y)) ++nx;
                int ny = 0;
                if (y - r >= 0 && img_.pore(x, y - r)) ++ny;
                if (y + r < h_ && img_.pore(x, y + r)) ++ny;
                x_pairs_[r] += delta * nx;
                y_pairs_[r] += delta * ny;
            }
        }
        pores_ += delta;
        img_.set(x, y, !was_pore);
    }

    // Recomputes the squared pattern distance from the integer counts.
    void resync_pattern() {
        double sum = 0.0;
        for (std::size_t c = 0; c < counts_.size(); ++c) {
            const double d = static_cast<double>(counts_[c]) / windows_ - target_pattern_[c];
            sum += d * d;
        }
        pattern_sq_ = sum;
    }

private:
    void bump(std::uint64_t code, int by) {
        const double before = static_cast<double>(counts_[code]) / windows_ - target_pattern_[code];
        counts_[code] += by;
        const double after = static_cast<double>(counts_[code]) / windows_ - target_pattern_[code];
        pattern_sq_ += after * after - before * before;
    }

    double s2_energy() const {
        double sum = 0.0;
        for (int r = 0; r <= r_max_; ++r) {
            const double sx = static_cast<double>(x_pairs_[r]) / (static_cast<double>(w_ - r) * h_);
            const double sy = static_cast<double>(y_pairs_[r]) / (static_cast<double>(w_) * (h_ - r));
            const double d = 0.5 * (sx + sy) - target_s2_[r];
            sum += d * d;
        }
        return sum;
    }

    BinaryImage img_;
    AnnealConfig cfg_;
    int n_, w_, h_, wx_, wy_;
    double windows_;
    std::vector<double> target_pattern_;
    double target_phi_;
    std::vector<std::int64_t> counts_;
    std::vector<std::uint64_t> codes_;
    std::int64_t pores_ = 0;
    double pattern_sq_ = 0.0;
    std::vector<double> target_s2_;
    int r_max_ = 0;
    std::vector<std::int64_t> x_pairs_;
    std::vector<std::int64_t> y_pairs_;
};

} // namespace

AnnealResult anneal_reconstruct(const ConditionalInput& cond, const TargetStats& target, const AnnealConfig& cfg) {
    cfg.validate();
    const BinaryImage hard = conditional_values_image(cond);
    check_target(hard, target, cfg);
    if (cfg.template_size > std::min(hard.width(), hard.height()))
        throw ValueError("template size exceeds image dimensions");

    const auto mask = cond.mask().data();
    std::vector<std::size_t> unknown;
    std::int64_t informed_pores = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) informed_pores += hard.data()[i];
        else unknown.push_back(i);
    }

    AnnealResult result{hard, {}, 0.0, 0.0, 0.0, 0, 0};
    if (unknown.empty()) {
        result.initial_energy = result.final_energy = energy(hard, target, cfg).total;
        return result;
    }

    const auto total_pores = static_cast<std::int64_t>(std::llround(target.porosity * static_cast<double>(hard.size())));
    const std::int64_t unknown_pores = total_pores - informed_pores;
    if (unknown_pores < 0 || unknown_pores > static_cast<std::int64_t>(unknown.size()))
        throw ValueError("target porosity is infeasible given the hard data");

    Rng rng(cfg.seed);
    rng.shuffle(std::span<std::size_t>(unknown));
    BinaryImage init = hard;
    std::vector<std::size_t> pore_sites(unknown.begin(), unknown.begin() + unknown_pores);
    std::vector<std::size_t> solid_sites(unknown.begin() + unknown_pores, unknown.end());
    for (auto i : pore_sites) init.set(i, true);

    IncrementalState state(std::move(init), target, cfg);
    result.initial_energy = state.total_energy();
    if (pore_sites.empty() || solid_sites.empty()) {
        result.image = state.image();
        result.final_energy = result.initial_energy;
        return result;
    }

    double temperature = cfg.initial_temperature;
    double current = result.initial_energy;
    for (int sweep = 0; sweep < cfg.sweeps; ++sweep) {
        for (std::size_t move = 0; move < unknown.size(); ++move) {
            const std::size_t i = static_cast<std::size_t>(rng.below(pore_sites.size()));
            const std::size_t j = static_cast<std::size_t>(rng.below(solid_sites.size()));
            const std::size_t a = pore_sites[i];
            const std::size_t b = solid_sites[j];
            state.flip(a);
            state.flip(b);
            const double proposed = state.total_energy();
            const double delta = proposed - current;
            ++result.proposed;
            if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temperature)) {
                current = proposed;
                pore_sites[i] = b;
                solid_sites[j] = a;
                ++result.accepted;
            } else {
                state.flip(b);
                state.flip(a);
            }
        }
        // Validate the running energy against a from-scratch evaluation.
        const EnergyBreakdown full = energy(state.image(), target, cfg);
        result.max_drift = std::max(result.max_drift, std::abs(state.total_energy() - full.total));
        if (!std::isfinite(full.total)) throw NumericalError("non-finite annealing energy");
        state.resync_pattern();
        current = state.total_energy();
        result.trace.push_back({sweep, temperature, full.pattern, full.total});
        temperature *= cfg.cooling;
    }
    result.image = state.image();
    result.final_energy = energy(result.image, target, cfg).total;
    return result;
}

void write_trace_csv(std::ostream& out, const std::vector<TracePoint>& trace) {
    out << "sweep,temperature,pattern_energy,total_energy\n";
    char buf[128];
    for (const auto& p : trace) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", p.sweep, p.temperature, p.pattern_energy,
                      p.total_energy);
        out << buf;
    }
}

} // namespace porogen::anneal
