#pragma once

#include <span>
#include <vector>

#include "porogen/grid.hpp"
#include "porogen/morph.hpp"

namespace porogen::objective {

// Probabilities entering a log are clamped to [kProbClamp, 1 - kProbClamp].
inline constexpr double kProbClamp = 1e-7;

struct LossWeights {
    double lambda_l1 = 10.0;
    double lambda_pattern = 5.0e5;
    double lambda_porosity = 1.0e3;

    void validate() const;
};

struct LossReport {
    double g_adv = 0.0;
    double l1 = 0.0;
    double pattern = 0.0;
    double porosity = 0.0;
    double total = 0.0;
    double d_loss = 0.0;
};

// A scalar loss together with its gradient with respect to every pixel of
// the soft image it was evaluated on (row-major, same layout as the image).
struct PixelLoss {
    double value = 0.0;
    std::vector<double> grad;
};

// Mean |x - output| over informed pixels; subgradient 0 at ties.
PixelLoss masked_l1(const SoftImage& output, const ConditionalInput& cond);

// Bernoulli-product relaxation of the pattern histogram: every window adds
// prod_i (p_i if bit_i(code) else 1 - p_i) to each code. Equals
// morph::pattern_distribution on binary inputs. Requires N*N <= 16.
std::vector<double> soft_pattern_probabilities(const SoftImage& img, int template_size);
morph::PatternDistribution soft_pattern_distribution(const SoftImage& img, int template_size);

// Gradient of sum_c weights[c] * q_c(img), q = soft_pattern_probabilities.
std::vector<double> soft_pattern_vjp(const SoftImage& img, int template_size, std::span<const double> weights);

// ||q(output) - pattern_distribution(target)||^2.
PixelLoss pattern_loss(const SoftImage& output, const BinaryImage& target, int template_size);
PixelLoss pattern_loss(const SoftImage& output, const morph::PatternDistribution& target);

// (target_phi - mean(output))^2.
PixelLoss porosity_loss(const SoftImage& output, double target_phi);

double clamp_probability(double p);

// Batch-averaged discriminator loss -[log D(x,y) + log(1 - D(x,G))] and its
// derivatives with respect to each d_real / d_fake entry.
struct AdversarialLoss {
    double value = 0.0;
    std::vector<double> d_real_grad;
    std::vector<double> d_fake_grad;
};

AdversarialLoss d_loss(std::span<const double> d_real, std::span<const double> d_fake);
double d_loss(double d_real, double d_fake);

// Batch-averaged generator adversarial term: log(1 - D(x,G)) by default
// (minimized by G), or -log D(x,G) when non_saturating is set.
AdversarialLoss g_adv_loss(std::span<const double> d_fake, bool non_saturating = false);
double g_adv_loss(double d_fake, bool non_saturating = false);

double total_g_loss(double g_adv, double l1, double pattern, double porosity, const LossWeights& w);
// Fills report.total from the other generator terms.
void finalize_total(LossReport& report, const LossWeights& w);

} // namespace porogen::objective
