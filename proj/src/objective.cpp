#include "porogen/objective.hpp"

#include <algorithm>
#include <cmath>

namespace porogen::objective {

void LossWeights::validate() const {
    if (!(lambda_l1 >= 0.0) || !(lambda_pattern >= 0.0) || !(lambda_porosity >= 0.0))
        throw ValueError("loss weights must be nonnegative");
}

PixelLoss masked_l1(const SoftImage& output, const ConditionalInput& cond) {
    if (!output.same_shape(cond.values())) throw ValueError("output and conditional input differ in shape");
    const auto informed = cond.mask().informed_count();
    if (informed == 0) throw ValueError("masked L1 needs at least one informed pixel");
    const double inv_n = 1.0 / static_cast<double>(informed);

    PixelLoss loss{0.0, std::vector<double>(output.size(), 0.0)};
    const auto out = output.data();
    const auto x = cond.values().data();
    const auto mask = cond.mask().data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!mask[i]) continue;
        const double diff = out[i] - x[i];
        loss.value += std::abs(diff);
        loss.grad[i] = diff > 0.0 ? inv_n : (diff < 0.0 ? -inv_n : 0.0);
    }
    loss.value *= inv_n;
    return loss;
}

namespace {

void check_soft_template(const SoftImage& img, int n) {
    if (n < 1 || n * n > 16) throw ValueError("soft pattern statistics require 1 <= N and N*N <= 16");
    if (n > std::min(img.width(), img.height()))
        throw ValueError("template size " + std::to_string(n) + " exceeds image dimensions");
}

// Code-tree expansion for one window. level k holds the 2^k products over
// the first k window pixels; pixel 0 is the most significant bit.
class WindowTree {
public:
    explicit WindowTree(int bits) : bits_(bits), nodes_(std::size_t{2} << bits, 0.0) {}

    // Offset of level k inside nodes_ (levels are stored back to back).
    static std::size_t level_offset(int k) { return (std::size_t{1} << k) - 1; }

    void forward(std::span<const double> p) {
        nodes_[0] = 1.0;
        for (int k = 0; k < bits_; ++k) {
            const double on = p[k];
            const double off = 1.0 - on;
            const double* parent = &nodes_[level_offset(k)];
            double* child = &nodes_[level_offset(k + 1)];
            const std::size_t n = std::size_t{1} << k;
            for (std::size_t a = 0; a < n; ++a) {
                child[2 * a] = parent[a] * off;
                child[2 * a + 1] = parent[a] * on;
            }
        }
    }

    std::span<const double> leaves() const {
        return {nodes_.data() + level_offset(bits_), std::size_t{1} << bits_};
    }

    // Accumulates d(sum_c g[c] * leaf[c]) / dp into dp. Requires forward(p).
    void backward(std::span<const double> p, std::span<const double> g, std::span<double> dp,
                  std::vector<double>& scratch_a, std::vector<double>& scratch_b) const {
        scratch_a.assign(g.begin(), g.end());
        for (int k = bits_ - 1; k >= 0; --k) {
            const double on = p[k];
            const double off = 1.0 - on;
            const double* parent = &nodes_[level_offset(k)];
            const std::size_t n = std::size_t{1} << k;
            scratch_b.assign(n, 0.0);
            double dpk = 0.0;
            for (std::size_t a = 0; a < n; ++a) {
                const double g0 = scratch_a[2 * a];
                const double g1 = scratch_a[2 * a + 1];
                scratch_b[a] = g0 * off + g1 * on;
                dpk += parent[a] * (g1 - g0);
            }
            dp[k] += dpk;
            std::swap(scratch_a, scratch_b);
        }
    }

private:
    int bits_;
    std::vector<double> nodes_;
};

void gather_window(const SoftImage& img, int x, int y, int n, std::span<double> out) {
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i * n + j)] = img(x + j, y + i);
}

} // namespace

std::vector<double> soft_pattern_probabilities(const SoftImage& img, int template_size) {
    check_soft_template(img, template_size);
    const int n = template_size;
    const int bits = n * n;
    const int wx = img.width() - n + 1;
    const int wy = img.height() - n + 1;
    std::vector<double> q(std::size_t{1} << bits, 0.0);
    std::vector<double> p(static_cast<std::size_t>(bits));
    WindowTree tree(bits);
    for (int y = 0; y < wy; ++y) {
        for (int x = 0; x < wx; ++x) {
            gather_window(img, x, y, n, p);
            tree.forward(p);
            const auto leaves = tree.leaves();
            for (std::size_t c = 0; c < q.size(); ++c) q[c] += leaves[c];
        }
    }
    const double windows = static_cast<double>(wx) * static_cast<double>(wy);
    for (auto& v : q) v /= windows;
    return q;
}

morph::PatternDistribution soft_pattern_distribution(const SoftImage& img, int template_size) {
    return morph::PatternDistribution::from_dense(template_size, soft_pattern_probabilities(img, template_size));
}

std::vector<double> soft_pattern_vjp(const SoftImage& img, int template_size, std::span<const double> weights) {
    check_soft_template(img, template_size);
    const int n = template_size;
    const int bits = n * n;
    if (weights.size() != (std::size_t{1} << bits)) throw ValueError("pattern weight vector has wrong length");
    const int wx = img.width() - n + 1;
    const int wy = img.height() - n + 1;
    const double inv = 1.0 / (static_cast<double>(wx) * static_cast<double>(wy));

    std::vector<double> g(weights.begin(), weights.end());
    for (auto& v : g) v *= inv;

    std::vector<double> grad(img.size(), 0.0);
    std::vector<double> p(static_cast<std::size_t>(bits));
    std::vector<double> dp(static_cast<std::size_t>(bits));
    std::vector<double> scratch_a;
    std::vector<double> scratch_b;
    WindowTree tree(bits);
    for (int y = 0; y < wy; ++y) {
        for (int x = 0; x < wx; ++x) {
            gather_window(img, x, y, n, p);
            tree.forward(p);
            std::fill(dp.begin(), dp.end(), 0.0);
            tree.backward(p, g, dp, scratch_a, scratch_b);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    grad[static_cast<std::size_t>(y + i) * img.width() + (x + j)] +=
                        dp[static_cast<std::size_t>(i * n + j)];
        }
    }
    return grad;
}

PixelLoss pattern_loss(const SoftImage& output, const morph::PatternDistribution& target) {
    const int n = target.template_size();
    const auto q = soft_pattern_probabilities(output, n);
    const auto t = target.to_dense();
    PixelLoss loss;
    std::vector<double> weights(q.size());
    for (std::size_t c = 0; c < q.size(); ++c) {
        const double d = q[c] - t[c];
        loss.value += d * d;
        weights[c] = 2.0 * d;
    }
    loss.grad = soft_pattern_vjp(output, n, weights);
    return loss;
}

PixelLoss pattern_loss(const SoftImage& output, const BinaryImage& target, int template_size) {
    if (!output.same_shape(target)) throw ValueError("output and target differ in shape");
    check_soft_template(output, template_size);
    return pattern_loss(output, morph::pattern_distribution(target, template_size));
}

PixelLoss porosity_loss(const SoftImage& output, double target_phi) {
    const double mean = output.mean();
    const double diff = target_phi - mean;
    const double g = -2.0 * diff / static_cast<double>(output.size());
    return {diff * diff, std::vector<double>(output.size(), g)};
}

double clamp_probability(double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); }

// Derivatives are evaluated at the clamped point so a saturated
// discriminator still passes gradient.
AdversarialLoss d_loss(std::span<const double> d_real, std::span<const double> d_fake) {
    if (d_real.size() != d_fake.size() || d_real.empty())
        throw ValueError("d_loss needs equal, nonempty real and fake batches");
    const double inv = 1.0 / static_cast<double>(d_real.size());
    AdversarialLoss out{0.0, std::vector<double>(d_real.size()), std::vector<double>(d_fake.size())};
    for (std::size_t i = 0; i < d_real.size(); ++i) {
        const double a = clamp_probability(d_real[i]);
        const double b = clamp_probability(d_fake[i]);
        out.value -= std::log(a) + std::log1p(-b);
        out.d_real_grad[i] = -inv / a;
        out.d_fake_grad[i] = inv / (1.0 - b);
    }
    out.value *= inv;
    return out;
}

double d_loss(double d_real, double d_fake) {
    const double r[] = {d_real};
    const double f[] = {d_fake};
    return d_loss(r, f).value;
}

AdversarialLoss g_adv_loss(std::span<const double> d_fake, bool non_saturating) {
    if (d_fake.empty()) throw ValueError("g_adv_loss needs a nonempty batch");
    const double inv = 1.0 / static_cast<double>(d_fake.size());
    AdversarialLoss out{0.0, {}, std::vector<double>(d_fake.size())};
    for (std::size_t i = 0; i < d_fake.size(); ++i) {
        const double b = clamp_probability(d_fake[i]);
        if (non_saturating) {
            out.value -= std::log(b);
            out.d_fake_grad[i] = -inv / b;
        } else {
            out.value += std::log1p(-b);
            out.d_fake_grad[i] = -inv / (1.0 - b);
        }
    }
    out.value *= inv;
    return out;
}

double g_adv_loss(double d_fake, bool non_saturating) {
    const double f[] = {d_fake};
    return g_adv_loss(f, non_saturating).value;
}

double total_g_loss(double g_adv, double l1, double pattern, double porosity, const LossWeights& w) {
    return g_adv + w.lambda_l1 * l1 + w.lambda_pattern * pattern + w.lambda_porosity * porosity;
}

void finalize_total(LossReport& report, const LossWeights& w) {
    report.total = total_g_loss(report.g_adv, report.l1, report.pattern, report.porosity, w);
}

} // namespace porogen::objective
