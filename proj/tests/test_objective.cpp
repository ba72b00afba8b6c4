#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "porogen/objective.hpp"
#include "support.hpp"

using namespace porogen;
using namespace porogen::objective;

namespace {

// Random interior point, kept away from 0/1 so +-h stays in range.
SoftImage random_soft(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> v(static_cast<std::size_t>(w) * h);
    for (auto& x : v) x = 0.05 + 0.9 * rng.uniform();
    return SoftImage(w, h, v);
}

ConditionalInput random_condition(int w, int h, std::uint64_t seed) {
    Rng rng(seed);
    Mask m(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.set(x, y, rng.uniform() < 0.4);
    m.set(0, 0, true);
    return make_conditional_input(oracle::random_image(w, h, seed + 1), m);
}

template <typename F>
double check_gradient(const SoftImage& at, F loss) {
    const auto analytic = loss(at).grad;
    const auto numeric = support::numeric_gradient(
        [&](const std::vector<double>& v) { return loss(SoftImage(at.width(), at.height(), v)).value; },
        std::vector<double>(at.data().begin(), at.data().end()));
    return support::relative_error(analytic, numeric);
}

} // namespace

TEST_CASE("masked L1 values") {
    const auto cond = random_condition(6, 5, 1);
    CHECK(masked_l1(cond.values(), cond).value == 0.0);

    BinaryImage t(4, 4);
    Mask m(4, 4);
    m.set(0, 0, true);
    m.set(1, 0, true);
    m.set(2, 3, true);
    m.set(3, 3, true);
    t.set(0, 0, true);
    t.set(3, 3, true);
    const auto c = make_conditional_input(t, m);
    SoftImage out(4, 4, 0.25);
    out.set(0, 0, 0.75);
    out.set(3, 3, 0.75);
    CHECK(masked_l1(out, c).value == doctest::Approx(0.25).epsilon(1e-15));

    CHECK_THROWS_AS(masked_l1(out, make_conditional_input(t, Mask(4, 4))), ValueError);
    CHECK_THROWS_AS(masked_l1(SoftImage(3, 3), c), ValueError);
}

TEST_CASE("masked L1 gradient matches finite differences") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto cond = random_condition(6, 5, 10 + s);
        const auto at = random_soft(6, 5, 20 + s);
        CHECK(check_gradient(at, [&](const SoftImage& o) { return masked_l1(o, cond); }) < 1e-6);
    }
    // Tie: subgradient 0.
    const auto cond = random_condition(4, 4, 3);
    const auto g = masked_l1(cond.values(), cond).grad;
    for (double v : g) CHECK(v == 0.0);
}

TEST_CASE("soft pattern distribution") {
    SUBCASE("reduces to the discrete histogram on binary input") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto b = oracle::random_image(11, 9, s);
            for (int n = 1; n <= 4; ++n) {
                const auto soft = soft_pattern_distribution(SoftImage::from_binary(b), n);
                const auto hard = morph::pattern_distribution(b, n);
                CHECK(soft.to_dense() == hard.to_dense());
            }
        }
    }
    SUBCASE("constant 0.5 is uniform") {
        const auto q = soft_pattern_probabilities(SoftImage(6, 6, 0.5), 2);
        REQUIRE(q.size() == 16);
        for (double v : q) CHECK(v == doctest::Approx(1.0 / 16.0).epsilon(1e-14));
    }
    SUBCASE("sums to one") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto q = soft_pattern_probabilities(random_soft(9, 8, s), 3);
            double sum = 0.0;
            for (double v : q) sum += v;
            CHECK(std::abs(sum - 1.0) <= 1e-12);
        }
    }
    SUBCASE("matches explicit Bernoulli products") {
        const auto img = random_soft(4, 3, 77);
        const int n = 2;
        const auto q = soft_pattern_probabilities(img, n);
        std::vector<double> ref(16, 0.0);
        for (int y = 0; y + n <= 3; ++y)
            for (int x = 0; x + n <= 4; ++x)
                for (int code = 0; code < 16; ++code) {
                    double p = 1.0;
                    for (int k = 0; k < 4; ++k) {
                        const bool bit = (code >> (3 - k)) & 1;
                        const double v = img(x + k % 2, y + k / 2);
                        p *= bit ? v : 1.0 - v;
                    }
                    ref[code] += p / 6.0;
                }
        for (int c = 0; c < 16; ++c) CHECK(q[c] == doctest::Approx(ref[c]).epsilon(1e-13));
    }
    CHECK_THROWS_AS(soft_pattern_probabilities(SoftImage(6, 6), 5), ValueError);
    CHECK_THROWS_AS(soft_pattern_probabilities(SoftImage(3, 6), 4), ValueError);
}

TEST_CASE("soft pattern VJP matches finite differences") {
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto at = random_soft(7, 6, 300 + s);
        Rng rng(s);
        std::vector<double> w(512);
        for (auto& v : w) v = rng.normal();
        const auto analytic = soft_pattern_vjp(at, 3, w);
        const auto numeric = support::numeric_gradient(
            [&](const std::vector<double>& v) {
                const auto q = soft_pattern_probabilities(SoftImage(7, 6, v), 3);
                double acc = 0.0;
                for (std::size_t c = 0; c < q.size(); ++c) acc += w[c] * q[c];
                return acc;
            },
            std::vector<double>(at.data().begin(), at.data().end()));
        CHECK(support::relative_error(analytic, numeric) < 1e-4);
    }
}

TEST_CASE("pattern loss") {
    const auto b = oracle::random_image(8, 8, 4);
    CHECK(pattern_loss(SoftImage::from_binary(b), b, 3).value == 0.0);
    CHECK(pattern_loss(SoftImage(5, 5, 1.0), BinaryImage(5, 5), 2).value == 2.0);
    CHECK_THROWS_AS(pattern_loss(SoftImage(5, 5), BinaryImage(4, 5), 2), ValueError);

    for (int n : {2, 3})
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto target = oracle::random_image(8, 7, 60 + s, 0.3);
            const auto at = random_soft(8, 7, 70 + s);
            CHECK(check_gradient(at, [&](const SoftImage& o) { return pattern_loss(o, target, n); }) < 1e-4);
        }
}

TEST_CASE("porosity loss") {
    CHECK(porosity_loss(SoftImage(4, 4, 0.5), 0.3).value == doctest::Approx(0.04).epsilon(1e-14));
    const auto at_target = porosity_loss(SoftImage(4, 4, 0.25), 0.25);
    CHECK(at_target.value == 0.0);
    for (double g : at_target.grad) CHECK(g == 0.0);
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto at = random_soft(6, 6, 400 + s);
        CHECK(check_gradient(at, [&](const SoftImage& o) { return porosity_loss(o, 0.3); }) < 1e-6);
        const auto l = porosity_loss(at, 0.3);
        const double mean = at.mean();
        for (double g : l.grad) CHECK(g == doctest::Approx(-2.0 * (0.3 - mean) / 36.0).epsilon(1e-12));
    }
}

TEST_CASE("adversarial losses") {
    CHECK(d_loss(0.5, 0.5) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
    CHECK(d_loss(1.0, 0.0) < 1e-6);
    Rng rng(3);
    for (int i = 0; i < 50; ++i) {
        const double a = 0.01 + 0.98 * rng.uniform(), b = 0.01 + 0.98 * rng.uniform();
        CHECK(d_loss(a, b) == doctest::Approx(-(std::log(a) + std::log(1.0 - b))).epsilon(1e-14));
    }
    const std::vector<double> real{0.9, 0.6}, fake{0.2, 0.4};
    const auto batch = d_loss(real, fake);
    CHECK(batch.value == doctest::Approx((d_loss(0.9, 0.2) + d_loss(0.6, 0.4)) / 2.0).epsilon(1e-14));
    CHECK(batch.d_real_grad[0] == doctest::Approx(-1.0 / 0.9 / 2.0));
    CHECK(batch.d_fake_grad[1] == doctest::Approx(1.0 / 0.6 / 2.0));

    CHECK(g_adv_loss(0.5) == doctest::Approx(std::log(0.5)).epsilon(1e-14));
    CHECK(std::isfinite(g_adv_loss(1.0)));
    CHECK(g_adv_loss(1.0) == doctest::Approx(std::log(kProbClamp)));
    double prev = g_adv_loss(0.0);
    for (double p = 0.05; p <= 1.0; p += 0.05) {
        CHECK(g_adv_loss(p) < prev);
        prev = g_adv_loss(p);
    }
    CHECK(g_adv_loss(0.25, true) == doctest::Approx(-std::log(0.25)));
    CHECK(std::isfinite(d_loss(0.0, 1.0)));
}

TEST_CASE("total generator loss is the weighted sum") {
    const LossWeights w;
    CHECK(w.lambda_l1 == 10.0);
    CHECK(w.lambda_pattern == 5.0e5);
    CHECK(w.lambda_porosity == 1.0e3);
    CHECK(total_g_loss(0, 0, 0, 0, w) == 0.0);
    CHECK(total_g_loss(-0.5, 0.1, 2e-6, 3e-4, w) == doctest::Approx(-0.5 + 1.0 + 1.0 + 0.3).epsilon(1e-14));
    CHECK(total_g_loss(2.0, 0, 0, 0, w) == 2.0 * total_g_loss(1.0, 0, 0, 0, w));
    CHECK(total_g_loss(0, 0, 0, 2.0, w) == 2.0 * total_g_loss(0, 0, 0, 1.0, w));

    LossReport r{-0.3, 0.2, 1e-5, 4e-3, 0.0, 1.1};
    finalize_total(r, w);
    CHECK(r.total == total_g_loss(-0.3, 0.2, 1e-5, 4e-3, w));

    LossWeights bad;
    bad.lambda_l1 = -1.0;
    CHECK_THROWS_AS(bad.validate(), ValueError);
}
