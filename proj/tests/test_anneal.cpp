#include <doctest.h>

#include <sstream>

#include "oracles.hpp"
#include "porogen/anneal.hpp"
#include "porogen/synth.hpp"

using namespace porogen;
using namespace porogen::anneal;

namespace {

ConditionalInput corner(const BinaryImage& target, int side) {
    Mask m(target.width(), target.height());
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) m.set(x, y, true);
    return make_conditional_input(target, m);
}

BinaryImage blob(int size, std::uint64_t seed) {
    synth::MediumSpec spec;
    spec.seed = seed;
    return synth::generate_medium(spec, size);
}

} // namespace

TEST_CASE("energy from scratch") {
    const auto img = oracle::random_image(12, 12, 1);
    AnnealConfig cfg;
    const auto self = target_stats_from_image(img, 3, 4);
    CHECK(energy(img, self, cfg).total == 0.0);

    cfg.s2_weight = 2.0;
    const auto other = target_stats_from_image(oracle::random_image(12, 12, 2, 0.3), 3, 4);
    const auto e = energy(img, other, cfg);
    const double dphi = porosity(img) - other.porosity;
    CHECK(e.porosity == doctest::Approx(dphi * dphi).epsilon(1e-14));
    CHECK(e.pattern == morph::pattern_distance(morph::pattern_distribution(img, 3), other.pattern));
    CHECK(e.total == doctest::Approx(e.pattern + e.porosity + 2.0 * e.s2).epsilon(1e-14));

    cfg.template_size = 2;
    CHECK_THROWS_AS(energy(img, other, cfg), ValueError);
}

TEST_CASE("annealing keeps hard data and porosity, and lowers the energy") {
    const auto target = blob(32, 4);
    const auto cond = corner(target, 8);
    AnnealConfig cfg;
    cfg.sweeps = 40;
    cfg.seed = 2;
    cfg.s2_weight = 1.0;
    const auto stats = target_stats_from_image(target, 3, 8);
    const auto r = anneal_reconstruct(cond, stats, cfg);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            if (cond.mask().informed(x, y)) CHECK(r.image.pore(x, y) == target.pore(x, y));
    CHECK(r.image.pore_count() == target.pore_count());
    CHECK(r.final_energy < r.initial_energy);
    CHECK(r.max_drift <= 1e-9);
    CHECK(r.final_energy == doctest::Approx(energy(r.image, stats, cfg).total).epsilon(1e-9));
    CHECK(r.trace.size() == 40);
    for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i].temperature < r.trace[i - 1].temperature);

    const auto again = anneal_reconstruct(cond, stats, cfg);
    CHECK(again.image == r.image);
    cfg.seed = 3;
    CHECK(anneal_reconstruct(cond, stats, cfg).image != r.image);
}

TEST_CASE("fully informed input comes back unchanged") {
    const auto target = oracle::random_image(10, 10, 3);
    const auto cond = make_conditional_input(target, Mask(10, 10, true));
    const auto r = anneal_reconstruct(cond, target_stats_from_image(target, 3), AnnealConfig{});
    CHECK(r.image == target);
    CHECK(r.trace.empty());
}

TEST_CASE("annealing preconditions") {
    const auto target = oracle::random_image(10, 10, 5, 0.5);
    AnnealConfig cfg;
    cfg.cooling = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg = {};
    cfg.initial_temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ValueError);
    cfg = {};

    // Target porosity above what the unknown pixels can reach.
    auto all_solid_known = make_conditional_input(BinaryImage(10, 10), [] {
        Mask m(10, 10, true);
        m.set(0, 0, false);
        return m;
    }());
    TargetStats stats = target_stats_from_image(target, 3);
    CHECK_THROWS_AS(anneal_reconstruct(all_solid_known, stats, cfg), ValueError);

    cfg.template_size = 2;
    CHECK_THROWS_AS(anneal_reconstruct(corner(target, 3), stats, cfg), ValueError);
}

TEST_CASE("trace CSV") {
    std::ostringstream out;
    write_trace_csv(out, {{1, 0.5, 0.25, 0.125}});
    CHECK(out.str() == "sweep,temperature,pattern_energy,total_energy\n1,0.5,0.25,0.125\n");
}
