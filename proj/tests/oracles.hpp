#pragma once

// Naive reference implementations used only by tests.

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "porogen/grid.hpp"
#include "porogen/morph.hpp"
#include "porogen/random.hpp"

namespace oracle {

using porogen::BinaryImage;
using porogen::morph::Direction;
using porogen::morph::Phase;

inline BinaryImage random_image(int w, int h, std::uint64_t seed, double p = 0.5) {
    porogen::Rng rng(seed);
    BinaryImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.set(x, y, rng.uniform() < p);
    return img;
}

inline bool in_phase(const BinaryImage& img, int x, int y, Phase phase) {
    return img.pore(x, y) == (phase == Phase::Pore);
}

inline std::pair<int, int> step_of(Direction d) {
    switch (d) {
    case Direction::X: return {1, 0};
    case Direction::Y: return {0, 1};
    case Direction::SEDiagonal: return {1, 1};
    default: return {0, 0};
    }
}

// Ratio of qualifying start points among all start points whose r-step
// partner lies inside the image; `accept(x, y, dx, dy)` decides a start.
inline std::vector<double> enumerate(const BinaryImage& img, Direction d, int r_max,
                                     const std::function<bool(int, int, int, int, int)>& accept) {
    if (d == Direction::XYAveraged) {
        auto a = enumerate(img, Direction::X, r_max, accept);
        auto b = enumerate(img, Direction::Y, r_max, accept);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] = (a[i] + b[i]) / 2.0;
        return a;
    }
    const auto [dx, dy] = step_of(d);
    std::vector<double> out;
    for (int r = 0; r <= r_max; ++r) {
        long hits = 0, total = 0;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < img.width(); ++x) {
                const int x2 = x + r * dx, y2 = y + r * dy;
                if (x2 >= img.width() || y2 >= img.height()) continue;
                ++total;
                hits += accept(x, y, dx, dy, r) ? 1 : 0;
            }
        out.push_back(static_cast<double>(hits) / static_cast<double>(total));
    }
    return out;
}

inline std::vector<double> s2(const BinaryImage& img, Phase ph, Direction d, int r_max) {
    return enumerate(img, d, r_max, [&](int x, int y, int dx, int dy, int r) {
        return in_phase(img, x, y, ph) && in_phase(img, x + r * dx, y + r * dy, ph);
    });
}

inline std::vector<double> lineal(const BinaryImage& img, Phase ph, Direction d, int r_max) {
    return enumerate(img, d, r_max, [&](int x, int y, int dx, int dy, int r) {
        for (int k = 0; k <= r; ++k)
            if (!in_phase(img, x + k * dx, y + k * dy, ph)) return false;
        return true;
    });
}

// Flood fill with an explicit stack; labels numbered in raster order.
inline std::vector<int> flood_labels(const BinaryImage& img, Phase ph, bool eight = false) {
    const int w = img.width(), h = img.height();
    std::vector<int> label(static_cast<std::size_t>(w) * h, 0);
    int next = 0;
    for (int y0 = 0; y0 < h; ++y0)
        for (int x0 = 0; x0 < w; ++x0) {
            if (!in_phase(img, x0, y0, ph) || label[static_cast<std::size_t>(y0) * w + x0]) continue;
            ++next;
            std::vector<std::pair<int, int>> stack{{x0, y0}};
            label[static_cast<std::size_t>(y0) * w + x0] = next;
            while (!stack.empty()) {
                const auto [x, y] = stack.back();
                stack.pop_back();
                for (int ny = y - 1; ny <= y + 1; ++ny)
                    for (int nx = x - 1; nx <= x + 1; ++nx) {
                        if (nx < 0 || ny < 0 || nx >= w || ny >= h || (nx == x && ny == y)) continue;
                        if (!eight && nx != x && ny != y) continue;
                        auto& l = label[static_cast<std::size_t>(ny) * w + nx];
                        if (l || !in_phase(img, nx, ny, ph)) continue;
                        l = next;
                        stack.push_back({nx, ny});
                    }
            }
        }
    return label;
}

inline std::vector<double> c2(const BinaryImage& img, Phase ph, Direction d, int r_max, bool eight = false) {
    const auto label = flood_labels(img, ph, eight);
    const int w = img.width();
    return enumerate(img, d, r_max, [&](int x, int y, int dx, int dy, int r) {
        const int a = label[static_cast<std::size_t>(y) * w + x];
        const int b = label[static_cast<std::size_t>(y + r * dy) * w + x + r * dx];
        return a != 0 && a == b;
    });
}

inline std::map<std::uint64_t, double> patterns(const BinaryImage& img, int n) {
    std::map<std::uint64_t, long> counts;
    const int wx = img.width() - n + 1, wy = img.height() - n + 1;
    for (int y = 0; y < wy; ++y)
        for (int x = 0; x < wx; ++x) {
            std::uint64_t code = 0;
            for (int j = 0; j < n; ++j)
                for (int i = 0; i < n; ++i) code = (code << 1) | (img.pore(x + i, y + j) ? 1u : 0u);
            ++counts[code];
        }
    std::map<std::uint64_t, double> out;
    for (const auto& [c, k] : counts) out[c] = static_cast<double>(k) / (static_cast<double>(wx) * wy);
    return out;
}

} // namespace oracle
