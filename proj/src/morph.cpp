#include "porogen/morph.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace porogen::morph {

std::string_view to_string(Descriptor d) {
    switch (d) {
    case Descriptor::S2: return "S2";
    case Descriptor::L: return "L";
    case Descriptor::C2: return "C2";
    }
    return "?";
}

std::string_view to_string(Phase p) { return p == Phase::Pore ? "pore" : "solid"; }

std::string_view to_string(Direction d) {
    switch (d) {
    case Direction::X: return "x";
    case Direction::Y: return "y";
    case Direction::XYAveraged: return "xy";
    case Direction::SEDiagonal: return "se";
    }
    return "?";
}

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

Descriptor parse_descriptor(std::string_view s) {
    const auto v = lower(s);
    if (v == "s2") return Descriptor::S2;
    if (v == "l") return Descriptor::L;
    if (v == "c2") return Descriptor::C2;
    throw ValueError("unknown descriptor '" + std::string(s) + "' (expected s2, l or c2)");
}

Phase parse_phase(std::string_view s) {
    const auto v = lower(s);
    if (v == "pore" || v == "1") return Phase::Pore;
    if (v == "solid" || v == "0") return Phase::Solid;
    throw ValueError("unknown phase '" + std::string(s) + "' (expected pore or solid)");
}

Direction parse_direction(std::string_view s) {
    const auto v = lower(s);
    if (v == "x") return Direction::X;
    if (v == "y") return Direction::Y;
    if (v == "xy" || v == "xyaveraged") return Direction::XYAveraged;
    if (v == "se" || v == "sediagonal") return Direction::SEDiagonal;
    throw ValueError("unknown direction '" + std::string(s) + "' (expected x, y, xy or se)");
}

int max_lag(const BinaryImage& img, Direction dir) {
    switch (dir) {
    case Direction::X: return img.width() - 1;
    case Direction::Y: return img.height() - 1;
    case Direction::XYAveraged:
    case Direction::SEDiagonal: return std::min(img.width(), img.height()) - 1;
    }
    return -1;
}

namespace {

struct Step {
    int dx;
    int dy;
};

Step step_of(Direction dir) {
    switch (dir) {
    case Direction::X: return {1, 0};
    case Direction::Y: return {0, 1};
    case Direction::SEDiagonal: return {1, 1};
    case Direction::XYAveraged: break;
    }
    throw ValueError("direction has no single step vector");
}

void check_lag(const BinaryImage& img, Direction dir, int r_max) {
    if (img.empty()) throw ValueError("descriptor of empty image");
    if (r_max < 0 || r_max > max_lag(img, dir))
        throw ValueError("r_max " + std::to_string(r_max) + " out of range for direction " +
                         std::string(to_string(dir)) + " (max " + std::to_string(max_lag(img, dir)) + ")");
}

// Number of lag-r pairs (or segments) lying fully inside the image.
double pair_total(const BinaryImage& img, Step s, int r) {
    return static_cast<double>(img.width() - s.dx * r) * static_cast<double>(img.height() - s.dy * r);
}

CurveStatistic average_xy(CurveStatistic x, const CurveStatistic& y) {
    for (std::size_t r = 0; r < x.values.size(); ++r) x.values[r] = 0.5 * (x.values[r] + y.values[r]);
    x.direction = Direction::XYAveraged;
    return x;
}

// Rows of one phase packed 64 pixels per word; bits past the width are zero.
class BitRows {
public:
    BitRows(const BinaryImage& img, Phase phase)
        : width_(img.width()), words_((img.width() + 63) / 64),
          bits_(static_cast<std::size_t>(words_) * static_cast<std::size_t>(img.height()) + 1, 0) {
        const std::uint8_t want = phase == Phase::Pore ? 1 : 0;
        for (int y = 0; y < img.height(); ++y)
            for (int x = 0; x < width_; ++x)
                if (img(x, y) == want) row(y)[x / 64] |= std::uint64_t{1} << (x % 64);
    }

    // #x in [0, width - shift) with row a at x and row b at x + shift both set.
    std::uint64_t count_and(int a, int b, int shift) const {
        const int valid = width_ - shift;
        if (valid <= 0) return 0;
        const std::uint64_t* ra = row(a);
        const std::uint64_t* rb = row(b);
        const int word_shift = shift / 64;
        const int bit_shift = shift % 64;
        std::uint64_t total = 0;
        const int words = (valid + 63) / 64;
        for (int k = 0; k < words; ++k) {
            const int src = k + word_shift;
            std::uint64_t shifted = src < words_ ? rb[src] >> bit_shift : 0;
            if (bit_shift != 0 && src + 1 < words_) shifted |= rb[src + 1] << (64 - bit_shift);
            std::uint64_t w = ra[k] & shifted;
            const int remaining = valid - 64 * k;
            if (remaining < 64) w &= (std::uint64_t{1} << remaining) - 1;
            total += static_cast<std::uint64_t>(std::popcount(w));
        }
        return total;
    }

private:
    std::uint64_t* row(int y) { return bits_.data() + static_cast<std::size_t>(y) * words_; }
    const std::uint64_t* row(int y) const { return bits_.data() + static_cast<std::size_t>(y) * words_; }

    int width_;
    int words_;
    std::vector<std::uint64_t> bits_;
};

CurveStatistic s2_single(const BinaryImage& img, const BitRows& rows, Phase phase, Direction dir, int r_max) {
    const Step s = step_of(dir);
    CurveStatistic c{Descriptor::S2, phase, dir, std::vector<double>(static_cast<std::size_t>(r_max) + 1)};
    for (int r = 0; r <= r_max; ++r) {
        std::uint64_t hits = 0;
        for (int y = 0; y + s.dy * r < img.height(); ++y) hits += rows.count_and(y, y + s.dy * r, s.dx * r);
        c.values[r] = static_cast<double>(hits) / pair_total(img, s, r);
    }
    return c;
}

CurveStatistic lineal_single(const BinaryImage& img, Phase phase, Direction dir, int r_max) {
    const Step s = step_of(dir);
    const int w = img.width();
    const int h = img.height();
    const std::uint8_t want = phase == Phase::Pore ? 1 : 0;
    // run[p]: length of the in-phase run starting at p and heading along s.
    std::vector<std::int32_t> run(img.size(), 0);
    std::vector<std::uint64_t> hist(static_cast<std::size_t>(std::max(w, h)) + 2, 0);
    for (int y = h - 1; y >= 0; --y) {
        for (int x = w - 1; x >= 0; --x) {
            if (img(x, y) != want) continue;
            const int nx = x + s.dx;
            const int ny = y + s.dy;
            const std::int32_t next =
                (nx < w && ny < h) ? run[static_cast<std::size_t>(ny) * w + nx] : 0;
            const std::int32_t len = next + 1;
            run[static_cast<std::size_t>(y) * w + x] = len;
            ++hist[static_cast<std::size_t>(len)];
        }
    }
    CurveStatistic c{Descriptor::L, phase, dir, std::vector<double>(static_cast<std::size_t>(r_max) + 1)};
    // Segments of r+1 pixels starting at p: runs of length >= r+1.
    std::uint64_t at_least = 0;
    for (std::size_t len = hist.size() - 1; len >= 1; --len) {
        at_least += hist[len];
        const auto r = static_cast<int>(len) - 1;
        if (r <= r_max) c.values[static_cast<std::size_t>(r)] = static_cast<double>(at_least) / pair_total(img, s, r);
    }
    return c;
}

CurveStatistic c2_single(const BinaryImage& img, const ClusterLabels& labels, Phase phase, Direction dir,
                         int r_max) {
    const Step s = step_of(dir);
    const int w = img.width();
    const int h = img.height();
    CurveStatistic c{Descriptor::C2, phase, dir, std::vector<double>(static_cast<std::size_t>(r_max) + 1)};
    for (int r = 0; r <= r_max; ++r) {
        std::uint64_t hits = 0;
        const int ox = s.dx * r;
        const int oy = s.dy * r;
        for (int y = 0; y + oy < h; ++y) {
            const std::int32_t* a = labels.labels.data() + static_cast<std::size_t>(y) * w;
            const std::int32_t* b = labels.labels.data() + static_cast<std::size_t>(y + oy) * w + ox;
            for (int x = 0; x + ox < w; ++x) hits += (a[x] != 0) & (a[x] == b[x]);
        }
        c.values[r] = static_cast<double>(hits) / pair_total(img, s, r);
    }
    return c;
}

} // namespace

CurveStatistic two_point_correlation(const BinaryImage& img, Phase phase, Direction dir, int r_max) {
    check_lag(img, dir, r_max);
    const BitRows rows(img, phase);
    if (dir == Direction::XYAveraged)
        return average_xy(s2_single(img, rows, phase, Direction::X, r_max),
                          s2_single(img, rows, phase, Direction::Y, r_max));
    return s2_single(img, rows, phase, dir, r_max);
}

CurveStatistic lineal_path(const BinaryImage& img, Phase phase, Direction dir, int r_max) {
    check_lag(img, dir, r_max);
    if (dir == Direction::XYAveraged)
        return average_xy(lineal_single(img, phase, Direction::X, r_max),
                          lineal_single(img, phase, Direction::Y, r_max));
    return lineal_single(img, phase, dir, r_max);
}

CurveStatistic two_point_cluster(const BinaryImage& img, Phase phase, Direction dir, int r_max,
                                 Connectivity conn) {
    check_lag(img, dir, r_max);
    const auto labels = label_clusters(img, phase, conn);
    if (dir == Direction::XYAveraged)
        return average_xy(c2_single(img, labels, phase, Direction::X, r_max),
                          c2_single(img, labels, phase, Direction::Y, r_max));
    return c2_single(img, labels, phase, dir, r_max);
}

namespace {

struct DisjointSet {
    std::vector<std::int32_t> parent;

    std::int32_t add() {
        parent.push_back(static_cast<std::int32_t>(parent.size()));
        return parent.back();
    }
    std::int32_t find(std::int32_t a) {
        while (parent[a] != a) {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        return a;
    }
    void unite(std::int32_t a, std::int32_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

} // namespace

ClusterLabels label_clusters(const BinaryImage& img, Phase phase, Connectivity conn) {
    const int w = img.width();
    const int h = img.height();
    const std::uint8_t want = phase == Phase::Pore ? 1 : 0;
    ClusterLabels out{w, h, 0, std::vector<std::int32_t>(img.size(), 0)};
    DisjointSet sets;
    sets.add(); // provisional label 0 = background

    auto at = [&](int x, int y) -> std::int32_t& { return out.labels[static_cast<std::size_t>(y) * w + x]; };

    // First pass: provisional labels from already-visited neighbours.
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            if (img(x, y) != want) continue;
            std::int32_t best = 0;
            auto consider = [&](int nx, int ny) {
                if (nx < 0 || nx >= w || ny < 0) return;
                const std::int32_t l = at(nx, ny);
                if (l == 0) return;
                if (best == 0) best = l;
                else sets.unite(best, l);
            };
            consider(x - 1, y);
            consider(x, y - 1);
            if (conn == Connectivity::Eight) {
                consider(x - 1, y - 1);
                consider(x + 1, y - 1);
            }
            at(x, y) = best != 0 ? best : sets.add();
        }
    }

    // Second pass: resolve roots and renumber in raster order of first pixel.
    std::vector<std::int32_t> final_label(sets.parent.size(), 0);
    for (auto& l : out.labels) {
        if (l == 0) continue;
        const std::int32_t root = sets.find(l);
        if (final_label[root] == 0) final_label[root] = ++out.count;
        l = final_label[root];
    }
    return out;
}

PatternDistribution::PatternDistribution(int template_size,
                                         std::vector<std::pair<std::uint64_t, double>> entries)
    : template_size_(template_size), entries_(std::move(entries)) {
    if (template_size < 1 || template_size * template_size > 63)
        throw ValueError("template size must satisfy 1 <= N and N*N <= 63");
    const std::uint64_t limit = std::uint64_t{1} << (template_size * template_size);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (entries_[i].first >= limit) throw ValueError("pattern code out of range");
        if (!(entries_[i].second >= 0.0)) throw ValueError("pattern probabilities must be nonnegative");
        if (i > 0 && entries_[i].first <= entries_[i - 1].first)
            throw ValueError("pattern entries must be sorted by strictly increasing code");
    }
}

PatternDistribution PatternDistribution::from_dense(int template_size, std::span<const double> probabilities) {
    if (template_size < 1 || template_size * template_size > 20)
        throw ValueError("dense pattern distributions require N*N <= 20");
    if (probabilities.size() != (std::size_t{1} << (template_size * template_size)))
        throw ValueError("dense pattern vector has wrong length");
    std::vector<std::pair<std::uint64_t, double>> entries;
    for (std::size_t c = 0; c < probabilities.size(); ++c)
        if (probabilities[c] != 0.0) entries.emplace_back(c, probabilities[c]);
    return PatternDistribution(template_size, std::move(entries));
}

std::size_t PatternDistribution::code_count() const noexcept {
    return std::size_t{1} << (template_size_ * template_size_);
}

double PatternDistribution::probability(std::uint64_t code) const {
    const auto it = std::lower_bound(entries_.begin(), entries_.end(), code,
                                     [](const auto& e, std::uint64_t c) { return e.first < c; });
    return it != entries_.end() && it->first == code ? it->second : 0.0;
}

std::vector<double> PatternDistribution::to_dense() const {
    if (template_size_ * template_size_ > 20) throw ValueError("dense pattern vectors require N*N <= 20");
    std::vector<double> dense(code_count(), 0.0);
    for (const auto& [code, p] : entries_) dense[code] = p;
    return dense;
}

double PatternDistribution::total() const {
    double sum = 0.0;
    for (const auto& e : entries_) sum += e.second;
    return sum;
}

std::uint64_t window_code(const BinaryImage& img, int x, int y, int template_size) {
    std::uint64_t code = 0;
    for (int i = 0; i < template_size; ++i)
        for (int j = 0; j < template_size; ++j) code = (code << 1) | img(x + j, y + i);
    return code;
}

namespace {

void check_template(const BinaryImage& img, int n, int max_bits) {
    if (n < 1) throw ValueError("template size must be positive");
    if (n > std::min(img.width(), img.height()))
        throw ValueError("template size " + std::to_string(n) + " exceeds image dimensions");
    if (n * n > max_bits) throw ValueError("template size too large for code space");
}

// Codes of every window position, raster order of the top-left corner.
std::vector<std::uint64_t> all_window_codes(const BinaryImage& img, int n) {
    const int w = img.width();
    const int h = img.height();
    const int wx = w - n + 1;
    const int wy = h - n + 1;
    const std::uint64_t row_mask = (std::uint64_t{1} << n) - 1;
    // row_codes[y][x]: n-bit code of pixels (x..x+n-1, y), leftmost is MSB.
    std::vector<std::uint64_t> row_codes(static_cast<std::size_t>(h) * wx);
    for (int y = 0; y < h; ++y) {
        std::uint64_t rc = 0;
        for (int x = 0; x < w; ++x) {
            rc = ((rc << 1) | img(x, y)) & row_mask;
            if (x >= n - 1) row_codes[static_cast<std::size_t>(y) * wx + (x - n + 1)] = rc;
        }
    }
    std::vector<std::uint64_t> codes(static_cast<std::size_t>(wx) * wy);
    for (int y = 0; y < wy; ++y) {
        for (int x = 0; x < wx; ++x) {
            std::uint64_t code = 0;
            for (int i = 0; i < n; ++i) code = (code << n) | row_codes[static_cast<std::size_t>(y + i) * wx + x];
            codes[static_cast<std::size_t>(y) * wx + x] = code;
        }
    }
    return codes;
}

} // namespace

PatternDistribution pattern_distribution(const BinaryImage& img, int template_size) {
    check_template(img, template_size, 63);
    auto codes = all_window_codes(img, template_size);
    std::sort(codes.begin(), codes.end());
    const double windows = static_cast<double>(codes.size());
    std::vector<std::pair<std::uint64_t, double>> entries;
    for (std::size_t i = 0; i < codes.size();) {
        std::size_t j = i;
        while (j < codes.size() && codes[j] == codes[i]) ++j;
        entries.emplace_back(codes[i], static_cast<double>(j - i) / windows);
        i = j;
    }
    return PatternDistribution(template_size, std::move(entries));
}

std::vector<std::uint32_t> pattern_counts(const BinaryImage& img, int template_size) {
    check_template(img, template_size, 20);
    std::vector<std::uint32_t> counts(std::size_t{1} << (template_size * template_size), 0);
    for (auto code : all_window_codes(img, template_size)) ++counts[code];
    return counts;
}

double pattern_distance(const PatternDistribution& a, const PatternDistribution& b) {
    if (a.template_size() != b.template_size()) throw ValueError("pattern distributions differ in template size");
    const auto ea = a.entries();
    const auto eb = b.entries();
    double sum = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < ea.size() || j < eb.size()) {
        double d;
        if (j == eb.size() || (i < ea.size() && ea[i].first < eb[j].first)) {
            d = ea[i++].second;
        } else if (i == ea.size() || eb[j].first < ea[i].first) {
            d = eb[j++].second;
        } else {
            d = ea[i++].second - eb[j++].second;
        }
        sum += d * d;
    }
    return sum;
}

CurveStatistic average_curves(std::span<const CurveStatistic> curves) {
    if (curves.empty()) throw ValueError("cannot average an empty list of curves");
    CurveStatistic out = curves.front();
    for (const auto& c : curves.subspan(1)) {
        if (!c.compatible_with(out)) throw ValueError("cannot average curves of different kind/phase/direction/length");
        for (std::size_t r = 0; r < c.values.size(); ++r) out.values[r] += c.values[r];
    }
    const double n = static_cast<double>(curves.size());
    for (auto& v : out.values) v /= n;
    return out;
}

void write_curves_csv(std::ostream& out, std::span<const CurveStatistic> curves, bool header) {
    if (header) out << "kind,phase,direction,r,value\n";
    char buf[32];
    for (const auto& c : curves) {
        for (std::size_t r = 0; r < c.values.size(); ++r) {
            std::snprintf(buf, sizeof buf, "%.17g", c.values[r]);
            out << to_string(c.kind) << ',' << to_string(c.phase) << ',' << to_string(c.direction) << ',' << r
                << ',' << buf << '\n';
        }
    }
}

std::vector<CurveStatistic> descriptor_suite(const BinaryImage& img, Phase phase, Direction dir, int r_max) {
    return {two_point_correlation(img, phase, dir, r_max), lineal_path(img, phase, dir, r_max),
            two_point_cluster(img, phase, dir, r_max)};
}

} // namespace porogen::morph
