#include "porogen/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>

#include "porogen/random.hpp"

namespace porogen::synth {

void MediumSpec::validate() const {
    if (!(porosity > 0.0 && porosity < 1.0)) throw ValueError("medium porosity must lie in (0,1)");
    if (!(correlation_length >= 1.0)) throw ValueError("correlation length must be at least 1 pixel");
}

void MaskSpec::validate(int size) const {
    if (extent < 1 || extent > size) throw ValueError("mask extent must lie in [1, image size]");
    if (kind == MaskKind::RandomSquares && (count < 1 || static_cast<long>(count) * extent * extent >
                                                             static_cast<long>(size) * size))
        throw ValueError("random squares do not fit the image");
}

MediumKind parse_medium_kind(const std::string& s) {
    if (s == "blob") return MediumKind::Blob;
    if (s == "disks") return MediumKind::Disks;
    if (s == "aniso" || s == "anisotropic-blob") return MediumKind::AnisotropicBlob;
    throw ValueError("unknown medium '" + s + "' (expected blob, disks or aniso)");
}

std::string to_string(MediumKind k) {
    switch (k) {
    case MediumKind::Blob: return "blob";
    case MediumKind::Disks: return "disks";
    case MediumKind::AnisotropicBlob: return "aniso";
    }
    return "?";
}

MaskSpec parse_mask_spec(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw ValueError("mask spec '" + s + "' must look like kind:params");
    const std::string kind = s.substr(0, colon);
    const std::string params = s.substr(colon + 1);
    MaskSpec m;
    try {
        if (kind == "corner") {
            m.kind = MaskKind::CornerSquare;
            m.extent = std::stoi(params);
        } else if (kind == "squares") {
            m.kind = MaskKind::RandomSquares;
            const auto x = params.find('x');
            if (x == std::string::npos) throw ValueError("squares mask needs SIDExCOUNT");
            m.extent = std::stoi(params.substr(0, x));
            m.count = std::stoi(params.substr(x + 1));
        } else if (kind == "hstrip") {
            m.kind = MaskKind::HorizontalStrip;
            m.extent = std::stoi(params);
        } else if (kind == "vstrip") {
            m.kind = MaskKind::VerticalStrip;
            m.extent = std::stoi(params);
        } else {
            throw ValueError("unknown mask kind '" + kind + "'");
        }
    } catch (const std::logic_error& e) {
        if (dynamic_cast<const ValueError*>(&e)) throw;
        throw ValueError("malformed mask spec '" + s + "'");
    }
    return m;
}

std::string to_string(const MaskSpec& m) {
    switch (m.kind) {
    case MaskKind::CornerSquare: return "corner:" + std::to_string(m.extent);
    case MaskKind::RandomSquares: return "squares:" + std::to_string(m.extent) + "x" + std::to_string(m.count);
    case MaskKind::HorizontalStrip: return "hstrip:" + std::to_string(m.extent);
    case MaskKind::VerticalStrip: return "vstrip:" + std::to_string(m.extent);
    }
    return "?";
}

namespace {

std::vector<double> gaussian_kernel(double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[static_cast<std::size_t>(i + radius)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[static_cast<std::size_t>(i + radius)];
    }
    for (auto& v : k) v /= sum;
    return k;
}

std::vector<double> white_noise(int n, Rng& rng) {
    std::vector<double> f(static_cast<std::size_t>(n) * n);
    for (auto& v : f) v = rng.normal();
    return f;
}

// Separable isotropic smoothing of padded noise, cropped to size x size.
std::vector<double> blob_field(int size, double sigma, Rng& rng) {
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2);
    const int padded = size + 2 * r;
    const auto noise = white_noise(padded, rng);
    // Rows: padded x size (valid along x).
    std::vector<double> tmp(static_cast<std::size_t>(padded) * size, 0.0);
    for (int y = 0; y < padded; ++y)
        for (int x = 0; x < size; ++x) {
            double s = 0.0;
            for (int i = 0; i < static_cast<int>(k.size()); ++i)
                s += k[static_cast<std::size_t>(i)] * noise[static_cast<std::size_t>(y) * padded + x + i];
            tmp[static_cast<std::size_t>(y) * size + x] = s;
        }
    std::vector<double> field(static_cast<std::size_t>(size) * size, 0.0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double s = 0.0;
            for (int i = 0; i < static_cast<int>(k.size()); ++i)
                s += k[static_cast<std::size_t>(i)] * tmp[static_cast<std::size_t>(y + i) * size + x];
            field[static_cast<std::size_t>(y) * size + x] = s;
        }
    return field;
}

// Gaussian smoothing stretched along the (+1,+1) diagonal.
std::vector<double> anisotropic_field(int size, double corr, Rng& rng) {
    const double sigma_long = 2.0 * corr;
    const double sigma_short = std::max(0.5, 0.5 * corr);
    const int r = static_cast<int>(std::ceil(3.0 * sigma_long / std::numbers::sqrt2));
    const int span = 2 * r + 1;
    std::vector<double> kernel(static_cast<std::size_t>(span) * span);
    for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
            const double u = (dx + dy) / std::numbers::sqrt2;
            const double v = (dx - dy) / std::numbers::sqrt2;
            kernel[static_cast<std::size_t>(dy + r) * span + (dx + r)] =
                std::exp(-0.5 * (u * u / (sigma_long * sigma_long) + v * v / (sigma_short * sigma_short)));
        }
    const int padded = size + 2 * r;
    const auto noise = white_noise(padded, rng);
    std::vector<double> field(static_cast<std::size_t>(size) * size, 0.0);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double s = 0.0;
            for (int ky = 0; ky < span; ++ky) {
                const double* krow = &kernel[static_cast<std::size_t>(ky) * span];
                const double* nrow = &noise[static_cast<std::size_t>(y + ky) * padded + x];
                for (int kx = 0; kx < span; ++kx) s += krow[kx] * nrow[kx];
            }
            field[static_cast<std::size_t>(y) * size + x] = s;
        }
    return field;
}

// Boolean model of equal disks; the field is minus the distance to the
// nearest centre so thresholding grows or shrinks every disk uniformly.
std::vector<double> disk_field(int size, double radius, double phi, Rng& rng) {
    const int pad = static_cast<int>(std::ceil(radius));
    const double extent = size + 2.0 * pad;
    const double area = extent * extent;
    const auto count = static_cast<int>(
        std::max(1.0, std::ceil(-std::log(1.0 - phi) * area / (std::numbers::pi * radius * radius))));
    std::vector<std::pair<double, double>> centres(static_cast<std::size_t>(count));
    for (auto& c : centres) {
        c.first = rng.uniform() * extent - pad;
        c.second = rng.uniform() * extent - pad;
    }
    std::vector<double> field(static_cast<std::size_t>(size) * size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double best = INFINITY;
            for (const auto& [cx, cy] : centres) best = std::min(best, (x - cx) * (x - cx) + (y - cy) * (y - cy));
            field[static_cast<std::size_t>(y) * size + x] = -std::sqrt(best);
        }
    return field;
}

BinaryImage threshold_by_rank(const std::vector<double>& field, int size, double phi) {
    std::vector<std::size_t> order(field.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return field[a] != field[b] ? field[a] > field[b] : a < b;
    });
    const auto pores = static_cast<std::size_t>(std::llround(phi * static_cast<double>(field.size())));
    BinaryImage img(size, size, false);
    for (std::size_t i = 0; i < pores; ++i) img.set(order[i], true);
    return img;
}

} // namespace

BinaryImage generate_medium(const MediumSpec& spec, int size) {
    spec.validate();
    if (size < 1) throw ValueError("image size must be positive");
    Rng rng(spec.seed);
    std::vector<double> field;
    switch (spec.kind) {
    case MediumKind::Blob: field = blob_field(size, spec.correlation_length, rng); break;
    case MediumKind::AnisotropicBlob: field = anisotropic_field(size, spec.correlation_length, rng); break;
    case MediumKind::Disks: field = disk_field(size, spec.correlation_length, spec.porosity, rng); break;
    }
    return threshold_by_rank(field, size, spec.porosity);
}

namespace {

struct Rect {
    int x, y, w, h;
    bool overlaps(const Rect& o) const { return x < o.x + o.w && o.x < x + w && y < o.y + o.h && o.y < y + h; }
};

void paint(Mask& m, const Rect& r) {
    for (int y = r.y; y < r.y + r.h; ++y)
        for (int x = r.x; x < r.x + r.w; ++x) m.set(x, y, true);
}

constexpr int kPlacementRetries = 10000;

} // namespace

Mask generate_mask_at(const MaskSpec& spec, int size, std::uint64_t seed, bool random_position) {
    spec.validate(size);
    Mask mask(size, size, false);
    Rng rng(seed);
    auto offset = [&](int extent) { return random_position ? static_cast<int>(rng.below(size - extent + 1)) : 0; };
    switch (spec.kind) {
    case MaskKind::CornerSquare: {
        const int x = offset(spec.extent);
        const int y = offset(spec.extent);
        paint(mask, {x, y, spec.extent, spec.extent});
        break;
    }
    case MaskKind::HorizontalStrip: paint(mask, {0, offset(spec.extent), size, spec.extent}); break;
    case MaskKind::VerticalStrip: paint(mask, {offset(spec.extent), 0, spec.extent, size}); break;
    case MaskKind::RandomSquares: {
        std::vector<Rect> placed;
        int attempts = 0;
        while (static_cast<int>(placed.size()) < spec.count) {
            if (++attempts > kPlacementRetries)
                throw ValueError("could not place " + std::to_string(spec.count) + " non-overlapping " +
                                 std::to_string(spec.extent) + "px squares");
            const Rect r{static_cast<int>(rng.below(size - spec.extent + 1)),
                         static_cast<int>(rng.below(size - spec.extent + 1)), spec.extent, spec.extent};
            if (std::none_of(placed.begin(), placed.end(), [&](const Rect& p) { return p.overlaps(r); }))
                placed.push_back(r);
        }
        for (const auto& r : placed) paint(mask, r);
        break;
    }
    }
    return mask;
}

Mask generate_mask(const MaskSpec& spec, int size, std::uint64_t seed) {
    return generate_mask_at(spec, size, seed, false);
}

nlohmann::json to_json(const DatasetManifest& m) {
    return {{"sample_count", m.sample_count},
            {"image_size", m.image_size},
            {"train", m.train},
            {"test", m.test},
            {"medium",
             {{"kind", to_string(m.medium.kind)},
              {"porosity", m.medium.porosity},
              {"correlation_length", m.medium.correlation_length}}},
            {"mask", to_string(m.mask)},
            {"random_mask_placement", m.random_mask_placement},
            {"seed", m.seed}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
    DatasetManifest m;
    try {
        m.sample_count = j.at("sample_count").get<int>();
        m.image_size = j.at("image_size").get<int>();
        m.train = j.at("train").get<std::vector<int>>();
        m.test = j.at("test").get<std::vector<int>>();
        const auto& med = j.at("medium");
        m.medium.kind = parse_medium_kind(med.at("kind").get<std::string>());
        m.medium.porosity = med.at("porosity").get<double>();
        m.medium.correlation_length = med.at("correlation_length").get<double>();
        m.mask = parse_mask_spec(j.at("mask").get<std::string>());
        m.random_mask_placement = j.value("random_mask_placement", false);
        m.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValueError(std::string("invalid dataset manifest: ") + e.what());
    }
    return m;
}

void split_indices(int n, double train_fraction, std::uint64_t seed, std::vector<int>& train, std::vector<int>& test) {
    if (n < 1) throw ValueError("cannot split an empty dataset");
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, 0x5117));
    rng.shuffle(std::span<int>(order));
    const auto n_train = static_cast<std::size_t>(std::llround(train_fraction * n));
    train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
}

std::string pair_stem(int index) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d", index);
    return buf;
}

DatasetManifest build_dataset(const DatasetOptions& opts, const std::filesystem::path& dir) {
    if (opts.sample_count < 10) throw ValueError("a dataset needs at least 10 samples");
    if (!(opts.train_fraction > 0.0 && opts.train_fraction < 1.0)) throw ValueError("train fraction must lie in (0,1)");
    opts.medium.validate();
    opts.mask.validate(opts.image_size);

    DatasetManifest m;
    m.sample_count = opts.sample_count;
    m.image_size = opts.image_size;
    m.medium = opts.medium;
    m.mask = opts.mask;
    m.random_mask_placement = opts.random_mask_placement;
    m.seed = opts.seed;
    split_indices(opts.sample_count, opts.train_fraction, opts.seed, m.train, m.test);

    std::error_code ec;
    std::filesystem::create_directories(dir / "pairs", ec);
    if (ec) throw IoError("cannot create " + (dir / "pairs").string() + ": " + ec.message());

    const std::uint64_t mask_seed = derive_seed(opts.seed, 0xA5C0);
    const Mask fixed_mask = generate_mask(opts.mask, opts.image_size, mask_seed);
    for (int i = 0; i < opts.sample_count; ++i) {
        MediumSpec spec = opts.medium;
        spec.seed = derive_seed(opts.seed, static_cast<std::uint64_t>(i));
        const BinaryImage target = generate_medium(spec, opts.image_size);
        const Mask mask = opts.random_mask_placement
                              ? generate_mask_at(opts.mask, opts.image_size,
                                                 derive_seed(mask_seed, static_cast<std::uint64_t>(i)), true)
                              : fixed_mask;
        const auto cond = make_conditional_input(target, mask);
        const std::string stem = pair_stem(i);
        save_image(conditional_values_image(cond), dir / "pairs" / (stem + "_input.pgm"));
        save_mask(mask, dir / "pairs" / (stem + "_mask.pgm"));
        save_image(target, dir / "pairs" / (stem + "_target.pgm"));
    }

    std::ofstream out(dir / "manifest.json", std::ios::trunc);
    if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
    out << to_json(m).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + (dir / "manifest.json").string());
    return m;
}

Dataset load_dataset(const std::filesystem::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw IoError("cannot open " + (dir / "manifest.json").string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid manifest.json: ") + e.what(), e.byte);
    }
    Dataset ds{manifest_from_json(j), {}};
    for (int i = 0; i < ds.manifest.sample_count; ++i) {
        const std::string stem = pair_stem(i);
        const BinaryImage input = load_image(dir / "pairs" / (stem + "_input.pgm"));
        const Mask mask = load_mask(dir / "pairs" / (stem + "_mask.pgm"));
        BinaryImage target = load_image(dir / "pairs" / (stem + "_target.pgm"));
        ds.pairs.push_back({make_conditional_input(input, mask), std::move(target)});
    }
    return ds;
}

} // namespace porogen::synth
