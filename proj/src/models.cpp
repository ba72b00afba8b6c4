#include "porogen/models.hpp"

#include <algorithm>
#include <bit>

#include "porogen/random.hpp"

namespace porogen::models {

namespace {

constexpr double kInitStd = 0.02;

bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

int log2_int(int v) { return std::countr_zero(static_cast<unsigned>(v)); }

nn::Var gaussian_parameter(nn::Shape shape, Rng& rng) {
    nn::Tensor t(shape);
    for (auto& v : t.data()) v = kInitStd * rng.normal();
    return nn::parameter(std::move(t));
}

ConvBlock make_block(int weight_out, int weight_in, int bias_channels, nn::ConvGeometry g, bool norm, Rng& rng) {
    ConvBlock b;
    b.geometry = g;
    b.weight = gaussian_parameter({weight_out, weight_in, g.kernel, g.kernel}, rng);
    b.bias = nn::parameter(nn::Tensor({1, bias_channels, 1, 1}, 0.0));
    if (norm) {
        b.gamma = nn::parameter(nn::Tensor({1, bias_channels, 1, 1}, 1.0));
        b.beta = nn::parameter(nn::Tensor({1, bias_channels, 1, 1}, 0.0));
    }
    return b;
}

void append_block(std::vector<nn::Var>& out, const ConvBlock& b) {
    out.push_back(b.weight);
    out.push_back(b.bias);
    if (b.gamma) {
        out.push_back(b.gamma);
        out.push_back(b.beta);
    }
}

void append_named(std::vector<nn::NamedTensor>& out, const std::string& prefix, const ConvBlock& b) {
    out.push_back({prefix + ".weight", b.weight->value});
    out.push_back({prefix + ".bias", b.bias->value});
    if (b.gamma) {
        out.push_back({prefix + ".gamma", b.gamma->value});
        out.push_back({prefix + ".beta", b.beta->value});
    }
}

void load_block(const nn::CheckpointData& data, const std::string& prefix, ConvBlock& b) {
    auto assign = [&](const std::string& name, nn::Var& v) {
        const nn::Tensor& t = data.find(prefix + name);
        if (t.shape() != v->value.shape())
            throw ValueError("checkpoint tensor " + prefix + name + " has shape " + t.shape().str() + ", expected " +
                             v->value.shape().str());
        v->value = t;
    };
    assign(".weight", b.weight);
    assign(".bias", b.bias);
    if (b.gamma) {
        assign(".gamma", b.gamma);
        assign(".beta", b.beta);
    }
}

std::size_t count_parameters(const std::vector<nn::Var>& params) {
    std::size_t n = 0;
    for (const auto& p : params) n += p->value.numel();
    return n;
}

// Activation and instance norm in the configured order; norm is skipped
// when the block has none or the map is 1x1.
nn::Var activate_and_normalize(const nn::Var& x, const ConvBlock& b, const NetConfig& cfg, bool leaky) {
    auto act = [&](const nn::Var& v) { return leaky ? nn::leaky_relu(v, cfg.leaky_slope) : nn::relu(v); };
    const bool norm = b.gamma && x->value.shape().plane() > 1;
    if (!norm) return act(x);
    if (cfg.order == NormOrder::ActThenNorm) return nn::instance_norm(act(x), b.gamma, b.beta);
    return act(nn::instance_norm(x, b.gamma, b.beta));
}

int channels_at(const NetConfig& cfg, int level) {
    return std::min(cfg.base_channels << std::min(level, 20), cfg.max_channels);
}

} // namespace

int NetConfig::levels() const { return depth == 0 ? log2_int(image_size) : depth; }

void NetConfig::validate() const {
    if (!is_power_of_two(image_size) || image_size < 8 || image_size > 256)
        throw ValueError("image_size must be a power of two in [8, 256]");
    if (base_channels < 1 || max_channels < base_channels) throw ValueError("invalid channel widths");
    if (n_z < 1) throw ValueError("n_z must be at least 1");
    if (!(leaky_slope >= 0.0)) throw ValueError("leaky_slope must be nonnegative");
    if (depth < 0 || depth > log2_int(image_size)) throw ValueError("depth must lie in [0, log2(image_size)]");
}

nlohmann::json to_json(const NetConfig& cfg) {
    return {{"image_size", cfg.image_size},
            {"base_channels", cfg.base_channels},
            {"n_z", cfg.n_z},
            {"max_channels", cfg.max_channels},
            {"leaky_slope", cfg.leaky_slope},
            {"norm_activation_order", cfg.order == NormOrder::ActThenNorm ? "act_then_norm" : "norm_then_act"},
            {"depth", cfg.depth}};
}

NetConfig net_config_from_json(const nlohmann::json& j, NetConfig cfg) {
    cfg.image_size = j.value("image_size", cfg.image_size);
    cfg.base_channels = j.value("base_channels", cfg.base_channels);
    cfg.n_z = j.value("n_z", cfg.n_z);
    cfg.max_channels = j.value("max_channels", cfg.max_channels);
    cfg.leaky_slope = j.value("leaky_slope", cfg.leaky_slope);
    cfg.depth = j.value("depth", cfg.depth);
    if (j.contains("norm_activation_order")) {
        const auto order = j.at("norm_activation_order").get<std::string>();
        if (order == "act_then_norm") cfg.order = NormOrder::ActThenNorm;
        else if (order == "norm_then_act") cfg.order = NormOrder::NormThenAct;
        else throw ValueError("unknown norm_activation_order '" + order + "'");
    }
    cfg.validate();
    return cfg;
}

void write_condition(nn::Tensor& t, int n, const ConditionalInput& cond) {
    const nn::Shape s = t.shape();
    if (s.c != kConditionChannels || !cond.values().same_shape(s.w, s.h))
        throw ValueError("condition does not fit tensor " + s.str());
    std::copy(cond.values().data().begin(), cond.values().data().end(), t.plane(n, 0));
    std::copy(cond.mask().data().begin(), cond.mask().data().end(), t.plane(n, 1));
}

void write_image(nn::Tensor& t, int n, const SoftImage& img) {
    const nn::Shape s = t.shape();
    if (s.c != 1 || !img.same_shape(s.w, s.h)) throw ValueError("image does not fit tensor " + s.str());
    std::copy(img.data().begin(), img.data().end(), t.plane(n, 0));
}

void write_image(nn::Tensor& t, int n, const BinaryImage& img) {
    const nn::Shape s = t.shape();
    if (s.c != 1 || !img.same_shape(s.w, s.h)) throw ValueError("image does not fit tensor " + s.str());
    std::copy(img.data().begin(), img.data().end(), t.plane(n, 0));
}

SoftImage read_image(const nn::Tensor& t, int n) {
    const nn::Shape s = t.shape();
    const double* p = t.plane(n, 0);
    std::vector<double> values(p, p + s.plane());
    for (auto& v : values) v = std::clamp(v, 0.0, 1.0);
    return SoftImage(s.w, s.h, std::move(values));
}

Generator::Generator(NetConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    const int levels = cfg_.levels();
    const nn::ConvGeometry resample{4, 2, 1};

    std::vector<int> enc_out(static_cast<std::size_t>(levels));
    for (int i = 0; i < levels; ++i) {
        enc_out[i] = channels_at(cfg_, i);
        const int in = (i == 0 ? kConditionChannels : enc_out[i - 1]) + cfg_.n_z;
        // No norm where the output map is 1x1.
        const bool norm = (cfg_.image_size >> (i + 1)) > 1;
        encoder_.push_back(make_block(enc_out[i], in, enc_out[i], resample, norm, rng));
    }
    decoder_.resize(static_cast<std::size_t>(levels));
    for (int i = levels - 1; i >= 0; --i) {
        const int in = i == levels - 1 ? enc_out[i] : 2 * enc_out[i];
        const int out = i == 0 ? 1 : enc_out[i - 1];
        // Transposed-conv weights are (c_in, c_out, k, k).
        decoder_[i] = make_block(in, out, out, resample, i != 0, rng);
    }
}

nn::Var Generator::forward(const nn::Var& cond, const nn::Var& noise) const {
    const nn::Shape cs = cond->value.shape();
    if (cs.c != kConditionChannels || cs.h != cfg_.image_size || cs.w != cfg_.image_size)
        throw ValueError("generator expects condition of shape (n,2," + std::to_string(cfg_.image_size) + "," +
                         std::to_string(cfg_.image_size) + "), got " + cs.str());
    if (noise->value.shape() != nn::Shape{cs.n, cfg_.n_z, 1, 1})
        throw ValueError("generator expects noise of shape (n," + std::to_string(cfg_.n_z) + ",1,1), got " +
                         noise->value.shape().str());

    const int levels = cfg_.levels();
    std::vector<nn::Var> skips;
    nn::Var h = cond;
    for (int i = 0; i < levels; ++i) {
        const ConvBlock& b = encoder_[i];
        h = nn::conv2d(nn::replicate_concat(h, noise), b.weight, b.bias, b.geometry);
        h = activate_and_normalize(h, b, cfg_, true);
        skips.push_back(h);
    }
    for (int i = levels - 1; i >= 0; --i) {
        const ConvBlock& b = decoder_[i];
        if (i != levels - 1) {
            if (h->value.shape().h != skips[i]->value.shape().h)
                throw ValueError("skip connection shape mismatch at level " + std::to_string(i));
            h = nn::concat_channels(h, skips[i]);
        }
        h = nn::conv_transpose2d(h, b.weight, b.bias, b.geometry);
        h = i == 0 ? nn::sigmoid(h) : activate_and_normalize(h, b, cfg_, false);
    }
    return h;
}

std::vector<nn::Var> Generator::parameters() const {
    std::vector<nn::Var> out;
    for (const auto& b : encoder_) append_block(out, b);
    for (const auto& b : decoder_) append_block(out, b);
    return out;
}

std::vector<nn::NamedTensor> Generator::named_tensors() const {
    std::vector<nn::NamedTensor> out;
    for (std::size_t i = 0; i < encoder_.size(); ++i) append_named(out, "gen.enc" + std::to_string(i), encoder_[i]);
    for (std::size_t i = 0; i < decoder_.size(); ++i) append_named(out, "gen.dec" + std::to_string(i), decoder_[i]);
    return out;
}

void Generator::load(const nn::CheckpointData& data) {
    for (std::size_t i = 0; i < encoder_.size(); ++i) load_block(data, "gen.enc" + std::to_string(i), encoder_[i]);
    for (std::size_t i = 0; i < decoder_.size(); ++i) load_block(data, "gen.dec" + std::to_string(i), decoder_[i]);
}

std::size_t Generator::parameter_count() const { return count_parameters(parameters()); }

Discriminator::Discriminator(NetConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    Rng rng(seed);
    // Four stride-2 layers when the image allows it; otherwise the remaining
    // hidden layers keep the spatial size (k=3, s=1, p=1) so the final k=4
    // layer still sees at least a 2x2 map.
    const int strided = std::min(4, log2_int(cfg_.image_size) - 1);
    int in = kConditionChannels + 1;
    for (int j = 0; j < 4; ++j) {
        const int out = channels_at(cfg_, j);
        const nn::ConvGeometry g = j < strided ? nn::ConvGeometry{4, 2, 1} : nn::ConvGeometry{3, 1, 1};
        layers_.push_back(make_block(out, in, out, g, true, rng));
        in = out;
    }
    layers_.push_back(make_block(1, in, 1, nn::ConvGeometry{4, 1, 1}, false, rng));
}

nn::Var Discriminator::forward(const nn::Var& cond, const nn::Var& image) const {
    const nn::Shape cs = cond->value.shape();
    const nn::Shape is = image->value.shape();
    if (cs.c != kConditionChannels || cs.h != cfg_.image_size || cs.w != cfg_.image_size)
        throw ValueError("discriminator expects condition of shape (n,2," + std::to_string(cfg_.image_size) + "," +
                         std::to_string(cfg_.image_size) + "), got " + cs.str());
    if (is != nn::Shape{cs.n, 1, cs.h, cs.w})
        throw ValueError("discriminator image shape " + is.str() + " does not match condition " + cs.str());

    nn::Var h = nn::concat_channels(cond, image);
    for (std::size_t j = 0; j + 1 < layers_.size(); ++j) {
        const ConvBlock& b = layers_[j];
        h = activate_and_normalize(nn::conv2d(h, b.weight, b.bias, b.geometry), b, cfg_, true);
    }
    const ConvBlock& last = layers_.back();
    return nn::spatial_mean(nn::sigmoid(nn::conv2d(h, last.weight, last.bias, last.geometry)));
}

std::vector<nn::Var> Discriminator::parameters() const {
    std::vector<nn::Var> out;
    for (const auto& b : layers_) append_block(out, b);
    return out;
}

std::vector<nn::NamedTensor> Discriminator::named_tensors() const {
    std::vector<nn::NamedTensor> out;
    for (std::size_t j = 0; j < layers_.size(); ++j) append_named(out, "disc.conv" + std::to_string(j), layers_[j]);
    return out;
}

void Discriminator::load(const nn::CheckpointData& data) {
    for (std::size_t j = 0; j < layers_.size(); ++j) load_block(data, "disc.conv" + std::to_string(j), layers_[j]);
}

std::size_t Discriminator::parameter_count() const { return count_parameters(parameters()); }

Generator build_generator(const NetConfig& cfg, std::uint64_t seed) { return Generator(cfg, seed); }

Discriminator build_discriminator(const NetConfig& cfg, std::uint64_t seed) { return Discriminator(cfg, seed); }

SoftImage generator_forward(const Generator& g, const ConditionalInput& cond, std::span<const double> z) {
    const NetConfig& cfg = g.config();
    if (static_cast<int>(z.size()) != cfg.n_z) throw ValueError("noise vector must have n_z entries");
    if (!cond.values().same_shape(cfg.image_size, cfg.image_size))
        throw ValueError("condition size does not match the generator's image_size");
    FrozenScope frozen(g.parameters());
    nn::Tensor c({1, kConditionChannels, cfg.image_size, cfg.image_size});
    write_condition(c, 0, cond);
    nn::Tensor noise({1, cfg.n_z, 1, 1}, std::vector<double>(z.begin(), z.end()));
    const auto out = g.forward(nn::constant(std::move(c)), nn::constant(std::move(noise)));
    return read_image(out->value, 0);
}

double discriminator_forward(const Discriminator& d, const ConditionalInput& cond, const SoftImage& img) {
    const NetConfig& cfg = d.config();
    if (!cond.values().same_shape(cfg.image_size, cfg.image_size) || !img.same_shape(cond.values()))
        throw ValueError("discriminator inputs do not match its image_size");
    FrozenScope frozen(d.parameters());
    nn::Tensor c({1, kConditionChannels, cfg.image_size, cfg.image_size});
    write_condition(c, 0, cond);
    nn::Tensor y({1, 1, cfg.image_size, cfg.image_size});
    write_image(y, 0, img);
    return d.forward(nn::constant(std::move(c)), nn::constant(std::move(y)))->value[0];
}

FrozenScope::FrozenScope(std::vector<nn::Var> params) : params_(std::move(params)) {
    for (const auto& p : params_) {
        previous_.push_back(p->requires_grad);
        p->requires_grad = false;
    }
}

FrozenScope::~FrozenScope() {
    for (std::size_t i = 0; i < params_.size(); ++i) params_[i]->requires_grad = previous_[i];
}

} // namespace porogen::models
