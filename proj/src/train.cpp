#include "porogen/train.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "porogen/optim.hpp"
#include "porogen/random.hpp"

namespace porogen::train {

void TrainConfig::validate() const {
    if (epochs < 0) throw ValueError("epochs must be nonnegative");
    if (batch_size < 1) throw ValueError("batch_size must be at least 1");
    if (pattern_template < 1 || pattern_template * pattern_template > 16)
        throw ValueError("pattern template N must satisfy N*N <= 16");
    if (!(base_lr >= 0.0)) throw ValueError("learning rate must be nonnegative");
    if (!(decay_start >= 0.0 && decay_start <= 1.0)) throw ValueError("decay_start must lie in [0,1]");
    if (max_steps < 0 || checkpoint_every < 0) throw ValueError("max_steps and checkpoint_every must be nonnegative");
    weights.validate();
}

nlohmann::json to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"lambda_l1", cfg.weights.lambda_l1},
            {"lambda_pattern", cfg.weights.lambda_pattern},
            {"lambda_porosity", cfg.weights.lambda_porosity},
            {"pattern_template", cfg.pattern_template},
            {"seed", cfg.seed},
            {"base_lr", cfg.base_lr},
            {"decay_start", cfg.decay_start},
            {"non_saturating", cfg.non_saturating},
            {"max_steps", cfg.max_steps}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig cfg) {
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.weights.lambda_l1 = j.value("lambda_l1", cfg.weights.lambda_l1);
    cfg.weights.lambda_pattern = j.value("lambda_pattern", cfg.weights.lambda_pattern);
    cfg.weights.lambda_porosity = j.value("lambda_porosity", cfg.weights.lambda_porosity);
    cfg.pattern_template = j.value("pattern_template", cfg.pattern_template);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.base_lr = j.value("base_lr", cfg.base_lr);
    cfg.decay_start = j.value("decay_start", cfg.decay_start);
    cfg.non_saturating = j.value("non_saturating", cfg.non_saturating);
    cfg.max_steps = j.value("max_steps", cfg.max_steps);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.validate();
    return cfg;
}

void write_loss_log_header(std::ostream& out) { out << "step,d_loss,g_adv,l1,pattern,porosity,total,lr\n"; }

void write_loss_log_row(std::ostream& out, const StepLog& row) {
    char buf[512];
    const auto& l = row.losses;
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(row.step), l.d_loss, l.g_adv, l.l1, l.pattern, l.porosity, l.total, row.lr);
    out << buf;
}

GeneratorLossParts generator_pixel_losses(const nn::Tensor& outputs, std::span<const TrainingPair* const> batch,
                                          const objective::LossWeights& w, int pattern_template) {
    const nn::Shape s = outputs.shape();
    if (s.n != static_cast<int>(batch.size()) || s.c != 1) throw ValueError("output batch does not match the pairs");
    GeneratorLossParts parts;
    parts.pixel_grad = nn::Tensor(s, 0.0);
    const double inv_n = 1.0 / static_cast<double>(s.n);
    for (int b = 0; b < s.n; ++b) {
        const TrainingPair& pair = *batch[static_cast<std::size_t>(b)];
        const SoftImage out = models::read_image(outputs, b);
        const auto l1 = objective::masked_l1(out, pair.input);
        const auto pat = objective::pattern_loss(out, pair.target, pattern_template);
        const auto por = objective::porosity_loss(out, porosity(pair.target));
        parts.l1 += inv_n * l1.value;
        parts.pattern += inv_n * pat.value;
        parts.porosity += inv_n * por.value;
        double* g = parts.pixel_grad.plane(b, 0);
        for (std::size_t i = 0; i < s.plane(); ++i)
            g[i] = inv_n * (w.lambda_l1 * l1.grad[i] + w.lambda_pattern * pat.grad[i] +
                            w.lambda_porosity * por.grad[i]);
    }
    return parts;
}

namespace {

void check_finite(const objective::LossReport& r, std::int64_t step) {
    for (double v : {r.d_loss, r.g_adv, r.l1, r.pattern, r.porosity, r.total})
        if (!std::isfinite(v))
            throw NumericalError("non-finite loss at step " + std::to_string(step) +
                                 " (d_loss=" + std::to_string(r.d_loss) + ", total=" + std::to_string(r.total) + ")");
}

std::vector<double> column(const nn::Tensor& t) { return {t.data().begin(), t.data().end()}; }

nn::Tensor as_tensor(const std::vector<double>& v) {
    return nn::Tensor({static_cast<int>(v.size()), 1, 1, 1}, v);
}

} // namespace

objective::LossReport generator_objective(const nn::Var& fake, const models::Discriminator& d, const nn::Var& cond,
                                          std::span<const TrainingPair* const> batch, const objective::LossWeights& w,
                                          int pattern_template, bool non_saturating, bool accumulate_gradients) {
    const auto d_fake = d.forward(cond, fake);
    const auto adv = objective::g_adv_loss(column(d_fake->value), non_saturating);
    const auto parts = generator_pixel_losses(fake->value, batch, w, pattern_template);
    objective::LossReport report;
    report.g_adv = adv.value;
    report.l1 = parts.l1;
    report.pattern = parts.pattern;
    report.porosity = parts.porosity;
    objective::finalize_total(report, w);
    if (accumulate_gradients && std::isfinite(report.total)) {
        const std::pair<nn::Var, nn::Tensor> seeds[] = {{d_fake, as_tensor(adv.d_fake_grad)},
                                                        {fake, parts.pixel_grad}};
        nn::backward(seeds);
    }
    return report;
}

TrainResult train(std::span<const TrainingPair> dataset, const models::NetConfig& net, const TrainConfig& cfg,
                  const StepCallback& on_step) {
    net.validate();
    cfg.validate();
    if (dataset.empty()) throw ValueError("training dataset is empty");
    const int size = net.image_size;
    for (const auto& p : dataset)
        if (!p.input.values().same_shape(size, size) || !p.target.same_shape(size, size))
            throw ValueError("training pair size does not match image_size " + std::to_string(size));

    TrainResult result{models::build_generator(net, derive_seed(cfg.seed, 1)),
                       models::build_discriminator(net, derive_seed(cfg.seed, 2)), {}};
    const auto g_params = result.generator.parameters();
    const auto d_params = result.discriminator.parameters();

    const auto n = static_cast<std::int64_t>(dataset.size());
    const std::int64_t batches = (n + cfg.batch_size - 1) / cfg.batch_size;
    std::int64_t total_steps = batches * cfg.epochs;
    if (cfg.max_steps > 0) total_steps = std::min(total_steps, cfg.max_steps);
    if (total_steps == 0) return result;

    nn::LrSchedule schedule{cfg.base_lr, 0, total_steps};
    schedule.hold_steps =
        std::min<std::int64_t>(static_cast<std::int64_t>(cfg.decay_start * static_cast<double>(total_steps)),
                               total_steps - 1);
    nn::AdamState g_opt(g_params, schedule);
    nn::AdamState d_opt(d_params, schedule);

    Rng shuffle_rng(derive_seed(cfg.seed, 3));
    Rng noise_rng(derive_seed(cfg.seed, 4));
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::int64_t step = 0;
    for (int epoch = 0; epoch < cfg.epochs && step < total_steps; ++epoch) {
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        for (std::int64_t first = 0; first < n && step < total_steps; first += cfg.batch_size) {
            const int bn = static_cast<int>(std::min<std::int64_t>(cfg.batch_size, n - first));
            std::vector<const TrainingPair*> batch;
            nn::Tensor cond_t({bn, models::kConditionChannels, size, size});
            nn::Tensor real_t({bn, 1, size, size});
            nn::Tensor noise_t({bn, net.n_z, 1, 1});
            for (int b = 0; b < bn; ++b) {
                const TrainingPair& pair = dataset[order[static_cast<std::size_t>(first + b)]];
                batch.push_back(&pair);
                models::write_condition(cond_t, b, pair.input);
                models::write_image(real_t, b, pair.target);
            }
            for (auto& v : noise_t.data()) v = noise_rng.normal();
            const auto cond = nn::constant(std::move(cond_t));
            const auto real = nn::constant(std::move(real_t));

            nn::zero_grad(g_params);
            nn::zero_grad(d_params);
            const double lr = nn::lr_at(step, schedule);

            // Generator forward, recorded for the later G step.
            nn::set_trainable(g_params, true);
            nn::set_trainable(d_params, false);
            const auto fake = result.generator.forward(cond, nn::constant(std::move(noise_t)));

            objective::LossReport report;
            // Discriminator step on real vs. detached fake.
            {
                nn::set_trainable(d_params, true);
                const auto d_real = result.discriminator.forward(cond, real);
                const auto d_fake = result.discriminator.forward(cond, nn::constant(fake->value));
                const auto loss = objective::d_loss(column(d_real->value), column(d_fake->value));
                report.d_loss = loss.value;
                const std::pair<nn::Var, nn::Tensor> seeds[] = {{d_real, as_tensor(loss.d_real_grad)},
                                                                {d_fake, as_tensor(loss.d_fake_grad)}};
                nn::backward(seeds);
                nn::adam_step(d_params, d_opt);
                nn::set_trainable(d_params, false);
            }
            // Generator step against the updated, frozen discriminator.
            const auto g_report =
                generator_objective(fake, result.discriminator, cond, batch, cfg.weights, cfg.pattern_template,
                                    cfg.non_saturating, true);
            report.g_adv = g_report.g_adv;
            report.l1 = g_report.l1;
            report.pattern = g_report.pattern;
            report.porosity = g_report.porosity;
            report.total = g_report.total;
            check_finite(report, step);
            nn::adam_step(g_params, g_opt);

            StepLog row{step, report, lr};
            result.log.push_back(row);
            if (on_step) on_step(row);
            ++step;
        }
        if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0 && !cfg.checkpoint_dir.empty()) {
            char name[64];
            std::snprintf(name, sizeof name, "checkpoint_epoch%04d.bin", epoch + 1);
            nn::write_checkpoint(make_checkpoint(result.generator, &result.discriminator,
                                                 {{"epoch", epoch + 1}, {"step", step}, {"train", to_json(cfg)}}),
                                 cfg.checkpoint_dir / name);
        }
    }
    nn::set_trainable(g_params, true);
    nn::set_trainable(d_params, true);
    return result;
}

nn::CheckpointData make_checkpoint(const models::Generator& g, const models::Discriminator* d,
                                   const nlohmann::json& extra) {
    nn::CheckpointData data;
    data.metadata = {{"net", models::to_json(g.config())}};
    if (!extra.is_null())
        for (const auto& [k, v] : extra.items()) data.metadata[k] = v;
    data.tensors = g.named_tensors();
    if (d) {
        auto dt = d->named_tensors();
        data.tensors.insert(data.tensors.end(), dt.begin(), dt.end());
    }
    return data;
}

models::Generator load_generator(const nn::CheckpointData& data) {
    if (!data.metadata.contains("net")) throw ValueError("checkpoint metadata lacks the network config");
    models::Generator g(models::net_config_from_json(data.metadata.at("net")), 0);
    g.load(data);
    return g;
}

std::vector<Realization> reconstruct(const models::Generator& g, const ConditionalInput& cond, int k,
                                     std::uint64_t seed) {
    if (k < 1) throw ValueError("realization count must be positive");
    const auto& cfg = g.config();
    if (!cond.values().same_shape(cfg.image_size, cfg.image_size))
        throw ValueError("condition is " + std::to_string(cond.width()) + "x" + std::to_string(cond.height()) +
                         " but the generator expects " + std::to_string(cfg.image_size));
    Rng rng(seed);
    std::vector<Realization> out;
    std::vector<double> z(static_cast<std::size_t>(cfg.n_z));
    for (int i = 0; i < k; ++i) {
        for (auto& v : z) v = rng.normal();
        const auto start = std::chrono::steady_clock::now();
        const SoftImage soft = models::generator_forward(g, cond, z);
        BinaryImage raw = binarize(soft, 0.5);
        BinaryImage image = raw;
        const auto mask = cond.mask().data();
        const auto values = cond.values().data();
        for (std::size_t p = 0; p < mask.size(); ++p)
            if (mask[p]) image.set(p, values[p] >= 0.5);
        const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        out.push_back({std::move(raw), std::move(image), seconds});
    }
    return out;
}

double hard_data_fidelity(const BinaryImage& img, const ConditionalInput& cond) {
    if (!img.same_shape(cond.values())) throw ValueError("image and condition differ in shape");
    const auto informed = cond.mask().informed_count();
    if (informed == 0) throw ValueError("condition has no informed pixels");
    std::size_t agree = 0;
    const auto mask = cond.mask().data();
    const auto values = cond.values().data();
    for (std::size_t p = 0; p < mask.size(); ++p)
        if (mask[p] && img.data()[p] == (values[p] >= 0.5 ? 1 : 0)) ++agree;
    return static_cast<double>(agree) / static_cast<double>(informed);
}

} // namespace porogen::train
