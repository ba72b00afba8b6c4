#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "porogen/grid.hpp"
#include "porogen/models.hpp"
#include "porogen/objective.hpp"

namespace porogen::train {

struct TrainingPair {
    ConditionalInput input;
    BinaryImage target;
};

struct TrainConfig {
    int epochs = 1;
    int batch_size = 2;
    objective::LossWeights weights;
    int pattern_template = 3;
    std::uint64_t seed = 0;
    double base_lr = 2e-4;
    // Fraction of all steps trained at base_lr before the linear decay.
    double decay_start = 0.5;
    bool non_saturating = false;
    // Stop after this many optimizer steps (0 = no limit).
    std::int64_t max_steps = 0;
    // Write a checkpoint every this many epochs into checkpoint_dir (0 = never).
    int checkpoint_every = 0;
    std::filesystem::path checkpoint_dir;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});

struct StepLog {
    std::int64_t step = 0;
    objective::LossReport losses;
    double lr = 0.0;
};

// Loss-log CSV columns: step,d_loss,g_adv,l1,pattern,porosity,total,lr
void write_loss_log_header(std::ostream& out);
void write_loss_log_row(std::ostream& out, const StepLog& row);

struct TrainResult {
    models::Generator generator;
    models::Discriminator discriminator;
    std::vector<StepLog> log;
};

using StepCallback = std::function<void(const StepLog&)>;

// Alternating optimization: per batch one discriminator step on
// -[log D(x,y) + log(1 - D(x,G(x,z)))] with G fixed, then one generator
// step on g_adv + l1 + pattern + porosity (weighted) with D fixed.
TrainResult train(std::span<const TrainingPair> dataset, const models::NetConfig& net, const TrainConfig& cfg,
                  const StepCallback& on_step = {});

// Generator-loss parts on a batch of generator outputs; used by train()
// and exposed for gradient checks. `pixel_grad` receives d(weighted
// non-adversarial loss)/d(output) per sample.
struct GeneratorLossParts {
    double l1 = 0.0;
    double pattern = 0.0;
    double porosity = 0.0;
    nn::Tensor pixel_grad;
};
GeneratorLossParts generator_pixel_losses(const nn::Tensor& outputs, std::span<const TrainingPair* const> batch,
                                          const objective::LossWeights& w, int pattern_template);

// Generator objective g_adv + weighted l1/pattern/porosity for a batch of
// generator outputs scored by d; with accumulate_gradients the gradient of
// the total flows back through fake into whatever produced it.
objective::LossReport generator_objective(const nn::Var& fake, const models::Discriminator& d, const nn::Var& cond,
                                          std::span<const TrainingPair* const> batch, const objective::LossWeights& w,
                                          int pattern_template, bool non_saturating, bool accumulate_gradients);

nn::CheckpointData make_checkpoint(const models::Generator& g, const models::Discriminator* d,
                                   const nlohmann::json& extra = {});
models::Generator load_generator(const nn::CheckpointData& data);

struct Realization {
    BinaryImage raw;   // binarized generator output before hard-data overwrite
    BinaryImage image; // informed pixels overwritten with the hard data
    double seconds = 0.0;
};

// k independent noise draws from Rng(seed), binarized at 0.5.
std::vector<Realization> reconstruct(const models::Generator& g, const ConditionalInput& cond, int k,
                                     std::uint64_t seed);

// Fraction of informed pixels whose phase equals the hard data.
double hard_data_fidelity(const BinaryImage& img, const ConditionalInput& cond);

} // namespace porogen::train
