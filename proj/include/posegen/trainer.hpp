#pragma once

/// \file trainer.hpp
/// \brief Alternating optimization of the generator and both discriminators,
/// learning-rate schedule, checkpointing and resumption.

#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "posegen/archive.hpp"
#include "posegen/config.hpp"
#include "posegen/data.hpp"
#include "posegen/discriminators.hpp"
#include "posegen/generator.hpp"
#include "posegen/losses.hpp"

namespace posegen {

/// lr0 * decay_factor^floor(epoch / decay_every)
double lr_schedule(int epoch, const TrainConfig& cfg);

/// Adam with the configured betas, eps 1e-8, no weight decay.
torch::optim::AdamOptions adam_options(const TrainConfig& cfg);

/// (1,C,H,W) tensor of the image values.
torch::Tensor image_to_tensor(const Image& img, torch::Dtype dtype = torch::kFloat32);
/// Accepts (C,H,W) or (1,C,H,W).
Image tensor_to_image(const torch::Tensor& t);

struct StepBatch {
    std::vector<torch::Tensor> sources;  ///< each (1,3,H,W), [-1,1]
    torch::Tensor target_pose;           ///< (1,3,H,W), [0,1]
    torch::Tensor target_image;
    torch::Tensor foreign_pose;
    torch::Tensor foreign_image;
};

StepBatch to_batch(const TrainingTriple& t, torch::Dtype dtype = torch::kFloat32);

class NonFiniteLoss : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct DiscriminatorLosses {
    double d_i = 0.0;
    double d_p = 0.0;
};

struct GeneratorLossTerms {
    ReconLoss recon;
    GeneratorAdversarial adv;
    torch::Tensor total;
};

SampleOptions sample_options(const RunConfig& cfg);

class Trainer {
  public:
    explicit Trainer(RunConfig cfg, torch::Dtype dtype = torch::kFloat32);

    /// One alternating update: D_I and D_P on detached generator outputs,
    /// then G on the weighted objective against the updated discriminators.
    LossReport train_step(const TrainingTriple& triple);
    LossReport train_step(const StepBatch& batch);

    /// Updates D_I and D_P against detached generator outputs.
    DiscriminatorLosses discriminator_step(const StepBatch& batch, const torch::Tensor& generated);
    /// Updates G on the weighted objective with the discriminators frozen.
    GeneratorLossTerms generator_step(const StepBatch& batch, const torch::Tensor& generated);

    /// G(x, [p, p~]) as a (2,3,H,W) batch: row 0 uses the target pose, row 1 the foreign pose.
    torch::Tensor generate_pair(const StepBatch& batch);
    /// Generator objective for a generated pair under the current discriminators.
    GeneratorLossTerms generator_terms(const StepBatch& batch, const torch::Tensor& generated);
    GeneratorLossTerms generator_objective(const StepBatch& batch) {
        return generator_terms(batch, generate_pair(batch));
    }

    void set_learning_rate(double lr);
    [[nodiscard]] double learning_rate() const { return lr_; }

    [[nodiscard]] TensorArchive to_archive() const;
    void save_checkpoint(const std::filesystem::path& path) const;
    void load_checkpoint(const std::filesystem::path& path);

    [[nodiscard]] const RunConfig& config() const { return cfg_; }
    Generator& generator() { return gen_; }
    PatchDiscriminator& image_discriminator() { return d_i_; }
    PatchDiscriminator& pair_discriminator() { return d_p_; }
    PerceptualExtractor& perceptual() { return phi_; }
    Rng& rng() { return rng_; }
    [[nodiscard]] int epoch() const { return epoch_; }
    void set_epoch(int e) { epoch_ = e; }
    [[nodiscard]] long global_step() const { return global_step_; }

  private:
    RunConfig cfg_;
    torch::Dtype dtype_;
    PerceptualExtractor phi_{nullptr};
    Generator gen_{nullptr};
    PatchDiscriminator d_i_{nullptr};
    PatchDiscriminator d_p_{nullptr};
    std::unique_ptr<torch::optim::Adam> opt_g_;
    std::unique_ptr<torch::optim::Adam> opt_d_i_;
    std::unique_ptr<torch::optim::Adam> opt_d_p_;
    Rng rng_;
    double lr_;
    int epoch_ = 0;
    long global_step_ = 0;
};

struct LogRecord {
    long step = 0;
    int epoch = 0;
    LossReport losses;
    double lr = 0.0;
};

std::string to_json_line(const LogRecord& r);
LogRecord parse_log_line(const std::string& line);
std::vector<LogRecord> read_log(const std::filesystem::path& path);

struct FitResult {
    std::filesystem::path final_checkpoint;
    std::vector<std::filesystem::path> checkpoints;
    std::vector<LogRecord> log;  ///< records produced by this call
};

/// Runs epochs [trainer.epoch(), cfg.train.epochs): one step per SKU in a
/// seeded shuffled order. Writes `train_log.jsonl` and `epoch_NNNN.ckpt`
/// files into cfg.train.output_dir. On resume the log is truncated to the
/// checkpoint's step before appending.
FitResult fit(Trainer& trainer, const std::vector<SkuGroup>& groups,
              const std::function<void(const LogRecord&)>& on_step = {});

/// Rebuilds the generator stored in a checkpoint.
Generator load_generator(const std::filesystem::path& ckpt, RunConfig* cfg_out = nullptr);

/// Generates one image ([-1,1]) from model-range sources and a pose map.
Image synthesize(Generator& g, const std::vector<Image>& sources, const PoseMap& pose);

}  // namespace posegen
