#pragma once

/// \file losses.hpp
/// \brief Reconstruction (L1 + perceptual) and adversarial losses, and the
/// weighted generator objective.

#include <functional>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "posegen/config.hpp"
#include "posegen/discriminators.hpp"

namespace posegen {

/// Frozen feature extractor: the VGG-19 convolution stack up to relu4_2,
/// with stage outputs relu1_2, relu2_2, relu3_2, relu4_2. Layers are named
/// as in torchvision (`features.<index>.weight`).
///
/// Input images are in [-1,1]; they are mapped to [0,1] and normalized with
/// the ImageNet channel statistics before the first convolution.
struct PerceptualExtractorImpl : torch::nn::Module {
    explicit PerceptualExtractorImpl(const PerceptualConfig& cfg);

    std::vector<torch::Tensor> forward(const torch::Tensor& x);

    [[nodiscard]] const std::vector<double>& weights() const { return lambdas; }
    [[nodiscard]] static const std::vector<std::string>& stage_names();

    /// Loads `features.*` tensors from a named-tensor archive.
    void load_weights(const std::string& path);

    std::vector<double> lambdas;
    torch::nn::Sequential features{nullptr};
};
TORCH_MODULE(PerceptualExtractor);

/// Builds the extractor from config: loads cfg.weights_path when set,
/// otherwise seeds random weights and logs a warning. Parameters are frozen.
PerceptualExtractor make_perceptual_extractor(const PerceptualConfig& cfg);

/// A feature function with per-stage weights; the trained extractor above is
/// one instance, tests plug in others.
struct FeatureStages {
    std::function<std::vector<torch::Tensor>(const torch::Tensor&)> features;
    std::vector<double> lambdas;
};

FeatureStages stages_of(PerceptualExtractor& phi);

struct ReconLoss {
    torch::Tensor l1;
    torch::Tensor perceptual;
};

/// l1 = mean |y - y_hat|; perceptual = sum_k lambda_k * mean |phi_k(y) - phi_k(y_hat)|.
/// Stages with lambda 0 are skipped.
ReconLoss recon_loss(const torch::Tensor& y, const torch::Tensor& y_hat, const FeatureStages& phi);

/// -mean log sigmoid(real) - mean log(1 - sigmoid(fake)), computed from logits.
torch::Tensor d_i_loss(const PatchScores& real, const PatchScores& fake);
/// Same form, applied to pair scores.
torch::Tensor d_p_loss(const PatchScores& real_pair, const PatchScores& fake_pair);

struct GeneratorAdversarial {
    torch::Tensor g_adv_i;
    torch::Tensor g_adv_p;
};

/// Non-saturating: -mean log sigmoid(fake). With `saturating`, the literal
/// minimax term mean log(1 - sigmoid(fake)) is returned instead.
torch::Tensor g_adv_loss(const PatchScores& fake, bool saturating = false);
GeneratorAdversarial g_adv_losses(const PatchScores& fake_i, const PatchScores& fake_pair, bool saturating = false);

struct LossReport {
    double l1 = 0.0;
    double perceptual = 0.0;
    double g_adv_i = 0.0;
    double g_adv_p = 0.0;
    double d_i_loss = 0.0;
    double d_p_loss = 0.0;
    double total_g = 0.0;
    double alpha = 0.0;
    double beta = 0.0;
};

struct LossParts {
    double l1 = 0.0;
    double perceptual = 0.0;
    double g_adv_i = 0.0;
    double g_adv_p = 0.0;
    double d_i_loss = 0.0;
    double d_p_loss = 0.0;
};

/// total_g = l1 + perceptual + alpha*g_adv_i + beta*g_adv_p. Throws on negative weights.
LossReport total_objective(const LossParts& parts, double alpha, double beta);
/// Tensor form of the same weighting, used for backpropagation.
torch::Tensor total_objective(const ReconLoss& recon, const GeneratorAdversarial& adv, double alpha, double beta);

}  // namespace posegen
