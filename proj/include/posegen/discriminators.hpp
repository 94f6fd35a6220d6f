#pragma once

/// \file discriminators.hpp
/// \brief PatchGAN discriminators: image realism (3 channels) and image-pose
/// consistency (6 channels, image and pose map concatenated).

#include <vector>

#include <torch/torch.h>

#include "posegen/config.hpp"

namespace posegen {

/// Raw (pre-sigmoid) patch scores, shape (B, 1, h', w').
struct PatchScores {
    torch::Tensor map;
    [[nodiscard]] torch::Tensor mean() const { return map.mean(); }
};

/// Spatial size of the score grid for an input side of `side` pixels;
/// 4x4 kernels, padding 1, n_layers stride-2 layers then two stride-1 layers.
int64_t patch_grid_size(int64_t side, int n_layers);

/// Receptive field (pixels) of one output score.
int64_t patch_receptive_field(int n_layers);

/// Smallest input side for which every normalized layer sees more than one pixel.
int64_t min_disc_input_side(int n_layers);

struct PatchDiscriminatorImpl : torch::nn::Module {
    explicit PatchDiscriminatorImpl(const DiscConfig& cfg);
    torch::Tensor forward(const torch::Tensor& x);

    DiscConfig cfg;
    torch::nn::Sequential model{nullptr};
};
TORCH_MODULE(PatchDiscriminator);

/// normal(0, 0.02) weights, zero biases.
void init_discriminator_weights(PatchDiscriminatorImpl& d);

/// Realism scores for y (3,H,W) or (B,3,H,W).
PatchScores d_image(PatchDiscriminator& d, const torch::Tensor& y);
/// Consistency scores for the pair (y, p); spatial sizes must match.
PatchScores d_pair(PatchDiscriminator& d, const torch::Tensor& y, const torch::Tensor& pose);

}  // namespace posegen
