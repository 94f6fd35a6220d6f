#pragma once

/// \file generator.hpp
/// \brief Pose-conditioned generator: image encoder (residual stem + bidirectional
/// convolutional LSTM), U-Net pose encoder and skip-connected decoder.
///
/// Parameter names are stable: `ei.*`, `ep.*`, `dec.*` (prefixed `g.` in checkpoints).

#include <vector>

#include <torch/torch.h>

#include "posegen/config.hpp"

namespace posegen {

namespace nn = torch::nn;

/// C_I: (1, lstm_hidden_channels, H/4, W/4)
struct VisualCode {
    torch::Tensor tensor;
};

/// C_P: bottleneck (B, 4*base, H/4, W/4); skips at (H, W) and (H/2, W/2), shallow first.
struct PoseCode {
    torch::Tensor bottleneck;
    std::vector<torch::Tensor> skips;
};

// conv -> instance norm -> relu -> conv -> instance norm, plus identity
struct ResidualBlockImpl : nn::Module {
    explicit ResidualBlockImpl(int channels);
    torch::Tensor forward(const torch::Tensor& x);

    nn::Sequential body{nullptr};
};
TORCH_MODULE(ResidualBlock);

/// One convolutional LSTM step. Gates are ordered (input, forget, cell, output).
struct ConvLstmCellImpl : nn::Module {
    ConvLstmCellImpl(int in_channels, int hidden_channels);
    /// Returns (h', c').
    std::pair<torch::Tensor, torch::Tensor> forward(const torch::Tensor& x, const torch::Tensor& h,
                                                    const torch::Tensor& c);

    int hidden;
    nn::Conv2d input_conv{nullptr};
    nn::Conv2d state_conv{nullptr};
};
TORCH_MODULE(ConvLstmCell);

struct ImageEncoderImpl : nn::Module {
    explicit ImageEncoderImpl(const GeneratorConfig& cfg);
    /// xs: (T, 3, H, W), one sequence. Returns (1, hidden, H/4, W/4).
    torch::Tensor forward(const torch::Tensor& xs);

    nn::Sequential stem{nullptr};
    nn::Sequential res{nullptr};
    ConvLstmCell fwd{nullptr};
    ConvLstmCell bwd{nullptr};
    nn::Conv2d merge{nullptr};
};
TORCH_MODULE(ImageEncoder);

struct PoseEncoderImpl : nn::Module {
    explicit PoseEncoderImpl(const GeneratorConfig& cfg);
    PoseCode forward(const torch::Tensor& pose);

    nn::Sequential down1{nullptr};
    nn::Sequential down2{nullptr};
    nn::Sequential bottom{nullptr};
};
TORCH_MODULE(PoseEncoder);

struct DecoderImpl : nn::Module {
    explicit DecoderImpl(const GeneratorConfig& cfg);
    /// ci is broadcast over the batch of cp.
    torch::Tensor forward(const torch::Tensor& ci, const PoseCode& cp);

    nn::Conv2d fuse{nullptr};
    nn::ConvTranspose2d up1{nullptr};
    nn::Conv2d conv1{nullptr};
    nn::ConvTranspose2d up2{nullptr};
    nn::Conv2d conv2{nullptr};
    nn::Conv2d out{nullptr};
};
TORCH_MODULE(Decoder);

struct GeneratorImpl : nn::Module {
    explicit GeneratorImpl(const GeneratorConfig& cfg);

    /// xs: list of (3,H,W) or (1,3,H,W) images in [-1,1].
    VisualCode encode_images(const std::vector<torch::Tensor>& xs);
    /// pose: (3,H,W) or (B,3,H,W) pose maps in [0,1].
    PoseCode encode_pose(const torch::Tensor& pose);
    torch::Tensor decode(const VisualCode& ci, const PoseCode& cp);
    /// decode(encode_images(xs), encode_pose(pose)); output (B,3,H,W) in [-1,1].
    torch::Tensor forward(const std::vector<torch::Tensor>& xs, const torch::Tensor& pose);

    GeneratorConfig cfg;
    ImageEncoder ei{nullptr};
    PoseEncoder ep{nullptr};
    Decoder dec{nullptr};
};
TORCH_MODULE(Generator);

/// normal(0, 0.02) conv weights, orthogonal LSTM state kernels, zero biases.
void init_generator_weights(GeneratorImpl& g);

}  // namespace posegen
