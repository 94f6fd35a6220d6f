#include "posegen/discriminators.hpp"

#include <stdexcept>

namespace posegen {

namespace nn = torch::nn;

namespace {

int64_t conv_out(int64_t d, int64_t stride) { return (d + 2 - 4) / stride + 1; }

torch::Tensor as_batch(const torch::Tensor& t) { return t.dim() == 3 ? t.unsqueeze(0) : t; }

}  // namespace

int64_t patch_grid_size(int64_t side, int n_layers) {
    int64_t d = side;
    for (int i = 0; i < n_layers; ++i) d = conv_out(d, 2);
    d = conv_out(d, 1);
    return conv_out(d, 1);
}

int64_t patch_receptive_field(int n_layers) {
    // walk back from one output: rf = rf*stride + (k - stride)
    int64_t rf = 1;
    rf = rf + 3;  // final stride-1
    rf = rf + 3;  // stride-1
    for (int i = 0; i < n_layers; ++i) rf = rf * 2 + 2;
    return rf;
}

int64_t min_disc_input_side(int n_layers) {
    for (int64_t side = 1;; ++side) {
        int64_t d = side;
        bool ok = true;
        for (int i = 0; i < n_layers; ++i) {
            d = conv_out(d, 2);
            if (i > 0 && d < 2) ok = false;  // normalized layer
        }
        d = conv_out(d, 1);
        if (d < 2) ok = false;
        if (ok && conv_out(d, 1) >= 1) return side;
    }
}

PatchDiscriminatorImpl::PatchDiscriminatorImpl(const DiscConfig& config) : cfg(config) {
    cfg.validate();
    const int c = cfg.base_channels;
    auto conv = [](int in, int out, int stride, bool bias = true) {
        return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(stride).padding(1).bias(bias));
    };
    auto lrelu = [] { return nn::LeakyReLU(nn::LeakyReLUOptions().negative_slope(0.2)); };

    nn::Sequential seq(conv(cfg.in_channels, c, 2), lrelu());
    int width = c;
    for (int i = 1; i < cfg.n_layers; ++i) {
        const int next = c * std::min(1 << i, 8);
        seq->push_back(conv(width, next, 2, false));
        seq->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(next)));
        seq->push_back(lrelu());
        width = next;
    }
    const int last = c * std::min(1 << cfg.n_layers, 8);
    seq->push_back(conv(width, last, 1, false));
    seq->push_back(nn::InstanceNorm2d(nn::InstanceNorm2dOptions(last)));
    seq->push_back(lrelu());
    seq->push_back(conv(last, 1, 1));
    model = register_module("model", seq);
    init_discriminator_weights(*this);
}

torch::Tensor PatchDiscriminatorImpl::forward(const torch::Tensor& x) {
    const auto min_side = min_disc_input_side(cfg.n_layers);
    if (x.dim() != 4 || x.size(1) != cfg.in_channels)
        throw std::invalid_argument("discriminator: expected " + std::to_string(cfg.in_channels) + " input channels");
    if (x.size(2) < min_side || x.size(3) < min_side)
        throw std::invalid_argument("discriminator: input smaller than " + std::to_string(min_side) + " pixels");
    return model->forward(x);
}

void init_discriminator_weights(PatchDiscriminatorImpl& d) {
    torch::NoGradGuard no_grad;
    for (auto& item : d.named_parameters()) {
        if (item.key().ends_with(".bias")) item.value().zero_();
        else item.value().normal_(0.0, 0.02);
    }
}

PatchScores d_image(PatchDiscriminator& d, const torch::Tensor& y) { return {d->forward(as_batch(y))}; }

PatchScores d_pair(PatchDiscriminator& d, const torch::Tensor& y, const torch::Tensor& pose) {
    auto yb = as_batch(y), pb = as_batch(pose);
    if (yb.size(2) != pb.size(2) || yb.size(3) != pb.size(3))
        throw std::invalid_argument("d_pair: image and pose differ in spatial size");
    if (pb.size(0) != yb.size(0)) pb = pb.expand({yb.size(0), -1, -1, -1});
    return {d->forward(torch::cat({yb, pb}, 1))};
}

}  // namespace posegen
