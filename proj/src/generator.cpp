#include "posegen/generator.hpp"

#include <stdexcept>

namespace posegen {

namespace {

nn::Conv2dOptions conv(int in, int out, int k, int stride = 1, int pad = 0) {
    return nn::Conv2dOptions(in, out, k).stride(stride).padding(pad);
}

nn::InstanceNorm2d inorm(int c) { return nn::InstanceNorm2d(nn::InstanceNorm2dOptions(c)); }

torch::Tensor as_batch(const torch::Tensor& t) { return t.dim() == 3 ? t.unsqueeze(0) : t; }

}  // namespace

ResidualBlockImpl::ResidualBlockImpl(int channels) {
    body = register_module("body", nn::Sequential(nn::ReflectionPad2d(1), nn::Conv2d(conv(channels, channels, 3).bias(false)),
                                                  inorm(channels), nn::ReLU(), nn::ReflectionPad2d(1),
                                                  nn::Conv2d(conv(channels, channels, 3).bias(false)), inorm(channels)));
}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) { return x + body->forward(x); }

ConvLstmCellImpl::ConvLstmCellImpl(int in_channels, int hidden_channels) : hidden(hidden_channels) {
    input_conv = register_module("input_conv", nn::Conv2d(conv(in_channels, 4 * hidden_channels, 3, 1, 1)));
    state_conv = register_module("state_conv", nn::Conv2d(conv(hidden_channels, 4 * hidden_channels, 3, 1, 1).bias(false)));
}

std::pair<torch::Tensor, torch::Tensor> ConvLstmCellImpl::forward(const torch::Tensor& x, const torch::Tensor& h,
                                                                  const torch::Tensor& c) {
    auto gates = (input_conv->forward(x) + state_conv->forward(h)).chunk(4, 1);
    auto i = torch::sigmoid(gates[0]);
    auto f = torch::sigmoid(gates[1]);
    auto g = torch::tanh(gates[2]);
    auto o = torch::sigmoid(gates[3]);
    auto c_next = f * c + i * g;
    return {o * torch::tanh(c_next), c_next};
}

ImageEncoderImpl::ImageEncoderImpl(const GeneratorConfig& cfg) {
    const int c = cfg.base_channels;
    stem = register_module("stem", nn::Sequential(nn::ReflectionPad2d(3), nn::Conv2d(conv(3, c, 7).bias(false)), inorm(c), nn::ReLU(),
                                                  nn::Conv2d(conv(c, 2 * c, 3, 2, 1).bias(false)), inorm(2 * c), nn::ReLU(),
                                                  nn::Conv2d(conv(2 * c, 4 * c, 3, 2, 1).bias(false)), inorm(4 * c), nn::ReLU()));
    res = nn::Sequential();
    for (int i = 0; i < cfg.n_res_blocks; ++i) res->push_back(ResidualBlock(4 * c));
    res = register_module("res", res);
    fwd = register_module("fwd", ConvLstmCell(4 * c, cfg.lstm_hidden_channels));
    bwd = register_module("bwd", ConvLstmCell(4 * c, cfg.lstm_hidden_channels));
    merge = register_module("merge", nn::Conv2d(conv(2 * cfg.lstm_hidden_channels, cfg.lstm_hidden_channels, 1)));
}

torch::Tensor ImageEncoderImpl::forward(const torch::Tensor& xs) {
    const auto features = res->forward(stem->forward(xs));  // (T, 4c, H/4, W/4)
    const auto steps = features.size(0);
    auto zeros = torch::zeros({1, fwd->hidden, features.size(2), features.size(3)}, features.options());

    torch::Tensor hf = zeros, cf = zeros;
    for (int64_t t = 0; t < steps; ++t) std::tie(hf, cf) = fwd->forward(features.slice(0, t, t + 1), hf, cf);
    torch::Tensor hb = zeros, cb = zeros;
    for (int64_t t = steps - 1; t >= 0; --t) std::tie(hb, cb) = bwd->forward(features.slice(0, t, t + 1), hb, cb);

    return merge->forward(torch::cat({hf, hb}, 1));
}

PoseEncoderImpl::PoseEncoderImpl(const GeneratorConfig& cfg) {
    const int c = cfg.base_channels;
    auto block = [](int in, int out) {
        return nn::Sequential(nn::Conv2d(conv(in, out, 3, 1, 1)), nn::ReLU(), nn::Conv2d(conv(out, out, 3, 1, 1)), nn::ReLU());
    };
    down1 = register_module("down1", block(3, c));
    down2 = register_module("down2", block(c, 2 * c));
    bottom = register_module("bottom", block(2 * c, 4 * c));
}

PoseCode PoseEncoderImpl::forward(const torch::Tensor& pose) {
    auto s1 = down1->forward(pose);
    auto s2 = down2->forward(torch::max_pool2d(s1, 2));
    auto b = bottom->forward(torch::max_pool2d(s2, 2));
    return {b, {s1, s2}};
}

DecoderImpl::DecoderImpl(const GeneratorConfig& cfg) {
    const int c = cfg.base_channels;
    fuse = register_module("fuse", nn::Conv2d(conv(cfg.lstm_hidden_channels + 4 * c, 4 * c, 3, 1, 1)));
    up1 = register_module("up1", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(4 * c, 2 * c, 2).stride(2)));
    conv1 = register_module("conv1", nn::Conv2d(conv(4 * c, 2 * c, 3, 1, 1)));
    up2 = register_module("up2", nn::ConvTranspose2d(nn::ConvTranspose2dOptions(2 * c, c, 2).stride(2)));
    conv2 = register_module("conv2", nn::Conv2d(conv(2 * c, c, 3, 1, 1)));
    out = register_module("out", nn::Conv2d(conv(c, 3, 7)));
}

torch::Tensor DecoderImpl::forward(const torch::Tensor& ci, const PoseCode& cp) {
    const auto batch = cp.bottleneck.size(0);
    auto x = torch::relu(fuse->forward(torch::cat({ci.expand({batch, -1, -1, -1}), cp.bottleneck}, 1)));
    x = torch::relu(conv1->forward(torch::cat({up1->forward(x), cp.skips[1]}, 1)));
    x = torch::relu(conv2->forward(torch::cat({up2->forward(x), cp.skips[0]}, 1)));
    x = torch::reflection_pad2d(x, {3, 3, 3, 3});
    return torch::tanh(out->forward(x));
}

GeneratorImpl::GeneratorImpl(const GeneratorConfig& config) : cfg(config) {
    cfg.validate();
    ei = register_module("ei", ImageEncoder(cfg));
    ep = register_module("ep", PoseEncoder(cfg));
    dec = register_module("dec", Decoder(cfg));
    init_generator_weights(*this);
}

VisualCode GeneratorImpl::encode_images(const std::vector<torch::Tensor>& xs) {
    if (xs.empty()) throw std::invalid_argument("encode_images: no source images");
    if (xs.size() > 5) throw std::invalid_argument("encode_images: at most 5 source images");
    if (cfg.mode == Mode::Single && xs.size() != 1)
        throw std::invalid_argument("encode_images: single mode takes exactly one source image");
    std::vector<torch::Tensor> batch;
    for (const auto& x : xs) {
        auto b = as_batch(x);
        if (b.size(0) != 1 || b.size(1) != 3) throw std::invalid_argument("encode_images: expected (3,H,W) images");
        if (b.size(2) % GeneratorConfig::kDownsampleFactor != 0 || b.size(3) % GeneratorConfig::kDownsampleFactor != 0)
            throw std::invalid_argument("encode_images: image size must be divisible by 4");
        if (!batch.empty() && b.sizes() != batch.front().sizes())
            throw std::invalid_argument("encode_images: source images differ in size");
        batch.push_back(b);
    }
    return {ei->forward(torch::cat(batch, 0))};
}

PoseCode GeneratorImpl::encode_pose(const torch::Tensor& pose) {
    auto p = as_batch(pose);
    if (p.dim() != 4 || p.size(1) != 3) throw std::invalid_argument("encode_pose: expected a 3-channel pose map");
    if (p.size(2) % GeneratorConfig::kDownsampleFactor != 0 || p.size(3) % GeneratorConfig::kDownsampleFactor != 0)
        throw std::invalid_argument("encode_pose: pose size must be divisible by 4");
    return ep->forward(p);
}

torch::Tensor GeneratorImpl::decode(const VisualCode& ci, const PoseCode& cp) {
    if (ci.tensor.size(2) != cp.bottleneck.size(2) || ci.tensor.size(3) != cp.bottleneck.size(3))
        throw std::invalid_argument("decode: visual and pose codes differ in spatial size");
    return dec->forward(ci.tensor, cp);
}

torch::Tensor GeneratorImpl::forward(const std::vector<torch::Tensor>& xs, const torch::Tensor& pose) {
    return decode(encode_images(xs), encode_pose(pose));
}

void init_generator_weights(GeneratorImpl& g) {
    torch::NoGradGuard no_grad;
    for (auto& item : g.named_parameters()) {
        const auto& name = item.key();
        auto& p = item.value();
        if (name.ends_with(".bias")) {
            p.zero_();
        } else if (name.find("state_conv") != std::string::npos) {
            nn::init::orthogonal_(p);
        } else {
            p.normal_(0.0, 0.02);
        }
    }
}

}  // namespace posegen
