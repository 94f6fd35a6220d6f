#include "posegen/losses.hpp"

#include <stdexcept>

#include "posegen/log.hpp"

#include "posegen/archive.hpp"

namespace posegen {

namespace nn = torch::nn;

namespace {

// torchvision vgg19.features indices whose outputs are the loss stages
constexpr std::array<int, 4> kStageEnds{3, 8, 13, 22};

}  // namespace

PerceptualExtractorImpl::PerceptualExtractorImpl(const PerceptualConfig& cfg) : lambdas(cfg.lambdas) {
    cfg.validate();
    const int c = cfg.base_channels;
    auto conv = [](int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 3).padding(1)); };
    auto pool = [] { return nn::MaxPool2d(nn::MaxPool2dOptions(2).stride(2)); };
    nn::Sequential seq;
    // block 1: indices 0-4
    seq->push_back(conv(3, c)); seq->push_back(nn::ReLU());
    seq->push_back(conv(c, c)); seq->push_back(nn::ReLU());
    seq->push_back(pool());
    // block 2: 5-9
    seq->push_back(conv(c, 2 * c)); seq->push_back(nn::ReLU());
    seq->push_back(conv(2 * c, 2 * c)); seq->push_back(nn::ReLU());
    seq->push_back(pool());
    // block 3: 10-18
    seq->push_back(conv(2 * c, 4 * c)); seq->push_back(nn::ReLU());
    for (int i = 0; i < 3; ++i) { seq->push_back(conv(4 * c, 4 * c)); seq->push_back(nn::ReLU()); }
    seq->push_back(pool());
    // block 4 up to relu4_2: 19-22
    seq->push_back(conv(4 * c, 8 * c)); seq->push_back(nn::ReLU());
    seq->push_back(conv(8 * c, 8 * c)); seq->push_back(nn::ReLU());
    features = register_module("features", seq);
}

const std::vector<std::string>& PerceptualExtractorImpl::stage_names() {
    static const std::vector<std::string> names{"relu1_2", "relu2_2", "relu3_2", "relu4_2"};
    return names;
}

std::vector<torch::Tensor> PerceptualExtractorImpl::forward(const torch::Tensor& x) {
    const auto opts = x.options();
    const auto mean = torch::tensor({0.485, 0.456, 0.406}, opts).view({1, 3, 1, 1});
    const auto std = torch::tensor({0.229, 0.224, 0.225}, opts).view({1, 3, 1, 1});
    auto h = ((x + 1.0) * 0.5 - mean) / std;

    int last_needed = -1;
    for (std::size_t s = 0; s < lambdas.size(); ++s)
        if (lambdas[s] > 0.0) last_needed = kStageEnds[s];

    std::vector<torch::Tensor> stages;
    int index = 0;
    for (auto& layer : *features) {
        if (index > last_needed) break;
        h = layer.forward(h);
        if (std::find(kStageEnds.begin(), kStageEnds.end(), index) != kStageEnds.end()) stages.push_back(h);
        ++index;
    }
    return stages;
}

void PerceptualExtractorImpl::load_weights(const std::string& path) {
    const TensorArchive archive = load_archive(path);
    import_module(*features, "features.", archive);
}

PerceptualExtractor make_perceptual_extractor(const PerceptualConfig& cfg) {
    torch::manual_seed(cfg.seed);
    PerceptualExtractor phi(cfg);
    if (cfg.weights_path.empty()) {
        log_warn("perceptual.weights_path not set; using random-weight feature extractor");
        torch::NoGradGuard no_grad;
        for (auto& p : phi->named_parameters()) {
            if (p.key().ends_with(".bias")) p.value().zero_();
            else nn::init::kaiming_normal_(p.value(), 0.0, torch::kFanIn, torch::kReLU);
        }
    } else {
        phi->load_weights(cfg.weights_path);
    }
    for (auto& p : phi->parameters()) p.set_requires_grad(false);
    phi->eval();
    return phi;
}

FeatureStages stages_of(PerceptualExtractor& phi) {
    return {[phi](const torch::Tensor& x) mutable { return phi->forward(x); }, phi->weights()};
}

ReconLoss recon_loss(const torch::Tensor& y, const torch::Tensor& y_hat, const FeatureStages& phi) {
    if (y.sizes() != y_hat.sizes()) throw std::invalid_argument("recon_loss: shape mismatch");
    ReconLoss out;
    out.l1 = (y - y_hat).abs().mean();
    out.perceptual = torch::zeros({}, y.options());
    bool any = false;
    for (double l : phi.lambdas) any = any || l > 0.0;
    if (!any || !phi.features) return out;

    const auto fy = phi.features(y);
    const auto fh = phi.features(y_hat);
    for (std::size_t k = 0; k < phi.lambdas.size() && k < fy.size(); ++k) {
        if (phi.lambdas[k] <= 0.0) continue;
        out.perceptual = out.perceptual + phi.lambdas[k] * (fy[k] - fh[k]).abs().mean();
    }
    return out;
}

torch::Tensor d_i_loss(const PatchScores& real, const PatchScores& fake) {
    return torch::softplus(-real.map).mean() + torch::softplus(fake.map).mean();
}

torch::Tensor d_p_loss(const PatchScores& real_pair, const PatchScores& fake_pair) {
    return d_i_loss(real_pair, fake_pair);
}

torch::Tensor g_adv_loss(const PatchScores& fake, bool saturating) {
    if (saturating) return -torch::softplus(fake.map).mean();
    return torch::softplus(-fake.map).mean();
}

GeneratorAdversarial g_adv_losses(const PatchScores& fake_i, const PatchScores& fake_pair, bool saturating) {
    return {g_adv_loss(fake_i, saturating), g_adv_loss(fake_pair, saturating)};
}

LossReport total_objective(const LossParts& parts, double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("total_objective: weights must be non-negative");
    LossReport r;
    r.l1 = parts.l1;
    r.perceptual = parts.perceptual;
    r.g_adv_i = parts.g_adv_i;
    r.g_adv_p = parts.g_adv_p;
    r.d_i_loss = parts.d_i_loss;
    r.d_p_loss = parts.d_p_loss;
    r.alpha = alpha;
    r.beta = beta;
    r.total_g = parts.l1 + parts.perceptual + alpha * parts.g_adv_i + beta * parts.g_adv_p;
    return r;
}

torch::Tensor total_objective(const ReconLoss& recon, const GeneratorAdversarial& adv, double alpha, double beta) {
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw std::invalid_argument("total_objective: weights must be non-negative");
    return recon.l1 + recon.perceptual + alpha * adv.g_adv_i + beta * adv.g_adv_p;
}

}  // namespace posegen
