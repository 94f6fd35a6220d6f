#include "posegen/scripted_classifier.hpp"

#include <stdexcept>

#include "posegen/trainer.hpp"

namespace posegen {

ScriptedClassifier::ScriptedClassifier(const std::filesystem::path& path) : name_(path.filename().string()) {
    try {
        module_ = torch::jit::load(path.string());
    } catch (const c10::Error& e) {
        throw std::runtime_error("cannot load classifier " + path.string());
    }
    module_.eval();
    Image probe(3, 64, 64, 0.5f);
    k_ = static_cast<int>(predict(probe).size());
}

std::vector<double> ScriptedClassifier::predict(const Image& unit) const {
    torch::NoGradGuard no_grad;
    auto logits = module_.forward({image_to_tensor(unit)}).toTensor().to(torch::kFloat64).reshape({-1});
    auto probs = torch::softmax(logits, 0).contiguous();
    std::vector<double> out(probs.data_ptr<double>(), probs.data_ptr<double>() + probs.numel());
    check_probability_vector(out);
    return out;
}

}  // namespace posegen
