#pragma once

#include <filesystem>
#include <string>

#include <torch/script.h>

#include "posegen/metrics.hpp"

namespace posegen {

/// Inception Score classifier backed by a TorchScript module that maps a
/// (1,3,H,W) [0,1] RGB batch to (1,K) logits.
class ScriptedClassifier final : public Classifier {
  public:
    explicit ScriptedClassifier(const std::filesystem::path& path);
    [[nodiscard]] int num_classes() const override { return k_; }
    [[nodiscard]] std::vector<double> predict(const Image& unit) const override;
    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] bool comparable() const override { return true; }

  private:
    mutable torch::jit::Module module_;
    int k_ = 0;
    std::string name_;
};

}  // namespace posegen
