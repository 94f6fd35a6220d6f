#pragma once

/// \file metrics.hpp
/// \brief SSIM and Inception Score, plus folder-level evaluation.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "posegen/image.hpp"

namespace posegen {

enum class ValueRange { Unit, Model };  ///< [0,1] or [-1,1]

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1=0.01, K2=0.03,
/// dynamic range 1, valid-window positions only. Multichannel inputs give
/// the mean of the per-channel scores.
double ssim(const Image& a, const Image& b, ValueRange range = ValueRange::Unit);

/// Probabilistic K-class classifier used by the Inception Score.
class Classifier {
  public:
    virtual ~Classifier() = default;
    [[nodiscard]] virtual int num_classes() const = 0;
    /// Class posterior for a [0,1] RGB image.
    [[nodiscard]] virtual std::vector<double> predict(const Image& unit) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
    /// True only for the standard ImageNet network; scores from anything else
    /// are not comparable with published numbers.
    [[nodiscard]] virtual bool comparable() const { return false; }
};

/// Deterministic stand-in classifier: softmax of a seeded random linear map
/// over coarse color statistics.
class ToyClassifier final : public Classifier {
  public:
    explicit ToyClassifier(int num_classes = 10, std::uint64_t seed = 0);
    [[nodiscard]] int num_classes() const override { return k_; }
    [[nodiscard]] std::vector<double> predict(const Image& unit) const override;
    [[nodiscard]] std::string name() const override { return "toy"; }

  private:
    int k_;
    std::vector<double> weights_;  // k x kFeatures
    std::vector<double> bias_;
};

struct InceptionScore {
    double mean = 0.0;
    double std = 0.0;
};

/// Throws std::invalid_argument unless p is non-negative and sums to 1 within 1e-5.
void check_probability_vector(const std::vector<double>& p);

/// exp(mean_x KL(p(y|x) || p(y))) per contiguous split; mean and population
/// std over splits.
InceptionScore inception_score(const std::vector<std::vector<double>>& probs, int n_splits);
InceptionScore inception_score(const std::vector<Image>& unit_images, const Classifier& classifier, int n_splits);

struct MetricsReport {
    double ssim_mean = 0.0;
    std::vector<double> ssim_per_image;
    std::vector<std::string> file_names;
    double is_mean = 0.0;
    double is_std = 0.0;
    int n_images = 0;
    int n_splits = 1;
    std::string classifier;
    bool is_comparable = false;
    std::vector<std::string> unmatched;
    std::vector<std::string> warnings;
    std::string label;
};

/// Pairs images by file name; unmatched names are skipped with a warning.
/// Throws std::runtime_error when no pair exists.
MetricsReport evaluate_folder(const std::filesystem::path& gen_dir, const std::filesystem::path& target_dir,
                              const Classifier& classifier, int n_splits = 10);

std::string report_to_json(const MetricsReport& r);
std::string report_to_csv(const MetricsReport& r);

}  // namespace posegen
