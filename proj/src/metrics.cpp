#include "posegen/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>
#include <spdlog/spdlog.h>

namespace posegen {

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr int kToyFeatures = 15;

std::array<double, kWindow> gaussian_window() {
    std::array<double, kWindow> w{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kWindow / 2;
        w[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSigma * kSigma));
        sum += w[static_cast<std::size_t>(i)];
    }
    for (auto& v : w) v /= sum;
    return w;
}

// Valid-mode separable filtering of a (h, w) plane.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w) {
    static const auto g = gaussian_window();
    const int ow = w - kWindow + 1, oh = h - kWindow + 1;
    std::vector<double> rows(static_cast<std::size_t>(h) * ow);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(y) * w + x + k];
            rows[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    std::vector<double> out(static_cast<std::size_t>(oh) * ow);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double acc = 0.0;
            for (int k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = acc;
        }
    return out;
}

double ssim_plane(std::span<const float> a, std::span<const float> b, int h, int w, ValueRange range) {
    const std::size_t n = a.size();
    std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
        double av = a[i], bv = b[i];
        if (range == ValueRange::Model) {
            av = (av + 1.0) * 0.5;
            bv = (bv + 1.0) * 0.5;
        }
        x[i] = av;
        y[i] = bv;
        xx[i] = av * av;
        yy[i] = bv * bv;
        xy[i] = av * bv;
    }
    const auto mx = filter_valid(x, h, w), my = filter_valid(y, h, w);
    const auto sxx = filter_valid(xx, h, w), syy = filter_valid(yy, h, w), sxy = filter_valid(xy, h, w);
    double total = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
        const double vx = sxx[i] - mx[i] * mx[i];
        const double vy = syy[i] - my[i] * my[i];
        const double cxy = sxy[i] - mx[i] * my[i];
        total += ((2.0 * mx[i] * my[i] + kC1) * (2.0 * cxy + kC2)) /
                 ((mx[i] * mx[i] + my[i] * my[i] + kC1) * (vx + vy + kC2));
    }
    return total / static_cast<double>(mx.size());
}

}  // namespace

double ssim(const Image& a, const Image& b, ValueRange range) {
    if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
    if (a.height < kWindow || a.width < kWindow) throw std::invalid_argument("ssim: images smaller than the 11x11 window");
    double sum = 0.0;
    for (int c = 0; c < a.channels; ++c) sum += ssim_plane(a.plane(c), b.plane(c), a.height, a.width, range);
    return sum / a.channels;
}

ToyClassifier::ToyClassifier(int num_classes, std::uint64_t seed) : k_(num_classes) {
    if (num_classes < 2) throw std::invalid_argument("ToyClassifier: need at least two classes");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 4.0);
    weights_.resize(static_cast<std::size_t>(k_) * kToyFeatures);
    bias_.resize(static_cast<std::size_t>(k_));
    for (auto& v : weights_) v = normal(rng);
    for (auto& v : bias_) v = 0.25 * normal(rng);
}

std::vector<double> ToyClassifier::predict(const Image& unit) const {
    if (unit.channels != 3) throw std::invalid_argument("ToyClassifier: expected an RGB image");
    std::array<double, kToyFeatures> f{};
    const int hh = unit.height / 2, hw = unit.width / 2;
    for (int c = 0; c < 3; ++c) {
        std::array<double, 4> quad{};
        std::array<int, 4> count{};
        double sum = 0.0, sq = 0.0;
        for (int y = 0; y < unit.height; ++y)
            for (int x = 0; x < unit.width; ++x) {
                const double v = unit.at(c, y, x);
                const int q = (y >= hh ? 2 : 0) + (x >= hw ? 1 : 0);
                quad[static_cast<std::size_t>(q)] += v;
                ++count[static_cast<std::size_t>(q)];
                sum += v;
                sq += v * v;
            }
        for (int q = 0; q < 4; ++q)
            f[static_cast<std::size_t>(c * 4 + q)] =
                count[static_cast<std::size_t>(q)] ? quad[static_cast<std::size_t>(q)] / count[static_cast<std::size_t>(q)] - 0.5 : 0.0;
        const double n = static_cast<double>(unit.height) * unit.width;
        const double mean = sum / n;
        f[static_cast<std::size_t>(12 + c)] = std::sqrt(std::max(0.0, sq / n - mean * mean));
    }
    std::vector<double> logits(static_cast<std::size_t>(k_));
    for (int k = 0; k < k_; ++k) {
        double acc = bias_[static_cast<std::size_t>(k)];
        for (int j = 0; j < kToyFeatures; ++j)
            acc += weights_[static_cast<std::size_t>(k * kToyFeatures + j)] * f[static_cast<std::size_t>(j)];
        logits[static_cast<std::size_t>(k)] = acc;
    }
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (auto& l : logits) z += (l = std::exp(l - mx));
    for (auto& l : logits) l /= z;
    return logits;
}

void check_probability_vector(const std::vector<double>& p) {
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw std::invalid_argument("classifier output has a negative or NaN probability");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-5) throw std::invalid_argument("classifier output does not sum to 1");
}

InceptionScore inception_score(const std::vector<std::vector<double>>& probs, int n_splits) {
    if (n_splits < 1) throw std::invalid_argument("inception_score: n_splits must be >= 1");
    if (probs.size() < static_cast<std::size_t>(n_splits))
        throw std::invalid_argument("inception_score: fewer images than splits");
    const std::size_t k = probs.front().size();
    for (const auto& p : probs) {
        if (p.size() != k) throw std::invalid_argument("inception_score: inconsistent class counts");
        check_probability_vector(p);
    }

    const std::size_t n = probs.size();
    std::vector<double> scores;
    for (int s = 0; s < n_splits; ++s) {
        const std::size_t begin = n * static_cast<std::size_t>(s) / static_cast<std::size_t>(n_splits);
        const std::size_t end = n * static_cast<std::size_t>(s + 1) / static_cast<std::size_t>(n_splits);
        std::vector<double> marginal(k, 0.0);
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t c = 0; c < k; ++c) marginal[c] += probs[i][c];
        for (auto& m : marginal) m /= static_cast<double>(end - begin);
        double kl_sum = 0.0;
        for (std::size_t i = begin; i < end; ++i)
            for (std::size_t c = 0; c < k; ++c) {
                const double p = probs[i][c];
                if (p > 0.0) kl_sum += p * (std::log(p) - std::log(marginal[c]));
            }
        scores.push_back(std::exp(kl_sum / static_cast<double>(end - begin)));
    }
    const double mean = std::accumulate(scores.begin(), scores.end(), 0.0) / scores.size();
    double var = 0.0;
    for (double s : scores) var += (s - mean) * (s - mean);
    return {mean, std::sqrt(var / scores.size())};
}

InceptionScore inception_score(const std::vector<Image>& unit_images, const Classifier& classifier, int n_splits) {
    std::vector<std::vector<double>> probs;
    probs.reserve(unit_images.size());
    for (const auto& img : unit_images) probs.push_back(classifier.predict(img));
    return inception_score(probs, n_splits);
}

MetricsReport evaluate_folder(const std::filesystem::path& gen_dir, const std::filesystem::path& target_dir,
                              const Classifier& classifier, int n_splits) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(gen_dir)) throw std::runtime_error("not a directory: " + gen_dir.string());
    if (!fs::is_directory(target_dir)) throw std::runtime_error("not a directory: " + target_dir.string());

    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(gen_dir)) {
        if (!e.is_regular_file()) continue;
        auto ext = e.path().extension().string();
        if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") names.push_back(e.path().filename().string());
    }
    std::sort(names.begin(), names.end());

    MetricsReport r;
    r.classifier = classifier.name();
    r.is_comparable = classifier.comparable();
    std::vector<Image> generated;
    for (const auto& name : names) {
        if (!fs::exists(target_dir / name)) {
            spdlog::warn("no target image for {}; skipping", name);
            r.unmatched.push_back(name);
            continue;
        }
        Image gen = read_image(gen_dir / name);
        Image tgt = read_image(target_dir / name);
        if (!gen.same_shape(tgt)) {
            spdlog::warn("size mismatch for {}; skipping", name);
            r.unmatched.push_back(name);
            continue;
        }
        r.ssim_per_image.push_back(ssim(gen, tgt));
        r.file_names.push_back(name);
        generated.push_back(std::move(gen));
    }
    if (!r.unmatched.empty()) r.warnings.push_back(std::to_string(r.unmatched.size()) + " unmatched file(s) skipped");
    if (generated.empty()) throw std::runtime_error("evaluate_folder: no matched image pairs");

    r.n_images = static_cast<int>(generated.size());
    r.ssim_mean = std::accumulate(r.ssim_per_image.begin(), r.ssim_per_image.end(), 0.0) / r.n_images;
    r.n_splits = std::max(1, n_splits);
    if (r.n_splits > r.n_images) {
        r.warnings.push_back("n_splits reduced to the number of images");
        r.n_splits = r.n_images;
    }
    const auto is = inception_score(generated, classifier, r.n_splits);
    r.is_mean = is.mean;
    r.is_std = is.std;
    if (!r.is_comparable) r.warnings.push_back("inception score uses a non-standard classifier; not comparable");
    return r;
}

std::string report_to_json(const MetricsReport& r) {
    nlohmann::json j;
    j["tool_version"] = POSEGEN_VERSION;
    if (!r.label.empty()) j["label"] = r.label;
    j["ssim_mean"] = r.ssim_mean;
    j["ssim_per_image"] = r.ssim_per_image;
    j["is_mean"] = r.is_mean;
    j["is_std"] = r.is_std;
    j["n_images"] = r.n_images;
    j["n_splits"] = r.n_splits;
    j["classifier"] = r.classifier;
    j["is_comparable"] = r.is_comparable;
    j["unmatched"] = r.unmatched;
    j["warnings"] = r.warnings;
    return j.dump(2);
}

std::string report_to_csv(const MetricsReport& r) {
    std::string out = "file,ssim\n";
    for (std::size_t i = 0; i < r.file_names.size(); ++i) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9f", r.ssim_per_image[i]);
        out += r.file_names[i] + "," + buf + "\n";
    }
    return out;
}

}  // namespace posegen
