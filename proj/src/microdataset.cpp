#include "posegen/microdataset.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <stdexcept>

#include <json.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "posegen/posemap.hpp"

namespace posegen {

namespace fs = std::filesystem;

namespace {

struct Garment {
    cv::Vec3b top_a, top_b, bottom;
    double stripe_period;
    double stripe_angle;
};

cv::Vec3b random_color(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> c(30, 225);
    return {static_cast<uchar>(c(rng)), static_cast<uchar>(c(rng)), static_cast<uchar>(c(rng))};
}

Garment random_garment(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> period(3.0, 8.0), angle(0.0, std::numbers::pi);
    return {random_color(rng), random_color(rng), random_color(rng), period(rng), angle(rng)};
}

// Keypoints in normalized [0,1] coordinates for a random upright pose.
std::array<cv::Point2d, kNumKeypoints> random_pose(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> jitter(-0.04, 0.04);
    std::uniform_real_distribution<double> arm(-0.3, 2.0), bend(-1.0, 1.0), leg(-0.15, 0.6), knee(-0.5, 0.2);
    std::array<cv::Point2d, kNumKeypoints> k{};
    const double cx = 0.5 + jitter(rng);
    const cv::Point2d neck{cx, 0.28 + jitter(rng) * 0.5};
    const cv::Point2d hip_c{cx + jitter(rng) * 0.5, 0.56};
    auto at = [&](Joint j) -> cv::Point2d& { return k[static_cast<std::size_t>(j)]; };

    at(Joint::Neck) = neck;
    at(Joint::Nose) = neck + cv::Point2d(jitter(rng) * 0.5, -0.10);
    const cv::Point2d nose = at(Joint::Nose);
    at(Joint::REye) = nose + cv::Point2d(-0.025, -0.02);
    at(Joint::LEye) = nose + cv::Point2d(0.025, -0.02);
    at(Joint::REar) = nose + cv::Point2d(-0.05, -0.005);
    at(Joint::LEar) = nose + cv::Point2d(0.05, -0.005);
    at(Joint::RShoulder) = neck + cv::Point2d(-0.10, 0.01);
    at(Joint::LShoulder) = neck + cv::Point2d(0.10, 0.01);
    at(Joint::RHip) = hip_c + cv::Point2d(-0.06, 0.0);
    at(Joint::LHip) = hip_c + cv::Point2d(0.06, 0.0);

    // limbs: angle measured from straight down, positive = outward
    auto limb = [](cv::Point2d from, double angle, double len, double side) {
        return from + cv::Point2d(side * len * std::sin(angle), len * std::cos(angle));
    };
    for (double side : {-1.0, 1.0}) {
        const bool right = side < 0;
        const double a = arm(rng), b = a + bend(rng);
        const auto sh = at(right ? Joint::RShoulder : Joint::LShoulder);
        const auto el = limb(sh, a, 0.13, side);
        at(right ? Joint::RElbow : Joint::LElbow) = el;
        at(right ? Joint::RWrist : Joint::LWrist) = limb(el, b, 0.12, side);

        const double l = leg(rng), kn = l + knee(rng);
        const auto hp = at(right ? Joint::RHip : Joint::LHip);
        const auto kp = limb(hp, l, 0.19, side);
        at(right ? Joint::RKnee : Joint::LKnee) = kp;
        at(right ? Joint::RAnkle : Joint::LAnkle) = limb(kp, kn, 0.18, side);
    }
    for (auto& p : k) {
        p.x = std::clamp(p.x, 0.03, 0.97);
        p.y = std::clamp(p.y, 0.03, 0.97);
    }
    return k;
}

void render_item(const fs::path& image_path, const fs::path& kp_path, const Garment& g,
                 const std::array<cv::Point2d, kNumKeypoints>& pose, int h, int w) {
    cv::Mat img(h, w, CV_8UC3, cv::Scalar(205, 205, 205));
    std::array<cv::Point, kNumKeypoints> px{};
    KeypointSet kps;
    kps.frame = {h, w};
    for (std::size_t i = 0; i < pose.size(); ++i) {
        const double x = pose[i].x * (w - 1), y = pose[i].y * (h - 1);
        px[i] = {static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))};
        kps.points[i] = {static_cast<float>(px[i].x), static_cast<float>(px[i].y), 1.0f};
    }
    auto P = [&](Joint j) { return px[static_cast<std::size_t>(j)]; };
    const int limb_w = std::max(2, w / 14);
    const cv::Scalar skin(120, 170, 225);
    const cv::Scalar bottom(g.bottom[0], g.bottom[1], g.bottom[2]);

    // head
    cv::circle(img, P(Joint::Nose), std::max(3, w / 11), skin, cv::FILLED, cv::LINE_8);
    // legs
    for (auto [a, b] : {std::pair{Joint::RHip, Joint::RKnee}, {Joint::RKnee, Joint::RAnkle},
                        {Joint::LHip, Joint::LKnee}, {Joint::LKnee, Joint::LAnkle}})
        cv::line(img, P(a), P(b), bottom, limb_w, cv::LINE_8);
    // forearms in skin, upper arms as sleeves
    for (auto [a, b] : {std::pair{Joint::RElbow, Joint::RWrist}, {Joint::LElbow, Joint::LWrist}})
        cv::line(img, P(a), P(b), skin, limb_w, cv::LINE_8);

    // striped top: torso polygon plus sleeves
    cv::Mat mask = cv::Mat::zeros(h, w, CV_8U);
    const std::array<cv::Point, 4> torso{P(Joint::RShoulder), P(Joint::LShoulder), P(Joint::LHip), P(Joint::RHip)};
    cv::fillConvexPoly(mask, torso.data(), 4, cv::Scalar(255), cv::LINE_8);
    cv::line(mask, P(Joint::RShoulder), P(Joint::RElbow), cv::Scalar(255), limb_w, cv::LINE_8);
    cv::line(mask, P(Joint::LShoulder), P(Joint::LElbow), cv::Scalar(255), limb_w, cv::LINE_8);
    const double ca = std::cos(g.stripe_angle), sa = std::sin(g.stripe_angle);
    const double scale = w / 64.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!mask.at<uchar>(y, x)) continue;
            const double t = (x * ca + y * sa) / (g.stripe_period * scale);
            img.at<cv::Vec3b>(y, x) = (static_cast<long>(std::floor(t)) % 2 == 0) ? g.top_a : g.top_b;
        }

    if (!cv::imwrite(image_path.string(), img)) throw std::runtime_error("cannot write " + image_path.string());
    save_keypoints(kp_path, kps);
}

}  // namespace

void make_microdataset(const fs::path& out, const MicroDatasetSpec& spec) {
    if (spec.skus < 2) throw std::invalid_argument("make_microdataset: need at least 2 SKUs");
    if (spec.items_per_sku < 2 || spec.items_per_sku > 5)
        throw std::invalid_argument("make_microdataset: items per SKU must lie in [2,5]");
    if (spec.height < 16 || spec.width < 16 || spec.height % 4 != 0 || spec.width % 4 != 0)
        throw std::invalid_argument("make_microdataset: size must be >= 16 and divisible by 4");
    if (spec.test_skus < 0) throw std::invalid_argument("make_microdataset: test_skus must be >= 0");

    std::mt19937_64 rng(spec.seed);
    auto write_split = [&](const std::string& split, int count, int first_id) {
        for (int s = 0; s < count; ++s) {
            char sku[32];
            std::snprintf(sku, sizeof(sku), "sku_%03d", first_id + s);
            const fs::path dir = out / split / sku;
            fs::create_directories(dir);
            const Garment g = random_garment(rng);
            for (int i = 0; i < spec.items_per_sku; ++i) {
                const auto pose = random_pose(rng);
                const std::string stem = "item_" + std::to_string(i);
                render_item(dir / (stem + ".png"), dir / (stem + ".keypoints.json"), g, pose, spec.height, spec.width);
            }
        }
    };
    write_split("train", spec.skus, 0);
    if (spec.test_skus > 0) write_split("test", spec.test_skus, spec.skus);

    nlohmann::json meta;
    meta["height"] = spec.height;
    meta["width"] = spec.width;
    meta["skus"] = spec.skus;
    meta["test_skus"] = spec.test_skus;
    meta["items_per_sku"] = spec.items_per_sku;
    meta["seed"] = spec.seed;
    std::ofstream(out / "dataset.meta.json") << meta.dump(2) << '\n';
}

}  // namespace posegen
