#include "posegen/data.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <numeric>

#include <json.hpp>
#include <opencv2/imgproc.hpp>
#include <spdlog/spdlog.h>

namespace posegen {

namespace fs = std::filesystem;

namespace {

bool is_image_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::optional<SkuGroup> load_group(const fs::path& dir, int height, int width) {
    std::vector<fs::path> images;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && is_image_file(entry.path())) images.push_back(entry.path());
    }
    std::sort(images.begin(), images.end());

    SkuGroup group{dir.filename().string(), {}};
    for (const auto& img_path : images) {
        const fs::path kp_path = img_path.parent_path() / (img_path.stem().string() + ".keypoints.json");
        if (!fs::exists(kp_path)) {
            spdlog::warn("skipping {}: no keypoint file", img_path.string());
            continue;
        }
        KeypointSet kps;
        try {
            kps = load_keypoints(kp_path);
        } catch (const std::exception& e) {
            spdlog::warn("skipping {}: {}", img_path.string(), e.what());
            continue;
        }
        Image unit = read_image(img_path);
        Image model = to_model_range(resize(unit, height, width));
        for (auto& v : model.data) v = std::clamp(v, -1.0f, 1.0f);
        kps = transform_keypoints(kps, Resize{{height, width}});
        kps.id = kp_path.string();
        group.items.push_back({std::move(model), std::move(kps), img_path.string()});
    }
    if (group.items.empty()) return std::nullopt;
    return group;
}

void read_meta_resolution(const fs::path& root, int& height, int& width) {
    const fs::path meta = root / "dataset.meta.json";
    if (!fs::exists(meta)) throw std::runtime_error("no working resolution given and no " + meta.string());
    std::ifstream in(meta);
    const auto doc = nlohmann::json::parse(in);
    height = doc.at("height").get<int>();
    width = doc.at("width").get<int>();
}

std::vector<std::size_t> choose_sources(std::size_t n_items, std::size_t target, Mode mode, bool include_target,
                                        Rng& rng) {
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < n_items; ++i)
        if (include_target || i != target) candidates.push_back(i);
    if (candidates.empty()) return {target};  // single-item SKU: self-reconstruction

    if (mode == Mode::Single) {
        std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
        return {candidates[pick(rng)]};
    }
    constexpr std::size_t kMaxSources = 5;
    if (candidates.size() > kMaxSources) {
        std::shuffle(candidates.begin(), candidates.end(), rng);
        candidates.resize(kMaxSources);
        std::sort(candidates.begin(), candidates.end());
    }
    return candidates;
}

}  // namespace

void AugmentParams::validate() const {
    if (!(crop_fraction > 0.0 && crop_fraction <= 1.0)) throw std::invalid_argument("crop_fraction must lie in (0,1]");
    if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) throw std::invalid_argument("hflip_prob must lie in [0,1]");
    if (!(max_rotate >= 0.0)) throw std::invalid_argument("max_rotate must be >= 0");
}

std::vector<SkuGroup> scan_dataset(const fs::path& root, const std::string& split, const ScanOptions& opts) {
    int height = opts.height, width = opts.width;
    if (height <= 0 || width <= 0) read_meta_resolution(root, height, width);

    const fs::path split_dir = root / split;
    if (!fs::is_directory(split_dir)) throw std::runtime_error("dataset split not found: " + split_dir.string());

    std::vector<fs::path> sku_dirs;
    for (const auto& entry : fs::directory_iterator(split_dir))
        if (entry.is_directory()) sku_dirs.push_back(entry.path());
    std::sort(sku_dirs.begin(), sku_dirs.end());

    std::vector<std::optional<SkuGroup>> loaded(sku_dirs.size());
    if (opts.workers <= 0) {
        for (std::size_t i = 0; i < sku_dirs.size(); ++i) loaded[i] = load_group(sku_dirs[i], height, width);
    } else {
        const auto batch = static_cast<std::size_t>(opts.workers);
        for (std::size_t start = 0; start < sku_dirs.size(); start += batch) {
            std::vector<std::future<std::optional<SkuGroup>>> futures;
            for (std::size_t i = start; i < std::min(sku_dirs.size(), start + batch); ++i)
                futures.push_back(std::async(std::launch::async, load_group, sku_dirs[i], height, width));
            for (std::size_t i = 0; i < futures.size(); ++i) loaded[start + i] = futures[i].get();
        }
    }

    std::vector<SkuGroup> groups;
    for (auto& g : loaded)
        if (g) groups.push_back(std::move(*g));
    if (groups.empty()) throw std::runtime_error("empty dataset: no usable items under " + split_dir.string());
    std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.sku_id < b.sku_id; });
    return groups;
}

Image crop_image(const Image& img, const CropBox& box) {
    if (box.width <= 0 || box.height <= 0 || box.x < 0 || box.y < 0 || box.x + box.width > img.width ||
        box.y + box.height > img.height)
        throw std::invalid_argument("crop_image: box outside image");
    Image out(img.channels, box.height, box.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < box.height; ++y)
            for (int x = 0; x < box.width; ++x) out.at(c, y, x) = img.at(c, y + box.y, x + box.x);
    return out;
}

Image rotate_image(const Image& img, double degrees) {
    if (degrees == 0.0) return img;
    const cv::Point2f center(static_cast<float>((img.width - 1) / 2.0), static_cast<float>((img.height - 1) / 2.0));
    const cv::Mat m = cv::getRotationMatrix2D(center, degrees, 1.0);
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c) {
        cv::Mat src(img.height, img.width, CV_32F, const_cast<float*>(img.data.data() + img.index(c, 0, 0)));
        cv::Mat dst(out.height, out.width, CV_32F, out.data.data() + out.index(c, 0, 0));
        cv::warpAffine(src, dst, m, dst.size(), cv::INTER_LINEAR, cv::BORDER_REPLICATE);
    }
    return out;
}

std::pair<Image, KeypointSet> augment_pair(const Image& image, const KeypointSet& kps, const AugmentParams& params,
                                           Rng& rng) {
    params.validate();
    if (kps.frame.height != image.height || kps.frame.width != image.width)
        throw std::invalid_argument("augment_pair: image and keypoints must share the frame size");

    Image img = image;
    KeypointSet pts = kps;
    const int h = image.height, w = image.width;

    if (params.crop_fraction < 1.0) {
        const int ch = std::max(1, static_cast<int>(std::lround(params.crop_fraction * h)));
        const int cw = std::max(1, static_cast<int>(std::lround(params.crop_fraction * w)));
        std::uniform_int_distribution<int> oy(0, h - ch), ox(0, w - cw);
        const int y0 = oy(rng);
        const int x0 = ox(rng);
        const CropBox box{x0, y0, cw, ch};
        img = resize(crop_image(img, box), h, w);
        pts = transform_keypoints(transform_keypoints(pts, box), Resize{{h, w}});
    }
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) < params.hflip_prob) {
        img = hflip(img);
        pts = transform_keypoints(pts, HFlip{});
    }
    if (params.max_rotate > 0.0) {
        std::uniform_real_distribution<double> angle(-params.max_rotate, params.max_rotate);
        const double theta = angle(rng);
        img = rotate_image(img, theta);
        pts = transform_keypoints(pts, Rotate{theta});
    }
    return {std::move(img), std::move(pts)};
}

TrainingTriple sample_triple(const std::vector<SkuGroup>& groups, std::size_t group_index, Rng& rng,
                             const SampleOptions& opts) {
    if (groups.size() < 2) throw std::invalid_argument("sample_triple: need at least two SKU groups");
    if (group_index >= groups.size()) throw std::out_of_range("sample_triple: group index out of range");
    const SkuGroup& group = groups[group_index];
    if (group.items.empty()) throw std::invalid_argument("sample_triple: chosen group is empty");

    const auto& raster = opts.raster;
    auto prepare = [&](const SkuItem& item) -> std::pair<Image, PoseMap> {
        Image img = item.image;
        KeypointSet kps = item.keypoints;
        if (img.height != raster.height || img.width != raster.width) {
            img = resize(img, raster.height, raster.width);
            kps = transform_keypoints(kps, Resize{{raster.height, raster.width}});
        }
        if (opts.augment) std::tie(img, kps) = augment_pair(img, kps, *opts.augment, rng);
        kps.id = item.keypoints.id;
        PoseMap pose = rasterize_pose(kps, raster.height, raster.width, raster.effective_line_width(),
                                      raster.vis_threshold);
        return {std::move(img), std::move(pose)};
    };

    std::uniform_int_distribution<std::size_t> pick_target(0, group.items.size() - 1);
    const std::size_t target = pick_target(rng);
    const auto source_idx = choose_sources(group.items.size(), target, opts.mode, opts.include_target_in_sources, rng);

    std::uniform_int_distribution<std::size_t> pick_foreign(0, groups.size() - 2);
    std::size_t foreign_group = pick_foreign(rng);
    if (foreign_group >= group_index) ++foreign_group;
    const SkuGroup& other = groups[foreign_group];
    if (other.items.empty()) throw std::invalid_argument("sample_triple: foreign group is empty");
    std::uniform_int_distribution<std::size_t> pick_foreign_item(0, other.items.size() - 1);
    const std::size_t foreign_item = pick_foreign_item(rng);

    TrainingTriple t;
    t.sku_id = group.sku_id;
    t.foreign_sku_id = other.sku_id;
    std::tie(t.target_image, t.target_pose) = prepare(group.items[target]);
    t.target_path = group.items[target].source_path;
    for (std::size_t idx : source_idx) {
        auto [img, pose] = prepare(group.items[idx]);
        t.sources.push_back(std::move(img));
        t.source_poses.push_back(std::move(pose));
        t.source_paths.push_back(group.items[idx].source_path);
    }
    std::tie(t.foreign_image, t.foreign_pose) = prepare(other.items[foreign_item]);
    t.foreign_path = other.items[foreign_item].source_path;
    return t;
}

}  // namespace posegen
