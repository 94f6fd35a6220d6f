#pragma once

/// \file data.hpp
/// \brief SKU-grouped dataset ingestion, training-triple sampling and paired augmentation.
///
/// Layout on disk: root/<split>/<sku_id>/<name>.{png,jpg} with a sibling
/// <name>.keypoints.json. Images are ingested at a working resolution and
/// rescaled to [-1,1]; keypoints are rescaled into the same frame.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "posegen/config.hpp"
#include "posegen/image.hpp"
#include "posegen/posemap.hpp"

namespace posegen {

using Rng = std::mt19937_64;

struct SkuItem {
    Image image;  ///< (3,H,W) in [-1,1]
    KeypointSet keypoints;
    std::string source_path;
};

struct SkuGroup {
    std::string sku_id;
    std::vector<SkuItem> items;  ///< ordered by source_path
};

struct TrainingTriple {
    std::vector<Image> sources;
    std::vector<PoseMap> source_poses;
    PoseMap target_pose;
    Image target_image;
    PoseMap foreign_pose;  ///< rendered from the foreign item, so it is also the pose of foreign_image
    Image foreign_image;

    std::string sku_id;
    std::string foreign_sku_id;
    std::string target_path;
    std::vector<std::string> source_paths;
    std::string foreign_path;
};

struct AugmentParams {
    double crop_fraction = 0.9;
    double hflip_prob = 0.5;
    double max_rotate = 10.0;
    std::uint64_t seed = 0;

    void validate() const;
};

struct RasterConfig {
    int height = 256;
    int width = 256;
    int line_width = 0;  ///< 0: default_line_width(height)
    float vis_threshold = kDefaultVisThreshold;

    [[nodiscard]] int effective_line_width() const {
        return line_width > 0 ? line_width : default_line_width(height);
    }
};

struct SampleOptions {
    Mode mode = Mode::Multi;
    RasterConfig raster;
    bool include_target_in_sources = false;
    std::optional<AugmentParams> augment;  ///< seed unused here; draws come from the caller's rng
};

struct ScanOptions {
    int height = 0;  ///< 0: take the resolution from dataset.meta.json
    int width = 0;
    int workers = 0;  ///< 0: scan on the calling thread
};

/// Loads every SKU directory under root/split. Items without a keypoint file
/// are skipped with a warning; throws std::runtime_error if nothing is found.
std::vector<SkuGroup> scan_dataset(const std::filesystem::path& root, const std::string& split,
                                   const ScanOptions& opts = {});

/// Draws a training triple for groups[group_index]. Deterministic given the
/// generator state. Requires at least two groups.
TrainingTriple sample_triple(const std::vector<SkuGroup>& groups, std::size_t group_index, Rng& rng,
                             const SampleOptions& opts);

/// crop -> resize back -> optional hflip -> rotation, applied identically to
/// the image (as raster) and to the keypoints (geometrically).
std::pair<Image, KeypointSet> augment_pair(const Image& image, const KeypointSet& kps,
                                           const AugmentParams& params, Rng& rng);

/// Crop (pixel box) and rotation helpers; rotation is about the frame center,
/// counterclockwise as displayed, with edge replication.
Image crop_image(const Image& img, const CropBox& box);
Image rotate_image(const Image& img, double degrees);

}  // namespace posegen
