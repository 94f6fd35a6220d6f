#pragma once

#include <cstdint>
#include <filesystem>

namespace posegen {

struct MicroDatasetSpec {
    int skus = 2;
    int items_per_sku = 3;  ///< 2..5
    int height = 64;
    int width = 64;
    std::uint64_t seed = 0;
    int test_skus = 0;  ///< extra SKUs written under test/
};

/// Writes a synthetic dataset: each SKU is one striped "garment" worn by
/// procedurally posed stick figures, with exact keypoint files, laid out as
/// out/<split>/<sku_id>/item_<k>.png + item_<k>.keypoints.json, plus
/// out/dataset.meta.json. Output is byte-identical for a given spec.
void make_microdataset(const std::filesystem::path& out, const MicroDatasetSpec& spec);

}  // namespace posegen
