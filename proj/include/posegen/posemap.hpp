#pragma once

/// \file posemap.hpp
/// \brief COCO-18 keypoint schema and colored-limb pose map rasterization.

#include <array>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "posegen/image.hpp"

namespace posegen {

constexpr int kNumKeypoints = 18;
constexpr int kNumLimbs = 17;
constexpr float kDefaultVisThreshold = 0.1f;

/// COCO-18 joint order used by the keypoint files.
enum class Joint : int {
    Nose = 0, Neck, RShoulder, RElbow, RWrist, LShoulder, LElbow, LWrist,
    RHip, RKnee, RAnkle, LHip, LKnee, LAnkle, REye, LEye, REar, LEar,
};

const std::array<const char*, kNumKeypoints>& joint_names();

/// Index of the mirrored joint (2<->5, 3<->6, ...); self for nose and neck.
int mirrored_joint(int joint);

struct Keypoint {
    float x = 0.0f;
    float y = 0.0f;
    float confidence = 0.0f;
    bool operator==(const Keypoint&) const = default;
};

struct FrameSize {
    int height = 0;
    int width = 0;
    bool operator==(const FrameSize&) const = default;
};

/// Raised when a keypoint file is well-formed JSON but violates the schema.
class SchemaError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Raised when a keypoint file cannot be parsed; the message names the field.
class ParseError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct KeypointSet {
    std::array<Keypoint, kNumKeypoints> points{};
    FrameSize frame{};
    std::string id;  ///< provenance (usually the source file path)

    /// Throws SchemaError on non-finite coordinates, confidences outside
    /// [0,1] or a non-positive frame.
    void validate() const;
    [[nodiscard]] bool visible(int joint, float threshold = kDefaultVisThreshold) const {
        return points[static_cast<std::size_t>(joint)].confidence >= threshold;
    }
    bool operator==(const KeypointSet& o) const { return points == o.points && frame == o.frame; }
};

struct Rgb8 {
    unsigned char r = 0, g = 0, b = 0;
    bool operator==(const Rgb8&) const = default;
};

struct Limb {
    int joint_a = 0;
    int joint_b = 0;
    Rgb8 color;
    /// Color as floats in [0,1] (exactly v/255).
    [[nodiscard]] std::array<float, 3> rgb() const {
        return {color.r / 255.0f, color.g / 255.0f, color.b / 255.0f};
    }
};

using LimbTable = std::array<Limb, kNumLimbs>;

/// The fixed 17-limb skeleton. Limb i has hue i/17*360 deg at full
/// saturation and value, quantized to 8 bits.
const LimbTable& limb_table();

KeypointSet parse_keypoints(const std::string& json_text, const std::string& id = {});
KeypointSet load_keypoints(const std::filesystem::path& path);
std::string keypoints_to_json(const KeypointSet& kps);
void save_keypoints(const std::filesystem::path& path, const KeypointSet& kps);

/// A pose map: 3-channel [0,1] image plus the id of the keypoints it came from.
struct PoseMap {
    Image pixels;
    std::string provenance;
};

/// round(4 * out_height / 256), at least 1.
int default_line_width(int out_height);

/// Segment endpoint in half-pixel units: 2*(x+0.5)*out/frame - 1, rounded
/// to the nearest integer with ties toward the frame center (mirror-exact).
std::array<long, 2> raster_point(const Keypoint& p, FrameSize frame, int out_h, int out_w);

/// Rasterizes visible limbs as solid segments of their palette color.
///
/// A pixel belongs to a limb iff its center lies within line_width/2 of the
/// segment joining the two endpoints (exact integer test). Limbs are
/// drawn in table order; later ones overwrite earlier ones.
PoseMap rasterize_pose(const KeypointSet& kps, int out_h, int out_w, int line_width,
                       float vis_threshold = kDefaultVisThreshold);
PoseMap rasterize_pose(const KeypointSet& kps, int out_h, int out_w);

struct HFlip {};
struct Rotate {
    double degrees = 0.0;  ///< counterclockwise as displayed, about the frame center
};
struct CropBox {
    int x = 0, y = 0, width = 0, height = 0;
};
/// Rescale to a new frame size (pixel-center aligned, as image resampling).
struct Resize {
    FrameSize to;
};
using KeypointTransform = std::variant<HFlip, Rotate, CropBox, Resize>;

/// Applies a geometric transform; hflip also swaps left/right labels, crop
/// zeroes the confidence of points falling outside the box.
KeypointSet transform_keypoints(const KeypointSet& kps, const KeypointTransform& t);

}  // namespace posegen
