#include "posegen/posemap.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

namespace posegen {

namespace {

using json = nlohmann::json;

// limb endpoints as (joint_a, joint_b); torso/arms first, then legs, then head.
constexpr std::array<std::array<int, 2>, kNumLimbs> kLimbJoints{{
    {1, 2}, {1, 5}, {2, 3}, {3, 4}, {5, 6}, {6, 7},
    {1, 8}, {8, 9}, {9, 10}, {1, 11}, {11, 12}, {12, 13},
    {1, 0}, {0, 14}, {14, 16}, {0, 15}, {15, 17},
}};

Rgb8 hue_to_rgb8(double hue_deg) {
    const double hp = hue_deg / 60.0;
    const double x = 1.0 - std::abs(std::fmod(hp, 2.0) - 1.0);
    double r = 0, g = 0, b = 0;
    switch (static_cast<int>(hp)) {
        case 0: r = 1; g = x; break;
        case 1: r = x; g = 1; break;
        case 2: g = 1; b = x; break;
        case 3: g = x; b = 1; break;
        case 4: r = x; b = 1; break;
        default: r = 1; b = x; break;
    }
    auto q = [](double v) { return static_cast<unsigned char>(std::lround(v * 255.0)); };
    return {q(r), q(g), q(b)};
}

LimbTable build_limb_table() {
    LimbTable t{};
    for (int i = 0; i < kNumLimbs; ++i) {
        t[static_cast<std::size_t>(i)] = Limb{kLimbJoints[static_cast<std::size_t>(i)][0],
                                              kLimbJoints[static_cast<std::size_t>(i)][1],
                                              hue_to_rgb8(360.0 * i / kNumLimbs)};
    }
    return t;
}

double number_at(const json& node, const std::string& field) {
    if (!node.is_number()) throw ParseError(field + ": expected a number");
    return node.get<double>();
}

// Shortest decimal that reads back as the same float.
double shortest(float v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::stod(std::string(buf, res.ptr));
}

constexpr long kCoordLimit = 1L << 20;

}  // namespace

const std::array<const char*, kNumKeypoints>& joint_names() {
    static const std::array<const char*, kNumKeypoints> names{
        "nose", "neck", "r_shoulder", "r_elbow", "r_wrist", "l_shoulder", "l_elbow", "l_wrist", "r_hip",
        "r_knee", "r_ankle", "l_hip", "l_knee", "l_ankle", "r_eye", "l_eye", "r_ear", "l_ear"};
    return names;
}

int mirrored_joint(int joint) {
    static constexpr std::array<int, kNumKeypoints> mirror{0, 1, 5, 6, 7, 2, 3, 4, 11,
                                                           12, 13, 8, 9, 10, 15, 14, 17, 16};
    return mirror.at(static_cast<std::size_t>(joint));
}

void KeypointSet::validate() const {
    if (frame.height <= 0 || frame.width <= 0) throw SchemaError("frame_size must be positive");
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw SchemaError("keypoints[" + std::to_string(i) + "]: coordinates must be finite");
        if (!(p.confidence >= 0.0f && p.confidence <= 1.0f))
            throw SchemaError("keypoints[" + std::to_string(i) + "]: confidence outside [0,1]");
    }
}

const LimbTable& limb_table() {
    static const LimbTable table = build_limb_table();
    return table;
}

KeypointSet parse_keypoints(const std::string& json_text, const std::string& id) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ParseError("document: expected an object");
    for (const char* key : {"version", "frame_size", "keypoints"}) {
        if (!doc.contains(key)) throw ParseError(std::string(key) + ": missing");
    }
    if (!doc["version"].is_number_integer()) throw ParseError("version: expected an integer");
    if (doc["version"].get<int>() != 1) throw SchemaError("version: unsupported value");

    const auto& fs = doc["frame_size"];
    if (!fs.is_array() || fs.size() != 2) throw ParseError("frame_size: expected [H, W]");
    if (!fs[0].is_number_integer() || !fs[1].is_number_integer())
        throw ParseError("frame_size: expected integers");

    const auto& kp = doc["keypoints"];
    if (!kp.is_array()) throw ParseError("keypoints: expected an array");
    if (kp.size() != kNumKeypoints)
        throw SchemaError("keypoints: expected 18 entries, got " + std::to_string(kp.size()));

    KeypointSet out;
    out.id = id;
    out.frame = {fs[0].get<int>(), fs[1].get<int>()};
    for (std::size_t i = 0; i < kNumKeypoints; ++i) {
        const std::string field = "keypoints[" + std::to_string(i) + "]";
        if (!kp[i].is_array() || kp[i].size() != 3) throw ParseError(field + ": expected [x, y, c]");
        out.points[i] = {static_cast<float>(number_at(kp[i][0], field + "[0]")),
                         static_cast<float>(number_at(kp[i][1], field + "[1]")),
                         static_cast<float>(number_at(kp[i][2], field + "[2]"))};
    }
    out.validate();
    return out;
}

KeypointSet load_keypoints(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open keypoint file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_keypoints(ss.str(), path.string());
}

std::string keypoints_to_json(const KeypointSet& kps) {
    json doc;
    doc["version"] = 1;
    doc["frame_size"] = {kps.frame.height, kps.frame.width};
    json arr = json::array();
    for (const auto& p : kps.points) arr.push_back({shortest(p.x), shortest(p.y), shortest(p.confidence)});
    doc["keypoints"] = std::move(arr);
    return doc.dump();
}

void save_keypoints(const std::filesystem::path& path, const KeypointSet& kps) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write keypoint file " + path.string());
    out << keypoints_to_json(kps) << '\n';
}

int default_line_width(int out_height) {
    return std::max(1, static_cast<int>(std::lround(4.0 * out_height / 256.0)));
}

namespace {

// Nearest integer, ties resolved toward `center` so that mirroring about the
// center commutes with rounding.
long round_toward(double v, double center) {
    const double f = std::floor(v);
    const double frac = v - f;
    if (frac < 0.5) return static_cast<long>(f);
    if (frac > 0.5) return static_cast<long>(f) + 1;
    return static_cast<long>(v < center ? f + 1 : f);
}

}  // namespace

std::array<long, 2> raster_point(const Keypoint& p, FrameSize frame, int out_h, int out_w) {
    const double sx = static_cast<double>(out_w) / frame.width;
    const double sy = static_cast<double>(out_h) / frame.height;
    const double x = std::clamp((p.x + 0.5) * sx - 0.5, -double(kCoordLimit), double(kCoordLimit));
    const double y = std::clamp((p.y + 0.5) * sy - 0.5, -double(kCoordLimit), double(kCoordLimit));
    return {round_toward(2.0 * x, out_w - 1.0), round_toward(2.0 * y, out_h - 1.0)};
}

PoseMap rasterize_pose(const KeypointSet& kps, int out_h, int out_w, int line_width, float vis_threshold) {
    if (out_h <= 0 || out_w <= 0) throw std::invalid_argument("rasterize_pose: out_size must be positive");
    if (line_width < 1) throw std::invalid_argument("rasterize_pose: line_width must be >= 1");
    PoseMap map{Image(3, out_h, out_w, 0.0f), kps.id};
    Image& img = map.pixels;

    using wide = __int128;
    const wide w2 = static_cast<wide>(line_width) * line_width;
    const long reach = line_width / 2 + 1;

    for (const Limb& limb : limb_table()) {
        if (!kps.visible(limb.joint_a, vis_threshold) || !kps.visible(limb.joint_b, vis_threshold)) continue;
        const auto a = raster_point(kps.points[static_cast<std::size_t>(limb.joint_a)], kps.frame, out_h, out_w);
        const auto b = raster_point(kps.points[static_cast<std::size_t>(limb.joint_b)], kps.frame, out_h, out_w);
        const long dx = b[0] - a[0], dy = b[1] - a[1];
        const wide len2 = static_cast<wide>(dx) * dx + static_cast<wide>(dy) * dy;

        const long x0 = std::max(0L, std::min(a[0], b[0]) / 2 - reach);
        const long x1 = std::min(static_cast<long>(out_w) - 1, std::max(a[0], b[0]) / 2 + reach);
        const long y0 = std::max(0L, std::min(a[1], b[1]) / 2 - reach);
        const long y1 = std::min(static_cast<long>(out_h) - 1, std::max(a[1], b[1]) / 2 + reach);
        const auto rgb = limb.rgb();

        for (long y = y0; y <= y1; ++y) {
            for (long x = x0; x <= x1; ++x) {
                const long px = 2 * x - a[0], py = 2 * y - a[1];
                const wide along = static_cast<wide>(px) * dx + static_cast<wide>(py) * dy;
                bool inside;
                if (len2 == 0 || along <= 0) {
                    inside = static_cast<wide>(px) * px + static_cast<wide>(py) * py <= w2;
                } else if (along >= len2) {
                    const long qx = 2 * x - b[0], qy = 2 * y - b[1];
                    inside = static_cast<wide>(qx) * qx + static_cast<wide>(qy) * qy <= w2;
                } else {
                    const wide cross = static_cast<wide>(px) * dy - static_cast<wide>(py) * dx;
                    inside = cross * cross <= w2 * len2;
                }
                if (!inside) continue;
                for (int c = 0; c < 3; ++c) img.at(c, static_cast<int>(y), static_cast<int>(x)) = rgb[c];
            }
        }
    }
    return map;
}

PoseMap rasterize_pose(const KeypointSet& kps, int out_h, int out_w) {
    return rasterize_pose(kps, out_h, out_w, default_line_width(out_h), kDefaultVisThreshold);
}

KeypointSet transform_keypoints(const KeypointSet& kps, const KeypointTransform& t) {
    KeypointSet out = kps;
    std::visit(
        [&](const auto& tr) {
            using T = std::decay_t<decltype(tr)>;
            if constexpr (std::is_same_v<T, HFlip>) {
                for (int j = 0; j < kNumKeypoints; ++j) {
                    Keypoint p = kps.points[static_cast<std::size_t>(j)];
                    p.x = static_cast<float>(kps.frame.width - 1) - p.x;
                    out.points[static_cast<std::size_t>(mirrored_joint(j))] = p;
                }
            } else if constexpr (std::is_same_v<T, Rotate>) {
                if (tr.degrees == 0.0) return;
                const double rad = tr.degrees * std::numbers::pi / 180.0;
                const double c = std::cos(rad), s = std::sin(rad);
                const double cx = (kps.frame.width - 1) / 2.0, cy = (kps.frame.height - 1) / 2.0;
                for (auto& p : out.points) {
                    const double x = p.x - cx, y = p.y - cy;
                    p.x = static_cast<float>(cx + c * x + s * y);
                    p.y = static_cast<float>(cy - s * x + c * y);
                }
            } else if constexpr (std::is_same_v<T, CropBox>) {
                if (tr.width <= 0 || tr.height <= 0)
                    throw std::invalid_argument("transform_keypoints: degenerate crop box");
                for (auto& p : out.points) {
                    p.x -= static_cast<float>(tr.x);
                    p.y -= static_cast<float>(tr.y);
                    const bool inside = p.x >= -0.5f && p.x < tr.width - 0.5f && p.y >= -0.5f &&
                                        p.y < tr.height - 0.5f;
                    if (!inside) p.confidence = 0.0f;
                }
                out.frame = {tr.height, tr.width};
            } else {
                if (tr.to.height <= 0 || tr.to.width <= 0)
                    throw std::invalid_argument("transform_keypoints: resize target must be positive");
                const double sx = static_cast<double>(tr.to.width) / kps.frame.width;
                const double sy = static_cast<double>(tr.to.height) / kps.frame.height;
                for (auto& p : out.points) {
                    p.x = static_cast<float>((p.x + 0.5) * sx - 0.5);
                    p.y = static_cast<float>((p.y + 0.5) * sy - 0.5);
                }
                out.frame = tr.to;
            }
        },
        t);
    return out;
}

}  // namespace posegen
