#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "posegen/config.hpp"
#include "posegen/metrics.hpp"
#include "posegen/microdataset.hpp"
#include "posegen/posemap.hpp"
#include "posegen/trainer.hpp"

namespace py = pybind11;
using namespace pybind11::literals;
using namespace posegen;

namespace {

using F32Array = py::array_t<float, py::array::c_style | py::array::forcecast>;

// HxWxC numpy -> planar Image
Image from_hwc(const F32Array& a) {
    if (a.ndim() != 3) throw std::invalid_argument("expected an HxWxC array");
    const auto h = static_cast<int>(a.shape(0)), w = static_cast<int>(a.shape(1)), c = static_cast<int>(a.shape(2));
    Image img(c, h, w);
    const auto v = a.unchecked<3>();
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < c; ++k) img.at(k, y, x) = v(y, x, k);
    return img;
}

py::array_t<float> to_hwc(const Image& img) {
    py::array_t<float> out({img.height, img.width, img.channels});
    auto v = out.mutable_unchecked<3>();
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            for (int k = 0; k < img.channels; ++k) v(y, x, k) = img.at(k, y, x);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "posegen native core";
    m.attr("__version__") = POSEGEN_VERSION;

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

    m.def("joint_names", [] {
        const auto& n = joint_names();
        return std::vector<std::string>(n.begin(), n.end());
    });

    m.def(
        "load_keypoints",
        [](const std::filesystem::path& path) {
            const KeypointSet kps = load_keypoints(path);
            py::array_t<float> pts({kNumKeypoints, 3});
            auto v = pts.mutable_unchecked<2>();
            for (int j = 0; j < kNumKeypoints; ++j) {
                const auto& p = kps.points[static_cast<std::size_t>(j)];
                v(j, 0) = p.x;
                v(j, 1) = p.y;
                v(j, 2) = p.confidence;
            }
            return py::make_tuple(pts, py::make_tuple(kps.frame.height, kps.frame.width));
        },
        "path"_a, "Returns (points[18,3] as x, y, confidence; (frame_h, frame_w)).");

    m.def(
        "rasterize",
        [](const std::filesystem::path& keypoints, int height, int width, int line_width, float vis_threshold) {
            const KeypointSet kps = load_keypoints(keypoints);
            const int lw = line_width > 0 ? line_width : default_line_width(height);
            return to_hwc(rasterize_pose(kps, height, width, lw, vis_threshold).pixels);
        },
        "keypoints"_a, "height"_a = 256, "width"_a = 256, "line_width"_a = 0, "vis_threshold"_a = kDefaultVisThreshold,
        "Colored-limb pose map as an HxWx3 float array in [0,1].");

    m.def(
        "ssim",
        [](const F32Array& a, const F32Array& b, bool model_range) {
            return ssim(from_hwc(a), from_hwc(b), model_range ? ValueRange::Model : ValueRange::Unit);
        },
        "a"_a, "b"_a, "model_range"_a = false);

    m.def(
        "inception_score",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& probs, int n_splits) {
            if (probs.ndim() != 2) throw std::invalid_argument("expected an NxK array");
            std::vector<std::vector<double>> p(static_cast<std::size_t>(probs.shape(0)));
            const auto v = probs.unchecked<2>();
            for (py::ssize_t i = 0; i < probs.shape(0); ++i)
                for (py::ssize_t k = 0; k < probs.shape(1); ++k) p[static_cast<std::size_t>(i)].push_back(v(i, k));
            const InceptionScore s = inception_score(p, n_splits);
            return py::make_tuple(s.mean, s.std);
        },
        "probs"_a, "n_splits"_a = 10);

    m.def(
        "evaluate",
        [](const std::filesystem::path& gen, const std::filesystem::path& target, int n_splits,
           const std::string& label) {
            MetricsReport r = evaluate_folder(gen, target, ToyClassifier(10, 0), n_splits);
            r.label = label;
            return report_to_json(r);
        },
        "gen"_a, "target"_a, "n_splits"_a = 10, "label"_a = "", "JSON report using the toy classifier.");

    m.def(
        "make_microdataset",
        [](const std::filesystem::path& out, int skus, int items_per_sku, int height, int width, std::uint64_t seed,
           int test_skus) { make_microdataset(out, {skus, items_per_sku, height, width, seed, test_skus}); },
        "out"_a, "skus"_a = 2, "items_per_sku"_a = 3, "height"_a = 64, "width"_a = 64, "seed"_a = 0,
        "test_skus"_a = 0);

    m.def(
        "synthesize",
        [](const std::filesystem::path& ckpt, const std::vector<std::filesystem::path>& sources,
           const std::filesystem::path& keypoints) {
            RunConfig cfg;
            Generator g = load_generator(ckpt, &cfg);
            if (sources.empty()) throw std::invalid_argument("no source images");
            if (cfg.generator.mode == Mode::Single && sources.size() != 1)
                throw std::invalid_argument("checkpoint is single-image");
            const int h = cfg.generator.image_height, w = cfg.generator.image_width;
            std::vector<Image> src;
            for (const auto& p : sources) src.push_back(to_model_range(resize(read_image(p), h, w)));
            const int lw = cfg.data.line_width > 0 ? cfg.data.line_width : default_line_width(h);
            const PoseMap pose = rasterize_pose(load_keypoints(keypoints), h, w, lw,
                                                static_cast<float>(cfg.data.vis_threshold));
            return to_hwc(to_unit_range(synthesize(g, src, pose)));
        },
        "ckpt"_a, "sources"_a, "keypoints"_a, "Generated image as an HxWx3 float array in [0,1].");
}
