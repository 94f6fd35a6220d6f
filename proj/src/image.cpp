#include "posegen/image.hpp"

#include <cmath>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace posegen {

namespace {

cv::Mat to_mat(const Image& img) {
    std::vector<cv::Mat> planes;
    for (int c = 0; c < img.channels; ++c) {
        planes.emplace_back(img.height, img.width, CV_32F,
                            const_cast<float*>(img.data.data() + img.index(c, 0, 0)));
    }
    cv::Mat merged;
    cv::merge(planes, merged);
    return merged;
}

Image from_mat(const cv::Mat& m) {
    cv::Mat f;
    m.convertTo(f, CV_32F);
    std::vector<cv::Mat> planes;
    cv::split(f, planes);
    Image out(static_cast<int>(planes.size()), f.rows, f.cols);
    for (int c = 0; c < out.channels; ++c) {
        for (int y = 0; y < out.height; ++y) {
            const float* row = planes[static_cast<std::size_t>(c)].ptr<float>(y);
            std::copy(row, row + out.width, out.data.begin() + static_cast<std::ptrdiff_t>(out.index(c, y, 0)));
        }
    }
    return out;
}

unsigned char quantize(float unit) {
    const long v = std::lround(static_cast<double>(unit) * 255.0);
    return static_cast<unsigned char>(std::clamp(v, 0L, 255L));
}

}  // namespace

Image to_model_range(const Image& unit) {
    Image out = unit;
    for (auto& v : out.data) v = v * 2.0f - 1.0f;
    return out;
}

Image to_unit_range(const Image& model) {
    Image out = model;
    for (auto& v : out.data) v = (v + 1.0f) * 0.5f;
    return out;
}

Image hflip(const Image& img) {
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) out.at(c, y, img.width - 1 - x) = img.at(c, y, x);
    return out;
}

Image resize(const Image& img, int height, int width) {
    if (img.height == height && img.width == width) return img;
    cv::Mat dst;
    cv::resize(to_mat(img), dst, cv::Size(width, height), 0, 0, cv::INTER_LINEAR);
    Image out = from_mat(dst);
    out.channels = img.channels;
    return out;
}

Image read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) throw std::runtime_error("cannot decode image " + path.string());
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image out = from_mat(rgb);
    for (auto& v : out.data) v /= 255.0f;
    return out;
}

void write_png(const std::filesystem::path& path, const Image& unit) {
    if (unit.channels != 3) throw std::invalid_argument("write_png: expected 3 channels");
    cv::Mat bgr(unit.height, unit.width, CV_8UC3);
    for (int y = 0; y < unit.height; ++y) {
        auto* row = bgr.ptr<cv::Vec3b>(y);
        for (int x = 0; x < unit.width; ++x) {
            row[x] = {quantize(unit.at(2, y, x)), quantize(unit.at(1, y, x)), quantize(unit.at(0, y, x))};
        }
    }
    if (!cv::imwrite(path.string(), bgr)) throw std::runtime_error("cannot write image " + path.string());
}

void write_png_model_range(const std::filesystem::path& path, const Image& model) {
    write_png(path, to_unit_range(model));
}

}  // namespace posegen
