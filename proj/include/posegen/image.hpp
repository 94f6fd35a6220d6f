#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace posegen {

/// Planar float image, channel-major (C, H, W).
///
/// Two value conventions are used across the library: pose maps and metric
/// inputs live in [0, 1]; network-facing images live in [-1, 1].
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<float> data;

    Image() = default;
    Image(int c, int h, int w, float fill = 0.0f)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

    [[nodiscard]] std::size_t index(int c, int y, int x) const {
        return (static_cast<std::size_t>(c) * height + y) * width + x;
    }
    float& at(int c, int y, int x) { return data[index(c, y, x)]; }
    [[nodiscard]] float at(int c, int y, int x) const { return data[index(c, y, x)]; }

    [[nodiscard]] std::span<const float> plane(int c) const {
        return {data.data() + static_cast<std::size_t>(c) * height * width,
                static_cast<std::size_t>(height) * width};
    }

    [[nodiscard]] bool same_shape(const Image& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
    [[nodiscard]] bool empty() const { return data.empty(); }

    bool operator==(const Image&) const = default;
};

/// [0,1] -> [-1,1]
Image to_model_range(const Image& unit);
/// [-1,1] -> [0,1]
Image to_unit_range(const Image& model);

/// Mirror columns.
Image hflip(const Image& img);

/// Bilinear resize (pixel-center aligned).
Image resize(const Image& img, int height, int width);

/// Reads an 8-bit PNG/JPEG as a 3-channel RGB image with values v/255 in [0,1].
Image read_image(const std::filesystem::path& path);

/// Writes a 3-channel [0,1] image as 8-bit RGB, storing round(255*v).
void write_png(const std::filesystem::path& path, const Image& unit);

/// Writes a [-1,1] image as 8-bit RGB using round((v+1)/2*255).
void write_png_model_range(const std::filesystem::path& path, const Image& model);

}  // namespace posegen
