#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace shelfalign {

/// 8-bit grayscale image, row-major.
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(int w, int h, std::uint8_t fill = 0)
        : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

    bool empty() const { return width <= 0 || height <= 0; }
    bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }

    std::uint8_t at(int x, int y) const {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
    std::uint8_t& at(int x, int y) {
        return pixels[static_cast<std::size_t>(y) * width + x];
    }
};

/// 8-bit RGB image, interleaved row-major. Used only for overlay output.
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // 3 bytes per pixel

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h * 3, 0) {}
    explicit RgbImage(const GrayImage& gray);

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
        std::size_t i = (static_cast<std::size_t>(y) * width + x) * 3;
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
    }
};

/// Axis-aligned pixel rectangle, half-open: covers x in [x0,x1) and y in [y0,y1).
struct RectI {
    int x0 = 0;
    int y0 = 0;
    int x1 = 0;
    int y1 = 0;
};

enum class RoiPolarity { include_regions, exclude_regions };

/// Region-of-interest mask over a shelf image. An empty region list keeps the
/// whole image regardless of polarity.
struct RoiMask {
    RoiPolarity polarity = RoiPolarity::include_regions;
    std::vector<RectI> regions;

    /// True when pixel (x,y) is inside the searchable region.
    bool keeps(int x, int y) const;
};

/// BT.709 luma, rounded half-up.
std::uint8_t luma_bt709(std::uint8_t r, std::uint8_t g, std::uint8_t b);

/// Load a PNG or JPEG file as grayscale. Color inputs are converted with
/// BT.709 luma weights. Throws IoError when the file cannot be read and
/// FormatError for unsupported content.
GrayImage load_image(const std::string& path);

/// Zero out pixels outside the searchable region. Dimensions are unchanged;
/// out-of-bounds rectangles are clamped.
GrayImage apply_roi(const GrayImage& img, const RoiMask& mask);

void save_png(const GrayImage& img, const std::string& path);
void save_png(const RgbImage& img, const std::string& path);

}  // namespace shelfalign
