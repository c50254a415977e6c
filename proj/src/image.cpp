#include "shelfalign/image.hpp"

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <memory>

#include <jpeglib.h>
#include <png.h>

#include "shelfalign/errors.hpp"

namespace shelfalign {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw IoError("cannot open '" + path + "'");
    return f;
}

GrayImage rgb_to_gray(int width, int height, const std::vector<std::uint8_t>& rgb) {
    GrayImage out(width, height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = luma_bt709(rgb[3 * i], rgb[3 * i + 1], rgb[3 * i + 2]);
    }
    return out;
}

// libpng error handling goes through longjmp; keep everything reachable after
// setjmp in POD locals.
GrayImage load_png(std::FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw FormatError("libpng init failed for '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw FormatError("libpng init failed for '" + path + "'");
    }

    std::vector<std::uint8_t> data;
    std::vector<png_bytep> rows;
    int width = 0, height = 0, channels = 0;
    bool failed = false;

    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, f);
        png_read_info(png, info);

        width = static_cast<int>(png_get_image_width(png, info));
        height = static_cast<int>(png_get_image_height(png, info));

        // Normalize everything to 8-bit gray or RGB without alpha.
        png_byte color_type = png_get_color_type(png, info);
        if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
        if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
            png_set_expand_gray_1_2_4_to_8(png);
        if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
        if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
        png_set_strip_alpha(png);
        png_read_update_info(png, info);

        channels = png_get_channels(png, info);
        std::size_t row_bytes = png_get_rowbytes(png, info);
        data.resize(row_bytes * height);
        rows.resize(height);
        for (int y = 0; y < height; ++y) rows[y] = data.data() + row_bytes * y;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);

    if (failed) throw FormatError("corrupt PNG '" + path + "'");
    if (width <= 0 || height <= 0) throw FormatError("empty PNG '" + path + "'");

    if (channels == 1) {
        GrayImage out(width, height);
        std::copy(data.begin(), data.end(), out.pixels.begin());
        return out;
    }
    if (channels == 3) return rgb_to_gray(width, height, data);
    throw FormatError("unsupported PNG channel layout in '" + path + "'");
}

struct JpegErrorMgr {
    jpeg_error_mgr pub;
    std::jmp_buf jump;
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* mgr = reinterpret_cast<JpegErrorMgr*>(cinfo->err);
    std::longjmp(mgr->jump, 1);
}

GrayImage load_jpeg(std::FILE* f, const std::string& path) {
    jpeg_decompress_struct cinfo;
    JpegErrorMgr err;
    cinfo.err = jpeg_std_error(&err.pub);
    err.pub.error_exit = jpeg_error_exit;

    std::vector<std::uint8_t> data;
    int width = 0, height = 0, channels = 0;
    bool failed = false;

    jpeg_create_decompress(&cinfo);
    if (setjmp(err.jump)) {
        failed = true;
    } else {
        jpeg_stdio_src(&cinfo, f);
        jpeg_read_header(&cinfo, TRUE);
        cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
        jpeg_start_decompress(&cinfo);

        width = static_cast<int>(cinfo.output_width);
        height = static_cast<int>(cinfo.output_height);
        channels = cinfo.output_components;
        std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
        data.resize(row_bytes * height);
        while (cinfo.output_scanline < cinfo.output_height) {
            JSAMPROW row = data.data() + row_bytes * cinfo.output_scanline;
            jpeg_read_scanlines(&cinfo, &row, 1);
        }
        jpeg_finish_decompress(&cinfo);
    }
    jpeg_destroy_decompress(&cinfo);

    if (failed) throw FormatError("corrupt JPEG '" + path + "'");
    if (width <= 0 || height <= 0) throw FormatError("empty JPEG '" + path + "'");

    if (channels == 1) {
        GrayImage out(width, height);
        std::copy(data.begin(), data.end(), out.pixels.begin());
        return out;
    }
    if (channels == 3) return rgb_to_gray(width, height, data);
    throw FormatError("unsupported JPEG channel layout in '" + path + "'");
}

RectI clamp_rect(const RectI& r, int width, int height) {
    RectI c;
    c.x0 = std::clamp(r.x0, 0, width);
    c.y0 = std::clamp(r.y0, 0, height);
    c.x1 = std::clamp(r.x1, 0, width);
    c.y1 = std::clamp(r.y1, 0, height);
    return c;
}

void write_png_impl(const std::string& path, int width, int height, int channels,
                    const std::uint8_t* data) {
    FilePtr f = open_file(path, "wb");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw IoError("libpng init failed for '" + path + "'");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("libpng init failed for '" + path + "'");
    }

    std::vector<png_bytep> rows(height);
    std::size_t row_bytes = static_cast<std::size_t>(width) * channels;
    for (int y = 0; y < height; ++y)
        rows[y] = const_cast<png_bytep>(data + row_bytes * y);

    bool failed = false;
    if (setjmp(png_jmpbuf(png))) {
        failed = true;
    } else {
        png_init_io(png, f.get());
        png_set_IHDR(png, info, width, height, 8,
                     channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                     PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
    if (failed) throw IoError("failed writing PNG '" + path + "'");
}

}  // namespace

RgbImage::RgbImage(const GrayImage& gray) : RgbImage(gray.width, gray.height) {
    for (std::size_t i = 0; i < gray.pixels.size(); ++i) {
        pixels[3 * i] = pixels[3 * i + 1] = pixels[3 * i + 2] = gray.pixels[i];
    }
}

bool RoiMask::keeps(int x, int y) const {
    if (regions.empty()) return true;
    bool inside = false;
    for (const RectI& r : regions) {
        if (x >= r.x0 && x < r.x1 && y >= r.y0 && y < r.y1) {
            inside = true;
            break;
        }
    }
    return polarity == RoiPolarity::include_regions ? inside : !inside;
}

std::uint8_t luma_bt709(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double y = 0.2126 * r + 0.7152 * g + 0.0722 * b;
    return static_cast<std::uint8_t>(std::min(255.0, std::floor(y + 0.5)));
}

GrayImage load_image(const std::string& path) {
    FilePtr f = open_file(path, "rb");

    unsigned char magic[8] = {};
    std::size_t got = std::fread(magic, 1, sizeof(magic), f.get());
    std::rewind(f.get());

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (got >= 8 && std::memcmp(magic, png_sig, 8) == 0) return load_png(f.get(), path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return load_jpeg(f.get(), path);
    throw FormatError("'" + path + "' is neither PNG nor JPEG");
}

GrayImage apply_roi(const GrayImage& img, const RoiMask& mask) {
    if (mask.regions.empty()) return img;

    RoiMask clamped = mask;
    for (RectI& r : clamped.regions) r = clamp_rect(r, img.width, img.height);

    GrayImage out = img;
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (!clamped.keeps(x, y)) out.at(x, y) = 0;
        }
    }
    return out;
}

void save_png(const GrayImage& img, const std::string& path) {
    write_png_impl(path, img.width, img.height, 1, img.pixels.data());
}

void save_png(const RgbImage& img, const std::string& path) {
    write_png_impl(path, img.width, img.height, 3, img.pixels.data());
}

}  // namespace shelfalign
