#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <jpeglib.h>

#include "shelfalign/errors.hpp"
#include "shelfalign/image.hpp"
#include "test_util.hpp"

using namespace shelfalign;

namespace {

void write_jpeg(const GrayImage& img, const std::string& path, int quality = 95) {
    jpeg_compress_struct cinfo;
    jpeg_error_mgr jerr;
    cinfo.err = jpeg_std_error(&jerr);
    jpeg_create_compress(&cinfo);
    std::FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    jpeg_stdio_dest(&cinfo, f);
    cinfo.image_width = img.width;
    cinfo.image_height = img.height;
    cinfo.input_components = 1;
    cinfo.in_color_space = JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(img.pixels.data() +
                                            static_cast<std::size_t>(cinfo.next_scanline) * img.width);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    std::fclose(f);
}

}  // namespace

TEST_CASE("luma weights") {
    CHECK(luma_bt709(255, 255, 255) == 255);
    CHECK(luma_bt709(0, 0, 0) == 0);
    // round(0.2126 * 255) for a pure-red pixel
    CHECK(luma_bt709(255, 0, 0) == 54);
    CHECK(luma_bt709(0, 255, 0) == 182);
    CHECK(luma_bt709(0, 0, 255) == 18);
}

TEST_CASE("png round trip, gray and rgb") {
    auto dir = test_util::scratch_dir("image");

    GrayImage white(2, 2, 255);
    save_png(white, (dir / "white.png").string());
    GrayImage loaded = load_image((dir / "white.png").string());
    CHECK(loaded.width == 2);
    CHECK(loaded.height == 2);
    CHECK(loaded.pixels == std::vector<std::uint8_t>{255, 255, 255, 255});

    GrayImage black(2, 2, 0);
    save_png(black, (dir / "black.png").string());
    CHECK(load_image((dir / "black.png").string()).pixels ==
          std::vector<std::uint8_t>{0, 0, 0, 0});

    // Pure-red RGB pixel converts by the fixed luma weights.
    RgbImage red(1, 1);
    red.set(0, 0, 255, 0, 0);
    save_png(red, (dir / "red.png").string());
    GrayImage red_gray = load_image((dir / "red.png").string());
    CHECK(red_gray.pixels[0] == 54);
}

TEST_CASE("jpeg loading") {
    auto dir = test_util::scratch_dir("image_jpeg");
    GrayImage img = test_util::textured_image(7, 40, 30);
    write_jpeg(img, (dir / "shelf.jpg").string());

    GrayImage a = load_image((dir / "shelf.jpg").string());
    CHECK(a.width == 40);
    CHECK(a.height == 30);

    // Deterministic: same bytes decode to the same grid.
    GrayImage b = load_image((dir / "shelf.jpg").string());
    CHECK(a.pixels == b.pixels);

    // Uniform white survives compression exactly.
    GrayImage white(16, 16, 255);
    write_jpeg(white, (dir / "white.jpg").string());
    CHECK(load_image((dir / "white.jpg").string()).pixels == white.pixels);
}

TEST_CASE("load errors") {
    auto dir = test_util::scratch_dir("image_err");
    CHECK_THROWS_AS(load_image((dir / "missing.png").string()), IoError);

    std::ofstream((dir / "junk.png").string()) << "not an image at all";
    CHECK_THROWS_AS(load_image((dir / "junk.png").string()), FormatError);

    // PNG magic followed by garbage.
    std::ofstream out((dir / "trunc.png").string(), std::ios::binary);
    const unsigned char sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    out.write(reinterpret_cast<const char*>(sig), 8);
    out << "garbage";
    out.close();
    CHECK_THROWS_AS(load_image((dir / "trunc.png").string()), FormatError);
}

TEST_CASE("apply_roi basics") {
    GrayImage img(10, 10, 255);

    SUBCASE("empty mask is identity") {
        RoiMask mask;
        CHECK(apply_roi(img, mask).pixels == img.pixels);
        mask.polarity = RoiPolarity::exclude_regions;
        CHECK(apply_roi(img, mask).pixels == img.pixels);
    }

    SUBCASE("exclude full image zeroes everything") {
        RoiMask mask{RoiPolarity::exclude_regions, {{0, 0, 10, 10}}};
        GrayImage out = apply_roi(img, mask);
        for (auto p : out.pixels) CHECK(p == 0);
    }

    SUBCASE("exclude left half") {
        RoiMask mask{RoiPolarity::exclude_regions, {{0, 0, 5, 10}}};
        GrayImage out = apply_roi(img, mask);
        int zeros = 0;
        for (int y = 0; y < 10; ++y) {
            for (int x = 0; x < 10; ++x) {
                if (out.at(x, y) == 0) {
                    ++zeros;
                    CHECK(x < 5);
                } else {
                    CHECK(out.at(x, y) == 255);
                }
            }
        }
        CHECK(zeros == 50);
    }

    SUBCASE("include polarity keeps only the region") {
        RoiMask mask{RoiPolarity::include_regions, {{2, 2, 4, 4}}};
        GrayImage out = apply_roi(img, mask);
        CHECK(out.at(2, 2) == 255);
        CHECK(out.at(3, 3) == 255);
        CHECK(out.at(4, 4) == 0);
        CHECK(out.at(0, 0) == 0);
    }

    SUBCASE("out-of-bounds rectangles are clamped") {
        RoiMask mask{RoiPolarity::exclude_regions, {{-5, -5, 100, 100}}};
        GrayImage out = apply_roi(img, mask);
        for (auto p : out.pixels) CHECK(p == 0);
    }
}

TEST_CASE("apply_roi properties") {
    GrayImage img = test_util::textured_image(3, 32, 24);
    RoiMask mask{RoiPolarity::exclude_regions, {{5, 0, 12, 24}, {20, 3, 29, 18}}};

    GrayImage once = apply_roi(img, mask);
    GrayImage twice = apply_roi(once, mask);
    CHECK(once.pixels == twice.pixels);  // idempotent
    CHECK(once.width == img.width);
    CHECK(once.height == img.height);
}
