#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "shelfalign/errors.hpp"
#include "shelfalign/features.hpp"
#include "shelfalign/matching.hpp"
#include "test_util.hpp"

using namespace shelfalign;

TEST_CASE("uniform image yields no keypoints") {
    GrayImage flat(64, 64, 128);
    FeatureSet fs = extract_features(flat);
    CHECK(fs.empty());
    CHECK(fs.source_width == 64);
    CHECK(fs.source_height == 64);
}

TEST_CASE("image smaller than the descriptor patch yields an empty set") {
    GrayImage tiny = test_util::textured_image(1, 30, 30);
    CHECK(extract_features(tiny).empty());
}

TEST_CASE("extraction is deterministic") {
    GrayImage img = test_util::textured_image(42, 120, 90);
    FeatureSet a = extract_features(img);
    FeatureSet b = extract_features(img);
    REQUIRE(a.size() == b.size());
    CHECK(a.binary_data == b.binary_data);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.keypoints[i].x == b.keypoints[i].x);
        CHECK(a.keypoints[i].y == b.keypoints[i].y);
        CHECK(a.keypoints[i].orientation == b.keypoints[i].orientation);
    }
}

TEST_CASE("high-contrast square produces keypoints at its corners") {
    // One bright 10x10 square centered in a dark 64x64 image.
    GrayImage img(64, 64, 30);
    for (int y = 27; y < 37; ++y) {
        for (int x = 27; x < 37; ++x) img.at(x, y) = 220;
    }
    FeatureSet fs = extract_features(img);
    REQUIRE(fs.size() >= 4);

    // Oracle: corners of the drawn square.
    const double corners[4][2] = {{27, 27}, {36, 27}, {27, 36}, {36, 36}};
    int near_corner = 0;
    std::set<int> covered;
    for (const Keypoint& kp : fs.keypoints) {
        for (int c = 0; c < 4; ++c) {
            double d = std::hypot(kp.x - corners[c][0], kp.y - corners[c][1]);
            if (d <= 3.0) {
                ++near_corner;
                covered.insert(c);
                break;
            }
        }
    }
    CHECK(near_corner >= 4);
    CHECK(covered.size() == 4);  // every square corner found
}

TEST_CASE("keypoints stay within source bounds on random images") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        GrayImage img = test_util::textured_image(seed, 80, 60, 18);
        FeatureSet fs = extract_features(img);
        for (const Keypoint& kp : fs.keypoints) {
            CHECK(kp.x >= 0.0f);
            CHECK(kp.y >= 0.0f);
            CHECK(kp.x < 80.0f);
            CHECK(kp.y < 60.0f);
        }
    }
}

TEST_CASE("translation consistency at desk scale") {
    // The same pattern pasted at two offsets; matched keypoints should move
    // with the pattern.
    const int dx = 37, dy = 11;
    GrayImage pattern = test_util::textured_image(99, 100, 80, 20);
    auto paste = [&pattern](GrayImage& canvas, int ox, int oy) {
        for (int y = 0; y < pattern.height; ++y) {
            for (int x = 0; x < pattern.width; ++x) {
                canvas.at(ox + x, oy + y) = pattern.at(x, y);
            }
        }
    };
    GrayImage a(220, 160, 128);
    GrayImage b(220, 160, 128);
    paste(a, 30, 30);
    paste(b, 30 + dx, 30 + dy);

    FeatureSet fa = extract_features(a);
    FeatureSet fb = extract_features(b);
    REQUIRE(fa.size() > 10);

    auto matches = match_features(fb, fa, 0.85);
    REQUIRE(matches.size() > 5);
    int consistent = 0;
    for (const FeatureMatch& m : matches) {
        const Keypoint& kb = fb.keypoints[m.shelf_index];
        const Keypoint& ka = fa.keypoints[m.model_index];
        if (std::abs(kb.x - ka.x - dx) <= 2.0 && std::abs(kb.y - ka.y - dy) <= 2.0) ++consistent;
    }
    CHECK(static_cast<double>(consistent) >= 0.8 * static_cast<double>(matches.size()));
}

TEST_CASE("feature file round trip") {
    auto dir = test_util::scratch_dir("features");
    GrayImage img = test_util::textured_image(5, 90, 70);
    FeatureSet fs = extract_features(img);
    REQUIRE_FALSE(fs.empty());

    auto path = (dir / "native.shft").string();
    export_features(fs, path);
    FeatureSet back = import_features(path);
    REQUIRE(back.size() == fs.size());
    CHECK(back.kind == DescriptorKind::binary);
    CHECK(back.descriptor_length == fs.descriptor_length);
    CHECK(back.binary_data == fs.binary_data);
    for (std::size_t i = 0; i < fs.size(); ++i) {
        CHECK(back.keypoints[i].x == fs.keypoints[i].x);
        CHECK(back.keypoints[i].y == fs.keypoints[i].y);
        CHECK(back.keypoints[i].orientation == fs.keypoints[i].orientation);
        CHECK(back.keypoints[i].scale == fs.keypoints[i].scale);
    }

    // Byte-level round trip: export(import(f)) reproduces the file.
    auto path2 = (dir / "again.shft").string();
    export_features(back, path2);
    std::ifstream f1(path, std::ios::binary), f2(path2, std::ios::binary);
    std::string b1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string b2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    CHECK(b1 == b2);
}

TEST_CASE("float feature files") {
    auto dir = test_util::scratch_dir("features_float");
    FeatureSet fs;
    fs.kind = DescriptorKind::floating;
    fs.descriptor_length = 128;
    std::vector<float> desc(128);
    for (int i = 0; i < 128; ++i) desc[i] = 0.25f * i;
    fs.push_float({10.0f, 20.0f, 0.5f, 0}, desc);

    auto path = (dir / "float.shft").string();
    export_features(fs, path);
    FeatureSet back = import_features(path);
    REQUIRE(back.size() == 1);
    CHECK(back.kind == DescriptorKind::floating);
    CHECK(back.descriptor_length == 128);
    CHECK(back.keypoints[0].x == 10.0f);
    CHECK(back.keypoints[0].y == 20.0f);
    CHECK(back.float_data == fs.float_data);
}

TEST_CASE("empty feature file") {
    auto dir = test_util::scratch_dir("features_empty");
    FeatureSet fs;
    auto path = (dir / "empty.shft").string();
    export_features(fs, path);
    FeatureSet back = import_features(path);
    CHECK(back.empty());
}

TEST_CASE("import rejects malformed files") {
    auto dir = test_util::scratch_dir("features_bad");

    SUBCASE("bad magic") {
        std::ofstream((dir / "bad.shft").string(), std::ios::binary) << "XXXX00000000000";
        CHECK_THROWS_AS(import_features((dir / "bad.shft").string()), ParseError);
    }

    SUBCASE("truncated record") {
        FeatureSet fs = extract_features(test_util::textured_image(5, 90, 70));
        REQUIRE(fs.size() >= 2);
        auto path = (dir / "trunc.shft").string();
        export_features(fs, path);
        std::ifstream in(path, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 7));
        out.close();
        CHECK_THROWS_WITH_AS(import_features(path), doctest::Contains("record"), ParseError);
    }

    SUBCASE("negative keypoint coordinates") {
        FeatureSet fs;
        std::vector<std::uint8_t> desc(32, 0);
        fs.push_binary({-5.0f, 4.0f, 0.0f, 0}, desc);
        auto path = (dir / "oob.shft").string();
        export_features(fs, path);
        CHECK_THROWS_WITH_AS(import_features(path), doctest::Contains("record 0"), ParseError);
    }

    SUBCASE("missing file") {
        CHECK_THROWS_AS(import_features((dir / "nope.shft").string()), IoError);
    }
}

TEST_CASE("roi filtering drops outside keypoints only") {
    GrayImage img = test_util::textured_image(11, 120, 80);
    FeatureSet fs = extract_features(img);
    REQUIRE_FALSE(fs.empty());

    RoiMask mask{RoiPolarity::exclude_regions, {{0, 0, 60, 80}}};
    FeatureSet kept = filter_features(fs, mask);
    CHECK(kept.source_width == fs.source_width);
    for (const Keypoint& kp : kept.keypoints) CHECK(kp.x >= 59.5f);

    std::size_t inside = 0;
    for (const Keypoint& kp : fs.keypoints) {
        if (std::lround(kp.x) >= 60) ++inside;
    }
    CHECK(kept.size() == inside);
}
