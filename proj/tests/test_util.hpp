#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "shelfalign/detection.hpp"
#include "shelfalign/features.hpp"
#include "shelfalign/image.hpp"
#include "shelfalign/planogram.hpp"

namespace test_util {

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() /
               ("shelfalign_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline int rng_range(std::mt19937_64& rng, int lo, int hi) {
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

/// Textured image with seeded random rectangles; plenty of corners.
inline shelfalign::GrayImage textured_image(std::uint64_t seed, int width, int height,
                                            int rect_count = 25) {
    std::mt19937_64 rng(seed);
    shelfalign::GrayImage img(width, height, 140);
    for (int i = 0; i < rect_count; ++i) {
        int w = rng_range(rng, 5, std::max(6, width / 4));
        int h = rng_range(rng, 5, std::max(6, height / 4));
        int x = rng_range(rng, 0, std::max(0, width - w - 1));
        int y = rng_range(rng, 0, std::max(0, height - h - 1));
        auto v = static_cast<std::uint8_t>(rng_range(rng, 0, 255));
        for (int yy = y; yy < y + h; ++yy) {
            for (int xx = x; xx < x + w; ++xx) img.at(xx, yy) = v;
        }
    }
    return img;
}

inline shelfalign::DetectedObject object_at(const std::string& id, double x0, double y0, double x1,
                                            double y1, double vote = 1.0) {
    shelfalign::DetectedObject d;
    d.object_id = id;
    d.kind = shelfalign::DetectionKind::object;
    d.box = {x0, y0, x1, y1};
    d.cx = 0.5 * (x0 + x1);
    d.cy = 0.5 * (y0 + y1);
    d.vote = vote;
    return d;
}

inline shelfalign::PlanogramEntry entry(const std::string& type, int quantity) {
    shelfalign::PlanogramEntry e;
    e.group_type = type;
    e.kind = type == shelfalign::kEmptyObjectId
                 ? shelfalign::EntryKind::empty_space
                 : (type == shelfalign::kUnknownObjectId ? shelfalign::EntryKind::unknown
                                                         : shelfalign::EntryKind::object);
    e.quantity = quantity;
    return e;
}

inline shelfalign::Planogram planogram(const std::string& shelf_id,
                                       std::initializer_list<std::pair<const char*, int>> groups) {
    shelfalign::Planogram p;
    p.shelf_id = shelf_id;
    for (const auto& [type, qty] : groups) p.entries.push_back(entry(type, qty));
    return p;
}

}  // namespace test_util
