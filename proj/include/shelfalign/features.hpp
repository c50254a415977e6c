#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "shelfalign/image.hpp"

namespace shelfalign {

enum class DescriptorKind : std::uint8_t { binary = 0, floating = 1 };

/// Keypoint in full-resolution source-image coordinates.
struct Keypoint {
    float x = 0.0f;
    float y = 0.0f;
    float orientation = 0.0f;  // radians
    std::uint8_t scale = 0;    // pyramid level index
};

/// Keypoints plus descriptors extracted from one image. All descriptors in a
/// set share kind and length; binary length is in bytes, float length in
/// element count.
struct FeatureSet {
    int source_width = 0;
    int source_height = 0;
    DescriptorKind kind = DescriptorKind::binary;
    int descriptor_length = 32;
    std::vector<Keypoint> keypoints;
    std::vector<std::uint8_t> binary_data;
    std::vector<float> float_data;

    std::size_t size() const { return keypoints.size(); }
    bool empty() const { return keypoints.empty(); }

    std::span<const std::uint8_t> binary_at(std::size_t i) const {
        return {binary_data.data() + i * descriptor_length,
                static_cast<std::size_t>(descriptor_length)};
    }
    std::span<const float> float_at(std::size_t i) const {
        return {float_data.data() + i * descriptor_length,
                static_cast<std::size_t>(descriptor_length)};
    }

    void push_binary(const Keypoint& kp, std::span<const std::uint8_t> descriptor);
    void push_float(const Keypoint& kp, std::span<const float> descriptor);
};

struct ExtractorParams {
    int corner_threshold = 20;  // ring-test contrast on 0..255
    int pyramid_levels = 4;
    double scale_factor = 1.2;
    int max_keypoints = 2000;
    int patch_size = 31;  // descriptor patch side, must be odd
};

/// Detect oriented corner keypoints over an image pyramid and compute 256-bit
/// binary descriptors. Deterministic for fixed params; images smaller than the
/// descriptor patch yield an empty set.
FeatureSet extract_features(const GrayImage& img, const ExtractorParams& params = {});

/// Drop keypoints outside the searchable region of the mask. Source
/// dimensions are preserved.
FeatureSet filter_features(const FeatureSet& fs, const RoiMask& mask);

/// Binary feature-file import/export ("SHFT" format, little-endian).
/// Import throws ParseError naming the offending record; the file does not
/// carry source dimensions, so they are inferred from keypoint extents.
FeatureSet import_features(const std::string& path);
void export_features(const FeatureSet& fs, const std::string& path);

}  // namespace shelfalign
