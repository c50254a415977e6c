#pragma once

#include <span>
#include <vector>

#include "shelfalign/features.hpp"

namespace shelfalign {

/// One accepted shelf-to-model descriptor match.
struct FeatureMatch {
    int shelf_index = -1;
    int model_index = -1;
    double distance = 0.0;  // Hamming (binary) or Euclidean (float)
    double ratio = 0.0;     // best / second-best distance
};

/// Dynamic ratio-test threshold, 1 - 0.15 * alpha. Throws std::invalid_argument
/// for alpha outside (0, 1].
double matching_threshold(double alpha);

double hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);
double euclidean_distance(std::span<const float> a, std::span<const float> b);

/// Brute-force matching of every shelf descriptor against every model
/// descriptor, keeping a match when best/second-best < tau. Each shelf index
/// appears at most once. Throws std::invalid_argument on descriptor-kind
/// mismatch.
std::vector<FeatureMatch> match_features(const FeatureSet& shelf, const FeatureSet& model,
                                         double tau);

}  // namespace shelfalign
