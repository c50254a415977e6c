#include "shelfalign/matching.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace shelfalign {

double matching_threshold(double alpha) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw std::invalid_argument("alpha must be in (0, 1], got " + std::to_string(alpha));
    }
    return 1.0 - 0.15 * alpha;
}

double hamming_distance(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
    std::size_t n = a.size();
    std::size_t i = 0;
    int bits = 0;
    for (; i + 8 <= n; i += 8) {
        std::uint64_t wa, wb;
        std::memcpy(&wa, a.data() + i, 8);
        std::memcpy(&wb, b.data() + i, 8);
        bits += std::popcount(wa ^ wb);
    }
    for (; i < n; ++i) {
        bits += std::popcount(static_cast<unsigned>(a[i] ^ b[i]));
    }
    return static_cast<double>(bits);
}

double euclidean_distance(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double d = static_cast<double>(a[i]) - b[i];
        sum += d * d;
    }
    return std::sqrt(sum);
}

std::vector<FeatureMatch> match_features(const FeatureSet& shelf, const FeatureSet& model,
                                         double tau) {
    if (shelf.kind != model.kind) {
        throw std::invalid_argument("descriptor kind mismatch between shelf and model sets");
    }

    std::vector<FeatureMatch> out;
    if (shelf.empty() || model.empty()) return out;

    const bool binary = shelf.kind == DescriptorKind::binary;
    const std::size_t model_count = model.size();

    for (std::size_t m = 0; m < shelf.size(); ++m) {
        double best = -1.0, second = -1.0;
        int best_idx = -1;
        for (std::size_t l = 0; l < model_count; ++l) {
            double d = binary ? hamming_distance(shelf.binary_at(m), model.binary_at(l))
                              : euclidean_distance(shelf.float_at(m), model.float_at(l));
            // Strict < keeps the lowest model index on ties.
            if (best_idx < 0 || d < best) {
                second = best;
                best = d;
                best_idx = static_cast<int>(l);
            } else if (second < 0 || d < second) {
                second = d;
            }
        }

        if (model_count == 1) {
            // No second-best exists; accept only an exact match.
            if (best == 0.0) {
                out.push_back({static_cast<int>(m), best_idx, best, 0.0});
            }
            continue;
        }

        // Duplicate zero-distance model descriptors carry no discriminative
        // evidence; rejected via ratio = 1.
        double ratio = second == 0.0 ? 1.0 : best / second;
        if (ratio < tau) {
            out.push_back({static_cast<int>(m), best_idx, best, ratio});
        }
    }
    return out;
}

}  // namespace shelfalign
