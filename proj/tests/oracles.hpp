#pragma once

// Independent reference implementations used to cross-check the library.
// Written straight from the operation definitions; no code shared with src/.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "shelfalign/alignment.hpp"
#include "shelfalign/ism.hpp"
#include "shelfalign/matching.hpp"
#include "shelfalign/planogram.hpp"

namespace oracles {

/// Literal per-shelf-feature double loop with the ratio test.
inline std::vector<shelfalign::FeatureMatch> naive_match(const shelfalign::FeatureSet& shelf,
                                                         const shelfalign::FeatureSet& model,
                                                         double tau) {
    using shelfalign::DescriptorKind;
    std::vector<shelfalign::FeatureMatch> out;
    const std::size_t L = model.size();
    for (std::size_t m = 0; m < shelf.size(); ++m) {
        std::vector<double> dists(L);
        for (std::size_t l = 0; l < L; ++l) {
            dists[l] = shelf.kind == DescriptorKind::binary
                           ? shelfalign::hamming_distance(shelf.binary_at(m), model.binary_at(l))
                           : shelfalign::euclidean_distance(shelf.float_at(m), model.float_at(l));
        }
        if (L == 0) continue;
        std::size_t best = 0;
        for (std::size_t l = 1; l < L; ++l) {
            if (dists[l] < dists[best]) best = l;
        }
        if (L == 1) {
            if (dists[0] == 0.0) out.push_back({static_cast<int>(m), 0, 0.0, 0.0});
            continue;
        }
        double second = -1.0;
        for (std::size_t l = 0; l < L; ++l) {
            if (l == best) continue;
            if (second < 0.0 || dists[l] < second) second = dists[l];
        }
        double ratio = second == 0.0 ? 1.0 : dists[best] / second;
        if (ratio < tau) {
            out.push_back({static_cast<int>(m), static_cast<int>(best), dists[best], ratio});
        }
    }
    return out;
}

/// Per-pixel evaluation of the vote sum, same truncation radius as the
/// library but iterating pixels outermost.
inline shelfalign::VoteMatrix naive_vote_matrix(const std::string& object_id,
                                                const std::vector<shelfalign::FeatureMatch>& matches,
                                                const shelfalign::FeatureSet& shelf,
                                                const shelfalign::FeatureSet& model, int model_w,
                                                int model_h, const shelfalign::VoteParams& params) {
    shelfalign::VoteMatrix vm;
    vm.object_id = object_id;
    vm.width = shelf.source_width;
    vm.height = shelf.source_height;
    vm.values.assign(static_cast<std::size_t>(vm.width) * vm.height, 0.0f);
    if (matches.empty()) return vm;

    double dmin = matches.front().distance, dmax = matches.front().distance;
    for (const auto& m : matches) {
        dmin = std::min(dmin, m.distance);
        dmax = std::max(dmax, m.distance);
    }

    const double beta = static_cast<double>(shelf.source_height) / model_h;
    const double cutoff = params.truncation_radius_sigmas * params.sigma;
    for (int y = 0; y < vm.height; ++y) {
        for (int x = 0; x < vm.width; ++x) {
            double sum = 0.0;
            for (const auto& m : matches) {
                double gamma =
                    dmax == dmin ? 1.0 : 1.0 - (m.distance - dmin) / (dmax - dmin);
                const auto& skp = shelf.keypoints[m.shelf_index];
                const auto& mkp = model.keypoints[m.model_index];
                double tx = skp.x + beta * (model_w / 2.0 - mkp.x);
                double ty = skp.y + beta * (model_h / 2.0 - mkp.y);
                double d2 = (x - tx) * (x - tx) + (y - ty) * (y - ty);
                if (d2 > cutoff * cutoff) continue;
                sum += gamma * std::exp(-d2 / (2.0 * params.sigma * params.sigma));
            }
            vm.at(x, y) = static_cast<float>(sum);
        }
    }
    return vm;
}

/// Exhaustive maximum over all monotone alignments. Gap moves along the first
/// row/column cost 1, matching the score-matrix initialization; interior gap
/// moves cost the consumed entry's quantity.
inline int brute_force_alignment_score(const shelfalign::Planogram& det,
                                       const shelfalign::Planogram& ref) {
    const int E = static_cast<int>(det.entries.size());
    const int T = static_cast<int>(ref.entries.size());

    struct Walker {
        const shelfalign::Planogram& det;
        const shelfalign::Planogram& ref;
        int E, T;
        int best = std::numeric_limits<int>::min();

        void walk(int d, int t, int score) {
            if (d == E && t == T) {
                best = std::max(best, score);
                return;
            }
            if (d < E) {
                int cost = t == 0 ? 1 : det.entries[d].quantity;
                walk(d + 1, t, score - cost);
            }
            if (t < T) {
                int cost = d == 0 ? 1 : ref.entries[t].quantity;
                walk(d, t + 1, score - cost);
            }
            if (d < E && t < T) {
                walk(d + 1, t + 1,
                     score + shelfalign::substitution_score(det.entries[d], ref.entries[t]));
            }
        }
    };

    Walker w{det, ref, E, T};
    w.walk(0, 0, 0);
    return w.best;
}

}  // namespace oracles
