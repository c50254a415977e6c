#include "shelfalign/ism.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shelfalign {

float VoteMatrix::max_value() const {
    float m = 0.0f;
    for (float v : values) m = std::max(m, v);
    return m;
}

std::pair<double, double> vote_target(const Keypoint& shelf_kp, const Keypoint& model_kp,
                                      int model_width, int model_height, double beta) {
    double dx = model_width / 2.0 - model_kp.x;
    double dy = model_height / 2.0 - model_kp.y;
    return {shelf_kp.x + beta * dx, shelf_kp.y + beta * dy};
}

VoteMatrix build_vote_matrix(const std::string& object_id,
                             const std::vector<FeatureMatch>& matches, const FeatureSet& shelf,
                             const FeatureSet& model, int model_width, int model_height,
                             const VoteParams& params) {
    if (!(params.sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    if (model_height <= 0) throw std::invalid_argument("model height must be positive");

    VoteMatrix vm;
    vm.object_id = object_id;
    vm.width = shelf.source_width;
    vm.height = shelf.source_height;
    vm.values.assign(static_cast<std::size_t>(vm.width) * vm.height, 0.0f);
    if (matches.empty()) return vm;

    // Min-max normalization of distances over this object's match list; when
    // all distances are equal every weight is 1.
    double dmin = matches.front().distance, dmax = matches.front().distance;
    for (const FeatureMatch& m : matches) {
        dmin = std::min(dmin, m.distance);
        dmax = std::max(dmax, m.distance);
    }
    double range = dmax - dmin;

    const double beta = static_cast<double>(shelf.source_height) / model_height;
    const double radius = params.truncation_radius_sigmas * params.sigma;
    const double inv_two_sigma_sq = 1.0 / (2.0 * params.sigma * params.sigma);

    // Accumulate in double; the 32-bit store happens once at the end.
    std::vector<double> acc(vm.values.size(), 0.0);
    for (const FeatureMatch& m : matches) {
        double gamma = range == 0.0 ? 1.0 : 1.0 - (m.distance - dmin) / range;
        auto [tx, ty] = vote_target(shelf.keypoints[m.shelf_index], model.keypoints[m.model_index],
                                    model_width, model_height, beta);
        int x0 = std::max(0, static_cast<int>(std::ceil(tx - radius)));
        int x1 = std::min(vm.width - 1, static_cast<int>(std::floor(tx + radius)));
        int y0 = std::max(0, static_cast<int>(std::ceil(ty - radius)));
        int y1 = std::min(vm.height - 1, static_cast<int>(std::floor(ty + radius)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double dx = x - tx, dy = y - ty;
                double d2 = dx * dx + dy * dy;
                if (d2 > radius * radius) continue;
                acc[static_cast<std::size_t>(y) * vm.width + x] +=
                    gamma * std::exp(-d2 * inv_two_sigma_sq);
            }
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) vm.values[i] = static_cast<float>(acc[i]);
    return vm;
}

std::vector<CandidateCenter> extract_centers(const VoteMatrix& v, double alpha,
                                             double suppression_radius) {
    if (!(alpha > 0.0) || alpha > 1.0) {
        throw std::invalid_argument("alpha must be in (0, 1], got " + std::to_string(alpha));
    }

    std::vector<CandidateCenter> out;
    float peak = v.max_value();
    if (peak <= 0.0f) return out;

    const double tau_v = 0.5 * alpha * peak;
    const double radius = std::max(1.0, suppression_radius);
    const double radius_sq = radius * radius;

    std::vector<float> work = v.values;
    for (;;) {
        // Global maximum; row-major scan order breaks ties deterministically.
        int best_x = -1, best_y = -1;
        float best = 0.0f;
        for (int y = 0; y < v.height; ++y) {
            for (int x = 0; x < v.width; ++x) {
                float val = work[static_cast<std::size_t>(y) * v.width + x];
                if (val > best) {
                    best = val;
                    best_x = x;
                    best_y = y;
                }
            }
        }
        if (best_x < 0 || !(best > tau_v)) break;

        out.push_back({v.object_id, best_x, best_y, static_cast<double>(best)});

        int x0 = std::max(0, static_cast<int>(std::floor(best_x - radius)));
        int x1 = std::min(v.width - 1, static_cast<int>(std::ceil(best_x + radius)));
        int y0 = std::max(0, static_cast<int>(std::floor(best_y - radius)));
        int y1 = std::min(v.height - 1, static_cast<int>(std::ceil(best_y + radius)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                double dx = x - best_x, dy = y - best_y;
                if (dx * dx + dy * dy <= radius_sq) {
                    work[static_cast<std::size_t>(y) * v.width + x] = 0.0f;
                }
            }
        }
    }
    return out;
}

void save_vote_matrix_png(const VoteMatrix& v, const std::string& path) {
    GrayImage img(v.width, v.height, 0);
    float peak = v.max_value();
    if (peak > 0.0f) {
        for (std::size_t i = 0; i < v.values.size(); ++i) {
            img.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v.values[i] / peak));
        }
    }
    save_png(img, path);
}

}  // namespace shelfalign
