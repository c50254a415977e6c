#pragma once

#include <string>
#include <utility>
#include <vector>

#include "shelfalign/image.hpp"
#include "shelfalign/matching.hpp"

namespace shelfalign {

/// Per-object vote accumulator, same size as the shelf image.
struct VoteMatrix {
    std::string object_id;
    int width = 0;
    int height = 0;
    std::vector<float> values;

    float at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
    float& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
    float max_value() const;
};

struct CandidateCenter {
    std::string object_id;
    int x = 0;
    int y = 0;
    double vote = 0.0;
};

struct VoteParams {
    double sigma = 7.0;
    double truncation_radius_sigmas = 3.5;  // Gaussian stamp cutoff
};

/// Center location a matched shelf feature votes for: the model keypoint's
/// displacement to the model center, scaled by beta = h_shelf / h_model.
std::pair<double, double> vote_target(const Keypoint& shelf_kp, const Keypoint& model_kp,
                                      int model_width, int model_height, double beta);

/// Accumulate Gaussian-weighted votes from all matches of one object. Vote
/// weights are 1 minus the min-max-normalized match distance; a single match
/// or all-equal distances weigh 1.
VoteMatrix build_vote_matrix(const std::string& object_id,
                             const std::vector<FeatureMatch>& matches, const FeatureSet& shelf,
                             const FeatureSet& model, int model_width, int model_height,
                             const VoteParams& params = {});

/// Candidate object centers: repeated global-maximum picks above the dynamic
/// threshold (alpha/2) * max(V), suppressing a circular neighborhood of
/// suppression_radius pixels after each pick. Ordered by descending vote.
std::vector<CandidateCenter> extract_centers(const VoteMatrix& v, double alpha,
                                             double suppression_radius);

/// Debug dump of a vote matrix as a min-max-scaled grayscale PNG.
void save_vote_matrix_png(const VoteMatrix& v, const std::string& path);

}  // namespace shelfalign
