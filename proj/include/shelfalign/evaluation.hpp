#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shelfalign/alignment.hpp"
#include "shelfalign/detection.hpp"
#include "shelfalign/image.hpp"
#include "shelfalign/planogram.hpp"

namespace shelfalign {

struct GtBox {
    std::string id;
    BoundingBox box;
    bool foreign = false;  // on the shelf but outside the searched vocabulary
};

/// Expected alignment label for one group. Groups are keyed by "r<t>" for the
/// pair consuming reference entry t (1-based) and "g<t>.<k>" for the k-th
/// consecutive reference-gap pair after t consumed reference entries.
struct GtLabel {
    std::string group;
    PairLabel label = PairLabel::NM;
};

struct GroundTruth {
    std::vector<GtBox> boxes;
    std::vector<GtLabel> labels;
};

struct Metrics {
    int true_positives = 0;
    int false_positives = 0;
    int false_negatives = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

Metrics make_metrics(int tp, int fp, int fn);

/// Group keys for an alignment's pairs, in pair order (see GtLabel).
std::vector<std::string> group_keys(const std::vector<AlignedPair>& pairs);

/// Greedy one-to-one IoU matching of detections against ground-truth boxes.
/// Matched pairs with equal ids are TP, everything else detected is FP,
/// unmatched non-foreign ground truth is FN.
Metrics detection_metrics(const std::vector<DetectedObject>& detections, const GroundTruth& gt,
                          double iou_thresh);

/// Per-group label comparison: equal label is TP, differing or spurious
/// groups are FP, ground-truth groups missing from the outcome are FN.
Metrics compliance_metrics(const AlignmentOutcome& outcome, const std::vector<GtLabel>& gt_labels);

// --- synthetic shelves -------------------------------------------------------

struct SynthItem {
    std::string id;
    int count = 1;
};

struct SynthGap {
    int width = 0;
};

using LayoutElement = std::variant<SynthItem, SynthGap>;

struct SynthProduct {
    std::string id;  // ids starting with '@' are foreign: placed but not in the vocabulary
    int width = 0;
    int height = 0;
};

struct SynthSpec {
    std::uint64_t seed = 1;
    int margin = 16;
    int spacing = 6;
    std::uint8_t background = 24;
    std::vector<SynthProduct> products;
    std::vector<LayoutElement> layout;
    std::vector<SynthItem> reference;  // empty: derived from the layout's real items
    int jitter_px = 0;
    int brightness_jitter = 0;
    double occlusion_fraction = 0.0;
};

struct SynthResult {
    GrayImage shelf;
    GroundTruth gt;
    Planogram reference;
    std::map<std::string, GrayImage> model_images;  // real products only
};

/// Deterministic feature-rich product sprite.
GrayImage make_product_sprite(std::uint64_t seed, int width, int height);

/// Composite a shelf image from the layout with exact ground-truth boxes and
/// by-construction compliance labels. Throws std::invalid_argument when the
/// layout holds no products or references an unknown id.
SynthResult synth_shelf(const SynthSpec& spec);

SynthSpec synth_spec_from_json(const nlohmann::json& j);

void to_json(nlohmann::json& j, const Metrics& m);
void to_json(nlohmann::json& j, const GroundTruth& gt);
GroundTruth ground_truth_from_json(const nlohmann::json& j);
std::string render_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows);

}  // namespace shelfalign
