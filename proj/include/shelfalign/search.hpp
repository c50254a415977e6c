#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shelfalign/alignment.hpp"
#include "shelfalign/detection.hpp"
#include "shelfalign/features.hpp"
#include "shelfalign/image.hpp"
#include "shelfalign/ism.hpp"
#include "shelfalign/planogram.hpp"

namespace shelfalign {

/// One searchable object: id, feature set and model image dimensions.
struct ObjectModel {
    std::string id;
    FeatureSet features;
    int width = 0;
    int height = 0;
};

ObjectModel make_model(const std::string& id, const GrayImage& img,
                       const ExtractorParams& params = {});

struct SearchConfig {
    ExtractorParams extractor;
    VoteParams vote;
    EmptySpaceParams empty_space;
    double nms_iou_threshold = 0.20;
    double overlap_tolerance = 0.20;  // resolved-region expansion in the ROI
    double alpha_decay = 0.75;
    int max_iterations = 10;
    int stall_window = 6;
    bool unknown_quantity_by_width = false;
};

struct IterationRecord {
    int iteration = 0;
    double alpha = 1.0;
    int new_detections = 0;
    double mu = 0.0;
    long mu_numerator = 0;
    long mu_denominator = 0;
};

struct ComplianceReport {
    std::string shelf_id;
    double final_mu = 0.0;
    long final_mu_numerator = 0;
    long final_mu_denominator = 0;
    int iterations_run = 0;
    AlignmentOutcome outcome;
    std::vector<DetectedObject> detections;
    Planogram detected;
    std::vector<IterationRecord> per_iteration;
    std::vector<std::string> warnings;
};

/// Detections from a single pass at the given alpha over the searchable
/// region, suppressed across object types. Building block of run_compliance
/// and of the one-shot detect command.
std::vector<DetectedObject> detect_objects(const FeatureSet& shelf_features,
                                           const std::vector<ObjectModel>& models, double alpha,
                                           const SearchConfig& config);

/// Focused iterative search: repeatedly relax alpha by the decay factor,
/// re-match inside the unresolved region, merge new detections with the kept
/// ones and realign, until mu reaches 1, stalls for stall_window iterations,
/// or max_iterations pass.
ComplianceReport run_compliance(const GrayImage& shelf, const std::vector<ObjectModel>& models,
                                const Planogram& reference, const SearchConfig& config = {});

SearchConfig search_config_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const SearchConfig& c);
void to_json(nlohmann::json& j, const DetectedObject& d);
void to_json(nlohmann::json& j, const ComplianceReport& r);

}  // namespace shelfalign
