#include "shelfalign/search.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "shelfalign/matching.hpp"

namespace shelfalign {

namespace {

std::vector<BoxCandidate> detect_candidates(const FeatureSet& shelf_fs,
                                            const std::vector<ObjectModel>& models, double alpha,
                                            const SearchConfig& config) {
    std::vector<BoxCandidate> out;
    const double tau = matching_threshold(alpha);
    for (const ObjectModel& m : models) {
        if (m.features.empty() || m.width <= 0 || m.height <= 0) continue;
        auto matches = match_features(shelf_fs, m.features, tau);
        if (matches.empty()) continue;
        VoteMatrix vm =
            build_vote_matrix(m.id, matches, shelf_fs, m.features, m.width, m.height, config.vote);
        double beta = static_cast<double>(shelf_fs.source_height) / m.height;
        double suppression = 0.5 * beta * std::min(m.width, m.height);
        for (const CandidateCenter& c : extract_centers(vm, alpha, suppression)) {
            out.push_back({c, fit_box(c.x, c.y, m.width, m.height, beta, shelf_fs.source_width,
                                      shelf_fs.source_height)});
        }
    }
    return out;
}

void sort_candidates(std::vector<BoxCandidate>& candidates) {
    std::sort(candidates.begin(), candidates.end(),
              [](const BoxCandidate& a, const BoxCandidate& b) {
                  if (a.center.vote != b.center.vote) return a.center.vote > b.center.vote;
                  if (a.center.object_id != b.center.object_id)
                      return a.center.object_id < b.center.object_id;
                  if (a.center.x != b.center.x) return a.center.x < b.center.x;
                  return a.center.y < b.center.y;
              });
}

// Kept detections are fixed; new candidates must survive NMS against them and
// against each other.
int merge_new_detections(std::vector<DetectedObject>& kept, std::vector<BoxCandidate> fresh,
                         double overlap_thresh) {
    sort_candidates(fresh);
    int added = 0;
    for (const BoxCandidate& c : fresh) {
        bool overlapped = false;
        for (const DetectedObject& k : kept) {
            if (iou(c.box, k.box) > overlap_thresh) {
                overlapped = true;
                break;
            }
        }
        if (overlapped) continue;
        DetectedObject d;
        d.object_id = c.center.object_id;
        d.kind = DetectionKind::object;
        d.cx = c.center.x;
        d.cy = c.center.y;
        d.box = c.box;
        d.vote = c.center.vote;
        kept.push_back(std::move(d));
        ++added;
    }
    return added;
}

// Unresolved region for the next iteration: everything but the boxes of
// correctly matched groups, each expanded by the overlap tolerance.
RoiMask build_roi(const AlignmentOutcome& outcome, const Planogram& detected, double tolerance,
                  int width, int height) {
    RoiMask roi;
    roi.polarity = RoiPolarity::exclude_regions;
    std::size_t det_index = 0;
    for (const AlignedPair& p : outcome.pairs) {
        if (p.det.is_gap) continue;
        const PlanogramEntry& entry = detected.entries[det_index++];
        if (p.label != PairLabel::MT || !entry.box) continue;
        double cx = 0.5 * (entry.box->x0 + entry.box->x1);
        double cy = 0.5 * (entry.box->y0 + entry.box->y1);
        double hw = 0.5 * entry.box->width() * (1.0 + tolerance);
        double hh = 0.5 * entry.box->height() * (1.0 + tolerance);
        RectI r;
        r.x0 = std::clamp(static_cast<int>(std::floor(cx - hw)), 0, width);
        r.x1 = std::clamp(static_cast<int>(std::ceil(cx + hw)), 0, width);
        r.y0 = std::clamp(static_cast<int>(std::floor(cy - hh)), 0, height);
        r.y1 = std::clamp(static_cast<int>(std::ceil(cy + hh)), 0, height);
        roi.regions.push_back(r);
    }
    return roi;
}

}  // namespace

ObjectModel make_model(const std::string& id, const GrayImage& img,
                       const ExtractorParams& params) {
    ObjectModel m;
    m.id = id;
    m.width = img.width;
    m.height = img.height;
    m.features = extract_features(img, params);
    return m;
}

std::vector<DetectedObject> detect_objects(const FeatureSet& shelf_features,
                                           const std::vector<ObjectModel>& models, double alpha,
                                           const SearchConfig& config) {
    return suppress(detect_candidates(shelf_features, models, alpha, config),
                    config.nms_iou_threshold);
}

ComplianceReport run_compliance(const GrayImage& shelf, const std::vector<ObjectModel>& models,
                                const Planogram& reference, const SearchConfig& config) {
    ComplianceReport report;
    report.shelf_id = reference.shelf_id;

    for (const ObjectModel& m : models) {
        if (m.features.empty()) {
            report.warnings.push_back("model '" + m.id +
                                      "' produced no features; treated as empty");
        }
    }

    // Shelf features are alpha-independent; extract once and filter per
    // iteration.
    const FeatureSet shelf_fs = extract_features(shelf, config.extractor);

    std::vector<DetectedObject> kept;
    RoiMask roi;
    roi.polarity = RoiPolarity::exclude_regions;
    double alpha = 1.0;
    long prev_num = -1, prev_den = -1;
    int stall = 0;

    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        const FeatureSet searchable =
            roi.regions.empty() ? shelf_fs : filter_features(shelf_fs, roi);
        int added = merge_new_detections(kept, detect_candidates(searchable, models, alpha, config),
                                         config.nms_iou_threshold);

        std::vector<DetectedObject> all = kept;
        for (DetectedObject& s : find_empty_and_unknown(shelf, kept, config.empty_space)) {
            all.push_back(std::move(s));
        }

        Planogram detected =
            form_planogram(all, report.shelf_id, config.unknown_quantity_by_width);
        AlignmentOutcome outcome = align(detected, reference);

        report.per_iteration.push_back({iter, alpha, added, outcome.mu, outcome.mu_numerator,
                                        outcome.mu_denominator});
        report.outcome = outcome;
        report.detected = detected;
        report.detections = std::move(all);

        if (outcome.mu_numerator == outcome.mu_denominator) break;
        if (outcome.mu_numerator == prev_num && outcome.mu_denominator == prev_den) {
            if (++stall >= config.stall_window) break;
        } else {
            stall = 0;
        }
        prev_num = outcome.mu_numerator;
        prev_den = outcome.mu_denominator;

        roi = build_roi(outcome, detected, config.overlap_tolerance, shelf.width, shelf.height);
        alpha *= config.alpha_decay;
    }

    report.iterations_run = static_cast<int>(report.per_iteration.size());
    const IterationRecord& last = report.per_iteration.back();
    report.final_mu = last.mu;
    report.final_mu_numerator = last.mu_numerator;
    report.final_mu_denominator = last.mu_denominator;
    return report;
}

SearchConfig search_config_from_json(const nlohmann::json& j) {
    SearchConfig c;
    if (j.contains("extractor")) {
        const auto& e = j["extractor"];
        c.extractor.corner_threshold = e.value("corner_threshold", c.extractor.corner_threshold);
        c.extractor.pyramid_levels = e.value("pyramid_levels", c.extractor.pyramid_levels);
        c.extractor.scale_factor = e.value("scale_factor", c.extractor.scale_factor);
        c.extractor.max_keypoints = e.value("max_keypoints", c.extractor.max_keypoints);
        c.extractor.patch_size = e.value("patch_size", c.extractor.patch_size);
    }
    c.vote.sigma = j.value("sigma", c.vote.sigma);
    c.vote.truncation_radius_sigmas =
        j.value("truncation_radius_sigmas", c.vote.truncation_radius_sigmas);
    if (j.contains("empty_space")) {
        const auto& e = j["empty_space"];
        c.empty_space.darkness_threshold =
            e.value("darkness_threshold", c.empty_space.darkness_threshold);
        c.empty_space.window_width_frac =
            e.value("window_width_frac", c.empty_space.window_width_frac);
        c.empty_space.stride_frac = e.value("stride_frac", c.empty_space.stride_frac);
    }
    c.nms_iou_threshold = j.value("nms_iou_threshold", c.nms_iou_threshold);
    c.overlap_tolerance = j.value("overlap_tolerance", c.overlap_tolerance);
    c.alpha_decay = j.value("alpha_decay", c.alpha_decay);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.stall_window = j.value("stall_window", c.stall_window);
    c.unknown_quantity_by_width = j.value("unknown_quantity_by_width", c.unknown_quantity_by_width);
    return c;
}

void to_json(nlohmann::json& j, const SearchConfig& c) {
    j = nlohmann::json{
        {"extractor",
         {{"corner_threshold", c.extractor.corner_threshold},
          {"pyramid_levels", c.extractor.pyramid_levels},
          {"scale_factor", c.extractor.scale_factor},
          {"max_keypoints", c.extractor.max_keypoints},
          {"patch_size", c.extractor.patch_size}}},
        {"sigma", c.vote.sigma},
        {"truncation_radius_sigmas", c.vote.truncation_radius_sigmas},
        {"empty_space",
         {{"darkness_threshold", c.empty_space.darkness_threshold},
          {"window_width_frac", c.empty_space.window_width_frac},
          {"stride_frac", c.empty_space.stride_frac}}},
        {"nms_iou_threshold", c.nms_iou_threshold},
        {"overlap_tolerance", c.overlap_tolerance},
        {"alpha_decay", c.alpha_decay},
        {"max_iterations", c.max_iterations},
        {"stall_window", c.stall_window},
        {"unknown_quantity_by_width", c.unknown_quantity_by_width}};
}

void to_json(nlohmann::json& j, const DetectedObject& d) {
    const char* kind = d.kind == DetectionKind::object
                           ? "object"
                           : (d.kind == DetectionKind::empty_space ? "empty" : "unknown");
    j = nlohmann::json{{"id", d.object_id},
                       {"kind", kind},
                       {"center", {d.cx, d.cy}},
                       {"bbox", {d.box.x0, d.box.y0, d.box.x1, d.box.y1}},
                       {"vote", d.vote}};
}

void to_json(nlohmann::json& j, const ComplianceReport& r) {
    nlohmann::json iters = nlohmann::json::array();
    for (const IterationRecord& it : r.per_iteration) {
        iters.push_back({{"iteration", it.iteration},
                         {"alpha", it.alpha},
                         {"new_detections", it.new_detections},
                         {"mu", it.mu},
                         {"mu_exact", {it.mu_numerator, it.mu_denominator}}});
    }
    j = nlohmann::json{{"shelf_id", r.shelf_id},
                       {"final_mu", r.final_mu},
                       {"final_mu_exact", {r.final_mu_numerator, r.final_mu_denominator}},
                       {"iterations_run", r.iterations_run},
                       {"alignment", r.outcome},
                       {"detections", r.detections},
                       {"planogram", r.detected},
                       {"per_iteration", iters},
                       {"warnings", r.warnings}};
}

}  // namespace shelfalign
