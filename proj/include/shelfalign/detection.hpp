#pragma once

#include <string>
#include <vector>

#include "shelfalign/image.hpp"
#include "shelfalign/ism.hpp"

namespace shelfalign {

/// Axis-aligned box, top-left (x0,y0) to bottom-right (x1,y1).
struct BoundingBox {
    double x0 = 0.0;
    double y0 = 0.0;
    double x1 = 0.0;
    double y1 = 0.0;

    double width() const { return x1 - x0; }
    double height() const { return y1 - y0; }
    double area() const { return width() * height(); }
    bool valid() const { return x1 > x0 && y1 > y0; }
};

double iou(const BoundingBox& a, const BoundingBox& b);
BoundingBox box_union(const BoundingBox& a, const BoundingBox& b);

/// Box of size beta * (model_width, model_height) centered on (cx, cy),
/// clamped to the shelf bounds.
BoundingBox fit_box(double cx, double cy, int model_width, int model_height, double beta,
                    int shelf_width, int shelf_height);

enum class DetectionKind { object, empty_space, unknown };

inline constexpr const char* kEmptyObjectId = "__empty__";
inline constexpr const char* kUnknownObjectId = "__unknown__";

struct DetectedObject {
    std::string object_id;  // model id; "__empty__"/"__unknown__" for sentinels
    DetectionKind kind = DetectionKind::object;
    double cx = 0.0;
    double cy = 0.0;
    BoundingBox box;
    double vote = 0.0;  // 0 for sentinels
};

struct BoxCandidate {
    CandidateCenter center;
    BoundingBox box;
};

/// Greedy non-maximum suppression across all object types by descending vote;
/// ties broken by (object_id, x, y). A candidate survives iff its IoU with
/// every kept box is <= overlap_thresh.
std::vector<DetectedObject> suppress(std::vector<BoxCandidate> candidates, double overlap_thresh);

struct EmptySpaceParams {
    double darkness_threshold = 60.0;  // window mean below this counts as dark
    double window_width_frac = 0.25;   // of average detected width
    double stride_frac = 0.125;
};

/// Label undetected horizontal spans: dark blocks at least one average object
/// width wide become EMPTY, remaining wide spans become UNKNOWN. With zero
/// detections the whole image is one UNKNOWN region.
std::vector<DetectedObject> find_empty_and_unknown(const GrayImage& shelf,
                                                   const std::vector<DetectedObject>& detections,
                                                   const EmptySpaceParams& params = {});

/// Write the shelf with box outlines: green detected, blue empty, red unknown.
void render_overlay(const GrayImage& shelf, const std::vector<DetectedObject>& detections,
                    const std::string& path);

}  // namespace shelfalign
