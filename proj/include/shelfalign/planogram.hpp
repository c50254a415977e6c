#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "shelfalign/detection.hpp"

namespace shelfalign {

enum class EntryKind { object, empty_space, unknown };

/// One grouped planogram slot: object type, item count and (for detected
/// planograms) the merged bounding box.
struct PlanogramEntry {
    std::string group_type;  // model id; sentinel ids for EMPTY/UNKNOWN
    EntryKind kind = EntryKind::object;
    int quantity = 0;
    std::optional<BoundingBox> box;

    /// Short token used in alignment tables: the id, or "E"/"U".
    std::string display_type() const;
};

struct Planogram {
    std::string shelf_id;
    std::vector<PlanogramEntry> entries;

    int total_quantity() const;
};

/// Sort detections left to right, enforce the same-type stacking constraint,
/// and merge maximal runs of equal type into grouped entries. Throws
/// ConstraintError when objects of different types are stacked.
Planogram form_planogram(const std::vector<DetectedObject>& detections,
                         std::string shelf_id = {}, bool unknown_quantity_by_width = false);

/// Reference product: id, optional model image path (resolved against the
/// planogram file location) and optional explicit dimensions for feature-file
/// models.
struct ModelRef {
    std::string id;
    std::string image_path;
    int width = 0;
    int height = 0;
};

struct ReferencePlanogram {
    Planogram planogram;
    std::vector<ModelRef> models;  // unique ids in first-appearance order
};

/// Load and validate a reference planogram JSON file. Throws ParseError on
/// schema violations (empty product list, bad quantity, sentinel or duplicate
/// adjacent ids).
ReferencePlanogram load_reference(const std::string& path);

void to_json(nlohmann::json& j, const PlanogramEntry& e);
void to_json(nlohmann::json& j, const Planogram& p);
Planogram planogram_from_json(const nlohmann::json& j);

}  // namespace shelfalign
