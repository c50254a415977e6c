#include "shelfalign/planogram.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "shelfalign/errors.hpp"

namespace shelfalign {

namespace {

EntryKind kind_of(const DetectedObject& d) {
    switch (d.kind) {
        case DetectionKind::empty_space: return EntryKind::empty_space;
        case DetectionKind::unknown: return EntryKind::unknown;
        default: return EntryKind::object;
    }
}

EntryKind kind_from_id(const std::string& id) {
    if (id == kEmptyObjectId) return EntryKind::empty_space;
    if (id == kUnknownObjectId) return EntryKind::unknown;
    return EntryKind::object;
}

double interval_overlap(double a0, double a1, double b0, double b1) {
    return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Vertical arrangement: horizontal intervals mostly shared, vertical
// intervals mostly disjoint.
bool stacked(const BoundingBox& a, const BoundingBox& b) {
    double min_w = std::min(a.width(), b.width());
    double min_h = std::min(a.height(), b.height());
    if (min_w <= 0.0 || min_h <= 0.0) return false;
    double h_ratio = interval_overlap(a.x0, a.x1, b.x0, b.x1) / min_w;
    double v_ratio = interval_overlap(a.y0, a.y1, b.y0, b.y1) / min_h;
    return h_ratio >= 0.5 && v_ratio <= 0.2;
}

std::string box_str(const BoundingBox& b) {
    return "(" + std::to_string(b.x0) + "," + std::to_string(b.y0) + ")-(" + std::to_string(b.x1) +
           "," + std::to_string(b.y1) + ")";
}

}  // namespace

std::string PlanogramEntry::display_type() const {
    switch (kind) {
        case EntryKind::empty_space: return "E";
        case EntryKind::unknown: return "U";
        default: return group_type;
    }
}

int Planogram::total_quantity() const {
    int total = 0;
    for (const PlanogramEntry& e : entries) total += e.quantity;
    return total;
}

Planogram form_planogram(const std::vector<DetectedObject>& detections, std::string shelf_id,
                         bool unknown_quantity_by_width) {
    std::vector<DetectedObject> sorted = detections;
    // Equal center x keeps detection order: the earlier detection stays left.
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const DetectedObject& a, const DetectedObject& b) { return a.cx < b.cx; });

    double avg_width = 0.0;
    int object_count = 0;
    for (const DetectedObject& d : sorted) {
        if (d.kind == DetectionKind::object) {
            avg_width += d.box.width();
            ++object_count;
        }
    }
    if (object_count > 0) avg_width /= object_count;

    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (sorted[i].kind != DetectionKind::object) continue;
        for (std::size_t j = i + 1; j < sorted.size(); ++j) {
            if (sorted[j].kind != DetectionKind::object) continue;
            if (stacked(sorted[i].box, sorted[j].box) &&
                sorted[i].object_id != sorted[j].object_id) {
                throw ConstraintError("stacked objects of different types: " + sorted[i].object_id +
                                      " at " + box_str(sorted[i].box) + " vs " +
                                      sorted[j].object_id + " at " + box_str(sorted[j].box));
            }
        }
    }

    Planogram out;
    out.shelf_id = std::move(shelf_id);
    for (const DetectedObject& d : sorted) {
        int quantity = 1;
        if (d.kind == DetectionKind::unknown && unknown_quantity_by_width && avg_width > 0.0) {
            quantity = std::max(1, static_cast<int>(std::ceil(d.box.width() / avg_width)));
        }
        if (!out.entries.empty() && out.entries.back().group_type == d.object_id) {
            PlanogramEntry& last = out.entries.back();
            last.quantity += quantity;
            last.box = last.box ? box_union(*last.box, d.box) : d.box;
            continue;
        }
        PlanogramEntry e;
        e.group_type = d.object_id;
        e.kind = kind_of(d);
        e.quantity = quantity;
        e.box = d.box;
        out.entries.push_back(std::move(e));
    }
    return out;
}

ReferencePlanogram load_reference(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");

    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("'" + path + "': invalid JSON: " + e.what());
    }

    if (!j.is_object() || !j.contains("products") || !j["products"].is_array()) {
        throw ParseError("'" + path + "': expected object with a 'products' array");
    }
    const auto& products = j["products"];
    if (products.empty()) throw ParseError("'" + path + "': empty product list");

    ReferencePlanogram out;
    out.planogram.shelf_id = j.value("shelf_id", std::string{});

    std::filesystem::path base = std::filesystem::path(path).parent_path();
    std::set<std::string> seen;
    for (std::size_t i = 0; i < products.size(); ++i) {
        const auto& p = products[i];
        std::string where = "'" + path + "': products[" + std::to_string(i) + "]";
        if (!p.is_object() || !p.contains("id") || !p["id"].is_string()) {
            throw ParseError(where + ": missing string 'id'");
        }
        std::string id = p["id"].get<std::string>();
        if (id.empty() || kind_from_id(id) != EntryKind::object) {
            throw ParseError(where + ": invalid object id '" + id + "'");
        }
        if (!p.contains("quantity") || !p["quantity"].is_number_integer() ||
            p["quantity"].get<int>() < 1) {
            throw ParseError(where + ": quantity must be a positive integer");
        }
        if (!out.planogram.entries.empty() && out.planogram.entries.back().group_type == id) {
            throw ParseError(where + ": adjacent duplicate group '" + id +
                             "' (grouping must be maximal)");
        }

        PlanogramEntry e;
        e.group_type = id;
        e.kind = EntryKind::object;
        e.quantity = p["quantity"].get<int>();
        out.planogram.entries.push_back(std::move(e));

        if (seen.insert(id).second) {
            ModelRef m;
            m.id = id;
            if (p.contains("image") && p["image"].is_string()) {
                std::string img = p["image"].get<std::string>();
                if (!img.empty()) {
                    std::filesystem::path ip(img);
                    m.image_path = ip.is_absolute() ? ip.string() : (base / ip).string();
                }
            }
            m.width = p.value("width", 0);
            m.height = p.value("height", 0);
            out.models.push_back(std::move(m));
        }
    }
    return out;
}

void to_json(nlohmann::json& j, const PlanogramEntry& e) {
    j = nlohmann::json{{"id", e.group_type}, {"quantity", e.quantity}};
    if (e.box) {
        j["bbox"] = {e.box->x0, e.box->y0, e.box->x1, e.box->y1};
    }
}

void to_json(nlohmann::json& j, const Planogram& p) {
    j = nlohmann::json{{"shelf_id", p.shelf_id}, {"products", p.entries}};
}

Planogram planogram_from_json(const nlohmann::json& j) {
    Planogram p;
    p.shelf_id = j.value("shelf_id", std::string{});
    for (const auto& pj : j.at("products")) {
        PlanogramEntry e;
        e.group_type = pj.at("id").get<std::string>();
        e.kind = kind_from_id(e.group_type);
        e.quantity = pj.at("quantity").get<int>();
        if (pj.contains("bbox")) {
            const auto& b = pj["bbox"];
            e.box = BoundingBox{b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                                b.at(3).get<double>()};
        }
        p.entries.push_back(std::move(e));
    }
    return p;
}

}  // namespace shelfalign
