#include "shelfalign/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "shelfalign/errors.hpp"

namespace shelfalign {

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

int rng_range(std::mt19937_64& rng, int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
}

std::uint8_t clamp_u8(int v) { return static_cast<std::uint8_t>(std::clamp(v, 0, 255)); }

void fill_rect(GrayImage& img, int x0, int y0, int x1, int y1, std::uint8_t v) {
    x0 = std::clamp(x0, 0, img.width);
    x1 = std::clamp(x1, 0, img.width);
    y0 = std::clamp(y0, 0, img.height);
    y1 = std::clamp(y1, 0, img.height);
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) img.at(x, y) = v;
    }
}

}  // namespace

Metrics make_metrics(int tp, int fp, int fn) {
    Metrics m;
    m.true_positives = tp;
    m.false_positives = fp;
    m.false_negatives = fn;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    m.recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    return m;
}

std::vector<std::string> group_keys(const std::vector<AlignedPair>& pairs) {
    std::vector<std::string> keys;
    int consumed = 0;
    int gap_ordinal = 0;
    for (const AlignedPair& p : pairs) {
        if (p.ref.is_gap) {
            ++gap_ordinal;
            keys.push_back("g" + std::to_string(consumed) + "." + std::to_string(gap_ordinal));
        } else {
            ++consumed;
            gap_ordinal = 0;
            keys.push_back("r" + std::to_string(consumed));
        }
    }
    return keys;
}

Metrics detection_metrics(const std::vector<DetectedObject>& detections, const GroundTruth& gt,
                          double iou_thresh) {
    if (!(iou_thresh > 0.0) || iou_thresh >= 1.0) {
        throw std::invalid_argument("iou threshold must be in (0, 1)");
    }

    std::vector<const DetectedObject*> dets;
    for (const DetectedObject& d : detections) {
        if (d.kind == DetectionKind::object) dets.push_back(&d);
    }
    std::vector<const GtBox*> boxes;
    for (const GtBox& b : gt.boxes) {
        if (!b.foreign) boxes.push_back(&b);
    }

    struct Overlap {
        double iou;
        std::size_t det;
        std::size_t box;
    };
    std::vector<Overlap> overlaps;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        for (std::size_t j = 0; j < boxes.size(); ++j) {
            double v = iou(dets[i]->box, boxes[j]->box);
            if (v > iou_thresh) overlaps.push_back({v, i, j});
        }
    }
    std::sort(overlaps.begin(), overlaps.end(), [](const Overlap& a, const Overlap& b) {
        if (a.iou != b.iou) return a.iou > b.iou;
        if (a.det != b.det) return a.det < b.det;
        return a.box < b.box;
    });

    std::vector<bool> det_used(dets.size(), false), box_used(boxes.size(), false);
    int tp = 0, fp = 0;
    for (const Overlap& o : overlaps) {
        if (det_used[o.det] || box_used[o.box]) continue;
        det_used[o.det] = true;
        box_used[o.box] = true;
        if (dets[o.det]->object_id == boxes[o.box]->id) {
            ++tp;
        } else {
            ++fp;
        }
    }
    for (bool used : det_used) {
        if (!used) ++fp;
    }
    int fn = 0;
    for (bool used : box_used) {
        if (!used) ++fn;
    }
    return make_metrics(tp, fp, fn);
}

Metrics compliance_metrics(const AlignmentOutcome& outcome, const std::vector<GtLabel>& gt_labels) {
    std::map<std::string, PairLabel> expected;
    for (const GtLabel& g : gt_labels) expected[g.group] = g.label;

    std::vector<std::string> keys = group_keys(outcome.pairs);
    int tp = 0, fp = 0;
    std::map<std::string, bool> seen;
    for (std::size_t i = 0; i < outcome.pairs.size(); ++i) {
        auto it = expected.find(keys[i]);
        if (it == expected.end()) {
            ++fp;  // spurious group
            continue;
        }
        seen[keys[i]] = true;
        if (outcome.pairs[i].label == it->second) {
            ++tp;
        } else {
            ++fp;
        }
    }
    int fn = 0;
    for (const GtLabel& g : gt_labels) {
        if (!seen.count(g.group)) ++fn;
    }
    return make_metrics(tp, fp, fn);
}

GrayImage make_product_sprite(std::uint64_t seed, int width, int height) {
    if (width < 16 || height < 16) throw std::invalid_argument("sprite too small");
    std::mt19937_64 rng(seed);

    GrayImage img(width, height, clamp_u8(185 + rng_range(rng, 0, 45)));
    // Dark frame keeps the sprite outline distinct from neighbors.
    std::uint8_t frame = clamp_u8(30 + rng_range(rng, 0, 15));
    fill_rect(img, 0, 0, width, 3, frame);
    fill_rect(img, 0, height - 3, width, height, frame);
    fill_rect(img, 0, 0, 3, height, frame);
    fill_rect(img, width - 3, 0, width, height, frame);

    // Label-like high-contrast patches provide corner features.
    int blobs = 12 + rng_range(rng, 0, 5);
    for (int i = 0; i < blobs; ++i) {
        int bw = rng_range(rng, 6, std::max(7, width / 3));
        int bh = rng_range(rng, 6, std::max(7, height / 3));
        int x = rng_range(rng, 4, std::max(5, width - bw - 4));
        int y = rng_range(rng, 4, std::max(5, height - bh - 4));
        std::uint8_t v = clamp_u8(rng_range(rng, 20, 235));
        fill_rect(img, x, y, x + bw, y + bh, v);
    }
    return img;
}

SynthResult synth_shelf(const SynthSpec& spec) {
    if (spec.products.empty()) throw std::invalid_argument("no products defined");
    if (spec.layout.empty()) throw std::invalid_argument("empty layout");

    std::map<std::string, SynthProduct> catalog;
    for (const SynthProduct& p : spec.products) {
        if (p.width < 16 || p.height < 16) {
            throw std::invalid_argument("product '" + p.id + "' smaller than 16x16");
        }
        catalog[p.id] = p;
    }

    int canvas_h = 0;
    int canvas_w = spec.margin;
    int real_items = 0;
    double real_width_sum = 0.0;
    for (const LayoutElement& el : spec.layout) {
        if (std::holds_alternative<SynthItem>(el)) {
            const SynthItem& item = std::get<SynthItem>(el);
            auto it = catalog.find(item.id);
            if (it == catalog.end()) {
                throw std::invalid_argument("layout references unknown product '" + item.id + "'");
            }
            if (item.count < 1) throw std::invalid_argument("layout count must be >= 1");
            canvas_w += item.count * (it->second.width + spec.spacing);
            canvas_h = std::max(canvas_h, it->second.height);
            if (item.id[0] != '@') {
                real_items += item.count;
                real_width_sum += static_cast<double>(item.count) * it->second.width;
            }
        } else {
            int gap = std::get<SynthGap>(el).width;
            if (gap <= 0) throw std::invalid_argument("gap width must be positive");
            canvas_w += gap + spec.spacing;
        }
    }
    canvas_w += spec.margin - spec.spacing;
    if (real_items == 0) throw std::invalid_argument("layout places no real products");
    const double avg_item_width = real_width_sum / real_items;

    std::mt19937_64 rng(spec.seed);
    SynthResult result;
    result.shelf = GrayImage(canvas_w, canvas_h, spec.background);

    std::map<std::string, GrayImage> sprites;
    for (const auto& [id, p] : catalog) {
        sprites.emplace(id, make_product_sprite(spec.seed ^ fnv1a(id), p.width, p.height));
        if (id[0] != '@') result.model_images.emplace(id, sprites.at(id));
    }

    // Symbolic shelf content as a perfect detector would group it; drives the
    // expected compliance labels.
    std::vector<PlanogramEntry> truth;
    auto push_truth = [&truth](const std::string& type, EntryKind kind, int quantity) {
        if (!truth.empty() && truth.back().group_type == type) {
            truth.back().quantity += quantity;
            return;
        }
        PlanogramEntry e;
        e.group_type = type;
        e.kind = kind;
        e.quantity = quantity;
        truth.push_back(std::move(e));
    };

    int cursor = spec.margin;
    int prev_end = 0;
    for (const LayoutElement& el : spec.layout) {
        if (std::holds_alternative<SynthGap>(el)) {
            int gap = std::get<SynthGap>(el).width;
            if (gap >= avg_item_width) push_truth(kEmptyObjectId, EntryKind::empty_space, 1);
            cursor += gap + spec.spacing;
            continue;
        }
        const SynthItem& item = std::get<SynthItem>(el);
        const SynthProduct& prod = catalog.at(item.id);
        const bool foreign = item.id[0] == '@';
        if (foreign) {
            push_truth(kUnknownObjectId, EntryKind::unknown, 1);
        } else {
            push_truth(item.id, EntryKind::object, item.count);
        }

        for (int k = 0; k < item.count; ++k) {
            int jitter = spec.jitter_px > 0 ? rng_range(rng, -spec.jitter_px, spec.jitter_px) : 0;
            int x = std::max(cursor + jitter, prev_end);
            int y_slack = canvas_h - prod.height;
            int y_jit = spec.jitter_px > 0 && y_slack > 0
                            ? rng_range(rng, 0, std::min(spec.jitter_px, y_slack))
                            : 0;
            int y = canvas_h - prod.height - y_jit;
            int delta = spec.brightness_jitter > 0
                            ? rng_range(rng, -spec.brightness_jitter, spec.brightness_jitter)
                            : 0;

            const GrayImage& sprite = sprites.at(item.id);
            int occluded_from = prod.width;
            if (spec.occlusion_fraction > 0.0) {
                occluded_from = static_cast<int>(
                    std::lround(prod.width * (1.0 - spec.occlusion_fraction)));
            }
            for (int sy = 0; sy < prod.height; ++sy) {
                for (int sx = 0; sx < prod.width; ++sx) {
                    if (x + sx >= canvas_w || y + sy >= canvas_h) continue;
                    if (sx >= occluded_from) continue;  // occluded part stays background
                    result.shelf.at(x + sx, y + sy) = clamp_u8(sprite.at(sx, sy) + delta);
                }
            }

            GtBox gb;
            gb.id = item.id;
            gb.foreign = foreign;
            gb.box = {static_cast<double>(x), static_cast<double>(y),
                      static_cast<double>(x + prod.width), static_cast<double>(y + prod.height)};
            result.gt.boxes.push_back(std::move(gb));

            prev_end = x + prod.width;
            cursor += prod.width + spec.spacing;
        }
    }

    // Reference planogram: explicit spec wins, else the layout's real items.
    if (!spec.reference.empty()) {
        for (const SynthItem& r : spec.reference) {
            PlanogramEntry e;
            e.group_type = r.id;
            e.kind = EntryKind::object;
            e.quantity = r.count;
            result.reference.entries.push_back(std::move(e));
        }
    } else {
        for (const PlanogramEntry& e : truth) {
            if (e.kind == EntryKind::object) result.reference.entries.push_back(e);
        }
    }
    result.reference.shelf_id = "synth-" + std::to_string(spec.seed);

    Planogram truth_pg;
    truth_pg.shelf_id = result.reference.shelf_id;
    truth_pg.entries = truth;
    AlignmentOutcome expected = align(truth_pg, result.reference);
    std::vector<std::string> keys = group_keys(expected.pairs);
    for (std::size_t i = 0; i < expected.pairs.size(); ++i) {
        result.gt.labels.push_back({keys[i], expected.pairs[i].label});
    }
    return result;
}

SynthSpec synth_spec_from_json(const nlohmann::json& j) {
    SynthSpec spec;
    spec.seed = j.value("seed", 1ull);
    spec.margin = j.value("margin", 16);
    spec.spacing = j.value("spacing", 6);
    spec.background = static_cast<std::uint8_t>(j.value("background", 24));
    spec.jitter_px = j.value("jitter_px", 0);
    spec.brightness_jitter = j.value("brightness_jitter", 0);
    spec.occlusion_fraction = j.value("occlusion_fraction", 0.0);

    if (!j.contains("products") || !j["products"].is_array() || j["products"].empty()) {
        throw ParseError("synth spec: missing non-empty 'products' array");
    }
    for (const auto& p : j["products"]) {
        spec.products.push_back(
            {p.at("id").get<std::string>(), p.at("width").get<int>(), p.at("height").get<int>()});
    }
    if (!j.contains("layout") || !j["layout"].is_array() || j["layout"].empty()) {
        throw ParseError("synth spec: missing non-empty 'layout' array");
    }
    for (const auto& el : j["layout"]) {
        if (el.contains("gap")) {
            spec.layout.push_back(SynthGap{el["gap"].get<int>()});
        } else {
            spec.layout.push_back(SynthItem{el.at("id").get<std::string>(), el.value("count", 1)});
        }
    }
    if (j.contains("reference")) {
        for (const auto& r : j["reference"]) {
            spec.reference.push_back(
                {r.at("id").get<std::string>(), r.value("quantity", r.value("count", 1))});
        }
    }
    return spec;
}

void to_json(nlohmann::json& j, const Metrics& m) {
    j = nlohmann::json{{"true_positives", m.true_positives},
                       {"false_positives", m.false_positives},
                       {"false_negatives", m.false_negatives},
                       {"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1}};
}

void to_json(nlohmann::json& j, const GroundTruth& gt) {
    nlohmann::json boxes = nlohmann::json::array();
    for (const GtBox& b : gt.boxes) {
        nlohmann::json bj{{"id", b.id}, {"bbox", {b.box.x0, b.box.y0, b.box.x1, b.box.y1}}};
        if (b.foreign) bj["foreign"] = true;
        boxes.push_back(std::move(bj));
    }
    nlohmann::json labels = nlohmann::json::array();
    for (const GtLabel& l : gt.labels) {
        labels.push_back({{"group", l.group}, {"label", to_string(l.label)}});
    }
    j = nlohmann::json{{"boxes", boxes}, {"labels", labels}};
}

GroundTruth ground_truth_from_json(const nlohmann::json& j) {
    GroundTruth gt;
    for (const auto& bj : j.at("boxes")) {
        GtBox b;
        b.id = bj.at("id").get<std::string>();
        const auto& bb = bj.at("bbox");
        b.box = {bb.at(0).get<double>(), bb.at(1).get<double>(), bb.at(2).get<double>(),
                 bb.at(3).get<double>()};
        b.foreign = bj.value("foreign", false);
        gt.boxes.push_back(std::move(b));
    }
    if (j.contains("labels")) {
        for (const auto& lj : j["labels"]) {
            gt.labels.push_back({lj.at("group").get<std::string>(),
                                 pair_label_from_string(lj.at("label").get<std::string>())});
        }
    }
    return gt;
}

std::string render_metrics_table(const std::vector<std::pair<std::string, Metrics>>& rows) {
    std::ostringstream os;
    os << "name            tp    fp    fn  precision  recall      f1\n";
    for (const auto& [name, m] : rows) {
        os << name;
        for (std::size_t i = name.size(); i < 14; ++i) os << ' ';
        char buf[80];
        std::snprintf(buf, sizeof(buf), "%6d%6d%6d   %8.4f %7.4f %7.4f\n", m.true_positives,
                      m.false_positives, m.false_negatives, m.precision, m.recall, m.f1);
        os << buf;
    }
    return os.str();
}

}  // namespace shelfalign
