#include "shelfalign/detection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace shelfalign {

namespace {

struct Span {
    double a = 0.0;
    double b = 0.0;
    double length() const { return b - a; }
};

std::vector<Span> merge_spans(std::vector<Span> spans) {
    if (spans.empty()) return spans;
    std::sort(spans.begin(), spans.end(), [](const Span& l, const Span& r) { return l.a < r.a; });
    std::vector<Span> out{spans.front()};
    for (std::size_t i = 1; i < spans.size(); ++i) {
        if (spans[i].a <= out.back().b) {
            out.back().b = std::max(out.back().b, spans[i].b);
        } else {
            out.push_back(spans[i]);
        }
    }
    return out;
}

std::vector<Span> complement_spans(const std::vector<Span>& covered, double lo, double hi) {
    std::vector<Span> out;
    double cursor = lo;
    for (const Span& s : covered) {
        if (s.a > cursor) out.push_back({cursor, std::min(s.a, hi)});
        cursor = std::max(cursor, s.b);
        if (cursor >= hi) break;
    }
    if (cursor < hi) out.push_back({cursor, hi});
    return out;
}

double window_mean(const GrayImage& img, double x0, double x1, double y0, double y1) {
    int ix0 = std::clamp(static_cast<int>(std::floor(x0)), 0, img.width - 1);
    int ix1 = std::clamp(static_cast<int>(std::ceil(x1)) - 1, 0, img.width - 1);
    int iy0 = std::clamp(static_cast<int>(std::floor(y0)), 0, img.height - 1);
    int iy1 = std::clamp(static_cast<int>(std::ceil(y1)) - 1, 0, img.height - 1);
    long sum = 0;
    long count = 0;
    for (int y = iy0; y <= iy1; ++y) {
        for (int x = ix0; x <= ix1; ++x) {
            sum += img.at(x, y);
            ++count;
        }
    }
    return count == 0 ? 255.0 : static_cast<double>(sum) / count;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DetectedObject make_sentinel(const char* id, DetectionKind kind, const BoundingBox& box) {
    DetectedObject d;
    d.object_id = id;
    d.kind = kind;
    d.box = box;
    d.cx = 0.5 * (box.x0 + box.x1);
    d.cy = 0.5 * (box.y0 + box.y1);
    d.vote = 0.0;
    return d;
}

}  // namespace

double iou(const BoundingBox& a, const BoundingBox& b) {
    double ix = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
    double iy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    double inter = ix * iy;
    double uni = a.area() + b.area() - inter;
    return uni <= 0.0 ? 0.0 : inter / uni;
}

BoundingBox box_union(const BoundingBox& a, const BoundingBox& b) {
    return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1),
            std::max(a.y1, b.y1)};
}

BoundingBox fit_box(double cx, double cy, int model_width, int model_height, double beta,
                    int shelf_width, int shelf_height) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    double hw = 0.5 * beta * model_width;
    double hh = 0.5 * beta * model_height;
    BoundingBox b{cx - hw, cy - hh, cx + hw, cy + hh};
    b.x0 = std::clamp(b.x0, 0.0, static_cast<double>(shelf_width));
    b.x1 = std::clamp(b.x1, 0.0, static_cast<double>(shelf_width));
    b.y0 = std::clamp(b.y0, 0.0, static_cast<double>(shelf_height));
    b.y1 = std::clamp(b.y1, 0.0, static_cast<double>(shelf_height));
    return b;
}

std::vector<DetectedObject> suppress(std::vector<BoxCandidate> candidates, double overlap_thresh) {
    if (!(overlap_thresh > 0.0) || overlap_thresh >= 1.0) {
        throw std::invalid_argument("overlap threshold must be in (0, 1)");
    }

    std::sort(candidates.begin(), candidates.end(), [](const BoxCandidate& a, const BoxCandidate& b) {
        if (a.center.vote != b.center.vote) return a.center.vote > b.center.vote;
        if (a.center.object_id != b.center.object_id) return a.center.object_id < b.center.object_id;
        if (a.center.x != b.center.x) return a.center.x < b.center.x;
        return a.center.y < b.center.y;
    });

    std::vector<DetectedObject> kept;
    for (const BoxCandidate& c : candidates) {
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
    }
    return kept;
}

std::vector<DetectedObject> find_empty_and_unknown(const GrayImage& shelf,
                                                   const std::vector<DetectedObject>& detections,
                                                   const EmptySpaceParams& params) {
    std::vector<const DetectedObject*> objects;
    for (const DetectedObject& d : detections) {
        if (d.kind == DetectionKind::object) objects.push_back(&d);
    }

    if (objects.empty()) {
        BoundingBox whole{0.0, 0.0, static_cast<double>(shelf.width),
                          static_cast<double>(shelf.height)};
        return {make_sentinel(kUnknownObjectId, DetectionKind::unknown, whole)};
    }

    double avg_width = 0.0;
    std::vector<double> y0s, y1s;
    std::vector<Span> covered;
    for (const DetectedObject* d : objects) {
        avg_width += d->box.width();
        y0s.push_back(d->box.y0);
        y1s.push_back(d->box.y1);
        covered.push_back({d->box.x0, d->box.x1});
    }
    avg_width /= static_cast<double>(objects.size());

    const double band_y0 = median(y0s);
    const double band_y1 = median(y1s);
    const double win = std::max(1.0, avg_width * params.window_width_frac);
    const double stride = std::max(1.0, avg_width * params.stride_frac);

    std::vector<DetectedObject> out;
    for (const Span& gap : complement_spans(merge_spans(std::move(covered)), 0.0, shelf.width)) {
        // Slide the dark-box template over the span; the last window sits
        // flush with the right edge so the tail is always tested.
        std::vector<Span> dark;
        if (gap.length() >= win) {
            for (double u = gap.a;; u += stride) {
                bool last = u + win >= gap.b;
                double wx = last ? gap.b - win : u;
                if (window_mean(shelf, wx, wx + win, band_y0, band_y1) < params.darkness_threshold) {
                    dark.push_back({wx, wx + win});
                }
                if (last) break;
            }
        }

        std::vector<Span> empty_blocks;
        for (const Span& block : merge_spans(std::move(dark))) {
            if (block.length() >= avg_width) empty_blocks.push_back(block);
        }
        for (const Span& block : empty_blocks) {
            out.push_back(make_sentinel(kEmptyObjectId, DetectionKind::empty_space,
                                        {block.a, band_y0, block.b, band_y1}));
        }
        for (const Span& rest : complement_spans(empty_blocks, gap.a, gap.b)) {
            if (rest.length() >= avg_width) {
                out.push_back(make_sentinel(kUnknownObjectId, DetectionKind::unknown,
                                            {rest.a, band_y0, rest.b, band_y1}));
            }
        }
    }
    return out;
}

void render_overlay(const GrayImage& shelf, const std::vector<DetectedObject>& detections,
                    const std::string& path) {
    RgbImage img(shelf);
    auto draw_rect = [&img](const BoundingBox& b, std::uint8_t r, std::uint8_t g, std::uint8_t bl) {
        int x0 = std::clamp(static_cast<int>(std::lround(b.x0)), 0, img.width - 1);
        int x1 = std::clamp(static_cast<int>(std::lround(b.x1)) - 1, 0, img.width - 1);
        int y0 = std::clamp(static_cast<int>(std::lround(b.y0)), 0, img.height - 1);
        int y1 = std::clamp(static_cast<int>(std::lround(b.y1)) - 1, 0, img.height - 1);
        for (int t = 0; t < 2; ++t) {
            int xa = std::min(x0 + t, img.width - 1), xb = std::max(x1 - t, 0);
            int ya = std::min(y0 + t, img.height - 1), yb = std::max(y1 - t, 0);
            for (int x = xa; x <= xb; ++x) {
                img.set(x, ya, r, g, bl);
                img.set(x, yb, r, g, bl);
            }
            for (int y = ya; y <= yb; ++y) {
                img.set(xa, y, r, g, bl);
                img.set(xb, y, r, g, bl);
            }
        }
    };

    for (const DetectedObject& d : detections) {
        switch (d.kind) {
            case DetectionKind::object: draw_rect(d.box, 0, 255, 0); break;
            case DetectionKind::empty_space: draw_rect(d.box, 0, 0, 255); break;
            case DetectionKind::unknown: draw_rect(d.box, 255, 0, 0); break;
        }
    }
    save_png(img, path);
}

}  // namespace shelfalign
