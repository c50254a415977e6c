#include "shelfalign/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "shelfalign/errors.hpp"

namespace shelfalign {

namespace {

// Keypoints need the full rotated descriptor patch plus blur support inside
// the level image: 13*sqrt(2) ~ 18.4, +2 blur, rounded up.
constexpr int kEdgeMargin = 21;
constexpr int kDescriptorBits = 256;
constexpr int kDescriptorBytes = kDescriptorBits / 8;
constexpr int kOrientationRadius = 15;
constexpr int kPairCoordRange = 13;  // descriptor point coordinates in [-13, 13]

// Bresenham circle of radius 3, clockwise from the top.
constexpr std::array<std::array<int, 2>, 16> kRing = {{{0, -3},
                                                       {1, -3},
                                                       {2, -2},
                                                       {3, -1},
                                                       {3, 0},
                                                       {3, 1},
                                                       {2, 2},
                                                       {1, 3},
                                                       {0, 3},
                                                       {-1, 3},
                                                       {-2, 2},
                                                       {-3, 1},
                                                       {-3, 0},
                                                       {-3, -1},
                                                       {-2, -2},
                                                       {-1, -3}}};

struct PairPattern {
    std::array<std::int8_t, kDescriptorBits * 4> coords;  // px, py, qx, qy per bit
};

// Fixed sampling pattern shared by all extractions. mt19937 output is fully
// specified, so the pattern is identical on every platform.
const PairPattern& pair_pattern() {
    static const PairPattern pattern = [] {
        PairPattern p{};
        std::mt19937 rng(0x53484654u);  // "SHFT"
        auto coord = [&rng] {
            return static_cast<std::int8_t>(static_cast<int>(rng() % (2 * kPairCoordRange + 1)) -
                                            kPairCoordRange);
        };
        for (int i = 0; i < kDescriptorBits; ++i) {
            std::int8_t px, py, qx, qy;
            do {
                px = coord();
                py = coord();
                qx = coord();
                qy = coord();
            } while (px == qx && py == qy);
            p.coords[i * 4 + 0] = px;
            p.coords[i * 4 + 1] = py;
            p.coords[i * 4 + 2] = qx;
            p.coords[i * 4 + 3] = qy;
        }
        return p;
    }();
    return pattern;
}

GrayImage downsample(const GrayImage& src, double scale) {
    int w = std::max(1, static_cast<int>(std::lround(src.width / scale)));
    int h = std::max(1, static_cast<int>(std::lround(src.height / scale)));
    GrayImage out(w, h);
    for (int y = 0; y < h; ++y) {
        double sy = (y + 0.5) * scale - 0.5;
        int y0 = std::clamp(static_cast<int>(std::floor(sy)), 0, src.height - 1);
        int y1 = std::min(y0 + 1, src.height - 1);
        double fy = sy - y0;
        for (int x = 0; x < w; ++x) {
            double sx = (x + 0.5) * scale - 0.5;
            int x0 = std::clamp(static_cast<int>(std::floor(sx)), 0, src.width - 1);
            int x1 = std::min(x0 + 1, src.width - 1);
            double fx = sx - x0;
            double v = (1 - fy) * ((1 - fx) * src.at(x0, y0) + fx * src.at(x1, y0)) +
                       fy * ((1 - fx) * src.at(x0, y1) + fx * src.at(x1, y1));
            out.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        }
    }
    return out;
}

// 5x5 box mean with the window clipped at borders.
GrayImage box_blur(const GrayImage& src) {
    std::vector<std::uint32_t> integral(static_cast<std::size_t>(src.width + 1) *
                                        (src.height + 1));
    auto iat = [&](int x, int y) -> std::uint32_t& {
        return integral[static_cast<std::size_t>(y) * (src.width + 1) + x];
    };
    for (int y = 1; y <= src.height; ++y) {
        std::uint32_t row = 0;
        for (int x = 1; x <= src.width; ++x) {
            row += src.at(x - 1, y - 1);
            iat(x, y) = iat(x, y - 1) + row;
        }
    }
    GrayImage out(src.width, src.height);
    for (int y = 0; y < src.height; ++y) {
        int y0 = std::max(0, y - 2), y1 = std::min(src.height - 1, y + 2);
        for (int x = 0; x < src.width; ++x) {
            int x0 = std::max(0, x - 2), x1 = std::min(src.width - 1, x + 2);
            std::uint32_t sum = iat(x1 + 1, y1 + 1) - iat(x0, y1 + 1) - iat(x1 + 1, y0) + iat(x0, y0);
            int count = (x1 - x0 + 1) * (y1 - y0 + 1);
            out.at(x, y) = static_cast<std::uint8_t>((sum + count / 2) / count);
        }
    }
    return out;
}

// Segment test: at least 9 contiguous ring pixels all brighter than c+t or
// all darker than c-t (circular run).
bool ring_corner_test(const GrayImage& img, int x, int y, int t, int* response) {
    int c = img.at(x, y);
    std::array<int, 16> state;
    for (int i = 0; i < 16; ++i) {
        int p = img.at(x + kRing[i][0], y + kRing[i][1]);
        state[i] = p > c + t ? 1 : (p < c - t ? -1 : 0);
    }
    bool corner = false;
    for (int sign : {1, -1}) {
        int run = 0;
        for (int i = 0; i < 32 && run < 9; ++i) {
            run = state[i % 16] == sign ? run + 1 : 0;
        }
        if (run >= 9) corner = true;
    }
    if (!corner) return false;
    int resp = 0;
    for (int i = 0; i < 16; ++i) {
        int p = img.at(x + kRing[i][0], y + kRing[i][1]);
        resp += std::max(0, std::abs(p - c) - t);
    }
    *response = resp;
    return true;
}

float centroid_orientation(const GrayImage& img, int x, int y) {
    long m01 = 0, m10 = 0;
    for (int dy = -kOrientationRadius; dy <= kOrientationRadius; ++dy) {
        for (int dx = -kOrientationRadius; dx <= kOrientationRadius; ++dx) {
            if (dx * dx + dy * dy > kOrientationRadius * kOrientationRadius) continue;
            int v = img.at(x + dx, y + dy);
            m10 += static_cast<long>(dx) * v;
            m01 += static_cast<long>(dy) * v;
        }
    }
    if (m01 == 0 && m10 == 0) return 0.0f;
    return static_cast<float>(std::atan2(static_cast<double>(m01), static_cast<double>(m10)));
}

std::array<std::uint8_t, kDescriptorBytes> steered_descriptor(const GrayImage& blurred, int x,
                                                              int y, float angle) {
    const PairPattern& pat = pair_pattern();
    double ca = std::cos(angle), sa = std::sin(angle);
    std::array<std::uint8_t, kDescriptorBytes> desc{};
    for (int i = 0; i < kDescriptorBits; ++i) {
        const std::int8_t* c = &pat.coords[i * 4];
        auto sample = [&](int px, int py) {
            int rx = x + static_cast<int>(std::lround(px * ca - py * sa));
            int ry = y + static_cast<int>(std::lround(px * sa + py * ca));
            return blurred.at(rx, ry);
        };
        if (sample(c[0], c[1]) < sample(c[2], c[3])) {
            desc[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
        }
    }
    return desc;
}

struct Corner {
    int x = 0;
    int y = 0;
    int level = 0;
    int response = 0;
};

// --- binary feature file ("SHFT") ------------------------------------------

constexpr std::uint16_t kFileVersion = 1;

void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const std::uint8_t* data;
    std::size_t size;
    std::size_t pos = 0;

    bool need(std::size_t n) const { return pos + n <= size; }
    std::uint8_t u8() { return data[pos++]; }
    std::uint16_t u16() {
        std::uint16_t v = static_cast<std::uint16_t>(data[pos]) |
                          static_cast<std::uint16_t>(data[pos + 1]) << 8;
        pos += 2;
        return v;
    }
    std::uint32_t u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    float f32() {
        std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
};

}  // namespace

void FeatureSet::push_binary(const Keypoint& kp, std::span<const std::uint8_t> descriptor) {
    keypoints.push_back(kp);
    binary_data.insert(binary_data.end(), descriptor.begin(), descriptor.end());
}

void FeatureSet::push_float(const Keypoint& kp, std::span<const float> descriptor) {
    keypoints.push_back(kp);
    float_data.insert(float_data.end(), descriptor.begin(), descriptor.end());
}

FeatureSet extract_features(const GrayImage& img, const ExtractorParams& params) {
    FeatureSet fs;
    fs.source_width = img.width;
    fs.source_height = img.height;
    fs.kind = DescriptorKind::binary;
    fs.descriptor_length = kDescriptorBytes;
    if (img.empty() || img.width < params.patch_size || img.height < params.patch_size) return fs;

    struct Level {
        GrayImage img;
        GrayImage blurred;
        double scale = 1.0;
    };
    std::vector<Level> pyramid;
    for (int l = 0; l < params.pyramid_levels; ++l) {
        Level lvl;
        lvl.scale = std::pow(params.scale_factor, l);
        lvl.img = l == 0 ? img : downsample(img, lvl.scale);
        if (lvl.img.width < 2 * kEdgeMargin + 1 || lvl.img.height < 2 * kEdgeMargin + 1) break;
        lvl.blurred = box_blur(lvl.img);
        pyramid.push_back(std::move(lvl));
    }

    std::vector<Corner> corners;
    for (std::size_t l = 0; l < pyramid.size(); ++l) {
        const GrayImage& im = pyramid[l].img;
        std::vector<int> resp(static_cast<std::size_t>(im.width) * im.height, 0);
        for (int y = kEdgeMargin; y < im.height - kEdgeMargin; ++y) {
            for (int x = kEdgeMargin; x < im.width - kEdgeMargin; ++x) {
                int r = 0;
                if (ring_corner_test(im, x, y, params.corner_threshold, &r)) {
                    resp[static_cast<std::size_t>(y) * im.width + x] = r;
                }
            }
        }
        // 3x3 non-max suppression; plateau ties keep the first cell in scan order.
        for (int y = kEdgeMargin; y < im.height - kEdgeMargin; ++y) {
            for (int x = kEdgeMargin; x < im.width - kEdgeMargin; ++x) {
                int r = resp[static_cast<std::size_t>(y) * im.width + x];
                if (r == 0) continue;
                bool is_max = true;
                for (int dy = -1; dy <= 1 && is_max; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        if (dx == 0 && dy == 0) continue;
                        int n = resp[static_cast<std::size_t>(y + dy) * im.width + (x + dx)];
                        bool earlier = dy < 0 || (dy == 0 && dx < 0);
                        if (n > r || (earlier && n == r)) {
                            is_max = false;
                            break;
                        }
                    }
                }
                if (is_max) corners.push_back({x, y, static_cast<int>(l), r});
            }
        }
    }

    std::sort(corners.begin(), corners.end(), [](const Corner& a, const Corner& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.level != b.level) return a.level < b.level;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(corners.size()) > params.max_keypoints) {
        corners.resize(params.max_keypoints);
    }

    for (const Corner& c : corners) {
        const auto& lvl = pyramid[c.level];
        float angle = centroid_orientation(lvl.img, c.x, c.y);
        auto desc = steered_descriptor(lvl.blurred, c.x, c.y, angle);
        Keypoint kp;
        kp.x = static_cast<float>(c.x * lvl.scale);
        kp.y = static_cast<float>(c.y * lvl.scale);
        kp.orientation = angle;
        kp.scale = static_cast<std::uint8_t>(c.level);
        fs.push_binary(kp, desc);
    }
    return fs;
}

FeatureSet filter_features(const FeatureSet& fs, const RoiMask& mask) {
    FeatureSet out;
    out.source_width = fs.source_width;
    out.source_height = fs.source_height;
    out.kind = fs.kind;
    out.descriptor_length = fs.descriptor_length;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const Keypoint& kp = fs.keypoints[i];
        if (!mask.keeps(static_cast<int>(std::lround(kp.x)), static_cast<int>(std::lround(kp.y))))
            continue;
        if (fs.kind == DescriptorKind::binary) {
            out.push_binary(kp, fs.binary_at(i));
        } else {
            out.push_float(kp, fs.float_at(i));
        }
    }
    return out;
}

void export_features(const FeatureSet& fs, const std::string& path) {
    std::string buf;
    buf.append("SHFT");
    put_u16(buf, kFileVersion);
    buf.push_back(static_cast<char>(fs.kind));
    put_u16(buf, static_cast<std::uint16_t>(fs.descriptor_length));
    put_u32(buf, static_cast<std::uint32_t>(fs.size()));
    for (std::size_t i = 0; i < fs.size(); ++i) {
        const Keypoint& kp = fs.keypoints[i];
        put_f32(buf, kp.x);
        put_f32(buf, kp.y);
        put_f32(buf, kp.orientation);
        buf.push_back(static_cast<char>(kp.scale));
        if (fs.kind == DescriptorKind::binary) {
            auto d = fs.binary_at(i);
            buf.append(reinterpret_cast<const char*>(d.data()), d.size());
        } else {
            for (float v : fs.float_at(i)) put_f32(buf, v);
        }
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("failed writing '" + path + "'");
}

FeatureSet import_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r{reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()};
    if (!r.need(4 + 2 + 1 + 2 + 4)) throw ParseError("'" + path + "': truncated header");
    if (std::memcmp(raw.data(), "SHFT", 4) != 0) throw ParseError("'" + path + "': bad magic");
    r.pos = 4;
    std::uint16_t version = r.u16();
    if (version != kFileVersion)
        throw ParseError("'" + path + "': unsupported version " + std::to_string(version));
    std::uint8_t kind_byte = r.u8();
    if (kind_byte > 1)
        throw ParseError("'" + path + "': unknown descriptor kind " + std::to_string(kind_byte));
    std::uint16_t desc_len = r.u16();
    if (desc_len == 0) throw ParseError("'" + path + "': zero descriptor length");
    std::uint32_t count = r.u32();

    FeatureSet fs;
    fs.kind = static_cast<DescriptorKind>(kind_byte);
    fs.descriptor_length = desc_len;

    std::size_t payload =
        fs.kind == DescriptorKind::binary ? desc_len : static_cast<std::size_t>(desc_len) * 4;
    float max_x = 0.0f, max_y = 0.0f;
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string where = "'" + path + "': record " + std::to_string(i);
        if (!r.need(13 + payload)) throw ParseError(where + " truncated");
        Keypoint kp;
        kp.x = r.f32();
        kp.y = r.f32();
        kp.orientation = r.f32();
        kp.scale = r.u8();
        if (!std::isfinite(kp.x) || !std::isfinite(kp.y) || kp.x < 0 || kp.y < 0)
            throw ParseError(where + ": out-of-bounds keypoint");
        max_x = std::max(max_x, kp.x);
        max_y = std::max(max_y, kp.y);
        if (fs.kind == DescriptorKind::binary) {
            fs.push_binary(kp, {r.data + r.pos, payload});
            r.pos += payload;
        } else {
            std::vector<float> vals(desc_len);
            for (auto& v : vals) v = r.f32();
            fs.push_float(kp, vals);
        }
    }
    if (r.pos != r.size)
        throw ParseError("'" + path + "': trailing bytes after " + std::to_string(count) +
                         " records");

    if (!fs.empty()) {
        fs.source_width = static_cast<int>(std::ceil(max_x)) + 1;
        fs.source_height = static_cast<int>(std::ceil(max_y)) + 1;
    }
    return fs;
}

}  // namespace shelfalign
