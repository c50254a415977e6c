#include <doctest.h>

#include <random>
#include <set>

#include "shelfalign/matching.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace shelfalign;

namespace {

// Hand-built binary sets with controllable Hamming distances: descriptors are
// 32 bytes, distance = number of differing bits.
FeatureSet binary_set(const std::vector<std::vector<std::uint8_t>>& descriptors) {
    FeatureSet fs;
    fs.kind = DescriptorKind::binary;
    fs.descriptor_length = 32;
    fs.source_width = 100;
    fs.source_height = 100;
    for (std::size_t i = 0; i < descriptors.size(); ++i) {
        Keypoint kp{static_cast<float>(i), 0.0f, 0.0f, 0};
        fs.push_binary(kp, descriptors[i]);
    }
    return fs;
}

// Descriptor with the first `ones` bits set.
std::vector<std::uint8_t> bits(int ones) {
    std::vector<std::uint8_t> d(32, 0);
    for (int i = 0; i < ones; ++i) d[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
    return d;
}

FeatureSet random_binary_set(std::mt19937_64& rng, int count) {
    std::vector<std::vector<std::uint8_t>> descs;
    for (int i = 0; i < count; ++i) {
        std::vector<std::uint8_t> d(32);
        for (auto& b : d) b = static_cast<std::uint8_t>(rng() & 0xff);
        descs.push_back(std::move(d));
    }
    return binary_set(descs);
}

FeatureSet random_float_set(std::mt19937_64& rng, int count, int dim = 16) {
    FeatureSet fs;
    fs.kind = DescriptorKind::floating;
    fs.descriptor_length = dim;
    fs.source_width = 100;
    fs.source_height = 100;
    for (int i = 0; i < count; ++i) {
        std::vector<float> d(dim);
        for (auto& v : d) v = static_cast<float>(rng() % 1000) / 10.0f;
        fs.push_float({static_cast<float>(i), 0.0f, 0.0f, 0}, d);
    }
    return fs;
}

bool same_matches(const std::vector<FeatureMatch>& a, const std::vector<FeatureMatch>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].shelf_index != b[i].shelf_index || a[i].model_index != b[i].model_index ||
            a[i].distance != b[i].distance || a[i].ratio != b[i].ratio) {
            return false;
        }
    }
    return true;
}

}  // namespace

TEST_CASE("matching_threshold follows the iteration parameter") {
    CHECK(matching_threshold(1.0) == doctest::Approx(0.85).epsilon(1e-12));
    CHECK(matching_threshold(0.75) == doctest::Approx(0.8875).epsilon(1e-12));
    CHECK(matching_threshold(0.5625) == doctest::Approx(0.915625).epsilon(1e-12));
    CHECK_THROWS_AS(matching_threshold(0.0), std::invalid_argument);
    CHECK_THROWS_AS(matching_threshold(-0.5), std::invalid_argument);
    CHECK_THROWS_AS(matching_threshold(1.5), std::invalid_argument);
}

TEST_CASE("hamming distance is exact") {
    auto a = bits(0);
    auto b = bits(10);
    CHECK(hamming_distance(a, b) == 10.0);
    CHECK(hamming_distance(b, b) == 0.0);
    CHECK(hamming_distance(bits(256), bits(0)) == 256.0);
}

TEST_CASE("ratio test keeps distinct matches only") {
    // Shelf descriptor at distance 10 and 30 from the two model descriptors.
    FeatureSet shelf = binary_set({bits(10)});
    FeatureSet model = binary_set({bits(0), bits(40)});

    auto kept = match_features(shelf, model, 0.85);
    REQUIRE(kept.size() == 1);
    CHECK(kept[0].shelf_index == 0);
    CHECK(kept[0].model_index == 0);
    CHECK(kept[0].distance == 10.0);
    CHECK(kept[0].ratio == doctest::Approx(1.0 / 3.0));

    // Distances 20 vs 21: ratio ~0.952 exceeds the threshold.
    FeatureSet shelf2 = binary_set({bits(20)});
    FeatureSet model2 = binary_set({bits(0), bits(41)});
    CHECK(match_features(shelf2, model2, 0.85).empty());
}

TEST_CASE("matching edge cases") {
    FeatureSet model = binary_set({bits(0), bits(40)});

    SUBCASE("empty shelf set") {
        FeatureSet shelf = binary_set({});
        CHECK(match_features(shelf, model, 0.85).empty());
    }

    SUBCASE("kind mismatch") {
        std::mt19937_64 rng(1);
        FeatureSet shelf = random_float_set(rng, 3);
        CHECK_THROWS_AS(match_features(shelf, model, 0.85), std::invalid_argument);
    }

    SUBCASE("single-descriptor model accepts exact matches only") {
        FeatureSet single = binary_set({bits(8)});
        FeatureSet hit = binary_set({bits(8)});
        FeatureSet miss = binary_set({bits(9)});
        CHECK(match_features(hit, single, 0.85).size() == 1);
        CHECK(match_features(miss, single, 0.85).empty());
    }

    SUBCASE("duplicate zero-distance model descriptors are rejected") {
        FeatureSet dup = binary_set({bits(8), bits(8)});
        FeatureSet shelf = binary_set({bits(8)});
        CHECK(match_features(shelf, dup, 0.85).empty());
    }

    SUBCASE("equidistant best candidates are rejected") {
        // 8 differing bits each way: best == second-best, ratio 1 can never
        // pass a threshold <= 1.
        FeatureSet model2 = binary_set({bits(16), bits(0)});
        FeatureSet shelf = binary_set({bits(8)});
        CHECK(match_features(shelf, model2, 0.999).empty());
    }
}

TEST_CASE("matcher agrees with the naive oracle") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        int M = test_util::rng_range(rng, 0, 50);
        int L = test_util::rng_range(rng, 0, 50);
        double tau = 0.5 + 0.4 * static_cast<double>(rng() % 1000) / 1000.0;

        if (trial % 2 == 0) {
            FeatureSet shelf = random_binary_set(rng, M);
            FeatureSet model = random_binary_set(rng, L);
            CHECK(same_matches(match_features(shelf, model, tau),
                               oracles::naive_match(shelf, model, tau)));
        } else {
            FeatureSet shelf = random_float_set(rng, M);
            FeatureSet model = random_float_set(rng, L);
            CHECK(same_matches(match_features(shelf, model, tau),
                               oracles::naive_match(shelf, model, tau)));
        }
    }
}

TEST_CASE("match sets are monotone in tau") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 30; ++trial) {
        FeatureSet shelf = random_binary_set(rng, 40);
        FeatureSet model = random_binary_set(rng, 30);
        auto small = match_features(shelf, model, 0.6);
        auto large = match_features(shelf, model, 0.9);
        CHECK(small.size() <= large.size());
        // Every low-threshold match appears identically at the high threshold.
        for (const FeatureMatch& s : small) {
            bool found = false;
            for (const FeatureMatch& l : large) {
                if (l.shelf_index == s.shelf_index && l.model_index == s.model_index) {
                    found = true;
                    break;
                }
            }
            CHECK(found);
        }
        // Each shelf index occurs at most once.
        std::set<int> seen;
        for (const FeatureMatch& l : large) CHECK(seen.insert(l.shelf_index).second);
    }
}
