#include <doctest.h>

#include <cmath>

#include "heatlab/error.hpp"
#include "heatlab/landcover.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

const LulcCodes kCodes = LulcCodes::impact_observatory();
const int kTrees = kCodes.code(LulcClass::trees);
const int kBuilt = kCodes.code(LulcClass::built);

GeoGrid lulc_from(const GridSpec& s, const PixelMask& trees) {
    std::vector<float> v(s.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(trees[i] ? kTrees : kBuilt);
    return GeoGrid(s, std::move(v));
}

std::vector<int> labels_of(const ParkSet& p) {
    std::vector<int> out(p.labels.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p.label_at(i);
    return out;
}

} // namespace

TEST_CASE("land-cover legend") {
    CHECK(kCodes.classify(kTrees) == LulcClass::trees);
    CHECK_FALSE(kCodes.classify(999).has_value());
    CHECK(parse_lulc_name("built") == LulcClass::built);
    CHECK_FALSE(parse_lulc_name("forest").has_value());
    LulcCodes dup = kCodes;
    dup.codes[0] = dup.codes[1];
    CHECK_THROWS_AS(dup.validate(), Error);
}

TEST_CASE("extract_parks") {
    SUBCASE("single 4x4 block is one hectare-plus park") {
        const GridSpec s = oracle::grid(10, 10);
        PixelMask m(s);
        for (int r = 2; r < 6; ++r) {
            for (int c = 3; c < 7; ++c) m.set(c, r, true);
        }
        const ParkSet p = extract_parks(lulc_from(s, m), {kTrees}, 10000.0);
        REQUIRE(p.count() == 1);
        CHECK(p.park_areas[0] == 14400.0);
        CHECK(p.park_mask() == m);
    }
    SUBCASE("diagonal contact joins components") {
        const GridSpec s = oracle::grid(4, 4);
        PixelMask m(s);
        m.set(0, 0, true);
        m.set(1, 1, true);
        const ParkSet p = extract_parks(lulc_from(s, m), {kTrees}, 0.0);
        CHECK(p.count() == 1);
    }
    SUBCASE("area floor drops small components but keeps them in the source mask") {
        const GridSpec s = oracle::grid(10, 10);
        PixelMask m(s);
        m.set(0, 0, true);
        const ParkSet p = extract_parks(lulc_from(s, m), {kTrees}, 10000.0);
        CHECK(p.count() == 0);
        CHECK(p.source_mask.count() == 1);
    }
    SUBCASE("random blobs match an independent flood fill") {
        Rng rng(31);
        for (int trial = 0; trial < 50; ++trial) {
            const GridSpec s = oracle::grid(24, 24);
            const PixelMask m = oracle::random_mask(rng, s, 0.35);
            const ParkSet p = extract_parks(lulc_from(s, m), {kTrees}, 0.0);
            const std::vector<int> ref = oracle::flood_fill(m);
            REQUIRE(oracle::same_partition(labels_of(p), ref));
            // labels follow row-major first-pixel order, which is also flood-fill discovery order
            REQUIRE(labels_of(p) == ref);
        }
    }
}

TEST_CASE("exact distance transform") {
    SUBCASE("single park pixel") {
        const GridSpec s = oracle::grid(3, 3);
        PixelMask m(s);
        m.set(1, 1, true);
        const auto d = euclidean_distance_values(m, DistanceSide::outside);
        CHECK(d[s.index(1, 0)] == 30.0);
        CHECK(d[s.index(0, 1)] == 30.0);
        CHECK(d[s.index(0, 0)] == doctest::Approx(30.0 * std::sqrt(2.0)).epsilon(1e-15));
        CHECK(std::isnan(d[s.index(1, 1)]));
    }
    SUBCASE("half-plane grows by one pixel per row") {
        const GridSpec s = oracle::grid(8, 8);
        PixelMask m(s);
        for (int c = 0; c < 8; ++c) {
            for (int r = 0; r < 3; ++r) m.set(c, r, true);
        }
        const GeoGrid d = euclidean_distance(m, DistanceSide::outside);
        for (int r = 3; r < 8; ++r) {
            for (int c = 0; c < 8; ++c) CHECK(d.at(c, r) == static_cast<float>(30.0 * (r - 2)));
        }
        CHECK(d.is_nodata(s.index(0, 0)));
    }
    SUBCASE("random masks match all-pairs brute force") {
        Rng rng(101);
        for (int trial = 0; trial < 30; ++trial) {
            const GridSpec s = oracle::grid(17 + static_cast<int>(rng.below(10)), 13 + static_cast<int>(rng.below(10)));
            PixelMask m = oracle::random_mask(rng, s, rng.uniform(0.02, 0.9));
            m.set(0, 0, true);
            m.set(s.width - 1, s.height - 1, false);
            for (bool inside : {true, false}) {
                const auto got = euclidean_distance_values(m, inside ? DistanceSide::inside : DistanceSide::outside);
                const auto ref = oracle::brute_distance(m, inside);
                for (std::size_t i = 0; i < got.size(); ++i) {
                    if (std::isnan(ref[i])) {
                        REQUIRE(std::isnan(got[i]));
                    } else {
                        REQUIRE(std::abs(got[i] - ref[i]) <= 1e-9);
                    }
                }
            }
        }
    }
    SUBCASE("degenerate masks") {
        const GridSpec s = oracle::grid(4, 4);
        CHECK_THROWS_AS(euclidean_distance_values(PixelMask(s, true), DistanceSide::outside), Error);
        CHECK_THROWS_AS(euclidean_distance_values(PixelMask(s, false), DistanceSide::inside), Error);
    }
    SUBCASE("distance fields are 1-Lipschitz") {
        Rng rng(55);
        const GridSpec s = oracle::grid(40, 40);
        const PixelMask m = oracle::random_mask(rng, s, 0.05);
        const auto d = euclidean_distance_values(m, DistanceSide::outside);
        const double bound = s.pixel_size * std::sqrt(2.0) + 1e-9;
        for (int r = 0; r < s.height; ++r) {
            for (int c = 0; c + 1 < s.width; ++c) {
                const double a = d[s.index(c, r)], b = d[s.index(c + 1, r)];
                if (!std::isnan(a) && !std::isnan(b)) CHECK(std::abs(a - b) <= bound);
            }
        }
    }
}

TEST_CASE("nearest feature indices point at a closest feature") {
    Rng rng(77);
    const GridSpec s = oracle::grid(20, 15);
    const PixelMask m = oracle::random_mask(rng, s, 0.1);
    const NearestFeature nf = nearest_feature_transform(m);
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c) {
            const std::size_t i = s.index(c, r);
            const auto j = static_cast<std::size_t>(nf.nearest[i]);
            REQUIRE(m[j]);
            const int jc = static_cast<int>(j % static_cast<std::size_t>(s.width));
            const int jr = static_cast<int>(j / static_cast<std::size_t>(s.width));
            CHECK(nf.sq_dist[i] == (c - jc) * (c - jc) + (r - jr) * (r - jr));
        }
    }
}

TEST_CASE("built mask and built fraction") {
    const GridSpec s = oracle::grid(6, 5);
    CHECK(built_mask(GeoGrid::filled(s, static_cast<float>(kBuilt)), {kBuilt}).count() == s.size());
    CHECK(built_mask(GeoGrid::filled(s, static_cast<float>(kTrees)), {kBuilt}).count() == 0);

    Rng rng(12);
    std::vector<float> codes(s.size());
    for (auto& c : codes) c = static_cast<float>(1 + rng.below(8));
    const GeoGrid mixed(s, codes);
    const PixelMask bm = built_mask(mixed, {kBuilt, 2});
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(bm[i] == (codes[i] == kBuilt || codes[i] == 2));

    const GeoGrid bf = built_fraction(bm, 3);
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c) {
            int n = 0, hit = 0;
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    if (!s.contains(c + dx, r + dy)) continue;
                    ++n;
                    hit += bm.at(c + dx, r + dy) ? 1 : 0;
                }
            }
            CHECK(bf.at(c, r) == doctest::Approx(static_cast<double>(hit) / n).epsilon(1e-6));
        }
    }
}
