#include <doctest.h>

#include <cmath>
#include <map>

#include "heatlab/cooling.hpp"
#include "heatlab/error.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

const LulcCodes kCodes = LulcCodes::impact_observatory();

// Park occupies the top three rows of the grid.
struct HalfPlane {
    GridSpec s = oracle::grid(30, 30);
    PixelMask park{s};
    GeoGrid outside;
    GeoGrid inside;

    HalfPlane() {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < s.width; ++c) park.set(c, r, true);
        }
        outside = euclidean_distance(park, DistanceSide::outside);
        inside = euclidean_distance(park, DistanceSide::inside);
    }
};

} // namespace

TEST_CASE("builtup_baseline") {
    HalfPlane h;
    const PixelMask built = ~h.park;
    BaselineSpec spec;
    spec.ring_inner = 100.0;
    spec.ring_outer = 300.0;
    spec.min_pixels = 1;

    SUBCASE("uniform ring") {
        const BaselineResult b = builtup_baseline(GeoGrid::filled(h.s, 25.0f), built, h.outside, spec);
        CHECK(b.celsius == 25.0);
        CHECK_FALSE(b.used_fallback);
    }
    SUBCASE("two-valued ring") {
        std::vector<float> v(h.s.size());
        for (int r = 0; r < h.s.height; ++r) {
            for (int c = 0; c < h.s.width; ++c) v[h.s.index(c, r)] = c % 2 ? 24.0f : 26.0f;
        }
        CHECK(builtup_baseline(GeoGrid(h.s, v), built, h.outside, spec).celsius == 25.0);
    }
    SUBCASE("random field matches a ring scan") {
        Rng rng(3);
        const GeoGrid lst = oracle::random_grid(rng, h.s, 20, 40, 0.1);
        double sum = 0;
        long n = 0;
        for (std::size_t i = 0; i < lst.size(); ++i) {
            if (h.park[i] || lst.is_nodata(i)) continue;
            const double d = h.outside[i];
            if (d >= 100.0 && d <= 300.0) sum += lst[i], ++n;
        }
        const BaselineResult b = builtup_baseline(lst, built, h.outside, spec);
        CHECK(b.pixels == n);
        CHECK(std::abs(b.celsius - sum / n) <= 1e-6);
    }
    SUBCASE("sparse ring falls back or fails as configured") {
        spec.min_pixels = 100000;
        const BaselineResult b = builtup_baseline(GeoGrid::filled(h.s, 25.0f), built, h.outside, spec);
        CHECK(b.used_fallback);
        spec.fallback = BaselineFallback::error;
        CHECK_THROWS_AS(builtup_baseline(GeoGrid::filled(h.s, 25.0f), built, h.outside, spec), Error);
    }
}

TEST_CASE("anomaly") {
    const GridSpec s = oracle::grid(3, 1);
    const GeoGrid lst(s, {22.0f, 25.0f, kDefaultNodata});
    const GeoGrid a = anomaly(lst, 25.0);
    CHECK(a[0] == -3.0f);
    CHECK(a[1] == 0.0f);
    CHECK(a.is_nodata(2));
    CHECK(anomaly(a, 0.0).identical(a));
}

TEST_CASE("cooling_profile") {
    HalfPlane h;
    const PixelMask domain = ~h.park;

    SUBCASE("uniform anomaly") {
        const CoolingProfile p =
            cooling_profile(GeoGrid::filled(h.s, -3.0f), h.outside, domain, 30.0, 300.0, ProfileSide::spillover);
        CHECK(p.bins() == 10);
        for (std::size_t k = 0; k < p.bins(); ++k) {
            if (!p.populated(k)) continue;
            CHECK(p.mean_dt[k] == -3.0);
            CHECK(p.std_dt[k] == 0.0);
        }
    }
    SUBCASE("linear ramp matches brute-force binning") {
        std::vector<float> v(h.s.size());
        for (std::size_t i = 0; i < v.size(); ++i) {
            v[i] = h.outside.is_nodata(i) ? 0.0f : static_cast<float>(-0.02 * h.outside[i]);
        }
        const GeoGrid dt(h.s, v);
        const CoolingProfile p = cooling_profile(dt, h.outside, domain, 45.0, 400.0, ProfileSide::spillover);
        std::map<int, std::pair<double, int>> bins;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!domain[i] || h.outside[i] >= 400.0) continue;
            auto& b = bins[static_cast<int>(h.outside[i] / 45.0)];
            b.first += dt[i];
            ++b.second;
        }
        for (std::size_t k = 0; k < p.bins(); ++k) {
            auto it = bins.find(static_cast<int>(k));
            if (it == bins.end()) {
                CHECK_FALSE(p.populated(k));
                continue;
            }
            CHECK(p.count[k] == it->second.second);
            CHECK(std::abs(p.mean_dt[k] - it->second.first / it->second.second) <= 1e-6);
        }
        CHECK(p.bin_edges.back() == 400.0);
    }
    SUBCASE("empty domain") {
        const CoolingProfile p =
            cooling_profile(GeoGrid::filled(h.s, 1.0f), h.outside, PixelMask(h.s), 30.0, 300.0, ProfileSide::spillover);
        CHECK(p.total_count() == 0);
        for (double m : p.mean_dt) CHECK(std::isnan(m));
    }
    SUBCASE("total count equals domain pixels below the cap") {
        Rng rng(90);
        const GeoGrid dt = oracle::random_grid(rng, h.s, -3, 3, 0.2);
        const CoolingProfile p = cooling_profile(dt, h.outside, domain, 30.0, 250.0, ProfileSide::spillover);
        std::int64_t n = 0;
        for (std::size_t i = 0; i < dt.size(); ++i) {
            if (domain[i] && dt.is_valid(i) && h.outside.is_valid(i) && h.outside[i] < 250.0) ++n;
        }
        CHECK(p.total_count() == n);
    }
}

TEST_CASE("aggregate_profiles") {
    HalfPlane h;
    const PixelMask domain = ~h.park;
    const CoolingProfile a =
        cooling_profile(GeoGrid::filled(h.s, -2.0f), h.outside, domain, 30.0, 300.0, ProfileSide::spillover);
    const CoolingProfile b =
        cooling_profile(GeoGrid::filled(h.s, -4.0f), h.outside, domain, 30.0, 300.0, ProfileSide::spillover);

    const std::vector<CoolingProfile> just_a{a};
    const CoolingProfile same = aggregate_profiles(just_a);
    CHECK(same.count == a.count);
    for (std::size_t k = 0; k < a.bins(); ++k) {
        if (a.populated(k)) CHECK(same.mean_dt[k] == a.mean_dt[k]);
    }

    const std::vector<CoolingProfile> both{a, b};
    const CoolingProfile mixed = aggregate_profiles(both);
    for (std::size_t k = 0; k < mixed.bins(); ++k) {
        if (mixed.populated(k)) CHECK(mixed.mean_dt[k] == -3.0);
    }

    SUBCASE("ten random profiles equal pooling the pixels") {
        Rng rng(44);
        std::vector<CoolingProfile> parts;
        std::map<int, std::vector<double>> pooled;
        for (int t = 0; t < 10; ++t) {
            const GeoGrid dt = oracle::random_grid(rng, h.s, -5, 1, 0.3);
            PixelMask dom = oracle::random_mask(rng, h.s, 0.5) & domain;
            parts.push_back(cooling_profile(dt, h.outside, dom, 30.0, 300.0, ProfileSide::spillover));
            for (std::size_t i = 0; i < dt.size(); ++i) {
                if (dom[i] && dt.is_valid(i) && h.outside[i] < 300.0) {
                    pooled[static_cast<int>(h.outside[i] / 30.0)].push_back(dt[i]);
                }
            }
        }
        const CoolingProfile agg = aggregate_profiles(parts);
        for (const auto& [k, vals] : pooled) {
            double m = 0;
            for (double x : vals) m += x;
            m /= static_cast<double>(vals.size());
            CHECK(agg.count[k] == static_cast<std::int64_t>(vals.size()));
            CHECK(std::abs(agg.mean_dt[k] - m) <= 1e-9);
            CHECK(std::abs(agg.std_dt[k] - oracle::population_std(vals)) <= 1e-9);
        }
    }
    SUBCASE("mismatched edges") {
        const CoolingProfile c =
            cooling_profile(GeoGrid::filled(h.s, -4.0f), h.outside, domain, 20.0, 300.0, ProfileSide::spillover);
        const std::vector<CoolingProfile> bad{a, c};
        CHECK_THROWS_AS(aggregate_profiles(bad), Error);
    }
}

TEST_CASE("urban_gradient") {
    Rng rng(61);
    const GridSpec s = oracle::grid(30, 30);
    const GeoGrid bf = oracle::random_grid(rng, s, 0.0, 1.0);

    SUBCASE("flat anomaly") {
        const UrbanGradient g =
            urban_gradient(GeoGrid::filled(s, 0.0f), bf, GradientAxis::built_fraction_decile);
        for (std::size_t k = 0; k < 10; ++k) {
            if (g.count[k]) CHECK(g.mean_anomaly[k] == 0.0);
        }
    }
    SUBCASE("decile means match a group-by") {
        const GeoGrid dt = oracle::random_grid(rng, s, -2, 4, 0.1);
        const UrbanGradient g = urban_gradient(dt, bf, GradientAxis::built_fraction_decile);
        std::vector<double> sum(10, 0.0);
        std::vector<long> n(10, 0);
        for (std::size_t i = 0; i < dt.size(); ++i) {
            if (dt.is_nodata(i)) continue;
            const int k = std::min(9, static_cast<int>(bf[i] * 10.0f));
            sum[k] += dt[i];
            ++n[k];
        }
        for (int k = 0; k < 10; ++k) {
            CHECK(g.count[k] == n[k]);
            if (n[k]) CHECK(std::abs(g.mean_anomaly[k] - sum[k] / n[k]) <= 1e-9);
        }
    }
    SUBCASE("radial bins cover every valid pixel") {
        const GeoGrid dt = oracle::random_grid(rng, s, -2, 4);
        const UrbanGradient g = urban_gradient(dt, bf, GradientAxis::radial_distance, 100.0);
        std::int64_t total = 0;
        for (auto c : g.count) total += c;
        CHECK(total == static_cast<std::int64_t>(s.size()));
    }
}

TEST_CASE("nearest-rank quantile") {
    const std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    CHECK(nearest_rank(v, 0.9) == 9);
    CHECK(nearest_rank(v, 0.91) == 10);
    CHECK(nearest_rank(v, 0.0) == 1);
    CHECK(nearest_rank(v, 1.0) == 10);
    CHECK_THROWS_AS(nearest_rank(std::vector<double>{}, 0.5), Error);
}

TEST_CASE("source_sink") {
    const GridSpec s = oracle::grid(10, 10);
    const int trees = kCodes.code(LulcClass::trees), built = kCodes.code(LulcClass::built);

    SUBCASE("coolest pixels are all trees") {
        std::vector<float> dt(s.size()), lulc(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            dt[i] = static_cast<float>(i);
            lulc[i] = static_cast<float>(i < 20 ? trees : built);
        }
        const SourceSinkTable t = source_sink(GeoGrid(s, dt), GeoGrid(s, lulc), {0.25, 0.75});
        REQUIRE(t.rows.size() == 2);
        const SourceSinkRow& tr = t.rows[0].code == trees ? t.rows[0] : t.rows[1];
        CHECK(tr.sink_fraction == 1.0);
        CHECK(tr.source_fraction == 0.0);
    }
    SUBCASE("uniform anomaly: everything neutral") {
        const SourceSinkTable t =
            source_sink(GeoGrid::filled(s, 1.0f), GeoGrid::filled(s, static_cast<float>(built)), {0.25, 0.75});
        REQUIRE(t.rows.size() == 1);
        CHECK(t.rows[0].neutral_fraction == 1.0);
        CHECK(t.low_threshold == 1.0);
        CHECK(t.high_threshold == 1.0);
    }
    SUBCASE("random field matches sort-and-count") {
        Rng rng(19);
        const GeoGrid dt = oracle::random_grid(rng, s, -3, 3, 0.1);
        std::vector<float> codes(s.size());
        for (auto& c : codes) c = static_cast<float>(1 + rng.below(4));
        const SourceSinkTable t = source_sink(dt, GeoGrid(s, codes), {0.2, 0.8});
        std::vector<double> vals;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (dt.is_valid(i)) vals.push_back(dt[i]);
        }
        const double lo = oracle::nearest_rank(vals, 0.2), hi = oracle::nearest_rank(vals, 0.8);
        CHECK(t.low_threshold == lo);
        CHECK(t.high_threshold == hi);
        std::map<int, std::array<long, 3>> tally;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (dt.is_nodata(i)) continue;
            auto& row = tally[static_cast<int>(codes[i])];
            row[dt[i] < lo ? 2 : (dt[i] > hi ? 0 : 1)]++;
        }
        REQUIRE(t.rows.size() == tally.size());
        for (const auto& row : t.rows) {
            const auto& ref = tally.at(row.code);
            const double n = static_cast<double>(ref[0] + ref[1] + ref[2]);
            CHECK(row.pixel_count == static_cast<std::int64_t>(n));
            CHECK(row.source_fraction == ref[0] / n);
            CHECK(row.neutral_fraction == ref[1] / n);
            CHECK(row.sink_fraction == ref[2] / n);
        }
    }
}

TEST_CASE("scene_cooling assigns spillover pixels to their nearest park") {
    const GridSpec s = oracle::grid(60, 20);
    std::vector<float> codes(s.size(), static_cast<float>(kCodes.code(LulcClass::built)));
    for (int r = 5; r < 15; ++r) {
        for (int c = 2; c < 12; ++c) codes[s.index(c, r)] = static_cast<float>(kCodes.code(LulcClass::trees));
        for (int c = 45; c < 55; ++c) codes[s.index(c, r)] = static_cast<float>(kCodes.code(LulcClass::trees));
    }
    const GeoGrid lulc(s, codes);
    ParkSet parks = extract_parks(lulc, {kCodes.code(LulcClass::trees)}, 10000.0);
    REQUIRE(parks.count() == 2);
    const CoolingGeometry geo = cooling_geometry(parks, built_mask(lulc, {kCodes.code(LulcClass::built)}));
    for (int r = 0; r < s.height; ++r) {
        CHECK(geo.owner[s.index(20, r)] == 1);
        CHECK(geo.owner[s.index(40, r)] == 2);
    }
    BaselineSpec b;
    b.ring_inner = 60.0;
    b.ring_outer = 200.0;
    b.min_pixels = 5;
    const SceneCooling sc = scene_cooling(GeoGrid::filled(s, 30.0f), geo, b, ProfileConfig{});
    REQUIRE(sc.parks.size() == 2);
    for (const auto& p : sc.parks) CHECK(p.baseline.celsius == 30.0);
    for (std::size_t k = 0; k < sc.spillover.bins(); ++k) {
        if (sc.spillover.populated(k)) CHECK(sc.spillover.mean_dt[k] == 0.0);
    }
}
