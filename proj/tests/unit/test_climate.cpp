#include <doctest.h>

#include <cmath>

#include "heatlab/climate.hpp"
#include "heatlab/error.hpp"
#include "heatlab/landcover.hpp"
#include "heatlab/synthetic.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

ClimateScenario uniform(double delta, double rcp = 4.5, int year = 2050) {
    ClimateScenario s;
    s.rcp = rcp;
    s.horizon_year = year;
    s.monthly_delta.fill(delta);
    s.source_label = "test";
    return s;
}

SceneStack july_stack(const GridSpec& s, GeoGrid air) {
    SceneStack st("j", parse_iso8601("2020-07-10T10:00:00Z"), 0.0, s);
    st.add_channel("red", GeoGrid::filled(s, 0.1f));
    st.add_channel("airtemp", std::move(air));
    return st;
}

LinearLstModel demo_model() {
    LinearLstModel m;
    m.w0 = 4.0;
    m.w_airtemp = 0.9;
    m.w_ndvi = -6.0;
    m.w_ndbi = 8.0;
    m.w_albedo = 5.0;
    return m;
}

} // namespace

TEST_CASE("apply_forcing") {
    const GridSpec s = oracle::grid(6, 4);
    SUBCASE("zero delta is the identity") {
        const SceneStack st = july_stack(s, GeoGrid::filled(s, 20.0f));
        const SceneStack out = apply_forcing(st, uniform(0.0));
        CHECK(out.channel("airtemp").identical(st.channel("airtemp")));
    }
    SUBCASE("month lookup") {
        ClimateScenario sc = uniform(0.0);
        sc.monthly_delta[6] = 3.1;
        const SceneStack out = apply_forcing(july_stack(s, GeoGrid::filled(s, 20.0f)), sc);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(out.channel("airtemp")[i] == static_cast<float>(20.0 + 3.1));
        CHECK(out.provenance().size() == 1);
    }
    SUBCASE("gridded air matches scalar addition and other channels stay bit-equal") {
        Rng rng(1);
        const GeoGrid air = oracle::random_grid(rng, s, 10, 30, 0.1);
        const SceneStack st = july_stack(s, air);
        const SceneStack out = apply_forcing(st, uniform(1.7));
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (air.is_nodata(i)) {
                CHECK(out.channel("airtemp").is_nodata(i));
            } else {
                CHECK(out.channel("airtemp")[i] == static_cast<float>(static_cast<double>(air[i]) + 1.7));
            }
        }
        CHECK(out.channel("red").identical(st.channel("red")));
    }
}

TEST_CASE("uhi_extent") {
    const GridSpec s = oracle::grid(10, 10);
    const PixelMask urban(s, true);
    CHECK(uhi_extent(GeoGrid::filled(s, 0.0f), urban, 2.0).exceed_fraction == 0.0);

    std::vector<float> half(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) half[i] = i % 2 ? 3.0f : 0.0f;
    const UhiExtentReport r = uhi_extent(GeoGrid(s, half), urban, 2.0);
    CHECK(r.exceed_fraction == 0.5);
    CHECK(r.exceed_area_km2 == doctest::Approx(50 * 900.0 / 1e6));
    CHECK(r.mean_urban_anomaly == doctest::Approx(1.5));

    SUBCASE("random field against a count") {
        Rng rng(7);
        const GeoGrid dt = oracle::random_grid(rng, s, -1, 5, 0.1);
        const PixelMask m = oracle::random_mask(rng, s, 0.6);
        long n = 0, hit = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (!m[i] || dt.is_nodata(i)) continue;
            ++n;
            hit += dt[i] > 2.0f ? 1 : 0;
        }
        const UhiExtentReport rr = uhi_extent(dt, m, 2.0);
        CHECK(rr.urban_pixels == n);
        CHECK(rr.exceed_fraction == static_cast<double>(hit) / n);
        CHECK(rr.exceed_fraction >= 0.0);
        CHECK(rr.exceed_fraction <= 1.0);
    }
    CHECK_THROWS_AS(uhi_extent(GeoGrid::filled(s, 0.0f), PixelMask(s), 2.0), Error);
}

TEST_CASE("forecast on a synthetic city") {
    const SyntheticCity city(SyntheticWorldSpec::defaults(96));
    const GridSpec& g = city.grid();
    const LulcCodes codes = LulcCodes::impact_observatory();
    const PixelMask built = built_mask(city.lulc(), {codes.code(LulcClass::built)});
    const GeoGrid bf = built_fraction(built, 11);
    const PixelMask rural = rural_mask(bf, city.lulc(), city.park_mask(), codes);
    REQUIRE(rural.any());

    ForecastInputs in;
    in.scene_count = 6;
    in.scene = [&](std::size_t k) { return city.scene(k).stack; };
    in.urban = built;
    in.rural = rural;
    in.threshold = 2.0;

    const LinearPredictor p(demo_model());

    SUBCASE("zero delta reproduces the present-day anomaly") {
        const ForecastResult r = forecast(in, uniform(0.0), p, 2);
        for (const auto& row : r.scenes) CHECK(row.mean_prediction == doctest::Approx(row.key));
        // with no forcing the anomaly is prediction minus its own rural mean
        const SceneStack st = city.scene(0).stack;
        const std::vector<double> v = p.predict_values(st);
        CHECK(r.scenes[0].reference == doctest::Approx(masked_mean(v, rural)).epsilon(1e-12));
        CHECK(r.out_of_validated_range);  // no extrapolation report recorded
    }
    SUBCASE("uniform delta shifts every prediction by w_airtemp times delta") {
        const SceneStack st = city.scene(2).stack;
        const std::vector<double> before = p.predict_values(st);
        for (double c : {1.0, 2.5}) {
            const std::vector<double> after = p.predict_values(apply_forcing(st, uniform(c)));
            for (std::size_t i = 0; i < before.size(); ++i) {
                if (std::isnan(before[i])) continue;
                REQUIRE(std::abs((after[i] - before[i]) - 0.9 * c) <= 1e-6);
            }
        }
    }
    SUBCASE("exceed fraction is nondecreasing in the delta") {
        double last = -1.0;
        for (double c : {0.0, 1.0, 2.0, 4.0}) {
            const ForecastResult r = forecast(in, uniform(c), p, 1);
            CHECK(r.extent.exceed_fraction >= last);
            last = r.extent.exceed_fraction;
        }
    }
    SUBCASE("result does not depend on the thread count") {
        const ForecastResult a = forecast(in, uniform(1.0), p, 1);
        const ForecastResult b = forecast(in, uniform(1.0), p, 4);
        CHECK(a.anomaly.identical(b.anomaly));
    }
    SUBCASE("the guard trips beyond the validated margin") {
        ExtrapolationReport rep;
        rep.train_max_key = 0.0;
        rep.margin = 1e6;
        in.extrapolation = rep;
        CHECK_FALSE(forecast(in, uniform(1.0), p, 1).out_of_validated_range);
        rep.margin = -1e6;
        in.extrapolation = rep;
        CHECK(forecast(in, uniform(1.0), p, 1).out_of_validated_range);
    }
}

TEST_CASE("scenario keys and validation") {
    CHECK(uniform(1.0, 2.6, 2030).key() == "rcp2.6-2030");
    ClimateScenario bad = uniform(1.0);
    bad.monthly_delta[0] = std::nan("");
    CHECK_THROWS_AS(bad.validate(), Error);
    CHECK(to_json(scenario_from_json(to_json(uniform(0.5)))) == to_json(uniform(0.5)));
}
