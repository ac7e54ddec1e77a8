#include <doctest.h>

#include <cmath>

#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/predictor.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

const std::array<std::string, 6> kRefl{"blue", "green", "red", "nir", "swir1", "swir2"};

SceneStack random_stack(Rng& rng, const GridSpec& s, const std::string& id, double air_lo, double air_hi) {
    SceneStack st(id, parse_iso8601("2020-07-01T10:00:00Z"), 0.0, s);
    for (const auto& b : kRefl) st.add_channel(b, oracle::random_grid(rng, s, 0.02, 0.6));
    st.add_channel("tirs1", oracle::random_grid(rng, s, 20, 40));
    st.add_channel("tirs2", st.channel("tirs1"));
    st.add_channel("airtemp", oracle::random_grid(rng, s, air_lo, air_hi));
    return st;
}

struct Features {
    double air, ndvi, ndbi, albedo;
};

Features features_at(const SceneStack& st, std::size_t i, const AlbedoWeights& w) {
    auto v = [&](const char* b) { return static_cast<double>(st.channel(b)[i]); };
    Features f;
    f.air = v("airtemp");
    f.ndvi = (v("nir") - v("red")) / (v("nir") + v("red"));
    f.ndbi = (v("swir1") - v("nir")) / (v("swir1") + v("nir"));
    f.albedo = w.intercept + w.blue * v("blue") + w.green * v("green") + w.red * v("red") + w.nir * v("nir") +
               w.swir1 * v("swir1") + w.swir2 * v("swir2");
    return f;
}

double model_at(const LinearLstModel& m, const Features& f) {
    return m.w0 + m.w_airtemp * f.air + m.w_ndvi * f.ndvi + m.w_ndbi * f.ndbi + m.w_albedo * f.albedo;
}

} // namespace

TEST_CASE("fit_baseline recovers planted weights") {
    Rng rng(13);
    const GridSpec s = oracle::grid(40, 40);
    LinearLstModel planted;
    planted.w0 = 2.0;
    planted.w_airtemp = 0.9;
    planted.w_ndvi = -4.0;
    planted.w_ndbi = 2.5;
    planted.w_albedo = -3.0;
    std::vector<TrainingPair> train;
    for (int k = 0; k < 3; ++k) {
        SceneStack st = random_stack(rng, s, "s" + std::to_string(k), 15, 30);
        std::vector<double> t(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) t[i] = model_at(planted, features_at(st, i, planted.albedo));
        // keep the truth exactly representable so the fit is noise-free
        std::vector<float> tf(t.begin(), t.end());
        train.push_back({st, GeoGrid(s, tf)});
    }
    // Refit against float truth: the planted weights reproduce it to float precision only.
    const LinearLstModel m = fit_baseline(train, planted.albedo);
    CHECK(std::abs(m.w0 - planted.w0) <= 1e-4);
    CHECK(std::abs(m.w_airtemp - planted.w_airtemp) <= 1e-6);
    CHECK(std::abs(m.w_ndvi - planted.w_ndvi) <= 1e-5);
    CHECK(std::abs(m.w_ndbi - planted.w_ndbi) <= 1e-5);
    CHECK(std::abs(m.w_albedo - planted.w_albedo) <= 1e-4);
    CHECK(m.training_pixels == 3 * static_cast<std::int64_t>(s.size()));

    SUBCASE("duplicated training set gives the same model") {
        std::vector<TrainingPair> twice = train;
        twice.insert(twice.end(), train.begin(), train.end());
        const LinearLstModel d = fit_baseline(twice, planted.albedo);
        CHECK(d.w_airtemp == doctest::Approx(m.w_airtemp).epsilon(1e-12));
        CHECK(d.w_ndvi == doctest::Approx(m.w_ndvi).epsilon(1e-12));
        CHECK(d.w0 == doctest::Approx(m.w0).epsilon(1e-12));
    }
    SUBCASE("streaming form matches and is independent of the thread count") {
        auto load = [&](std::size_t k) { return train[k]; };
        const LinearLstModel a = fit_baseline(train.size(), load, planted.albedo, 1);
        const LinearLstModel b = fit_baseline(train.size(), load, planted.albedo, 3);
        CHECK(to_json(a) == to_json(b));
        CHECK(to_json(a) == to_json(m));
    }
}

TEST_CASE("fit_baseline degenerate inputs") {
    const GridSpec s = oracle::grid(10, 10);
    SceneStack st("c", parse_iso8601("2020-07-01T10:00:00Z"), 0.0, s);
    for (const auto& b : kRefl) st.add_channel(b, GeoGrid::filled(s, 0.2f));
    st.add_channel("tirs1", GeoGrid::filled(s, 30.0f));
    st.add_channel("tirs2", GeoGrid::filled(s, 30.0f));
    st.add_channel("airtemp", GeoGrid::filled(s, 22.0f));

    SUBCASE("constant truth with constant features") {
        const std::vector<TrainingPair> train{{st, GeoGrid::filled(s, 27.0f)}};
        const LinearLstModel m = fit_baseline(train, AlbedoWeights{});
        CHECK(m.w0 == doctest::Approx(27.0));
        CHECK(m.w_airtemp == 0.0);
        CHECK(m.w_ndvi == 0.0);
        CHECK(m.w_ndbi == 0.0);
        CHECK(m.w_albedo == 0.0);
    }
    SUBCASE("collinear features") {
        // swir1 == red makes ndbi exactly -ndvi
        Rng rng(4);
        SceneStack c("c", st.timestamp(), 0.0, s);
        const GeoGrid red = oracle::random_grid(rng, s, 0.05, 0.3);
        for (const auto& b : kRefl) {
            if (b == "red" || b == "swir1") c.add_channel(b, red);
            else c.add_channel(b, oracle::random_grid(rng, s, 0.05, 0.5));
        }
        c.add_channel("tirs1", GeoGrid::filled(s, 30.0f));
        c.add_channel("tirs2", GeoGrid::filled(s, 30.0f));
        c.add_channel("airtemp", oracle::random_grid(rng, s, 15, 25));
        const std::vector<TrainingPair> train{{c, oracle::random_grid(rng, s, 20, 30)}};
        try {
            fit_baseline(train, AlbedoWeights{});
            FAIL("expected rank_deficient");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::rank_deficient);
        }
    }
    SUBCASE("too few pixels") {
        const GridSpec tiny = oracle::grid(2, 2);
        SceneStack t("t", st.timestamp(), 0.0, tiny);
        Rng rng(1);
        for (const auto& b : kRefl) t.add_channel(b, oracle::random_grid(rng, tiny, 0.05, 0.3));
        t.add_channel("tirs1", GeoGrid::filled(tiny, 30.0f));
        t.add_channel("tirs2", GeoGrid::filled(tiny, 30.0f));
        t.add_channel("airtemp", oracle::random_grid(rng, tiny, 15, 25));
        const std::vector<TrainingPair> train{{t, oracle::random_grid(rng, tiny, 20, 30)}};
        CHECK_THROWS_AS(fit_baseline(train, AlbedoWeights{}), Error);
    }
}

TEST_CASE("predict_baseline") {
    Rng rng(23);
    const GridSpec s = oracle::grid(30, 30);
    const SceneStack st = random_stack(rng, s, "p", 15, 30);

    SUBCASE("constant model") {
        LinearLstModel m;
        m.w0 = 20.0;
        const GeoGrid g = predict_baseline(m, st);
        for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 20.0f);
    }
    SUBCASE("air-temperature identity") {
        LinearLstModel m;
        m.w_airtemp = 1.0;
        CHECK(predict_baseline(m, st).identical(st.channel("airtemp")));
    }
    SUBCASE("random model against scalar evaluation") {
        LinearLstModel m;
        m.w0 = rng.uniform(-5, 5);
        m.w_airtemp = rng.uniform(0, 2);
        m.w_ndvi = rng.uniform(-5, 5);
        m.w_ndbi = rng.uniform(-5, 5);
        m.w_albedo = rng.uniform(-5, 5);
        const std::vector<double> v = predict_baseline_values(m, st);
        for (int k = 0; k < 1000; ++k) {
            const auto i = static_cast<std::size_t>(rng.below(s.size()));
            CHECK(std::abs(v[i] - model_at(m, features_at(st, i, m.albedo))) <= 1e-5);
        }
    }
    SUBCASE("nodata in a used channel") {
        std::vector<float> red(st.channel("red").values().begin(), st.channel("red").values().end());
        red[0] = kDefaultNodata;
        const SceneStack holed = st.with_channel("red", GeoGrid(s, red), "hole");
        LinearLstModel m;
        m.w_ndvi = 1.0;
        CHECK(std::isnan(predict_baseline_values(m, holed)[0]));
        CHECK(predict_baseline(m, holed).is_nodata(0));
    }
    SUBCASE("model JSON round-trip") {
        LinearLstModel m;
        m.w0 = 1.25;
        m.w_ndbi = -0.5;
        m.training_pixels = 99;
        const LinearLstModel back = model_from_json(to_json(m));
        CHECK(to_json(back) == to_json(m));
    }
}

TEST_CASE("ExternalPredictions") {
    oracle::TempDir dir("ext");
    Rng rng(3);
    const GridSpec s = oracle::grid(8, 8);
    const GeoGrid a = oracle::random_grid(rng, s, 20, 30);
    const GeoGrid b = oracle::random_grid(rng, s, 20, 30);
    write_grid(dir / "s1.grid", a);
    write_grid(dir / "s2.grid", b);
    const ExternalPredictions p("gfm", s, {{"s1", dir / "s1.grid"}, {"s2", dir / "s2.grid"}});
    CHECK(p.scene_ids() == std::vector<std::string>{"s1", "s2"});
    CHECK_FALSE(p.accepts_modified_stacks());

    SceneStack st("s2", parse_iso8601("2020-07-01T10:00:00Z"), 0.0, s);
    CHECK(p.predict(st).identical(b));

    SceneStack missing("s9", st.timestamp(), 0.0, s);
    try {
        p.predict(missing);
        FAIL("expected scene_not_found");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::scene_not_found);
    }

    st.add_provenance("edited");
    try {
        p.predict(st);
        FAIL("expected predictor_unavailable");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::predictor_unavailable);
    }
}
