#include <doctest.h>

#include "heatlab/config.hpp"
#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/timeutil.hpp"
#include "heatlab/workspace.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace heatlab;

TEST_CASE("ISO-8601 timestamps") {
    const Timestamp t = parse_iso8601("2020-07-15T10:30:00Z");
    CHECK(format_iso8601(t) == "2020-07-15T10:30:00Z");
    CHECK(parse_iso8601("2020-07-15T10:30:00+00:00") == t);
    CHECK(parse_iso8601("2020-07-15T10:30:00") == t);
    CHECK_THROWS_AS(parse_iso8601("2020-13-15T10:30:00Z"), Error);
    CHECK_THROWS_AS(parse_iso8601("yesterday"), Error);

    const LocalTime local = to_local(t, 2.0);
    CHECK(local.month == 7);
    CHECK(local.hour == doctest::Approx(12.5));
    const LocalTime wrap = to_local(parse_iso8601("2020-08-31T23:00:00Z"), 3.0);
    CHECK(wrap.month == 9);
    CHECK(wrap.day == 1);
}

TEST_CASE("config JSON round-trip and strictness") {
    WorkspaceConfig c;
    c.min_park_area = 5000.0;
    c.split.q = 0.8;
    ClimateScenario s;
    s.rcp = 8.5;
    s.horizon_year = 2100;
    s.monthly_delta.fill(3.1);
    s.source_label = "test";
    c.forecast.scenarios.push_back(s);
    const Json j = to_json(c);
    const WorkspaceConfig back = config_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(back.forecast.scenarios.at(0).key() == "rcp8.5-2100");

    Json bad = j;
    bad["no_such_key"] = 1;
    CHECK_THROWS_AS(config_from_json(bad), Error);

    Json partial = Json::object();
    partial["split"]["q"] = 0.95;
    CHECK(config_from_json(partial).split.q == 0.95);
    CHECK(config_from_json(partial).split.seed == WorkspaceConfig{}.split.seed);
}

TEST_CASE("merge_json overlays objects recursively") {
    const Json base = Json::parse(R"({"a":{"b":1,"c":2},"d":[1,2]})");
    const Json over = Json::parse(R"({"a":{"c":5},"d":[9]})");
    const Json m = merge_json(base, over);
    CHECK(m["a"]["b"] == 1);
    CHECK(m["a"]["c"] == 5);
    CHECK(m["d"] == Json::parse("[9]"));
}

TEST_CASE("catalog_scenes") {
    oracle::TempDir dir("ws");
    const GridSpec s = oracle::grid(4, 3);
    const WorkspaceConfig cfg;
    fixture::write_workspace(dir.path(), s, cfg);

    SUBCASE("empty scene directory") {
        const Workspace ws = catalog_scenes(dir.path());
        CHECK(ws.scenes.empty());
        CHECK(ws.city_id == "tiny");
        CHECK(ws.grid == s);
    }
    SUBCASE("one complete scene") {
        fixture::write_scene(dir.path(), s, cfg, "s1", "2020-07-01T10:00:00Z", 0.1, 21.5);
        const Workspace ws = catalog_scenes(dir.path());
        REQUIRE(ws.scenes.size() == 1);
        CHECK(ws.scenes[0].band_paths.size() == 8);
        CHECK(std::get<double>(ws.scenes[0].air_temp) == 21.5);

        const SceneStack stack = build_stack(ws.scenes[0], ws);
        const std::vector<std::string> order{"blue", "green", "red",   "nir",   "swir1",
                                             "swir2", "tirs1", "tirs2", "airtemp"};
        CHECK(stack.names() == order);
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(stack.channel("airtemp")[i] == 21.5f);
        CHECK(stack.provenance().empty());
    }
    SUBCASE("missing red band") {
        fixture::write_scene(dir.path(), s, cfg, "s1", "2020-07-01T10:00:00Z", 0.1, 21.5);
        std::filesystem::remove(dir.path() / "scenes" / "s1" / "B04.grid");
        try {
            catalog_scenes(dir.path());
            FAIL("expected missing_band");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::missing_band);
            CHECK(std::string(e.what()).find("red") != std::string::npos);
        }
        const Workspace lenient = catalog_scenes(dir.path(), CatalogMode::lenient);
        CHECK(lenient.scenes.empty());
        CHECK(lenient.issues.size() == 1);
    }
    SUBCASE("gridded air temperature is passed through unchanged") {
        fixture::write_scene(dir.path(), s, cfg, "s1", "2020-07-01T10:00:00Z", 0.1, 0.0);
        Rng rng(4);
        const GeoGrid air = oracle::random_grid(rng, s, 15, 30);
        write_grid(dir.path() / "scenes" / "s1" / "airtemp.grid", air);
        write_scene_file(dir.path() / "scenes" / "s1", parse_iso8601("2020-07-01T10:00:00Z"), 0.1,
                         dir.path() / "scenes" / "s1" / "airtemp.grid");
        const Workspace ws = catalog_scenes(dir.path());
        CHECK(build_stack(ws.scenes.at(0), ws).channel("airtemp").identical(air));
    }
    SUBCASE("misaligned band") {
        fixture::write_scene(dir.path(), s, cfg, "s1", "2020-07-01T10:00:00Z", 0.1, 21.5);
        write_grid(dir.path() / "scenes" / "s1" / "B05.grid", GeoGrid::filled(oracle::grid(5, 3), 0.3f));
        try {
            catalog_scenes(dir.path());
            FAIL("expected misaligned");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::misaligned);
        }
    }
    SUBCASE("config override") {
        const Workspace ws = catalog_scenes(dir.path(), CatalogMode::strict, Json::parse(R"({"split":{"q":0.5}})"));
        CHECK(ws.config.split.q == 0.5);
        CHECK(ws.config_json["split"]["q"] == 0.5);
    }
    SUBCASE("GeoTIFF bands are converted") {
        fixture::write_scene(dir.path(), s, cfg, "s1", "2020-07-01T10:00:00Z", 0.1, 21.5);
        const auto b = dir.path() / "scenes" / "s1" / "B02.grid";
        const GeoGrid blue = read_grid(b);
        std::filesystem::remove(b);
        std::filesystem::remove(sidecar_path(b));
        export_geotiff(dir.path() / "scenes" / "s1" / "B02.tif", blue);
        const auto converted = convert_geotiffs(dir.path());
        REQUIRE(converted.size() == 1);
        CHECK(read_grid(b).identical(blue));
        CHECK(convert_geotiffs(dir.path()).empty());
    }
}

TEST_CASE("scene filter") {
    const SceneFilter f;
    auto rec = [](const std::string& ts, double cloud) {
        SceneRecord r;
        r.scene_id = ts;
        r.timestamp = parse_iso8601(ts);
        r.cloud_fraction = cloud;
        return r;
    };
    CHECK_FALSE(scene_passes(rec("2020-01-15T10:00:00Z", 0.0), f, 0.0));
    CHECK(scene_passes(rec("2020-07-15T10:00:00Z", 0.29), f, 0.0));
    CHECK(scene_passes(rec("2020-07-15T10:00:00Z", 0.3), f, 0.0));
    CHECK_FALSE(scene_passes(rec("2020-07-15T10:00:00Z", 0.31), f, 0.0));
    CHECK_FALSE(scene_passes(rec("2020-07-15T16:00:00Z", 0.0), f, 0.0));
    CHECK(scene_passes(rec("2020-07-15T15:59:00Z", 0.0), f, 0.0));
    CHECK_FALSE(scene_passes(rec("2020-07-15T08:00:00Z", 0.0), f, 0.0));
    CHECK(scene_passes(rec("2020-07-15T08:00:00Z", 0.0), f, 2.0));

    SUBCASE("mixed catalog matches a predicate scan; stable and idempotent") {
        Rng rng(17);
        std::vector<SceneRecord> all;
        for (int k = 0; k < 20; ++k) {
            const int month = 1 + static_cast<int>(rng.below(12));
            const int hour = static_cast<int>(rng.below(24));
            char buf[32];
            std::snprintf(buf, sizeof buf, "2019-%02d-10T%02d:15:00Z", month, hour);
            all.push_back(rec(buf, rng.uniform(0.0, 0.6)));
        }
        const auto kept = filter_scenes(all, f, 0.0);
        std::vector<std::string> expected;
        for (const auto& r : all) {
            const int month = std::stoi(r.scene_id.substr(5, 2));
            const double hour = std::stoi(r.scene_id.substr(11, 2)) + 0.25;
            if ((month >= 6 && month <= 8) && hour >= 9.0 && hour < 16.0 && r.cloud_fraction <= 0.3) {
                expected.push_back(r.scene_id);
            }
        }
        std::vector<std::string> got;
        for (const auto& r : kept) got.push_back(r.scene_id);
        CHECK(got == expected);
        CHECK(filter_scenes(kept, f, 0.0).size() == kept.size());
    }
}

TEST_CASE("scene stack") {
    const GridSpec s = oracle::grid(2, 2);
    SceneStack st("x", parse_iso8601("2020-07-01T00:00:00Z"), 0.0, s);
    st.add_channel("a", GeoGrid::filled(s, 1.0f));
    CHECK_THROWS_AS(st.add_channel("a", GeoGrid::filled(s, 1.0f)), Error);
    CHECK_THROWS_AS(st.add_channel("b", GeoGrid::filled(oracle::grid(3, 2), 1.0f)), Error);
    const SceneStack edited = st.with_channel("a", GeoGrid::filled(s, 2.0f), "edit");
    CHECK(edited.channel("a")[0] == 2.0f);
    CHECK(st.channel("a")[0] == 1.0f);
    CHECK(edited.provenance() == std::vector<std::string>{"edit"});
    CHECK_THROWS_AS(st.channel("zzz"), Error);
}

TEST_CASE("clouds are masked from LST") {
    const GridSpec s = oracle::grid(2, 1);
    const LulcCodes codes = LulcCodes::impact_observatory();
    const GeoGrid lulc(s, {static_cast<float>(codes.code(LulcClass::clouds)),
                           static_cast<float>(codes.code(LulcClass::built))});
    const GeoGrid out = mask_clouds(GeoGrid::filled(s, 30.0f), lulc, codes);
    CHECK(out.is_nodata(0));
    CHECK(out[1] == 30.0f);
}
