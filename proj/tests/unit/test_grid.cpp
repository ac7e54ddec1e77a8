#include <doctest.h>

#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "heatlab/error.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/json_io.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

GeoGrid categorical(const GridSpec& s, std::vector<int> codes) {
    std::vector<float> v(codes.begin(), codes.end());
    return GeoGrid(s, std::move(v));
}

bool bit_equal(const GeoGrid& a, const GeoGrid& b) {
    if (a.spec() != b.spec() || a.size() != b.size()) return false;
    return std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("grid spec validation rejects degenerate geometry") {
    GridSpec s = oracle::grid(4, 4);
    CHECK_NOTHROW(s.validate());
    s.width = 0;
    CHECK_THROWS_AS(s.validate(), Error);
    s = oracle::grid(4, 4, 0.0);
    CHECK_THROWS_AS(s.validate(), Error);
}

TEST_CASE("grid values must be finite or nodata") {
    const GridSpec s = oracle::grid(2, 1);
    CHECK_THROWS_AS(GeoGrid(s, {1.0f, std::numeric_limits<float>::infinity()}), Error);
    CHECK_THROWS_AS(GeoGrid(s, {1.0f}), Error);
    const GeoGrid g(s, {1.0f, kDefaultNodata});
    CHECK(g.valid_count() == 1);
    const GeoGrid n(s, {std::nanf(""), 2.0f}, std::nanf(""));
    CHECK(n.is_nodata(0));
    CHECK(n.valid_count() == 1);
}

TEST_CASE("align_check compares geometry only") {
    const GridSpec s = oracle::grid(5, 3);
    heatlab::Rng rng(1);
    const GeoGrid a = oracle::random_grid(rng, s, 0, 1);
    const GeoGrid b = oracle::random_grid(rng, s, 0, 1);
    CHECK(align_check(a, a));
    CHECK(align_check(a, b));
    GridSpec shifted = s;
    shifted.origin_x += s.pixel_size;
    CHECK_FALSE(align_check(s, shifted));
    CHECK_THROWS_AS(require_aligned(s, shifted, "test"), Error);
}

TEST_CASE("crop keeps world coordinates") {
    const GridSpec s = oracle::grid(20, 12);
    std::vector<float> v(s.size());
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c) v[s.index(c, r)] = static_cast<float>(c + 1000 * r);
    }
    const GeoGrid g(s, v);

    SUBCASE("full extent") { CHECK(crop(g, {0, 0, 20, 12}).identical(g)); }
    SUBCASE("single pixel at the origin") {
        const GeoGrid one = crop(g, {0, 0, 1, 1});
        CHECK(one.size() == 1);
        CHECK(one.spec().origin_x == s.origin_x);
        CHECK(one.spec().origin_y == s.origin_y);
        CHECK(one[0] == 0.0f);
    }
    SUBCASE("interior window matches recomputed coordinates") {
        const PixelWindow w{3, 4, 7, 5};
        const GeoGrid sub = crop(g, w);
        CHECK(sub.spec().origin_x == s.origin_x + 3 * s.pixel_size);
        CHECK(sub.spec().origin_y == s.origin_y - 4 * s.pixel_size);
        for (int r = 0; r < w.height; ++r) {
            for (int c = 0; c < w.width; ++c) CHECK(sub.at(c, r) == static_cast<float>((c + 3) + 1000 * (r + 4)));
        }
    }
    SUBCASE("window past the edge") { CHECK_THROWS_AS(crop(g, {15, 0, 6, 1}), Error); }
}

TEST_CASE("resample_majority") {
    const GridSpec fine = oracle::grid(2, 2, 10.0);
    GridSpec coarse = oracle::grid(1, 1, 20.0);

    SUBCASE("strict majority") { CHECK(resample_majority(categorical(fine, {2, 2, 7, 2}), coarse)[0] == 2.0f); }
    SUBCASE("tie goes to the lowest code") {
        CHECK(resample_majority(categorical(fine, {7, 2, 7, 2}), coarse)[0] == 2.0f);
    }
    SUBCASE("nodata does not vote") {
        const GeoGrid g(fine, {kDefaultNodata, kDefaultNodata, kDefaultNodata, 5.0f});
        CHECK(resample_majority(g, coarse)[0] == 5.0f);
        const GeoGrid all = GeoGrid::filled(fine, kDefaultNodata);
        CHECK(resample_majority(all, coarse).is_nodata(0));
    }
    SUBCASE("k = 1 is the identity") {
        heatlab::Rng rng(3);
        std::vector<int> codes(fine.size());
        for (auto& c : codes) c = static_cast<int>(rng.below(5));
        const GeoGrid g = categorical(fine, codes);
        CHECK(resample_majority(g, fine).identical(g));
    }
    SUBCASE("non-integer ratio") {
        coarse.pixel_size = 15.0;
        CHECK_THROWS_AS(resample_majority(categorical(fine, {1, 1, 1, 1}), coarse), Error);
    }
    SUBCASE("random grid matches per-block histogram argmax") {
        heatlab::Rng rng(11);
        const GridSpec src = oracle::grid(64, 64, 10.0);
        const GridSpec dst = oracle::grid(32, 32, 20.0);
        std::vector<int> codes(src.size());
        for (auto& c : codes) c = 1 + static_cast<int>(rng.below(4));
        const GeoGrid out = resample_majority(categorical(src, codes), dst);
        for (int r = 0; r < 32; ++r) {
            for (int c = 0; c < 32; ++c) {
                std::map<int, int> hist;
                for (int dy = 0; dy < 2; ++dy) {
                    for (int dx = 0; dx < 2; ++dx) ++hist[codes[src.index(2 * c + dx, 2 * r + dy)]];
                }
                int best = 0, best_n = -1;
                for (auto [code, n] : hist) {
                    if (n > best_n) best = code, best_n = n;
                }
                REQUIRE(out.at(c, r) == static_cast<float>(best));
            }
        }
    }
}

TEST_CASE("mask algebra") {
    const GridSpec s = oracle::grid(3, 1);
    const PixelMask a(s, std::vector<std::uint8_t>{1, 1, 0});
    const PixelMask b(s, std::vector<std::uint8_t>{0, 1, 1});
    CHECK((a & b).count() == 1);
    CHECK((a | b).count() == 3);
    CHECK((~a).count() == 1);
}

TEST_CASE("portable grid round-trip is bit-exact") {
    oracle::TempDir dir("grid");
    heatlab::Rng rng(5);
    for (int k = 0; k < 10; ++k) {
        const GridSpec s = oracle::grid(1 + static_cast<int>(rng.below(40)), 1 + static_cast<int>(rng.below(40)));
        const GeoGrid g = oracle::random_grid(rng, s, -50, 60, 0.1);
        const auto path = dir / ("g" + std::to_string(k) + ".grid");
        write_grid(path, g, {"lst", "2020-07-01T10:00:00Z"});
        GridMetadata meta;
        const GeoGrid back = read_grid(path, &meta);
        CHECK(back.identical(g));
        CHECK(bit_equal(back, g));
        CHECK(meta.band == "lst");
        CHECK(meta.timestamp == "2020-07-01T10:00:00Z");
        CHECK(read_grid_spec(path) == s);
    }
}

TEST_CASE("portable grid payload is little-endian float32 row-major") {
    oracle::TempDir dir("grid");
    const GridSpec s = oracle::grid(2, 2);
    write_grid(dir / "a.grid", GeoGrid(s, {1.0f, 2.0f, 3.0f, kDefaultNodata}));
    std::ifstream in(dir / "a.grid", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), {});
    REQUIRE(bytes.size() == 16);
    // 2.0f = 0x40000000
    CHECK(bytes[4] == 0x00);
    CHECK(bytes[7] == 0x40);
    const Json side = read_json_file(sidecar_path(dir / "a.grid"));
    for (const char* key : {"width", "height", "origin_x", "origin_y", "pixel_size", "epsg", "nodata"}) {
        CHECK(side.contains(key));
    }
}

TEST_CASE("portable grid reader rejects damaged files") {
    oracle::TempDir dir("grid");
    const GridSpec s = oracle::grid(3, 3);
    write_grid(dir / "a.grid", GeoGrid::filled(s, 1.0f));
    SUBCASE("truncated payload") {
        std::filesystem::resize_file(dir / "a.grid", 10);
        CHECK_THROWS_AS(read_grid(dir / "a.grid"), Error);
    }
    SUBCASE("missing sidecar") {
        std::filesystem::remove(sidecar_path(dir / "a.grid"));
        try {
            read_grid(dir / "a.grid");
            FAIL("expected an error");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::io_error);
        }
    }
    SUBCASE("sidecar without width") {
        Json j = read_json_file(sidecar_path(dir / "a.grid"));
        j.erase("width");
        write_json_file(sidecar_path(dir / "a.grid"), j);
        CHECK_THROWS_AS(read_grid(dir / "a.grid"), Error);
    }
}

TEST_CASE("GeoTIFF round-trip") {
    oracle::TempDir dir("tif");
    heatlab::Rng rng(9);
    const GridSpec s = oracle::grid(37, 21);
    const GeoGrid g = oracle::random_grid(rng, s, 0, 1, 0.05);
    for (bool deflate : {false, true}) {
        const auto path = dir / (deflate ? "d.tif" : "u.tif");
        export_geotiff(path, g, deflate);
        const GeoGrid back = import_geotiff(path);
        CHECK(back.identical(g));
    }
}

TEST_CASE("error codes have distinct names") {
    std::set<std::string_view> names;
    for (Errc c : kAllErrc) names.insert(errc_name(c));
    CHECK(names.size() == kAllErrc.size());
    CHECK(errc_name(Errc::analysis_pending) == "analysis_pending");
}

TEST_CASE("sha256 digest") {
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
