#include <doctest.h>

#include <cstring>

#include <png.h>

#include "heatlab/error.hpp"
#include "heatlab/render.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

Image decode(const std::vector<std::uint8_t>& bytes) {
    png_image img;
    std::memset(&img, 0, sizeof img);
    img.version = PNG_IMAGE_VERSION;
    REQUIRE(png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()));
    img.format = PNG_FORMAT_RGBA;
    Image out;
    out.width = static_cast<int>(img.width);
    out.height = static_cast<int>(img.height);
    out.rgba.resize(PNG_IMAGE_SIZE(img));
    REQUIRE(png_image_finish_read(&img, nullptr, out.rgba.data(), 0, nullptr));
    return out;
}

std::vector<std::array<int, 3>> stops_of(const Palette& p) {
    std::vector<std::array<int, 3>> s;
    for (const auto& c : p.stops) s.push_back({c[0], c[1], c[2]});
    return s;
}

} // namespace

TEST_CASE("ramp against piecewise-linear oracle") {
    const Palette three{"t", {{0, 0, 0}, {100, 200, 50}, {255, 255, 255}}};
    CHECK(ramp(three, 0.0) == Rgb{0, 0, 0});
    CHECK(ramp(three, 0.5) == Rgb{100, 200, 50});
    CHECK(ramp(three, 1.0) == Rgb{255, 255, 255});
    CHECK(ramp(three, 0.25) == Rgb{50, 100, 25});
    CHECK(ramp(three, -3.0) == ramp(three, 0.0));
    CHECK(ramp(three, 9.0) == ramp(three, 1.0));

    for (const auto& name : palette_names()) {
        const Palette p = palette_by_name(name);
        for (int k = 0; k <= 1000; ++k) {
            const double t = k / 1000.0;
            const Rgb got = ramp(p, t);
            const auto want = oracle::ramp(stops_of(p), t);
            REQUIRE(int(got[0]) == want[0]);
            REQUIRE(int(got[1]) == want[1]);
            REQUIRE(int(got[2]) == want[2]);
        }
    }
    CHECK_THROWS_AS(palette_by_name("rainbow"), Error);
}

TEST_CASE("render_scalar") {
    const GridSpec s = oracle::grid(5, 3);
    const Palette p = palette_by_name("thermal");
    SUBCASE("constant layer is one colour") {
        const Image img = render_scalar(GeoGrid::filled(s, 30.0f), p, 10, 50);
        const Rgb c = ramp(p, 0.5);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(img.rgba[4 * i] == c[0]);
            CHECK(img.rgba[4 * i + 1] == c[1]);
            CHECK(img.rgba[4 * i + 2] == c[2]);
            CHECK(img.rgba[4 * i + 3] == 255);
        }
    }
    SUBCASE("nodata is transparent") {
        std::vector<float> v(s.size(), 20.0f);
        v[7] = kDefaultNodata;
        const Image img = render_scalar(GeoGrid(s, v), p, 10, 50);
        CHECK(img.rgba[4 * 7 + 3] == 0);
        CHECK(img.rgba[4 * 6 + 3] == 255);
    }
    CHECK_THROWS_AS(render_scalar(GeoGrid::filled(s, 1.0f), p, 5, 5), Error);
    CHECK(layer_style("lst").palette == "thermal");
    CHECK_THROWS_AS(layer_style("wind"), Error);
}

TEST_CASE("encode_png") {
    Rng rng(5);
    const GridSpec s = oracle::grid(17, 9);
    GeoGrid g = oracle::random_grid(rng, s, 0, 40, 0.1);
    const Image img = render_scalar(g, palette_by_name("diverging"), 0, 40);
    const auto a = encode_png(img);
    const auto b = encode_png(img);
    CHECK(a == b);
    REQUIRE(a.size() > 8);
    CHECK(std::memcmp(a.data(), "\x89PNG\r\n\x1a\n", 8) == 0);
    const Image back = decode(a);
    CHECK(back.width == 17);
    CHECK(back.height == 9);
    CHECK(back.rgba == img.rgba);
}

TEST_CASE("grid_stats") {
    const GridSpec s = oracle::grid(4, 1);
    const GridStats st = grid_stats(GeoGrid(s, {1.0f, kDefaultNodata, 3.0f, 5.0f}));
    CHECK(st.valid == 3);
    CHECK(st.min == 1.0);
    CHECK(st.max == 5.0);
    CHECK(st.mean == doctest::Approx(3.0));
    CHECK(std::isnan(grid_stats(GeoGrid::filled(s, kDefaultNodata)).mean));
}
