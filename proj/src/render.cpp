#include "heatlab/render.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "heatlab/error.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void put(Image& img, std::size_t i, Rgb c, std::uint8_t a = 255) {
    img.rgba[4 * i + 0] = c[0];
    img.rgba[4 * i + 1] = c[1];
    img.rgba[4 * i + 2] = c[2];
    img.rgba[4 * i + 3] = a;
}

Image blank(const GeoGrid& g) {
    return Image{g.width(), g.height(), std::vector<std::uint8_t>(g.size() * 4, 0)};
}

void png_append(png_structp png, png_bytep data, png_size_t len) {
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + len);
}

void png_noop_flush(png_structp) {}

[[noreturn]] void png_fail(png_structp, png_const_charp msg) { throw Error(Errc::io_error, std::string("png: ") + msg); }

void png_warn(png_structp, png_const_charp) {}

} // namespace

Palette palette_by_name(std::string_view name) {
    if (name == "thermal") {
        return {"thermal", {{0, 0, 4}, {87, 16, 110}, {188, 55, 84}, {249, 142, 9}, {252, 255, 164}}};
    }
    if (name == "diverging") {
        return {"diverging", {{33, 102, 172}, {146, 197, 222}, {247, 247, 247}, {244, 165, 130}, {178, 24, 43}}};
    }
    if (name == "greens") {
        return {"greens", {{140, 81, 10}, {246, 232, 195}, {199, 234, 229}, {90, 180, 172}, {1, 102, 94}}};
    }
    if (name == "gray") return {"gray", {{0, 0, 0}, {255, 255, 255}}};
    throw Error(Errc::invalid_argument, "unknown palette '" + std::string(name) + "'");
}

std::vector<std::string> palette_names() { return {"diverging", "gray", "greens", "thermal"}; }

Rgb ramp(const Palette& p, double t) {
    if (p.stops.empty()) throw Error(Errc::invalid_argument, "palette without stops");
    if (p.stops.size() == 1) return p.stops.front();
    if (std::isnan(t)) t = 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * static_cast<double>(p.stops.size() - 1);
    const auto k = std::min(static_cast<std::size_t>(pos), p.stops.size() - 2);
    const double f = pos - static_cast<double>(k);
    Rgb out{};
    for (std::size_t c = 0; c < 3; ++c) {
        const double v = p.stops[k][c] + f * (static_cast<double>(p.stops[k + 1][c]) - p.stops[k][c]);
        out[c] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

std::vector<std::uint8_t> encode_png(const Image& img) {
    if (img.width <= 0 || img.height <= 0 || img.rgba.size() != static_cast<std::size_t>(img.width) * img.height * 4) {
        throw Error(Errc::invalid_argument, "encode_png: image buffer does not match its size");
    }
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_fail, png_warn);
    if (!png) throw Error(Errc::io_error, "png: cannot create writer");
    png_infop info = png_create_info_struct(png);
    try {
        if (!info) throw Error(Errc::io_error, "png: cannot create info");
        png_set_write_fn(png, &out, png_append, png_noop_flush);
        png_set_compression_level(png, 6);
        png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                     PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
        png_write_info(png, info);
        for (int r = 0; r < img.height; ++r) {
            auto* row = const_cast<png_bytep>(img.rgba.data() + static_cast<std::size_t>(r) * img.width * 4);
            png_write_row(png, row);
        }
        png_write_end(png, nullptr);
    } catch (...) {
        png_destroy_write_struct(&png, &info);
        throw;
    }
    png_destroy_write_struct(&png, &info);
    return out;
}

GridStats grid_stats(const GeoGrid& g) {
    GridStats s{kNaN, kNaN, kNaN, 0};
    double sum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.is_nodata(i)) continue;
        const double v = g[i];
        if (s.valid == 0) {
            s.min = s.max = v;
        } else {
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
        }
        sum += v;
        ++s.valid;
    }
    if (s.valid > 0) s.mean = sum / static_cast<double>(s.valid);
    return s;
}

Image render_scalar(const GeoGrid& g, const Palette& p, double lo, double hi) {
    if (!(hi > lo)) throw Error(Errc::invalid_argument, "render bounds need lo < hi");
    Image img = blank(g);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.is_nodata(i)) continue;
        put(img, i, ramp(p, (g[i] - lo) / (hi - lo)));
    }
    return img;
}

Rgb lulc_color(LulcClass c) {
    switch (c) {
    case LulcClass::water: return {65, 155, 223};
    case LulcClass::trees: return {57, 125, 73};
    case LulcClass::flooded_vegetation: return {122, 135, 198};
    case LulcClass::crops: return {228, 150, 53};
    case LulcClass::built: return {196, 40, 27};
    case LulcClass::bare_ground: return {165, 155, 143};
    case LulcClass::snow_ice: return {168, 235, 255};
    case LulcClass::clouds: return {97, 97, 97};
    case LulcClass::rangeland: return {227, 226, 195};
    }
    return {0, 0, 0};
}

Image render_categorical(const GeoGrid& lulc, const LulcCodes& codes) {
    Image img = blank(lulc);
    for (std::size_t i = 0; i < lulc.size(); ++i) {
        if (lulc.is_nodata(i)) continue;
        if (const auto c = codes.classify(static_cast<int>(lulc[i]))) put(img, i, lulc_color(*c));
    }
    return img;
}

Image render_rgb(const GeoGrid& red, const GeoGrid& green, const GeoGrid& blue, double white) {
    require_aligned(red.spec(), green.spec(), "render_rgb");
    require_aligned(red.spec(), blue.spec(), "render_rgb");
    if (!(white > 0.0)) throw Error(Errc::invalid_argument, "render_rgb: white point must be positive");
    Image img = blank(red);
    auto level = [white](float v) {
        return static_cast<std::uint8_t>(std::lround(std::clamp(v / white, 0.0, 1.0) * 255.0));
    };
    for (std::size_t i = 0; i < red.size(); ++i) {
        if (red.is_nodata(i) || green.is_nodata(i) || blue.is_nodata(i)) continue;
        put(img, i, {level(red[i]), level(green[i]), level(blue[i])});
    }
    return img;
}

LayerStyle layer_style(std::string_view layer) {
    if (layer == "lst") return {"thermal", 10.0, 50.0};
    if (layer == "anomaly" || layer == "delta") return {"diverging", -6.0, 6.0};
    if (layer == "ndvi") return {"greens", -1.0, 1.0};
    throw Error(Errc::layer_not_found, "no scalar style for layer '" + std::string(layer) + "'");
}

} // namespace heatlab
