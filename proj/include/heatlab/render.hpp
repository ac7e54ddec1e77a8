#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "heatlab/grid.hpp"
#include "heatlab/landcover.hpp"

namespace heatlab {

inline constexpr std::string_view kPaletteVersion = "1";

using Rgb = std::array<std::uint8_t, 3>;

/// Equally spaced colour stops; values between stops are interpolated linearly
/// per channel and rounded to the nearest integer.
struct Palette {
    std::string name;
    std::vector<Rgb> stops;
};

Palette palette_by_name(std::string_view name);
std::vector<std::string> palette_names();

/// Colour at t, clamped to [0, 1].
Rgb ramp(const Palette& p, double t);

struct Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> rgba; ///< row-major, 4 bytes per pixel
};

/// Deterministic 8-bit RGBA PNG.
std::vector<std::uint8_t> encode_png(const Image& img);

struct GridStats {
    double min = 0.0;
    double mean = 0.0;
    double max = 0.0;
    std::int64_t valid = 0; ///< min/mean/max are NaN when 0
};

GridStats grid_stats(const GeoGrid& g);

/// Linear ramp between `lo` and `hi`; nodata is fully transparent.
Image render_scalar(const GeoGrid& g, const Palette& p, double lo, double hi);

/// One fixed colour per land-cover class; unknown codes and nodata are transparent.
Image render_categorical(const GeoGrid& lulc, const LulcCodes& codes);

/// Reflectance composite stretched linearly from 0 to `white`.
Image render_rgb(const GeoGrid& red, const GeoGrid& green, const GeoGrid& blue, double white = 0.3);

Rgb lulc_color(LulcClass c);

struct LayerStyle {
    std::string palette;
    double lo = 0.0;
    double hi = 1.0;
};

/// Fixed bounds per scalar layer: lst, anomaly, ndvi, delta.
LayerStyle layer_style(std::string_view layer);

} // namespace heatlab
