#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "heatlab/grid.hpp"

namespace heatlab {

enum class LulcClass { water, trees, flooded_vegetation, crops, built, bare_ground, snow_ice, clouds, rangeland };

inline constexpr std::array<LulcClass, 9> kAllLulcClasses = {
    LulcClass::water,     LulcClass::trees,       LulcClass::flooded_vegetation,
    LulcClass::crops,     LulcClass::built,       LulcClass::bare_ground,
    LulcClass::snow_ice,  LulcClass::clouds,      LulcClass::rangeland,
};

std::string_view lulc_name(LulcClass c);
std::optional<LulcClass> parse_lulc_name(std::string_view name);

/// Numeric code of each land-cover class in a particular product.
struct LulcCodes {
    std::array<int, 9> codes{};

    /// Impact Observatory 9-class legend.
    static LulcCodes impact_observatory();

    int code(LulcClass c) const { return codes[static_cast<std::size_t>(c)]; }
    std::optional<LulcClass> classify(int code) const;
    std::set<int> codes_for(std::span<const LulcClass> classes) const;
    void validate() const; ///< codes must be unique
};

/// Connected green areas at or above a minimum area.
struct ParkSet {
    GeoGrid labels;                  ///< component id per pixel, 0 = not park
    std::vector<double> park_areas;  ///< m^2, entry k belongs to label k+1
    PixelMask source_mask;           ///< every green pixel, before the area floor

    std::size_t count() const { return park_areas.size(); }
    PixelMask park_mask() const;
    int label_at(std::size_t i) const { return static_cast<int>(labels[i]); }
};

/// 8-connected components of pixels whose code is in `green_codes`.
/// Components smaller than `min_area` (m^2) are dropped; surviving labels are
/// numbered 1..n in row-major order of each component's first pixel.
ParkSet extract_parks(const GeoGrid& lulc, const std::set<int>& green_codes, double min_area);

enum class DistanceSide {
    inside,  ///< mask pixels: distance to the nearest unmasked pixel centre
    outside, ///< unmasked pixels: distance to the nearest masked pixel centre
};

/// Exact squared distances (in pixel units) from every pixel to the nearest
/// feature pixel, plus the row-major index of that feature. Pixels with no
/// reachable feature hold -1 in both arrays.
struct NearestFeature {
    std::vector<std::int64_t> sq_dist;
    std::vector<std::int64_t> nearest;
};
NearestFeature nearest_feature_transform(const PixelMask& features);

/// Distances in metres for the requested side; pixels off that side are NaN.
/// Throws Error(empty_input) for an all-true or all-false mask.
std::vector<double> euclidean_distance_values(const PixelMask& mask, DistanceSide side);

/// Same distances as a float grid; pixels off the requested side are nodata.
GeoGrid euclidean_distance(const PixelMask& mask, DistanceSide side);

struct DistanceField {
    GeoGrid inside;
    GeoGrid outside;
};
DistanceField distance_field(const PixelMask& parks);

PixelMask built_mask(const GeoGrid& lulc, const std::set<int>& built_codes);

/// Box-filter mean of a mask over a `window` x `window` neighbourhood; edge
/// pixels average over the in-bounds part of the window.
GeoGrid built_fraction(const PixelMask& built, int window);

} // namespace heatlab
