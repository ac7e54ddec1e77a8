#pragma once

#include <array>
#include <string>

#include "heatlab/grid.hpp"

namespace heatlab {

/// Split-window coefficients b0..b7. Values are always supplied by
/// configuration together with a provenance label.
struct SplitWindowCoefficients {
    std::array<double, 8> b{};
    std::string source_label;

    void validate() const;
};

/// NDVI-threshold emissivity model.
struct EmissivityParams {
    double ndvi_soil_threshold = 0.2;
    double ndvi_veg_threshold = 0.5;
    double eps_water = 0.991;
    double eps_soil = 0.97;
    double eps_veg = 0.99;

    void validate() const;
};

/// (nir - red) / (nir + red); a zero denominator gives nodata.
GeoGrid ndvi(const GeoGrid& nir, const GeoGrid& red);

/// (swir1 - nir) / (swir1 + nir); a zero denominator gives nodata.
GeoGrid ndbi(const GeoGrid& swir1, const GeoGrid& nir);

/// Scalar form of the emissivity model, shared by the grid kernel.
double emissivity_value(double ndvi, const EmissivityParams& p);
GeoGrid emissivity(const GeoGrid& ndvi, const EmissivityParams& p);

/// Scalar split-window evaluation; returns NaN when eps_mean <= 0.
double split_window_value(double t_i, double t_j, double eps_mean, double eps_diff,
                          const SplitWindowCoefficients& c);

/// Per-pixel split-window land-surface temperature in degrees Celsius.
GeoGrid split_window_lst(const GeoGrid& t_i, const GeoGrid& t_j, const GeoGrid& eps_mean, const GeoGrid& eps_diff,
                         const SplitWindowCoefficients& c);

GeoGrid kelvin_to_celsius(const GeoGrid& kelvin);

/// Broadband albedo as a fixed weighted sum of reflectance bands.
struct AlbedoWeights {
    double blue = 0.356;
    double green = 0.0;
    double red = 0.130;
    double nir = 0.373;
    double swir1 = 0.085;
    double swir2 = 0.072;
    double intercept = -0.0018;
    std::string source_label = "Liang (2001) Landsat shortwave";
};

double albedo_value(const std::array<double, 6>& reflectance, const AlbedoWeights& w);

/// Bands in blue, green, red, nir, swir1, swir2 order.
GeoGrid albedo(const GeoGrid& blue, const GeoGrid& green, const GeoGrid& red, const GeoGrid& nir,
               const GeoGrid& swir1, const GeoGrid& swir2, const AlbedoWeights& w);

} // namespace heatlab
