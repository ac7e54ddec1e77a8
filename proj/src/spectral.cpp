#include "heatlab/spectral.hpp"

#include <cmath>
#include <limits>

#include "heatlab/error.hpp"
#include "heatlab/pixelwise.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normalized_difference(double a, double b) {
    const double den = a + b;
    if (den == 0.0) return kNaN;
    return (a - b) / den;
}

bool in_unit_interval(double eps) { return eps > 0.0 && eps <= 1.0; }

} // namespace

void SplitWindowCoefficients::validate() const {
    for (double v : b) {
        if (!std::isfinite(v)) {
            throw Error(Errc::invalid_argument, "split-window coefficients must be finite (" + source_label + ")");
        }
    }
}

void EmissivityParams::validate() const {
    if (!(ndvi_soil_threshold < ndvi_veg_threshold)) {
        throw Error(Errc::invalid_argument, "emissivity: ndvi_soil_threshold must be below ndvi_veg_threshold");
    }
    if (!in_unit_interval(eps_water) || !in_unit_interval(eps_soil) || !in_unit_interval(eps_veg)) {
        throw Error(Errc::invalid_argument, "emissivity values must lie in (0, 1]");
    }
}

GeoGrid ndvi(const GeoGrid& nir, const GeoGrid& red) { return pixelwise(normalized_difference, nir, red); }

GeoGrid ndbi(const GeoGrid& swir1, const GeoGrid& nir) { return pixelwise(normalized_difference, swir1, nir); }

double emissivity_value(double v, const EmissivityParams& p) {
    if (v < 0.0) return p.eps_water;
    if (v <= p.ndvi_soil_threshold) return p.eps_soil;
    if (v > p.ndvi_veg_threshold) return p.eps_veg;
    const double ratio = (v - p.ndvi_soil_threshold) / (p.ndvi_veg_threshold - p.ndvi_soil_threshold);
    const double fractional_vegetation = ratio * ratio;
    return p.eps_soil + (p.eps_veg - p.eps_soil) * fractional_vegetation;
}

GeoGrid emissivity(const GeoGrid& ndvi_grid, const EmissivityParams& p) {
    p.validate();
    return pixelwise([&p](double v) { return emissivity_value(v, p); }, ndvi_grid);
}

double split_window_value(double t_i, double t_j, double eps, double d_eps, const SplitWindowCoefficients& c) {
    if (!(eps > 0.0)) return kNaN;
    const auto& b = c.b;
    const double e1 = (1.0 - eps) / eps;
    const double e2 = d_eps / (eps * eps);
    const double sum = 0.5 * (t_i + t_j);
    const double diff = 0.5 * (t_i - t_j);
    const double dt = t_i - t_j;
    return b[0] + (b[1] + b[2] * e1 + b[3] * e2) * sum + (b[4] + b[5] * e1 + b[6] * e2) * diff + b[7] * dt * dt;
}

GeoGrid split_window_lst(const GeoGrid& t_i, const GeoGrid& t_j, const GeoGrid& eps_mean, const GeoGrid& eps_diff,
                         const SplitWindowCoefficients& c) {
    c.validate();
    return pixelwise(
        [&c](double ti, double tj, double e, double de) { return split_window_value(ti, tj, e, de, c); }, t_i, t_j,
        eps_mean, eps_diff);
}

GeoGrid kelvin_to_celsius(const GeoGrid& kelvin) {
    return pixelwise([](double k) { return k - 273.15; }, kelvin);
}

double albedo_value(const std::array<double, 6>& r, const AlbedoWeights& w) {
    return w.intercept + w.blue * r[0] + w.green * r[1] + w.red * r[2] + w.nir * r[3] + w.swir1 * r[4] +
           w.swir2 * r[5];
}

GeoGrid albedo(const GeoGrid& blue, const GeoGrid& green, const GeoGrid& red, const GeoGrid& nir,
               const GeoGrid& swir1, const GeoGrid& swir2, const AlbedoWeights& w) {
    return pixelwise(
        [&w](double b, double g, double r, double n, double s1, double s2) {
            return albedo_value({b, g, r, n, s1, s2}, w);
        },
        blue, green, red, nir, swir1, swir2);
}

} // namespace heatlab
