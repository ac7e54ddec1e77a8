#include <doctest.h>

#include <cmath>

#include "heatlab/spectral.hpp"
#include "oracles.hpp"

using namespace heatlab;

namespace {

GeoGrid one(float v) { return GeoGrid::filled(oracle::grid(1, 1), v); }

// Split-window form written out term by term.
double split_window_reference(double ti, double tj, double eps, double deps, const std::array<double, 8>& b) {
    const double a = (1 - eps) / eps;
    const double d = deps / (eps * eps);
    return b[0] + (b[1] + b[2] * a + b[3] * d) * (ti + tj) / 2 + (b[4] + b[5] * a + b[6] * d) * (ti - tj) / 2 +
           b[7] * (ti - tj) * (ti - tj);
}

} // namespace

TEST_CASE("ndvi") {
    CHECK(ndvi(one(0.3f), one(0.3f))[0] == 0.0f);
    CHECK(ndvi(one(0.6f), one(0.2f))[0] == doctest::Approx(0.5));
    CHECK(ndvi(one(0.0f), one(0.0f)).is_nodata(0));
    CHECK(ndvi(one(kDefaultNodata), one(0.2f)).is_nodata(0));
}

TEST_CASE("ndbi") {
    CHECK(ndbi(one(0.3f), one(0.3f))[0] == 0.0f);
    CHECK(ndbi(one(0.5f), one(0.3f))[0] == doctest::Approx(0.25));
    CHECK(ndbi(one(0.0f), one(0.0f)).is_nodata(0));
}

TEST_CASE("normalized differences are bounded and antisymmetric") {
    Rng rng(21);
    const GridSpec s = oracle::grid(40, 40);
    const GeoGrid a = oracle::random_grid(rng, s, 0.0, 1.0, 0.05);
    const GeoGrid b = oracle::random_grid(rng, s, 0.0, 1.0, 0.05);
    const GeoGrid ab = ndvi(a, b), ba = ndvi(b, a);
    const GeoGrid nb = ndbi(a, b), bn = ndbi(b, a);
    for (std::size_t i = 0; i < ab.size(); ++i) {
        if (ab.is_nodata(i)) {
            CHECK(ba.is_nodata(i));
            continue;
        }
        CHECK(ab[i] >= -1.0f);
        CHECK(ab[i] <= 1.0f);
        CHECK(ab[i] == -ba[i]);
        CHECK(nb[i] == -bn[i]);
    }
}

TEST_CASE("emissivity") {
    const EmissivityParams p;
    CHECK(emissivity_value(p.ndvi_veg_threshold + 0.1, p) == p.eps_veg);
    CHECK(emissivity_value(p.ndvi_soil_threshold, p) == p.eps_soil);
    CHECK(emissivity_value(-0.2, p) == p.eps_water);
    const double mid = 0.5 * (p.ndvi_soil_threshold + p.ndvi_veg_threshold);
    const double pv = std::pow((mid - p.ndvi_soil_threshold) / (p.ndvi_veg_threshold - p.ndvi_soil_threshold), 2);
    CHECK(emissivity_value(mid, p) == doctest::Approx(p.eps_soil + (p.eps_veg - p.eps_soil) * pv).epsilon(1e-12));

    EmissivityParams bad;
    bad.ndvi_soil_threshold = 0.6;
    CHECK_THROWS(emissivity(one(0.1f), bad));
}

TEST_CASE("split-window") {
    SplitWindowCoefficients c;
    SUBCASE("mean coefficient") {
        c.b = {0, 1, 0, 0, 0, 0, 0, 0};
        CHECK(split_window_value(30.0, 20.0, 0.97, 0.01, c) == 25.0);
    }
    SUBCASE("constant only") {
        c.b = {7.5, 0, 0, 0, 0, 0, 0, 0};
        const GeoGrid out = split_window_lst(one(300.0f), one(290.0f), one(0.98f), one(0.0f), c);
        CHECK(out[0] == 7.5f);
    }
    SUBCASE("non-positive emissivity") {
        c.b = {0, 1, 0, 0, 0, 0, 0, 0};
        CHECK(std::isnan(split_window_value(1, 1, 0.0, 0.0, c)));
        CHECK(split_window_lst(one(1.0f), one(1.0f), one(0.0f), one(0.0f), c).is_nodata(0));
    }
    SUBCASE("randomized grid against scalar reference") {
        Rng rng(8);
        for (auto& v : c.b) v = rng.uniform(-2.0, 2.0);
        const GridSpec s = oracle::grid(50, 40);
        const GeoGrid ti = oracle::random_grid(rng, s, 280, 320);
        const GeoGrid tj = oracle::random_grid(rng, s, 280, 320);
        const GeoGrid e = oracle::random_grid(rng, s, 0.9, 1.0);
        const GeoGrid de = oracle::random_grid(rng, s, -0.02, 0.02);
        const GeoGrid out = split_window_lst(ti, tj, e, de, c);
        for (int k = 0; k < 1000; ++k) {
            const auto i = static_cast<std::size_t>(rng.below(s.size()));
            const double ref = split_window_reference(ti[i], tj[i], e[i], de[i], c.b);
            CHECK(std::abs(out[i] - ref) <= 1e-5 * std::max(1.0, std::abs(ref)));
        }
    }
    SUBCASE("non-finite coefficients") {
        c.b = {std::nan(""), 0, 0, 0, 0, 0, 0, 0};
        CHECK_THROWS(split_window_lst(one(1.0f), one(1.0f), one(1.0f), one(0.0f), c));
    }
}

TEST_CASE("kelvin conversion and albedo") {
    CHECK(kelvin_to_celsius(one(300.0f))[0] == doctest::Approx(26.85).epsilon(1e-6));
    const AlbedoWeights w;
    const std::array<double, 6> r{0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const double expected =
        w.intercept + w.blue * 0.1 + w.green * 0.2 + w.red * 0.3 + w.nir * 0.4 + w.swir1 * 0.5 + w.swir2 * 0.6;
    CHECK(albedo_value(r, w) == doctest::Approx(expected).epsilon(1e-15));
    const GeoGrid a = albedo(one(0.1f), one(0.2f), one(0.3f), one(0.4f), one(0.5f), one(0.6f), w);
    CHECK(a[0] == doctest::Approx(expected).epsilon(1e-6));
}
