#include "heatlab/climate.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "heatlab/error.hpp"
#include "heatlab/parallel.hpp"
#include "heatlab/pixelwise.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_finite(std::span<const double> v) {
    double s = 0.0;
    std::int64_t n = 0;
    for (double x : v) {
        if (std::isfinite(x)) {
            s += x;
            ++n;
        }
    }
    return n > 0 ? s / static_cast<double>(n) : kNaN;
}

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(4);
    os << std::fixed << v;
    return os.str();
}

} // namespace

SceneStack apply_forcing(const SceneStack& stack, const ClimateScenario& scenario) {
    scenario.validate();
    const GeoGrid& air = stack.channel(kAirTempChannel);
    const double delta = scenario.monthly_delta[stack.local_month() - 1];
    GeoGrid forced = pixelwise([delta](double v) { return v + delta; }, air);
    return stack.with_channel(kAirTempChannel, std::move(forced),
                              "forcing " + scenario.key() + " month " + std::to_string(stack.local_month()) +
                                  " delta " + format_value(delta));
}

UhiExtentReport uhi_extent(const GeoGrid& dt, const PixelMask& urban, double threshold) {
    require_aligned(dt.spec(), urban.spec(), "uhi_extent");
    if (!urban.any()) throw Error(Errc::empty_input, "uhi_extent: the urban mask is empty");
    UhiExtentReport r;
    r.threshold = threshold;
    std::int64_t exceed = 0;
    double sum = 0.0;
    for (std::size_t i = 0; i < dt.size(); ++i) {
        if (!urban[i] || dt.is_nodata(i)) continue;
        ++r.urban_pixels;
        sum += dt[i];
        if (dt[i] > threshold) ++exceed;
    }
    if (r.urban_pixels == 0) throw Error(Errc::empty_input, "uhi_extent: no urban pixel holds an anomaly");
    r.exceed_fraction = static_cast<double>(exceed) / static_cast<double>(r.urban_pixels);
    r.exceed_area_km2 = static_cast<double>(exceed) * dt.spec().pixel_area() / 1e6;
    r.mean_urban_anomaly = sum / static_cast<double>(r.urban_pixels);
    return r;
}

PixelMask rural_mask(const GeoGrid& bf, const GeoGrid& lulc, const PixelMask& parks, const LulcCodes& codes) {
    require_aligned(bf.spec(), lulc.spec(), "rural_mask");
    require_aligned(bf.spec(), parks.spec(), "rural_mask");
    const auto water = static_cast<float>(codes.code(LulcClass::water));
    PixelMask out(bf.spec());
    for (std::size_t i = 0; i < bf.size(); ++i) {
        out.set(i, bf.is_valid(i) && bf[i] == 0.0f && lulc.is_valid(i) && lulc[i] != water && !parks[i]);
    }
    return out;
}

double masked_mean(std::span<const double> values, const PixelMask& mask) {
    if (values.size() != mask.size()) throw Error(Errc::invalid_argument, "masked_mean: size mismatch");
    double s = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (mask[i] && std::isfinite(values[i])) {
            s += values[i];
            ++n;
        }
    }
    return n > 0 ? s / static_cast<double>(n) : kNaN;
}

ForecastResult forecast(const ForecastInputs& in, const ClimateScenario& scenario, const Predictor& predictor,
                        int jobs) {
    if (in.scene_count == 0) throw Error(Errc::empty_input, "forecast: no scenes pass the filters");
    if (!predictor.accepts_modified_stacks()) {
        throw Error(Errc::predictor_unavailable,
                    "variant " + predictor.variant() + " cannot predict forced scenes (stored predictions only)");
    }
    const GridSpec& spec = in.urban.spec();
    const std::size_t n = in.scene_count;

    ForecastResult out;
    out.scenario = scenario;
    out.variant = predictor.variant();
    if (in.extrapolation) {
        out.validated_max_key = in.extrapolation->train_max_key + in.extrapolation->margin.value_or(0.0);
        out.guard_note = "validated up to ordering key " + format_value(*out.validated_max_key);
    } else {
        out.guard_note = "no extrapolation report recorded for variant " + predictor.variant() +
                         "; forced inputs are not validated";
        out.out_of_validated_range = true;
    }

    std::vector<std::vector<double>> anomalies(n);
    out.scenes.resize(n);
    parallel_for(n, jobs, [&](std::size_t k) {
        const SceneStack present = in.scene(k);
        require_aligned(spec, present.spec(), "forecast");
        const std::vector<double> base = predictor.predict_values(present);
        const double reference = masked_mean(base, in.rural);
        if (std::isnan(reference)) {
            throw Error(Errc::insufficient_data, "forecast: scene " + present.scene_id() + " has no rural reference");
        }
        const SceneStack forced = apply_forcing(present, scenario);
        std::vector<double> pred = predictor.predict_values(forced);
        ForecastSceneRow row;
        row.scene_id = present.scene_id();
        row.delta = scenario.monthly_delta[present.local_month() - 1];
        row.reference = reference;
        row.mean_prediction = mean_finite(pred);
        if (in.ordering_key == "airtemp") {
            const GeoGrid& air = forced.channel(kAirTempChannel);
            std::vector<double> a(air.values().begin(), air.values().end());
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (air.is_nodata(i)) a[i] = kNaN;
            }
            row.key = mean_finite(a);
        } else {
            row.key = row.mean_prediction;
        }
        row.out_of_validated_range = !out.validated_max_key || row.key > *out.validated_max_key;
        for (double& v : pred) v -= reference;
        anomalies[k] = std::move(pred);
        out.scenes[k] = row;
    });

    std::vector<float> mean(spec.size(), kDefaultNodata);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        double s = 0.0;
        int c = 0;
        for (const auto& a : anomalies) {
            if (std::isfinite(a[i])) {
                s += a[i];
                ++c;
            }
        }
        if (c > 0) mean[i] = static_cast<float>(s / c);
    }
    out.anomaly = GeoGrid(spec, std::move(mean));
    out.extent = uhi_extent(out.anomaly, in.urban, in.threshold);
    for (const auto& row : out.scenes) out.out_of_validated_range = out.out_of_validated_range || row.out_of_validated_range;
    return out;
}

} // namespace heatlab
