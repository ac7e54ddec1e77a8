#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "heatlab/config.hpp"
#include "heatlab/evaluation.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/predictor.hpp"
#include "heatlab/workspace.hpp"

namespace heatlab {

/// Adds the scenario delta of the scene's local month to the air-temperature
/// channel; every other channel is shared unchanged.
SceneStack apply_forcing(const SceneStack& stack, const ClimateScenario& scenario);

struct UhiExtentReport {
    double threshold = 0.0;
    double exceed_area_km2 = 0.0;
    double exceed_fraction = 0.0;
    double mean_urban_anomaly = 0.0;
    std::int64_t urban_pixels = 0; ///< urban pixels with a valid anomaly
};

/// Urban pixels whose anomaly is strictly above `threshold`.
UhiExtentReport uhi_extent(const GeoGrid& dt, const PixelMask& urban, double threshold);

/// Pixels with box built fraction 0 that are neither water nor park.
PixelMask rural_mask(const GeoGrid& built_fraction, const GeoGrid& lulc, const PixelMask& parks,
                     const LulcCodes& codes);

/// Mean of `values` over mask pixels holding data; NaN when none.
double masked_mean(std::span<const double> values, const PixelMask& mask);

struct ForecastSceneRow {
    std::string scene_id;
    double delta = 0.0;           ///< forcing applied to the air channel
    double reference = 0.0;       ///< present-day rural mean of the prediction
    double mean_prediction = 0.0; ///< forced, over valid pixels
    double key = 0.0;             ///< forced ordering key (mean LST or mean air temperature)
    bool out_of_validated_range = false;
};

struct ForecastResult {
    ClimateScenario scenario;
    std::string variant;
    GeoGrid anomaly;              ///< mean across scenes of forced prediction minus present reference
    UhiExtentReport extent;
    std::vector<ForecastSceneRow> scenes;
    bool out_of_validated_range = false;
    std::optional<double> validated_max_key; ///< train_max_key + margin
    std::string guard_note;
};

struct ForecastInputs {
    std::size_t scene_count = 0;                  ///< filtered present-day scenes
    std::function<SceneStack(std::size_t)> scene; ///< loads scene k; called from worker threads
    PixelMask urban;                 ///< built mask
    PixelMask rural;                 ///< reference pixels
    double threshold = 2.0;
    std::string ordering_key = "lst";
    std::optional<ExtrapolationReport> extrapolation;
};

/// Predicts every forced scene, measures it against the unforced prediction's
/// rural mean, averages the anomaly maps and reports the UHI extent. Scenes
/// are predicted in parallel on `jobs` threads.
ForecastResult forecast(const ForecastInputs& in, const ClimateScenario& scenario, const Predictor& predictor,
                        int jobs = 1);

} // namespace heatlab
