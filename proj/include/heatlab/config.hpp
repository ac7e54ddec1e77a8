#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/cooling.hpp"
#include "heatlab/json_io.hpp"
#include "heatlab/landcover.hpp"
#include "heatlab/spectral.hpp"

namespace heatlab {

/// Summer-daytime scene selection. Hours are local, [hour_begin, hour_end).
struct SceneFilter {
    std::set<unsigned> months{6, 7, 8};
    double hour_begin = 9.0;
    double hour_end = 16.0;
    double max_cloud = 0.3; ///< inclusive
};

struct SplitConfig {
    std::array<double, 3> fractions{0.72, 0.18, 0.10};
    double q = 0.9;
    double train_val_ratio = 0.8;
    std::uint64_t seed = 42;
    std::string ordering_key = "lst"; ///< "lst" or "airtemp"
    double success_tolerance = 2.0;
};

/// Additive monthly air-temperature deltas for one emission pathway and horizon.
struct ClimateScenario {
    double rcp = 4.5;
    int horizon_year = 2050;
    std::array<double, 12> monthly_delta{};
    std::string source_label;

    void validate() const;
    std::string key() const; ///< e.g. "rcp4.5-2050"
};

struct ForecastConfig {
    double uhi_threshold = 2.0;
    std::vector<ClimateScenario> scenarios;
};

enum class DonorStatistic { median, mean };

std::string_view donor_statistic_name(DonorStatistic s);
DonorStatistic parse_donor_statistic(std::string_view name);

struct InterventionConfig {
    LulcClass target = LulcClass::trees;
    DonorStatistic donor = DonorStatistic::median;
    double jitter_scale = 0.5; ///< jitter std as a multiple of the donor std
    std::int64_t min_donor_pixels = 100;
    double transect_extension = 300.0;
    double transect_step = 30.0;
};

/// Every tunable analysis parameter of one workspace.
struct WorkspaceConfig {
    LulcCodes lulc_codes = LulcCodes::impact_observatory();
    std::vector<LulcClass> green_classes{LulcClass::trees};
    std::vector<LulcClass> built_classes{LulcClass::built};
    double min_park_area = 10000.0;

    SceneFilter scene_filter;
    double utc_offset_hours = 0.0;
    std::map<std::string, std::string> band_mapping; ///< band name -> file stem
    std::string thermal_unit = "celsius";             ///< or "kelvin"

    std::map<std::string, SplitWindowCoefficients> split_window_presets;
    std::string split_window_preset = "identity";
    double eps_diff = 0.0;
    EmissivityParams emissivity;
    AlbedoWeights albedo;

    BaselineSpec baseline;
    ProfileConfig profile;
    int built_fraction_window = 11;
    double radial_bin_width = 500.0;
    std::pair<double, double> source_sink_quantiles{0.25, 0.75};

    SplitConfig split;
    ForecastConfig forecast;
    InterventionConfig intervention;
    std::int64_t max_sync_pixels = 1024 * 1024;

    WorkspaceConfig();

    void validate() const;
    const SplitWindowCoefficients& split_window() const;
    std::set<int> green_codes() const;
    std::set<int> built_codes() const;
};

/// HLS L30 band codes for the fixed band names.
std::map<std::string, std::string> hls_l30_band_mapping();

Json to_json(const WorkspaceConfig& c);

/// Missing keys keep their defaults; unknown keys are rejected.
WorkspaceConfig config_from_json(const Json& j);

/// Recursive object merge; `overlay` wins on scalars and arrays.
Json merge_json(const Json& base, const Json& overlay);

Json to_json(const ClimateScenario& s);
ClimateScenario scenario_from_json(const Json& j);

} // namespace heatlab
