#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/grid.hpp"
#include "heatlab/landcover.hpp"

namespace heatlab {

enum class ProfileSide { internal, spillover };

std::string_view profile_side_name(ProfileSide side);
ProfileSide parse_profile_side(std::string_view name);

/// Distance-binned cooling anomaly. Empty bins carry NaN means (nodata).
/// `mean_distance` is the mean pixel distance inside each bin.
struct CoolingProfile {
    std::vector<double> bin_edges;
    std::vector<double> mean_dt;
    std::vector<std::int64_t> count;
    std::vector<double> std_dt;
    std::vector<double> mean_distance;
    ProfileSide side = ProfileSide::internal;

    std::size_t bins() const { return mean_dt.size(); }
    std::int64_t total_count() const;
    bool populated(std::size_t bin) const { return count[bin] > 0; }
};

enum class BaselineFallback { citywide_built, error };

struct BaselineSpec {
    double ring_inner = 100.0;
    double ring_outer = 500.0;
    int min_pixels = 50;
    BaselineFallback fallback = BaselineFallback::citywide_built;

    void validate() const;
};

struct BaselineResult {
    double celsius = 0.0;
    std::int64_t pixels = 0;
    bool used_fallback = false;
};

/// Mean LST over built pixels whose distance to the park lies in
/// [ring_inner, ring_outer]; with fewer than min_pixels the fallback applies.
BaselineResult builtup_baseline(const GeoGrid& lst, const PixelMask& built, const GeoGrid& park_outside_dist,
                                const BaselineSpec& spec);

/// Per-pixel lst - baseline; nodata propagates.
GeoGrid anomaly(const GeoGrid& lst, double baseline);

/// Bins domain pixels by distance into [0,w), [w,2w), ... up to max_dist.
CoolingProfile cooling_profile(const GeoGrid& dt, const GeoGrid& dist, const PixelMask& domain, double bin_width,
                               double max_dist, ProfileSide side);

/// Count-weighted pooling of profiles sharing bin edges and side.
CoolingProfile aggregate_profiles(std::span<const CoolingProfile> profiles);

enum class GradientAxis { built_fraction_decile, radial_distance };

struct UrbanGradient {
    GradientAxis axis = GradientAxis::built_fraction_decile;
    std::vector<double> bin_centers;
    std::vector<double> mean_anomaly; ///< NaN for empty bins
    std::vector<std::int64_t> count;
};

/// Mean anomaly per built-fraction decile ([0,0.1), ..., [0.9,1.0]) or per
/// radial bin of `radial_bin_width` metres from the built-mass centroid.
UrbanGradient urban_gradient(const GeoGrid& dt, const GeoGrid& built_fraction, GradientAxis axis,
                             double radial_bin_width = 500.0);

struct SourceSinkRow {
    int code = 0;
    double source_fraction = 0.0;
    double neutral_fraction = 0.0;
    double sink_fraction = 0.0;
    double mean_anomaly = 0.0;
    std::int64_t pixel_count = 0;
};

struct SourceSinkTable {
    double low_quantile = 0.25;
    double high_quantile = 0.75;
    double low_threshold = 0.0;
    double high_threshold = 0.0;
    std::vector<SourceSinkRow> rows; ///< ascending category code
};

/// Nearest-rank quantile of ascending-sorted values: element ceil(q*n), 1-based.
double nearest_rank(std::span<const double> sorted, double q);

/// Pixels strictly below the low quantile are sinks, strictly above the high
/// quantile are sources; fractions are tabulated per LULC code.
SourceSinkTable source_sink(const GeoGrid& dt, const GeoGrid& lulc, std::pair<double, double> quantiles);

struct ProfileConfig {
    double bin_width = 30.0;
    double internal_max = 300.0;
    double spillover_max = 300.0;
};

/// Inputs shared by every scene of one city.
struct CoolingGeometry {
    ParkSet parks;
    PixelMask built;
    GeoGrid inside;                      ///< distance to nearest non-park pixel, park pixels only
    GeoGrid outside;                     ///< distance to nearest park pixel, non-park pixels only
    std::vector<std::int32_t> owner;     ///< nearest park label per non-park pixel, 0 elsewhere
};

CoolingGeometry cooling_geometry(ParkSet parks, PixelMask built);

struct ParkCooling {
    int park = 0;
    BaselineResult baseline;
    CoolingProfile internal;
    CoolingProfile spillover;
};

struct SceneCooling {
    std::vector<ParkCooling> parks;
    CoolingProfile internal;  ///< pooled over parks
    CoolingProfile spillover; ///< pooled over parks
};

/// Per-park ring baselines and profiles for one LST scene. Spillover pixels
/// and ring pixels belong to their nearest park only.
SceneCooling scene_cooling(const GeoGrid& lst, const CoolingGeometry& geometry, const BaselineSpec& baseline,
                           const ProfileConfig& profile);

/// Citywide anomaly map: LST minus the ring baseline around all parks.
GeoGrid citywide_anomaly(const GeoGrid& lst, const CoolingGeometry& geometry, const BaselineSpec& baseline);

} // namespace heatlab
