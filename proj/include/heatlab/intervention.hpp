#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "heatlab/config.hpp"
#include "heatlab/cooling.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/json_io.hpp"
#include "heatlab/predictor.hpp"
#include "heatlab/workspace.hpp"

namespace heatlab {

struct Point {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const Point&) const = default;
};

/// Closed ring in world metres. A repeated closing vertex is accepted.
struct Polygon {
    std::vector<Point> vertices;

    /// Throws invalid_polygon for fewer than 3 distinct vertices, zero area or
    /// self-intersection.
    void validate() const;
    double signed_area() const;
};

/// True when the point lies inside by the even-odd rule or on an edge.
bool point_in_polygon(const Polygon& poly, Point p);

/// Pixel centres inside the polygon or on its boundary.
PixelMask rasterize_polygon(const Polygon& poly, const GridSpec& grid);

/// Per-channel donor statistics over target-class pixels.
struct DonorSignature {
    std::vector<std::string> channels;
    std::vector<double> center; ///< median (even count: midpoint) or mean
    std::vector<double> stddev; ///< population standard deviation
    std::int64_t pixels = 0;
    DonorStatistic statistic = DonorStatistic::median;
};

/// Channels replaced by inpainting: reflectance and thermal bands.
std::vector<std::string> inpaint_channels();

DonorSignature donor_signature(const SceneStack& stack, const GeoGrid& lulc, int target_code,
                               DonorStatistic statistic, std::int64_t min_pixels);

/// Median with the even-count midpoint rule.
double median_of(std::vector<double> values);

struct InterventionSpec {
    Polygon polygon;
    LulcClass target = LulcClass::trees;
    DonorStatistic donor = DonorStatistic::median;
    double jitter_scale = 0.5;
    std::uint64_t seed = 0;
    std::string scene_id;  ///< empty: first filtered scene
    std::string variant = "baseline";

    void validate() const;
};

Json to_json(const InterventionSpec& s);

/// Missing fields take the workspace defaults.
InterventionSpec intervention_from_json(const Json& j, const InterventionConfig& defaults);

/// Content hash of the canonical spec JSON (16 hex digits).
std::string intervention_id(const InterventionSpec& s);

struct InpaintResult {
    SceneStack stack;
    GeoGrid lulc;
    PixelMask mask; ///< polygon pixels that were built
    DonorSignature donor;
};

/// Writes the donor signature into masked pixels: reflectance bands get the
/// donor centre plus seeded Gaussian jitter clamped to [0, 1], thermal bands
/// the donor centre plus jitter. LULC becomes `target_code`. Pixels outside
/// `mask` and the air-temperature channel are untouched.
InpaintResult apply_signature(const SceneStack& stack, const GeoGrid& lulc, const PixelMask& mask,
                              const DonorSignature& donor, int target_code, double jitter_scale,
                              std::uint64_t seed, const std::string& provenance);

/// Full inpainting: rasterize, intersect with built pixels, take donors from
/// the target class and apply. Throws mask_not_built when no built pixel is
/// covered.
InpaintResult inpaint(const SceneStack& stack, const GeoGrid& lulc, const InterventionSpec& spec,
                      const WorkspaceConfig& config);

struct TransectSample {
    double distance = 0.0;
    double x = 0.0;
    double y = 0.0;
    double before = 0.0; ///< NaN where undefined
    double after = 0.0;
    bool in_mask = false;
};

/// Segment through the mask centroid along its principal axis, extended by
/// `extension` beyond the outermost mask pixel centres, sampled every `step`
/// metres at the nearest pixel. Off-grid samples are skipped.
std::vector<TransectSample> transect(const PixelMask& mask, const GeoGrid& before, const GeoGrid& after,
                                     double extension, double step);

struct InterventionResult {
    std::string id;
    InterventionSpec spec;
    std::string scene_id;
    GeoGrid before_lst;
    GeoGrid after_lst;
    GeoGrid delta;
    PixelMask mask;
    double mean_delta_in_mask = 0.0;
    std::vector<TransectSample> transect;
    CoolingProfile internal_profile;
    CoolingProfile spillover_profile;
    DonorSignature donor;
};

/// Predicts before and after the edit and measures the new park's cooling.
InterventionResult evaluate_intervention(const Predictor& predictor, const SceneStack& before, const GeoGrid& lulc,
                                         const InterventionSpec& spec, const WorkspaceConfig& config);

} // namespace heatlab
