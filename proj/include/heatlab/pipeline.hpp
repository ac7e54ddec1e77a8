#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "heatlab/climate.hpp"
#include "heatlab/cooling.hpp"
#include "heatlab/evaluation.hpp"
#include "heatlab/intervention.hpp"
#include "heatlab/predictor.hpp"
#include "heatlab/render.hpp"
#include "heatlab/workspace.hpp"

// Workspace-level orchestration shared by the CLI, the service and the Python module.

namespace heatlab {

inline constexpr std::string_view kWorkspacesEnv = "HEATLAB_WORKSPACES";

/// A path with a separator, or one that exists, is used as is; other names are
/// looked up under $HEATLAB_WORKSPACES.
fs::path resolve_workspace(std::string_view name_or_path);

/// Immutable per-workspace snapshot: land cover, park geometry and masks.
struct City {
    Workspace ws;
    GeoGrid lulc;
    CoolingGeometry geometry;
    PixelMask built;
    GeoGrid built_fraction;
    PixelMask rural;
    std::vector<SceneRecord> scenes; ///< passing the scene filter, ascending id

    std::vector<std::string> scene_ids() const;
    const SceneRecord& filtered_scene(std::string_view scene_id) const;
};

City open_city(Workspace ws);
City open_city(const fs::path& root, const Json& config_override = Json::object(),
               CatalogMode mode = CatalogMode::strict);

/// "baseline" when a fitted model exists, "oracle" for synthetic workspaces and
/// one entry per directory under predictions/. Sorted, unique.
std::vector<std::string> list_variants(const Workspace& ws);

/// baseline: models/baseline.json; oracle: the planted physics of a synthetic
/// workspace, else stored predictions; anything else: predictions/<variant>/.
std::unique_ptr<Predictor> make_predictor(const Workspace& ws, std::string_view variant);

fs::path baseline_model_path(const Workspace& ws);
fs::path analysis_path(const Workspace& ws, std::string_view name);

GeoGrid scene_truth(const City& city, const SceneRecord& scene);
/// Prediction with the truth's cloud mask applied.
GeoGrid scene_prediction(const City& city, const Predictor& p, const SceneRecord& scene);

/// LST minus its mean over rural pixels.
GeoGrid rural_anomaly(const GeoGrid& lst, const PixelMask& rural);

// --- cooling --------------------------------------------------------------

struct VariantCooling {
    std::string variant;
    CoolingProfile internal;
    CoolingProfile spillover;
    std::optional<MetricReport> internal_metrics;  ///< absent without overlapping bins
    std::optional<MetricReport> spillover_metrics;
};

struct CoolingAnalysis {
    std::vector<std::string> scene_ids;
    CoolingProfile internal;  ///< truth, pooled over parks and scenes
    CoolingProfile spillover;
    std::size_t park_count = 0;
    std::vector<VariantCooling> variants;
};

CoolingAnalysis analyze_cooling(const City& city, const std::vector<std::string>& variants, int jobs = 1);
Json to_json(const CoolingAnalysis& a, const City& city);

// --- gradient and source/sink ----------------------------------------------

/// Mean rural-referenced truth anomaly over the filtered scenes.
GeoGrid mean_truth_anomaly(const City& city, int jobs = 1);
Json gradient_report(const City& city, const GeoGrid& mean_anomaly);
Json source_sink_report(const City& city, const GeoGrid& mean_anomaly);

// --- splits and evaluation --------------------------------------------------

struct SceneKeys {
    std::vector<std::string> scene_ids;
    std::vector<double> keys;        ///< ordering key per scene
    std::vector<double> truth_mean;  ///< mean truth LST per scene
};

SceneKeys scene_keys(const City& city, std::string_view ordering_key, int jobs = 1);
SplitPlan plan_split(const SceneKeys& keys, SplitStrategy strategy, const SplitConfig& cfg);

/// The split stored in analysis/split.json, or a fresh high-heat plan.
SplitPlan load_or_plan_split(const City& city, const SceneKeys& keys);

LinearLstModel fit_city_baseline(const City& city, const std::vector<std::string>& scene_ids, int jobs = 1);

struct SceneEvaluation {
    std::string scene_id;
    double key = 0.0;
    double mean_truth = 0.0;
    double mean_prediction = 0.0;
    MetricReport pixels;
};

struct VariantEvaluation {
    std::string variant;
    MetricReport pixels; ///< pooled over every scene
    std::vector<SceneEvaluation> scenes;
    std::optional<ExtrapolationReport> extrapolation;
};

VariantEvaluation evaluate_variant(const City& city, const Predictor& p, const SceneKeys& keys,
                                   const SplitPlan& plan, int jobs = 1);
Json to_json(const VariantEvaluation& e, const SplitPlan& plan, const SceneKeys& keys);

struct DirectoryEvaluation {
    MetricReport pooled;
    std::vector<std::pair<std::string, MetricReport>> scenes;
    std::vector<std::string> unpaired;
};

/// Pairs `<scene>.grid` files by name.
DirectoryEvaluation evaluate_directories(const fs::path& truth_dir, const fs::path& pred_dir);
Json to_json(const DirectoryEvaluation& e);

std::optional<ExtrapolationReport> load_extrapolation(const Workspace& ws, std::string_view variant);

// --- forecast ---------------------------------------------------------------

const ClimateScenario& find_scenario(const WorkspaceConfig& config, double rcp, int year);
ForecastResult run_forecast(const City& city, const ClimateScenario& scenario, const Predictor& p, int jobs = 1);

// --- interventions ----------------------------------------------------------

/// Fills an empty scene with the first filtered scene.
InterventionSpec resolve_intervention(const City& city, InterventionSpec spec);
InterventionResult run_intervention(const City& city, const InterventionSpec& resolved, const Predictor& p);

fs::path intervention_dir(const Workspace& ws, std::string_view id);
/// result.json plus before/after/delta/mask grids and PNG renders.
void save_intervention(const Workspace& ws, const InterventionResult& r);
Json load_intervention(const Workspace& ws, std::string_view id);

// --- layers -----------------------------------------------------------------

inline constexpr std::array<std::string_view, 5> kLayers = {"rgb", "ndvi", "lulc", "lst", "anomaly"};

struct LayerRequest {
    std::string layer;
    std::string scene_id;  ///< empty: first filtered scene
    std::string variant;   ///< empty: truth LST
    std::string palette;   ///< empty: layer default
};

struct LayerRender {
    Image image;
    GridStats stats;
    std::string scene_id;
};

LayerRender render_layer(const City& city, const LayerRequest& req);

void check_sync_size(const City& city);

} // namespace heatlab
