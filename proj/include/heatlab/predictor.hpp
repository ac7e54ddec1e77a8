#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "heatlab/grid.hpp"
#include "heatlab/json_io.hpp"
#include "heatlab/spectral.hpp"
#include "heatlab/workspace.hpp"

namespace heatlab {

/// A land-surface-temperature provider. Output is aligned with the input
/// stack; nodata in any used channel yields nodata.
class Predictor {
public:
    virtual ~Predictor() = default;

    virtual std::string variant() const = 0;

    /// Per-pixel prediction in degrees C, NaN where undefined.
    virtual std::vector<double> predict_values(const SceneStack& stack) const = 0;

    /// Float grid of predict_values.
    GeoGrid predict(const SceneStack& stack) const;

    /// True when predictions respond to edited or forced input stacks.
    virtual bool accepts_modified_stacks() const { return true; }
};

/// LST = w0 + w_airtemp*airtemp + w_ndvi*ndvi + w_ndbi*ndbi + w_albedo*albedo.
struct LinearLstModel {
    double w0 = 0.0;
    double w_airtemp = 0.0;
    double w_ndvi = 0.0;
    double w_ndbi = 0.0;
    double w_albedo = 0.0;
    AlbedoWeights albedo;
    std::int64_t training_pixels = 0;

    void validate() const;
};

Json to_json(const LinearLstModel& m);
LinearLstModel model_from_json(const Json& j);

/// Per-pixel features airtemp, ndvi, ndbi and albedo; NaN where undefined.
struct FeatureColumns {
    std::vector<double> airtemp, ndvi, ndbi, albedo;
};
FeatureColumns feature_columns(const SceneStack& stack, const AlbedoWeights& albedo);

struct TrainingPair {
    SceneStack stack;
    GeoGrid truth;
};

/// Ridge term added to the standardized normal equations.
inline constexpr double kRidgeLambda = 1e-8;

/// Ordinary least squares over every pixel with finite features and truth.
/// Features with zero variance get weight 0. Throws rank_deficient when the
/// remaining features are collinear and insufficient_data below five usable
/// pixels per feature.
LinearLstModel fit_baseline(std::span<const TrainingPair> train, const AlbedoWeights& albedo);

/// Streaming form: scene k is loaded on demand, moments are computed on `jobs`
/// threads and merged in scene order.
LinearLstModel fit_baseline(std::size_t scenes, const std::function<TrainingPair(std::size_t)>& load,
                            const AlbedoWeights& albedo, int jobs = 1);

std::vector<double> predict_baseline_values(const LinearLstModel& m, const SceneStack& s);
GeoGrid predict_baseline(const LinearLstModel& m, const SceneStack& s);

class LinearPredictor final : public Predictor {
public:
    explicit LinearPredictor(LinearLstModel model, std::string variant = "baseline")
        : model_(std::move(model)), variant_(std::move(variant)) {}
    std::string variant() const override { return variant_; }
    std::vector<double> predict_values(const SceneStack& stack) const override;
    const LinearLstModel& model() const { return model_; }

private:
    LinearLstModel model_;
    std::string variant_;
};

/// Stored prediction grids, one per scene id. Edited or forced stacks have no
/// stored counterpart and are refused with predictor_unavailable.
class ExternalPredictions final : public Predictor {
public:
    ExternalPredictions(std::string variant, GridSpec grid, std::map<std::string, std::filesystem::path> files);
    std::string variant() const override { return variant_; }
    std::vector<double> predict_values(const SceneStack& stack) const override;
    bool accepts_modified_stacks() const override { return false; }
    std::vector<std::string> scene_ids() const;

private:
    std::string variant_;
    GridSpec grid_;
    std::map<std::string, std::filesystem::path> files_;
};

/// Indexes `<dir>/<scene_id>.grid`; every grid must align with the workspace.
std::unique_ptr<ExternalPredictions> load_external_predictions(const std::filesystem::path& dir,
                                                               const Workspace& ws, const std::string& variant);

} // namespace heatlab
