#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "heatlab/grid.hpp"
#include "heatlab/json_io.hpp"
#include "heatlab/predictor.hpp"
#include "heatlab/workspace.hpp"

namespace heatlab {

enum class ShapeKind { rectangle, disc };

/// A planted green area. Offsets are metres from the grid centre (y north);
/// sizes are in pixels (a disc uses `width_px` as its diameter).
struct ParkShape {
    ShapeKind kind = ShapeKind::rectangle;
    double offset_x = 0.0;
    double offset_y = 0.0;
    int width_px = 1;
    int height_px = 1;
};

/// Planted temperature field:
///   t_base + air_coupling*(air - air_ref) + alpha*bf
///   - beta*min(d_in/L_i, 1) on park pixels
///   - gamma*exp(-d_out/L_s) elsewhere
///   + N(0, sigma)
/// where bf is a radial urban-density field (1 inside core_radius, falling
/// linearly to 0 at edge_radius).
struct PlantedPhysics {
    double t_base = 24.0;
    double air_coupling = 1.0;
    double air_ref = 22.0;
    double alpha = 3.3;
    double beta = 2.6;
    double internal_saturation = 200.0;
    double gamma = 3.5;
    double spillover_decay = 150.0 / std::log(3.5);
    double core_radius = 5000.0;
    double edge_radius = 7000.0;
    double min_park_area = 10000.0;

    void validate() const;
};

struct SyntheticWorldSpec {
    GridSpec grid;
    std::uint64_t seed = 7;
    PlantedPhysics physics;
    double noise_std = 0.0;
    std::vector<ParkShape> parks;    ///< trees, each at least min_park_area
    std::vector<ParkShape> clumps;   ///< trees below min_park_area
    std::vector<ParkShape> water;
    int scene_count = 20;
    double air_min = 18.0;
    double air_max = 27.0;
    bool gridded_airtemp = false;    ///< adds a density-following gradient to air temperature
    double reflectance_noise = 0.005;

    /// Default layout scaled to a square grid of `size` pixels at 30 m.
    static SyntheticWorldSpec defaults(int size = 512);
    void validate() const;
};

/// Reflectance (blue, green, red, nir, swir1, swir2) planted per class.
std::array<double, 6> class_reflectance(LulcClass c);

/// NDVI at or above this marks green pixels for the oracle predictor.
inline constexpr double kOracleGreenNdvi = 0.6;

/// Radial density field of the planted city.
std::vector<double> planted_density(const GridSpec& grid, const PlantedPhysics& p);

/// Noise-free planted LST for a given park mask and per-pixel air temperature.
std::vector<double> planted_lst(const GridSpec& grid, const PlantedPhysics& p, const PixelMask& parks,
                                std::span<const double> air, std::span<const double> density);

struct SyntheticScene {
    std::string scene_id;
    Timestamp timestamp{};
    double cloud_fraction = 0.0;
    double air_temp = 0.0;
    SceneStack stack;
    GeoGrid truth;
};

/// A deterministic synthetic city; scenes are generated on demand.
class SyntheticCity {
public:
    explicit SyntheticCity(SyntheticWorldSpec spec);

    const SyntheticWorldSpec& spec() const { return spec_; }
    const GridSpec& grid() const { return spec_.grid; }
    const GeoGrid& lulc() const { return lulc_; }
    const PixelMask& park_mask() const { return park_mask_; }
    const std::vector<double>& density() const { return density_; }
    std::size_t scene_count() const { return scenes_.size(); }
    const std::string& scene_id(std::size_t k) const { return scenes_[k].id; }
    double air_temp(std::size_t k) const { return scenes_[k].air; }

    /// Stack and truth of scene k; identical on every call.
    SyntheticScene scene(std::size_t k) const;

    Json metadata() const;

private:
    struct SceneInfo {
        std::string id;
        Timestamp timestamp;
        double cloud;
        double air;
    };
    SyntheticWorldSpec spec_;
    GeoGrid lulc_;
    PixelMask park_mask_;
    std::vector<double> density_;
    std::vector<SceneInfo> scenes_;
};

inline SyntheticCity generate_synthetic_city(SyntheticWorldSpec spec) { return SyntheticCity(std::move(spec)); }

/// Workspace config used for synthetic cities.
WorkspaceConfig synthetic_workspace_config();

/// Writes a complete workspace: workspace.json, LULC, scenes, synthetic.json
/// and stored oracle predictions under predictions/oracle.
void write_synthetic_workspace(const std::filesystem::path& root, const std::string& city_id,
                               const SyntheticCity& city, int jobs = 1);

/// Recomputes the planted physics from a stack: green pixels by NDVI, parks
/// by the planted area floor, density from the metadata.
class OraclePredictor final : public Predictor {
public:
    OraclePredictor(GridSpec grid, PlantedPhysics physics);
    std::string variant() const override { return "oracle"; }
    std::vector<double> predict_values(const SceneStack& stack) const override;

    /// Reads `<root>/synthetic.json`; predictor_unavailable when absent.
    static std::unique_ptr<OraclePredictor> from_workspace(const Workspace& ws);

private:
    GridSpec grid_;
    PlantedPhysics physics_;
    std::vector<double> density_;
};

Json to_json(const PlantedPhysics& p);
PlantedPhysics physics_from_json(const Json& j);

} // namespace heatlab
