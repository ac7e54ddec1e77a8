#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "heatlab/config.hpp"
#include "heatlab/grid.hpp"
#include "heatlab/timeutil.hpp"

namespace heatlab {

namespace fs = std::filesystem;

/// Fixed band order of every scene stack; the air-temperature channel follows.
inline constexpr std::array<std::string_view, 8> kSpectralBands = {"blue",  "green", "red",   "nir",
                                                                   "swir1", "swir2", "tirs1", "tirs2"};
inline constexpr std::array<std::string_view, 6> kReflectanceBands = {"blue", "green", "red", "nir", "swir1", "swir2"};
inline constexpr std::string_view kAirTempChannel = "airtemp";

struct SceneRecord {
    std::string scene_id;
    Timestamp timestamp{};
    std::map<std::string, fs::path> band_paths;  ///< band name -> grid file
    std::variant<double, fs::path> air_temp;    ///< scalar degrees C or a grid file
    double cloud_fraction = 0.0;
};

/// One city: `workspace.json`, `lulc/lulc.grid`, `scenes/<id>/scene.json`
/// plus one `<code>.grid` per band.
struct Workspace {
    fs::path root;
    std::string city_id;
    GridSpec grid;
    std::vector<SceneRecord> scenes; ///< ascending scene_id
    fs::path lulc_path;
    WorkspaceConfig config;
    Json config_json;                ///< effective config after overrides
    std::vector<std::string> issues; ///< malformed scenes found by a lenient catalog

    const SceneRecord& scene(std::string_view scene_id) const;
};

enum class CatalogMode {
    strict,  ///< any malformed scene is an error
    lenient, ///< malformed scenes are listed in Workspace::issues and skipped
};

/// Indexes a workspace directory. `config_override` is merged over the
/// config stored in workspace.json.
Workspace catalog_scenes(const fs::path& root, CatalogMode mode = CatalogMode::strict,
                         const Json& config_override = Json::object());

bool scene_passes(const SceneRecord& scene, const SceneFilter& filter, double utc_offset_hours);

/// Stable predicate filter.
std::vector<SceneRecord> filter_scenes(const std::vector<SceneRecord>& scenes, const SceneFilter& filter,
                                       double utc_offset_hours);
std::vector<SceneRecord> filter_scenes(const Workspace& ws);

/// Ordered, aligned channels of one scene. Channels are added once through
/// the builder interface and never mutated afterwards.
class SceneStack {
public:
    SceneStack() = default;
    SceneStack(std::string scene_id, Timestamp timestamp, double utc_offset_hours, const GridSpec& spec);

    void add_channel(std::string name, GeoGrid grid);

    /// Copy with one channel replaced and a provenance entry appended.
    SceneStack with_channel(std::string_view name, GeoGrid grid, std::string provenance) const;

    bool has(std::string_view name) const;
    const GeoGrid& channel(std::string_view name) const;
    std::vector<std::string> names() const;
    std::size_t channel_count() const { return channels_.size(); }

    const std::string& scene_id() const { return scene_id_; }
    Timestamp timestamp() const { return timestamp_; }
    double utc_offset_hours() const { return utc_offset_; }
    unsigned local_month() const;
    const GridSpec& spec() const { return spec_; }

    /// Empty for stacks read unchanged from disk.
    const std::vector<std::string>& provenance() const { return provenance_; }
    void add_provenance(std::string entry) { provenance_.push_back(std::move(entry)); }

private:
    std::string scene_id_;
    Timestamp timestamp_{};
    double utc_offset_ = 0.0;
    GridSpec spec_{};
    std::vector<std::pair<std::string, GeoGrid>> channels_;
    std::vector<std::string> provenance_;
};

/// Bands in kSpectralBands order, then the air-temperature channel.
SceneStack build_stack(const SceneRecord& scene, const Workspace& ws);

/// LULC on the workspace grid; finer inputs are majority-resampled.
GeoGrid load_lulc(const Workspace& ws);

/// Writes workspace.json.
void write_workspace_file(const fs::path& root, const std::string& city_id, const GridSpec& grid,
                          const WorkspaceConfig& config);

/// Writes scene.json for a scene whose band grids are already in place.
void write_scene_file(const fs::path& scene_dir, Timestamp timestamp, double cloud_fraction,
                      const std::variant<double, fs::path>& air_temp);

fs::path truth_lst_path(const Workspace& ws, std::string_view scene_id);
fs::path prediction_path(const Workspace& ws, std::string_view variant, std::string_view scene_id);

/// Split-window LST in degrees C from a stack, using the workspace presets.
GeoGrid derive_lst(const SceneStack& stack, const WorkspaceConfig& config);

/// Pixels carrying the LULC clouds class become nodata.
GeoGrid mask_clouds(const GeoGrid& lst, const GeoGrid& lulc, const LulcCodes& codes);

/// Stored truth LST when ingested, otherwise derived on the fly.
GeoGrid truth_lst(const Workspace& ws, const SceneRecord& scene, const GeoGrid& lulc);

/// Converts `<stem>.tif` files lacking a `.grid` twin under the scene and
/// LULC folders. Returns the converted paths.
std::vector<fs::path> convert_geotiffs(const fs::path& root);

} // namespace heatlab
