#pragma once

#include <string>

#include "heatlab/grid_io.hpp"
#include "heatlab/workspace.hpp"
#include "oracles.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// Uniform-valued scene with every band present.
inline void write_scene(const fs::path& root, const heatlab::GridSpec& s, const heatlab::WorkspaceConfig& cfg,
                        const std::string& id, const std::string& timestamp, double cloud, double air,
                        double thermal = 30.0) {
    const fs::path dir = root / "scenes" / id;
    const std::map<std::string, float> value{{"blue", 0.05f}, {"green", 0.08f}, {"red", 0.1f},
                                             {"nir", 0.3f},   {"swir1", 0.2f},  {"swir2", 0.15f},
                                             {"tirs1", static_cast<float>(thermal)},
                                             {"tirs2", static_cast<float>(thermal)}};
    for (const auto& [band, v] : value) {
        heatlab::write_grid(dir / (cfg.band_mapping.at(band) + ".grid"), heatlab::GeoGrid::filled(s, v));
    }
    heatlab::write_scene_file(dir, heatlab::parse_iso8601(timestamp), cloud, air);
}

/// Workspace with an all-built LULC and the given scenes.
inline void write_workspace(const fs::path& root, const heatlab::GridSpec& s,
                            const heatlab::WorkspaceConfig& cfg = {}) {
    heatlab::write_workspace_file(root, "tiny", s, cfg);
    heatlab::write_grid(root / "lulc" / "lulc.grid",
                        heatlab::GeoGrid::filled(s, static_cast<float>(cfg.lulc_codes.code(heatlab::LulcClass::built))));
}

} // namespace fixture
