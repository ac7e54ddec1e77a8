#include "heatlab/workspace.hpp"

#include <algorithm>
#include <cmath>

#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/pixelwise.hpp"
#include "heatlab/spectral.hpp"

namespace heatlab {

namespace {

struct Issue {
    Errc code;
    std::string message;
};

GridSpec grid_from_json(const Json& j) {
    GridSpec s;
    try {
        s.width = j.at("width").get<int>();
        s.height = j.at("height").get<int>();
        s.origin_x = j.at("origin_x").get<double>();
        s.origin_y = j.at("origin_y").get<double>();
        s.pixel_size = j.at("pixel_size").get<double>();
        s.crs_code = j.at("epsg").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, std::string("workspace grid: ") + e.what());
    }
    s.validate();
    return s;
}

Json grid_to_json(const GridSpec& s) {
    return Json{{"width", s.width},       {"height", s.height},         {"origin_x", s.origin_x},
                {"origin_y", s.origin_y}, {"pixel_size", s.pixel_size}, {"epsg", s.crs_code}};
}

// Parses one scene folder, appending problems to `issues`.
std::optional<SceneRecord> read_scene(const fs::path& dir, const Workspace& ws, std::vector<Issue>& issues) {
    const std::string id = dir.filename().string();
    const fs::path meta_path = dir / "scene.json";
    if (!fs::exists(meta_path)) {
        issues.push_back({Errc::format_error, "scene " + id + ": missing sidecar scene.json"});
        return std::nullopt;
    }
    SceneRecord rec;
    rec.scene_id = id;
    const std::size_t before = issues.size();
    try {
        const Json meta = read_json_file(meta_path);
        rec.timestamp = parse_iso8601(meta.at("timestamp").get<std::string>());
        rec.cloud_fraction = meta.value("cloud_fraction", 0.0);
        if (meta.contains("air_temp_c")) {
            rec.air_temp = meta.at("air_temp_c").get<double>();
        } else {
            rec.air_temp = dir / meta.value("air_temp_grid", std::string("airtemp.grid"));
        }
    } catch (const nlohmann::json::exception& e) {
        issues.push_back({Errc::format_error, "scene " + id + ": malformed scene.json (" + e.what() + ")"});
        return std::nullopt;
    } catch (const Error& e) {
        issues.push_back({e.code(), "scene " + id + ": " + e.what()});
        return std::nullopt;
    }
    if (!(rec.cloud_fraction >= 0.0 && rec.cloud_fraction <= 1.0)) {
        issues.push_back({Errc::format_error, "scene " + id + ": cloud_fraction outside [0, 1]"});
    }

    std::vector<std::string> missing;
    auto check_grid = [&](const std::string& label, const fs::path& path) {
        if (!fs::exists(path) || !fs::exists(sidecar_path(path))) {
            missing.push_back(label + " (" + path.filename().string() + ")");
            return;
        }
        try {
            if (!align_check(read_grid_spec(path), ws.grid)) {
                issues.push_back({Errc::misaligned, "scene " + id + ": " + label +
                                                        " geometry differs from the workspace grid"});
            }
        } catch (const Error& e) {
            issues.push_back({e.code(), "scene " + id + ": " + label + ": " + e.what()});
        }
    };
    for (std::string_view band : kSpectralBands) {
        const std::string name(band);
        const fs::path path = dir / (ws.config.band_mapping.at(name) + ".grid");
        rec.band_paths[name] = path;
        check_grid(name, path);
    }
    if (const auto* p = std::get_if<fs::path>(&rec.air_temp)) check_grid(std::string(kAirTempChannel), *p);
    if (!missing.empty()) {
        std::string msg = "scene " + id + ": missing band";
        msg += missing.size() > 1 ? "s " : " ";
        for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : "") + missing[i];
        issues.push_back({Errc::missing_band, msg});
    }
    if (issues.size() != before) return std::nullopt;
    return rec;
}

} // namespace

const SceneRecord& Workspace::scene(std::string_view scene_id) const {
    for (const auto& s : scenes) {
        if (s.scene_id == scene_id) return s;
    }
    throw Error(Errc::scene_not_found, "scene '" + std::string(scene_id) + "' is not in workspace " + city_id);
}

Workspace catalog_scenes(const fs::path& root, CatalogMode mode, const Json& config_override) {
    const fs::path ws_file = root / "workspace.json";
    if (!fs::exists(ws_file)) {
        throw Error(Errc::io_error, "no workspace.json under " + root.string());
    }
    const Json doc = read_json_file(ws_file);
    Workspace ws;
    ws.root = root;
    try {
        ws.city_id = doc.at("city_id").get<std::string>();
        ws.grid = grid_from_json(doc.at("grid"));
        ws.lulc_path = root / doc.value("lulc", std::string("lulc/lulc.grid"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, "workspace.json: " + std::string(e.what()));
    }
    ws.config_json = merge_json(doc.value("config", Json::object()), config_override);
    ws.config = config_from_json(ws.config_json);
    ws.config_json = to_json(ws.config);

    const fs::path scene_root = root / "scenes";
    std::vector<fs::path> dirs;
    if (fs::is_directory(scene_root)) {
        for (const auto& e : fs::directory_iterator(scene_root)) {
            if (e.is_directory()) dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<Issue> issues;
    for (const auto& dir : dirs) {
        if (auto rec = read_scene(dir, ws, issues)) ws.scenes.push_back(std::move(*rec));
    }
    if (!issues.empty() && mode == CatalogMode::strict) {
        std::string msg;
        for (const auto& i : issues) msg += (msg.empty() ? "" : "; ") + i.message;
        throw Error(issues.front().code, msg);
    }
    for (auto& i : issues) ws.issues.push_back(std::move(i.message));
    return ws;
}

bool scene_passes(const SceneRecord& scene, const SceneFilter& filter, double utc_offset_hours) {
    const LocalTime t = to_local(scene.timestamp, utc_offset_hours);
    return filter.months.contains(t.month) && t.hour >= filter.hour_begin && t.hour < filter.hour_end &&
           scene.cloud_fraction <= filter.max_cloud;
}

std::vector<SceneRecord> filter_scenes(const std::vector<SceneRecord>& scenes, const SceneFilter& filter,
                                       double utc_offset_hours) {
    std::vector<SceneRecord> out;
    std::copy_if(scenes.begin(), scenes.end(), std::back_inserter(out),
                 [&](const SceneRecord& s) { return scene_passes(s, filter, utc_offset_hours); });
    return out;
}

std::vector<SceneRecord> filter_scenes(const Workspace& ws) {
    return filter_scenes(ws.scenes, ws.config.scene_filter, ws.config.utc_offset_hours);
}

SceneStack::SceneStack(std::string scene_id, Timestamp timestamp, double utc_offset_hours, const GridSpec& spec)
    : scene_id_(std::move(scene_id)), timestamp_(timestamp), utc_offset_(utc_offset_hours), spec_(spec) {}

void SceneStack::add_channel(std::string name, GeoGrid grid) {
    if (has(name)) throw Error(Errc::invalid_argument, "scene stack already holds channel '" + name + "'");
    require_aligned(spec_, grid.spec(), "scene stack channel");
    channels_.emplace_back(std::move(name), std::move(grid));
}

SceneStack SceneStack::with_channel(std::string_view name, GeoGrid grid, std::string provenance) const {
    require_aligned(spec_, grid.spec(), "scene stack channel");
    SceneStack out = *this;
    for (auto& [n, g] : out.channels_) {
        if (n == name) {
            g = std::move(grid);
            out.provenance_.push_back(std::move(provenance));
            return out;
        }
    }
    throw Error(Errc::missing_band, "scene stack has no channel '" + std::string(name) + "'");
}

bool SceneStack::has(std::string_view name) const {
    return std::any_of(channels_.begin(), channels_.end(), [&](const auto& c) { return c.first == name; });
}

const GeoGrid& SceneStack::channel(std::string_view name) const {
    for (const auto& [n, g] : channels_) {
        if (n == name) return g;
    }
    throw Error(Errc::missing_band, "scene " + scene_id_ + " has no channel '" + std::string(name) + "'");
}

std::vector<std::string> SceneStack::names() const {
    std::vector<std::string> out;
    for (const auto& c : channels_) out.push_back(c.first);
    return out;
}

unsigned SceneStack::local_month() const { return to_local(timestamp_, utc_offset_).month; }

SceneStack build_stack(const SceneRecord& scene, const Workspace& ws) {
    SceneStack stack(scene.scene_id, scene.timestamp, ws.config.utc_offset_hours, ws.grid);
    for (std::string_view band : kSpectralBands) {
        auto it = scene.band_paths.find(std::string(band));
        if (it == scene.band_paths.end()) {
            throw Error(Errc::missing_band, "scene " + scene.scene_id + " lacks band " + std::string(band));
        }
        GeoGrid g = read_grid(it->second);
        require_aligned(ws.grid, g.spec(), "scene band");
        stack.add_channel(std::string(band), std::move(g));
    }
    if (const auto* value = std::get_if<double>(&scene.air_temp)) {
        stack.add_channel(std::string(kAirTempChannel), GeoGrid::filled(ws.grid, static_cast<float>(*value)));
    } else {
        GeoGrid g = read_grid(std::get<fs::path>(scene.air_temp));
        require_aligned(ws.grid, g.spec(), "air-temperature grid");
        stack.add_channel(std::string(kAirTempChannel), std::move(g));
    }
    return stack;
}

GeoGrid load_lulc(const Workspace& ws) {
    GeoGrid lulc = read_grid(ws.lulc_path);
    if (align_check(lulc.spec(), ws.grid)) return lulc;
    if (lulc.spec().pixel_size >= ws.grid.pixel_size) {
        throw Error(Errc::misaligned, "LULC grid is not aligned with the workspace grid and is not finer");
    }
    return resample_majority(lulc, ws.grid);
}

void write_workspace_file(const fs::path& root, const std::string& city_id, const GridSpec& grid,
                          const WorkspaceConfig& config) {
    write_json_file(root / "workspace.json", Json{{"city_id", city_id},
                                                  {"grid", grid_to_json(grid)},
                                                  {"lulc", "lulc/lulc.grid"},
                                                  {"config", to_json(config)}});
}

void write_scene_file(const fs::path& scene_dir, Timestamp timestamp, double cloud_fraction,
                      const std::variant<double, fs::path>& air_temp) {
    Json j{{"timestamp", format_iso8601(timestamp)}, {"cloud_fraction", cloud_fraction}};
    if (const auto* v = std::get_if<double>(&air_temp)) {
        j["air_temp_c"] = *v;
    } else {
        j["air_temp_grid"] = std::get<fs::path>(air_temp).filename().string();
    }
    write_json_file(scene_dir / "scene.json", j);
}

fs::path truth_lst_path(const Workspace& ws, std::string_view scene_id) {
    return ws.root / "lst" / (std::string(scene_id) + ".grid");
}

fs::path prediction_path(const Workspace& ws, std::string_view variant, std::string_view scene_id) {
    return ws.root / "predictions" / std::string(variant) / (std::string(scene_id) + ".grid");
}

GeoGrid derive_lst(const SceneStack& stack, const WorkspaceConfig& config) {
    GeoGrid t1 = stack.channel("tirs1");
    GeoGrid t2 = stack.channel("tirs2");
    if (config.thermal_unit == "kelvin") {
        t1 = kelvin_to_celsius(t1);
        t2 = kelvin_to_celsius(t2);
    }
    const GeoGrid eps = emissivity(ndvi(stack.channel("nir"), stack.channel("red")), config.emissivity);
    const GeoGrid d_eps = GeoGrid::filled(stack.spec(), static_cast<float>(config.eps_diff));
    return split_window_lst(t1, t2, eps, d_eps, config.split_window());
}

GeoGrid mask_clouds(const GeoGrid& lst, const GeoGrid& lulc, const LulcCodes& codes) {
    require_aligned(lst.spec(), lulc.spec(), "cloud mask");
    const float clouds = static_cast<float>(codes.code(LulcClass::clouds));
    std::vector<float> out(lst.values().begin(), lst.values().end());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (lulc.is_valid(i) && lulc[i] == clouds) out[i] = lst.nodata();
    }
    return lst.with_values(std::move(out));
}

GeoGrid truth_lst(const Workspace& ws, const SceneRecord& scene, const GeoGrid& lulc) {
    const fs::path stored = truth_lst_path(ws, scene.scene_id);
    if (fs::exists(stored)) {
        GeoGrid g = read_grid(stored);
        require_aligned(ws.grid, g.spec(), "stored truth LST");
        return g;
    }
    return mask_clouds(derive_lst(build_stack(scene, ws), ws.config), lulc, ws.config.lulc_codes);
}

std::vector<fs::path> convert_geotiffs(const fs::path& root) {
    std::vector<fs::path> dirs{root / "lulc"};
    if (fs::is_directory(root / "scenes")) {
        for (const auto& e : fs::directory_iterator(root / "scenes")) {
            if (e.is_directory()) dirs.push_back(e.path());
        }
    }
    std::sort(dirs.begin(), dirs.end());
    std::vector<fs::path> converted;
    for (const auto& dir : dirs) {
        if (!fs::is_directory(dir)) continue;
        std::vector<fs::path> tifs;
        for (const auto& e : fs::directory_iterator(dir)) {
            const auto ext = e.path().extension();
            if (ext == ".tif" || ext == ".tiff") tifs.push_back(e.path());
        }
        std::sort(tifs.begin(), tifs.end());
        for (const auto& tif : tifs) {
            fs::path target = tif;
            target.replace_extension(".grid");
            if (fs::exists(target)) continue;
            GridMetadata meta;
            const GeoGrid g = import_geotiff(tif, &meta);
            if (meta.band.empty()) meta.band = tif.stem().string();
            write_grid(target, g, meta);
            converted.push_back(target);
        }
    }
    return converted;
}

} // namespace heatlab
