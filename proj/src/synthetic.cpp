#include "heatlab/synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <set>

#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/landcover.hpp"
#include "heatlab/parallel.hpp"
#include "heatlab/random.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum Stream : std::uint64_t { kLulcStream = 1, kSceneStream = 2, kNoiseStream = 1000, kBandStream = 1'000'000 };

std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined value
    std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream + 0x632BE59BD9B4E019ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::vector<std::size_t> shape_pixels(const ParkShape& s, const GridSpec& g) {
    const double cx = g.width / 2.0 + s.offset_x / g.pixel_size;
    const double cy = g.height / 2.0 - s.offset_y / g.pixel_size;
    std::vector<std::size_t> out;
    if (s.width_px < 1 || s.height_px < 1) {
        throw Error(Errc::infeasible_layout, "synthetic shapes need a positive pixel size");
    }
    if (s.kind == ShapeKind::rectangle) {
        const auto c0 = static_cast<int>(std::lround(cx - s.width_px / 2.0));
        const auto r0 = static_cast<int>(std::lround(cy - s.height_px / 2.0));
        if (!g.contains(c0, r0) || !g.contains(c0 + s.width_px - 1, r0 + s.height_px - 1)) {
            throw Error(Errc::infeasible_layout, "synthetic rectangle extends beyond the grid");
        }
        for (int r = r0; r < r0 + s.height_px; ++r) {
            for (int c = c0; c < c0 + s.width_px; ++c) out.push_back(g.index(c, r));
        }
    } else {
        const double rad = s.width_px / 2.0;
        if (cx - rad < 0 || cy - rad < 0 || cx + rad > g.width || cy + rad > g.height) {
            throw Error(Errc::infeasible_layout, "synthetic disc extends beyond the grid");
        }
        for (int r = 0; r < g.height; ++r) {
            for (int c = 0; c < g.width; ++c) {
                const double dx = c + 0.5 - cx, dy = r + 0.5 - cy;
                if (dx * dx + dy * dy <= rad * rad) out.push_back(g.index(c, r));
            }
        }
    }
    if (out.empty()) throw Error(Errc::infeasible_layout, "synthetic shape covers no pixel centre");
    return out;
}

Json shape_json(const ParkShape& s) {
    return Json{{"kind", s.kind == ShapeKind::disc ? "disc" : "rectangle"},
                {"offset_x", s.offset_x},
                {"offset_y", s.offset_y},
                {"width_px", s.width_px},
                {"height_px", s.height_px}};
}

Timestamp scene_time(std::size_t k, std::size_t n) {
    using namespace std::chrono;
    const int year = 2017 + static_cast<int>(k * 9 / std::max<std::size_t>(n, 1));
    const auto month = static_cast<unsigned>(6 + k % 3);
    const auto day = static_cast<unsigned>(1 + (k * 11) % 28);
    const auto hour = static_cast<int>(9 + (k * 5) % 6);
    const auto minute = static_cast<int>((k * 17) % 60);
    return sys_days{year_month_day{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}}} +
           hours{hour} + minutes{minute};
}

std::string scene_id_for(Timestamp t) {
    std::string iso = format_iso8601(t); // YYYY-MM-DDTHH:MM:SSZ
    return iso.substr(0, 4) + iso.substr(5, 2) + iso.substr(8, 2) + "T" + iso.substr(11, 2) + iso.substr(14, 2);
}

} // namespace

void PlantedPhysics::validate() const {
    for (double v : {alpha, beta, gamma, internal_saturation, spillover_decay, air_coupling, min_park_area}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(Errc::invalid_argument, "planted physics parameters must be finite and nonnegative");
        }
    }
    if (!(internal_saturation > 0.0) || !(spillover_decay > 0.0)) {
        throw Error(Errc::invalid_argument, "L_i and L_s must be positive");
    }
    if (!(core_radius >= 0.0) || !(edge_radius > core_radius)) {
        throw Error(Errc::invalid_argument, "density field needs 0 <= core_radius < edge_radius");
    }
}

SyntheticWorldSpec SyntheticWorldSpec::defaults(int size) {
    SyntheticWorldSpec s;
    const double extent = size * 30.0;
    s.grid = GridSpec{size, size, 500000.0, 5000000.0 + extent, 30.0, 32635};
    const double scale = size / 512.0;
    auto px = [scale](int n, int floor) { return std::max(floor, static_cast<int>(std::lround(n * scale))); };
    const double off = 1800.0 * scale;
    s.parks = {
        {ShapeKind::rectangle, -off, off, px(40, 4), px(40, 4)},
        {ShapeKind::rectangle, off, off, px(40, 4), px(40, 4)},
        {ShapeKind::disc, -off, -off, px(40, 5), px(40, 5)},
        {ShapeKind::rectangle, off, -off, px(30, 4), px(50, 5)},
    };
    s.clumps = {{ShapeKind::rectangle, 0.0, 0.0, 3, 3}};
    s.water = {{ShapeKind::disc, -6500.0 * scale, -6000.0 * scale, px(30, 3), px(30, 3)}};
    s.physics.core_radius = 5000.0 * scale;
    s.physics.edge_radius = 7000.0 * scale;
    return s;
}

void SyntheticWorldSpec::validate() const {
    grid.validate();
    physics.validate();
    if (!(noise_std >= 0.0) || !(reflectance_noise >= 0.0)) {
        throw Error(Errc::invalid_argument, "synthetic noise levels must be nonnegative");
    }
    if (scene_count < 1) throw Error(Errc::invalid_argument, "synthetic city needs at least one scene");
    if (!(air_min <= air_max)) throw Error(Errc::invalid_argument, "air_min must not exceed air_max");
}

std::array<double, 6> class_reflectance(LulcClass c) {
    switch (c) {
    case LulcClass::trees: return {0.03, 0.06, 0.04, 0.35, 0.15, 0.07};
    case LulcClass::built: return {0.10, 0.11, 0.12, 0.16, 0.22, 0.20};
    case LulcClass::crops: return {0.05, 0.08, 0.09, 0.24, 0.20, 0.12};
    case LulcClass::water: return {0.05, 0.04, 0.03, 0.02, 0.01, 0.005};
    case LulcClass::bare_ground: return {0.12, 0.14, 0.16, 0.20, 0.28, 0.24};
    case LulcClass::flooded_vegetation: return {0.04, 0.06, 0.05, 0.22, 0.10, 0.05};
    case LulcClass::snow_ice: return {0.80, 0.80, 0.78, 0.70, 0.10, 0.08};
    case LulcClass::clouds: return {0.50, 0.50, 0.50, 0.50, 0.45, 0.40};
    case LulcClass::rangeland: return {0.06, 0.08, 0.09, 0.20, 0.24, 0.16};
    }
    return {};
}

std::vector<double> planted_density(const GridSpec& g, const PlantedPhysics& p) {
    const double cx = g.origin_x + g.width * g.pixel_size / 2.0;
    const double cy = g.origin_y - g.height * g.pixel_size / 2.0;
    std::vector<double> out(g.size());
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            const double rad = std::hypot(g.center_x(c) - cx, g.center_y(r) - cy);
            double v = 0.0;
            if (rad <= p.core_radius) {
                v = 1.0;
            } else if (rad < p.edge_radius) {
                v = (p.edge_radius - rad) / (p.edge_radius - p.core_radius);
            }
            out[g.index(c, r)] = v;
        }
    }
    return out;
}

std::vector<double> planted_lst(const GridSpec& g, const PlantedPhysics& p, const PixelMask& parks,
                                std::span<const double> air, std::span<const double> density) {
    require_aligned(g, parks.spec(), "planted_lst");
    const std::size_t n = g.size();
    if (air.size() != n || density.size() != n) {
        throw Error(Errc::invalid_argument, "planted_lst: air and density must cover the grid");
    }
    const std::size_t n_park = parks.count();
    std::vector<double> d_in(n, std::numeric_limits<double>::infinity());
    std::vector<double> d_out(n, std::numeric_limits<double>::infinity());
    if (n_park > 0 && n_park < n) {
        d_in = euclidean_distance_values(parks, DistanceSide::inside);
        d_out = euclidean_distance_values(parks, DistanceSide::outside);
    }
    std::vector<double> out(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::isnan(air[i])) continue;
        double v = p.t_base + p.air_coupling * (air[i] - p.air_ref) + p.alpha * density[i];
        if (parks[i]) {
            v -= p.beta * std::min(d_in[i] / p.internal_saturation, 1.0);
        } else {
            v -= p.gamma * std::exp(-d_out[i] / p.spillover_decay);
        }
        out[i] = v;
    }
    return out;
}

SyntheticCity::SyntheticCity(SyntheticWorldSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    const GridSpec& g = spec_.grid;
    const LulcCodes codes = LulcCodes::impact_observatory();
    density_ = planted_density(g, spec_.physics);

    // -1 unassigned; shapes may not overlap or touch.
    std::vector<int> cls(g.size(), -1);
    auto place = [&](const std::vector<ParkShape>& shapes, LulcClass c, bool park) {
        for (const auto& s : shapes) {
            const auto pix = shape_pixels(s, g);
            const double area = static_cast<double>(pix.size()) * g.pixel_area();
            if (c == LulcClass::trees && park != (area >= spec_.physics.min_park_area)) {
                throw Error(Errc::infeasible_layout, park ? "a synthetic park is below the minimum park area"
                                                          : "a synthetic clump reaches the minimum park area");
            }
            for (std::size_t i : pix) {
                const int col = static_cast<int>(i % static_cast<std::size_t>(g.width));
                const int row = static_cast<int>(i / static_cast<std::size_t>(g.width));
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        if (g.contains(col + dc, row + dr) && cls[g.index(col + dc, row + dr)] >= 0) {
                            throw Error(Errc::infeasible_layout, "synthetic shapes overlap or touch");
                        }
                    }
                }
            }
            for (std::size_t i : pix) cls[i] = static_cast<int>(c);
        }
    };
    place(spec_.parks, LulcClass::trees, true);
    place(spec_.clumps, LulcClass::trees, false);
    place(spec_.water, LulcClass::water, false);

    Rng rng(mix(spec_.seed, kLulcStream));
    std::vector<float> lulc(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double u = rng.uniform();
        LulcClass c;
        if (cls[i] >= 0) {
            c = static_cast<LulcClass>(cls[i]);
        } else if (density_[i] >= 1.0) {
            c = LulcClass::built;
        } else if (density_[i] > 0.0) {
            c = u < density_[i] ? LulcClass::built : LulcClass::rangeland;
        } else {
            c = u < 0.5 ? LulcClass::crops : LulcClass::rangeland;
        }
        lulc[i] = static_cast<float>(codes.code(c));
    }
    lulc_ = GeoGrid(g, std::move(lulc));
    park_mask_ = extract_parks(lulc_, {codes.code(LulcClass::trees)}, spec_.physics.min_park_area).park_mask();

    Rng srng(mix(spec_.seed, kSceneStream));
    std::set<std::string> ids;
    for (int k = 0; k < spec_.scene_count; ++k) {
        Timestamp t = scene_time(static_cast<std::size_t>(k), static_cast<std::size_t>(spec_.scene_count));
        while (ids.contains(scene_id_for(t))) t += std::chrono::minutes{1};
        const double cloud = std::round(srng.uniform(0.0, 0.25) * 1000.0) / 1000.0;
        const auto air = static_cast<double>(static_cast<float>(srng.uniform(spec_.air_min, spec_.air_max)));
        ids.insert(scene_id_for(t));
        scenes_.push_back({scene_id_for(t), t, cloud, air});
    }
    std::sort(scenes_.begin(), scenes_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
}

SyntheticScene SyntheticCity::scene(std::size_t k) const {
    if (k >= scenes_.size()) throw Error(Errc::scene_not_found, "synthetic scene index out of range");
    const SceneInfo& info = scenes_[k];
    const GridSpec& g = spec_.grid;
    const LulcCodes codes = LulcCodes::impact_observatory();

    std::vector<float> air(g.size(), static_cast<float>(info.air));
    if (spec_.gridded_airtemp) {
        for (std::size_t i = 0; i < g.size(); ++i) air[i] = static_cast<float>(info.air + 0.5 * density_[i]);
    }
    std::vector<double> air_d(air.begin(), air.end());
    std::vector<double> lst = planted_lst(g, spec_.physics, park_mask_, air_d, density_);
    const std::uint64_t key = k;
    if (spec_.noise_std > 0.0) {
        Rng noise(mix(spec_.seed, kNoiseStream + key));
        for (double& v : lst) v += spec_.noise_std * noise.normal();
    }
    std::vector<float> truth(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) truth[i] = static_cast<float>(lst[i]);

    std::array<std::vector<float>, 6> bands;
    for (auto& b : bands) b.resize(g.size());
    Rng brng(mix(spec_.seed, kBandStream + key));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto cls = codes.classify(static_cast<int>(lulc_[i]));
        const auto refl = class_reflectance(cls.value_or(LulcClass::bare_ground));
        for (std::size_t b = 0; b < 6; ++b) {
            const double jitter = spec_.reflectance_noise * (2.0 * brng.uniform() - 1.0);
            bands[b][i] = static_cast<float>(std::clamp(refl[b] + jitter, 0.0, 1.0));
        }
    }

    SyntheticScene s;
    s.scene_id = info.id;
    s.timestamp = info.timestamp;
    s.cloud_fraction = info.cloud;
    s.air_temp = info.air;
    s.stack = SceneStack(info.id, info.timestamp, 0.0, g);
    for (std::size_t b = 0; b < 6; ++b) {
        s.stack.add_channel(std::string(kReflectanceBands[b]), GeoGrid(g, std::move(bands[b])));
    }
    s.truth = GeoGrid(g, std::move(truth));
    s.stack.add_channel("tirs1", s.truth);
    s.stack.add_channel("tirs2", s.truth);
    s.stack.add_channel(std::string(kAirTempChannel), GeoGrid(g, std::move(air)));
    return s;
}

Json to_json(const PlantedPhysics& p) {
    return Json{{"t_base", p.t_base},
                {"air_coupling", p.air_coupling},
                {"air_ref", p.air_ref},
                {"alpha", p.alpha},
                {"beta", p.beta},
                {"internal_saturation", p.internal_saturation},
                {"gamma", p.gamma},
                {"spillover_decay", p.spillover_decay},
                {"core_radius", p.core_radius},
                {"edge_radius", p.edge_radius},
                {"min_park_area", p.min_park_area}};
}

PlantedPhysics physics_from_json(const Json& j) {
    PlantedPhysics p;
    try {
        p.t_base = j.at("t_base").get<double>();
        p.air_coupling = j.at("air_coupling").get<double>();
        p.air_ref = j.at("air_ref").get<double>();
        p.alpha = j.at("alpha").get<double>();
        p.beta = j.at("beta").get<double>();
        p.internal_saturation = j.at("internal_saturation").get<double>();
        p.gamma = j.at("gamma").get<double>();
        p.spillover_decay = j.at("spillover_decay").get<double>();
        p.core_radius = j.at("core_radius").get<double>();
        p.edge_radius = j.at("edge_radius").get<double>();
        p.min_park_area = j.at("min_park_area").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, std::string("planted physics: ") + e.what());
    }
    p.validate();
    return p;
}

Json SyntheticCity::metadata() const {
    Json parks = Json::array(), clumps = Json::array(), water = Json::array(), scenes = Json::array();
    for (const auto& s : spec_.parks) parks.push_back(shape_json(s));
    for (const auto& s : spec_.clumps) clumps.push_back(shape_json(s));
    for (const auto& s : spec_.water) water.push_back(shape_json(s));
    for (const auto& s : scenes_) {
        scenes.push_back(Json{{"scene_id", s.id},
                              {"timestamp", format_iso8601(s.timestamp)},
                              {"cloud_fraction", s.cloud},
                              {"air_temp_c", s.air}});
    }
    Json reflectance = Json::object();
    for (auto c : kAllLulcClasses) reflectance[std::string(lulc_name(c))] = class_reflectance(c);
    const GridSpec& g = spec_.grid;
    return Json{
        {"generator", "heatlab synthetic city"},
        {"seed", spec_.seed},
        {"grid",
         {{"width", g.width},
          {"height", g.height},
          {"origin_x", g.origin_x},
          {"origin_y", g.origin_y},
          {"pixel_size", g.pixel_size},
          {"epsg", g.crs_code}}},
        {"physics", to_json(spec_.physics)},
        {"lst_formula", "t_base + air_coupling*(air - air_ref) + alpha*density - beta*min(d_in/internal_saturation, 1)"
                        "*[park] - gamma*exp(-d_out/spillover_decay)*[non-park] + N(0, noise_std)"},
        {"density", "1 within core_radius of the grid centre, linear to 0 at edge_radius"},
        {"noise_std", spec_.noise_std},
        {"reflectance_noise", spec_.reflectance_noise},
        {"gridded_airtemp", spec_.gridded_airtemp},
        {"class_reflectance", reflectance},
        {"thermal_bands", "tirs1 = tirs2 = true LST in degrees C"},
        {"oracle_green_ndvi", kOracleGreenNdvi},
        {"parks", parks},
        {"clumps", clumps},
        {"water", water},
        {"park_pixels", park_mask_.count()},
        {"scenes", scenes},
    };
}

WorkspaceConfig synthetic_workspace_config() {
    WorkspaceConfig c;
    c.baseline.ring_inner = 600.0;
    c.baseline.ring_outer = 1200.0;
    const std::array<double, 12> seasonal{0.8, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.3, 1.1, 1.0, 0.9, 0.8};
    const std::array<std::pair<double, std::array<double, 3>>, 3> warming{{
        {2.6, {0.5, 0.8, 0.9}},
        {4.5, {0.6, 1.2, 2.0}},
        {8.5, {0.7, 1.6, 3.9}},
    }};
    const std::array<int, 3> years{2030, 2050, 2100};
    for (const auto& [rcp, w] : warming) {
        for (std::size_t y = 0; y < years.size(); ++y) {
            ClimateScenario s;
            s.rcp = rcp;
            s.horizon_year = years[y];
            for (std::size_t m = 0; m < 12; ++m) s.monthly_delta[m] = std::round(w[y] * seasonal[m] * 100.0) / 100.0;
            s.source_label = "illustrative synthetic deltas, not derived from climate model output";
            c.forecast.scenarios.push_back(s);
        }
    }
    return c;
}

void write_synthetic_workspace(const std::filesystem::path& root, const std::string& city_id,
                               const SyntheticCity& city, int jobs) {
    namespace fs = std::filesystem;
    const WorkspaceConfig config = synthetic_workspace_config();
    fs::create_directories(root);
    write_workspace_file(root, city_id, city.grid(), config);
    write_grid(root / "lulc" / "lulc.grid", city.lulc(), GridMetadata{"lulc", ""});
    write_json_file(root / "synthetic.json", city.metadata());
    const OraclePredictor oracle(city.grid(), city.spec().physics);
    parallel_for(city.scene_count(), jobs, [&](std::size_t k) {
        const SyntheticScene s = city.scene(k);
        const fs::path dir = root / "scenes" / s.scene_id;
        const std::string ts = format_iso8601(s.timestamp);
        for (std::string_view band : kSpectralBands) {
            const std::string name(band);
            write_grid(dir / (config.band_mapping.at(name) + ".grid"), s.stack.channel(name), GridMetadata{name, ts});
        }
        if (city.spec().gridded_airtemp) {
            const fs::path air = dir / "airtemp.grid";
            write_grid(air, s.stack.channel(kAirTempChannel), GridMetadata{"airtemp", ts});
            write_scene_file(dir, s.timestamp, s.cloud_fraction, air);
        } else {
            write_scene_file(dir, s.timestamp, s.cloud_fraction, s.air_temp);
        }
        write_grid(root / "predictions" / "oracle" / (s.scene_id + ".grid"), oracle.predict(s.stack),
                   GridMetadata{"lst", ts});
    });
}

OraclePredictor::OraclePredictor(GridSpec grid, PlantedPhysics physics)
    : grid_(grid), physics_(physics), density_(planted_density(grid, physics)) {
    physics_.validate();
}

std::vector<double> OraclePredictor::predict_values(const SceneStack& stack) const {
    require_aligned(grid_, stack.spec(), "oracle predictor");
    const GeoGrid& red = stack.channel("red");
    const GeoGrid& nir = stack.channel("nir");
    const GeoGrid& air = stack.channel(kAirTempChannel);
    std::vector<float> green(grid_.size(), 0.0f);
    std::vector<double> air_d(grid_.size(), kNaN);
    for (std::size_t i = 0; i < grid_.size(); ++i) {
        bool ok = true;
        for (const auto& name : stack.names()) ok = ok && stack.channel(name).is_valid(i);
        if (!ok) continue;
        const double den = static_cast<double>(nir[i]) + red[i];
        const double v = den == 0.0 ? 0.0 : (nir[i] - static_cast<double>(red[i])) / den;
        green[i] = v >= kOracleGreenNdvi ? 1.0f : 0.0f;
        air_d[i] = air[i];
    }
    const PixelMask parks = extract_parks(GeoGrid(grid_, std::move(green)), {1}, physics_.min_park_area).park_mask();
    return planted_lst(grid_, physics_, parks, air_d, density_);
}

std::unique_ptr<OraclePredictor> OraclePredictor::from_workspace(const Workspace& ws) {
    const auto path = ws.root / "synthetic.json";
    if (!std::filesystem::exists(path)) {
        throw Error(Errc::predictor_unavailable, "the oracle predictor needs a synthetic workspace (synthetic.json)");
    }
    const Json meta = read_json_file(path);
    return std::make_unique<OraclePredictor>(ws.grid, physics_from_json(meta.at("physics")));
}

} // namespace heatlab
