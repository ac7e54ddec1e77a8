#include "heatlab/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <sstream>

#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/landcover.hpp"
#include "heatlab/parallel.hpp"
#include "heatlab/pixelwise.hpp"
#include "heatlab/reports.hpp"
#include "heatlab/spectral.hpp"
#include "heatlab/synthetic.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_label(std::string_view label, const char* what) {
    const bool ok = !label.empty() && label.size() <= 64 && label.front() != '.' &&
                    std::all_of(label.begin(), label.end(), [](char c) {
                        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
                    });
    if (!ok) throw Error(Errc::invalid_argument, std::string("invalid ") + what + " '" + std::string(label) + "'");
}

double grid_mean(const GeoGrid& g) {
    double s = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.is_valid(i)) {
            s += g[i];
            ++n;
        }
    }
    return n > 0 ? s / static_cast<double>(n) : kNaN;
}

double mean_of(std::span<const double> v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

std::optional<MetricReport> try_compare(const CoolingProfile& truth, const CoolingProfile& pred) {
    try {
        return compare_profiles(truth, pred);
    } catch (const Error& e) {
        if (e.code() == Errc::empty_input) return std::nullopt;
        throw;
    }
}

std::pair<CoolingProfile, CoolingProfile> pooled(const std::vector<SceneCooling>& scenes) {
    std::vector<CoolingProfile> in, out;
    for (const auto& s : scenes) {
        in.push_back(s.internal);
        out.push_back(s.spillover);
    }
    return {aggregate_profiles(in), aggregate_profiles(out)};
}

} // namespace

fs::path resolve_workspace(std::string_view name_or_path) {
    const fs::path p(name_or_path);
    if (name_or_path.find('/') != std::string_view::npos || fs::exists(p)) return p;
    if (const char* root = std::getenv(std::string(kWorkspacesEnv).c_str()); root && *root) return fs::path(root) / p;
    return p;
}

std::vector<std::string> City::scene_ids() const {
    std::vector<std::string> ids;
    for (const auto& s : scenes) ids.push_back(s.scene_id);
    return ids;
}

const SceneRecord& City::filtered_scene(std::string_view scene_id) const {
    for (const auto& s : scenes) {
        if (s.scene_id == scene_id) return s;
    }
    ws.scene(scene_id); // throws scene_not_found for unknown ids
    throw Error(Errc::scene_not_found, "scene " + std::string(scene_id) + " does not pass the scene filter");
}

City open_city(Workspace ws) {
    City c;
    c.lulc = load_lulc(ws);
    const WorkspaceConfig& cfg = ws.config;
    ParkSet parks = extract_parks(c.lulc, cfg.green_codes(), cfg.min_park_area);
    const PixelMask park_mask = parks.park_mask();
    c.built = built_mask(c.lulc, cfg.built_codes());
    c.built_fraction = built_fraction(c.built, cfg.built_fraction_window);
    c.rural = rural_mask(c.built_fraction, c.lulc, park_mask, cfg.lulc_codes);
    c.geometry = cooling_geometry(std::move(parks), c.built);
    c.scenes = filter_scenes(ws);
    c.ws = std::move(ws);
    return c;
}

City open_city(const fs::path& root, const Json& config_override, CatalogMode mode) {
    return open_city(catalog_scenes(root, mode, config_override));
}

fs::path baseline_model_path(const Workspace& ws) { return ws.root / "models" / "baseline.json"; }

fs::path analysis_path(const Workspace& ws, std::string_view name) { return ws.root / "analysis" / std::string(name); }

std::vector<std::string> list_variants(const Workspace& ws) {
    std::set<std::string> out;
    if (fs::exists(baseline_model_path(ws))) out.insert("baseline");
    if (fs::exists(ws.root / "synthetic.json")) out.insert("oracle");
    if (fs::is_directory(ws.root / "predictions")) {
        for (const auto& e : fs::directory_iterator(ws.root / "predictions")) {
            if (e.is_directory()) out.insert(e.path().filename().string());
        }
    }
    return {out.begin(), out.end()};
}

std::unique_ptr<Predictor> make_predictor(const Workspace& ws, std::string_view variant) {
    check_label(variant, "variant");
    if (variant == "baseline") {
        const fs::path path = baseline_model_path(ws);
        if (!fs::exists(path)) {
            throw Error(Errc::variant_not_found, "variant 'baseline' has no fitted model; run fit-baseline first");
        }
        return std::make_unique<LinearPredictor>(model_from_json(read_json_file(path).at("model")));
    }
    if (variant == "oracle" && fs::exists(ws.root / "synthetic.json")) return OraclePredictor::from_workspace(ws);
    const std::string v(variant);
    return load_external_predictions(ws.root / "predictions" / v, ws, v);
}

GeoGrid scene_truth(const City& city, const SceneRecord& scene) { return truth_lst(city.ws, scene, city.lulc); }

GeoGrid scene_prediction(const City& city, const Predictor& p, const SceneRecord& scene) {
    return mask_clouds(p.predict(build_stack(scene, city.ws)), city.lulc, city.ws.config.lulc_codes);
}

GeoGrid rural_anomaly(const GeoGrid& lst, const PixelMask& rural) {
    require_aligned(lst.spec(), rural.spec(), "rural_anomaly");
    std::vector<double> v(lst.size(), kNaN);
    for (std::size_t i = 0; i < lst.size(); ++i) {
        if (lst.is_valid(i)) v[i] = lst[i];
    }
    const double ref = masked_mean(v, rural);
    if (std::isnan(ref)) throw Error(Errc::insufficient_data, "no rural pixel holds a temperature");
    return pixelwise([ref](double t) { return t - ref; }, lst);
}

// --- cooling ------------------------------------------------------------------

CoolingAnalysis analyze_cooling(const City& city, const std::vector<std::string>& variants, int jobs) {
    if (city.scenes.empty()) throw Error(Errc::empty_input, "analyze cooling: no scenes pass the filters");
    const WorkspaceConfig& cfg = city.ws.config;
    auto run = [&](const Predictor* p) {
        std::vector<SceneCooling> per_scene(city.scenes.size());
        parallel_for(city.scenes.size(), jobs, [&](std::size_t k) {
            const SceneRecord& s = city.scenes[k];
            const GeoGrid lst = p ? scene_prediction(city, *p, s) : scene_truth(city, s);
            per_scene[k] = scene_cooling(lst, city.geometry, cfg.baseline, cfg.profile);
        });
        return pooled(per_scene);
    };
    CoolingAnalysis a;
    a.scene_ids = city.scene_ids();
    a.park_count = city.geometry.parks.count();
    std::tie(a.internal, a.spillover) = run(nullptr);
    for (const auto& v : variants) {
        const auto p = make_predictor(city.ws, v);
        VariantCooling vc;
        vc.variant = v;
        std::tie(vc.internal, vc.spillover) = run(p.get());
        vc.internal_metrics = try_compare(a.internal, vc.internal);
        vc.spillover_metrics = try_compare(a.spillover, vc.spillover);
        a.variants.push_back(std::move(vc));
    }
    return a;
}

Json to_json(const CoolingAnalysis& a, const City& city) {
    const WorkspaceConfig& cfg = city.ws.config;
    Json variants = Json::array();
    for (const auto& v : a.variants) {
        auto m = [](const std::optional<MetricReport>& r) { return r ? to_json(*r) : Json(nullptr); };
        variants.push_back(Json{{"variant", v.variant},
                                {"internal", to_json(v.internal)},
                                {"spillover", to_json(v.spillover)},
                                {"metrics", {{"internal", m(v.internal_metrics)}, {"spillover", m(v.spillover_metrics)}}}});
    }
    return Json{{"schema", "heatlab.cooling/1"},
                {"city_id", city.ws.city_id},
                {"scenes", a.scene_ids},
                {"park_count", a.park_count},
                {"settings",
                 {{"bin_width", cfg.profile.bin_width},
                  {"internal_max", cfg.profile.internal_max},
                  {"spillover_max", cfg.profile.spillover_max},
                  {"baseline_ring", {cfg.baseline.ring_inner, cfg.baseline.ring_outer}},
                  {"baseline_min_pixels", cfg.baseline.min_pixels}}},
                {"truth", {{"internal", to_json(a.internal)}, {"spillover", to_json(a.spillover)}}},
                {"variants", variants}};
}

// --- gradient and source/sink ----------------------------------------------------

GeoGrid mean_truth_anomaly(const City& city, int jobs) {
    if (city.scenes.empty()) throw Error(Errc::empty_input, "no scenes pass the filters");
    std::vector<GeoGrid> maps(city.scenes.size());
    parallel_for(city.scenes.size(), jobs,
                 [&](std::size_t k) { maps[k] = rural_anomaly(scene_truth(city, city.scenes[k]), city.rural); });
    const GridSpec& g = city.ws.grid;
    std::vector<float> out(g.size(), kDefaultNodata);
    for (std::size_t i = 0; i < g.size(); ++i) {
        double s = 0.0;
        int n = 0;
        for (const auto& m : maps) {
            if (m.is_valid(i)) {
                s += m[i];
                ++n;
            }
        }
        if (n > 0) out[i] = static_cast<float>(s / n);
    }
    return GeoGrid(g, std::move(out));
}

Json gradient_report(const City& city, const GeoGrid& mean_anomaly) {
    const auto decile = urban_gradient(mean_anomaly, city.built_fraction, GradientAxis::built_fraction_decile);
    const auto radial = urban_gradient(mean_anomaly, city.built_fraction, GradientAxis::radial_distance,
                                       city.ws.config.radial_bin_width);
    return Json{{"schema", "heatlab.gradient/1"},
                {"city_id", city.ws.city_id},
                {"scenes", city.scene_ids()},
                {"reference", "mean LST over rural pixels of each scene"},
                {"anomaly_stats", to_json(grid_stats(mean_anomaly))},
                {"built_fraction_decile", to_json(decile)},
                {"radial_distance", to_json(radial)}};
}

Json source_sink_report(const City& city, const GeoGrid& mean_anomaly) {
    const auto table = source_sink(mean_anomaly, city.lulc, city.ws.config.source_sink_quantiles);
    Json j = to_json(table, city.ws.config.lulc_codes);
    return Json{{"schema", "heatlab.source_sink/1"},
                {"city_id", city.ws.city_id},
                {"scenes", city.scene_ids()},
                {"table", j}};
}

// --- splits and evaluation ----------------------------------------------------

SceneKeys scene_keys(const City& city, std::string_view ordering_key, int jobs) {
    if (ordering_key != "lst" && ordering_key != "airtemp") {
        throw Error(Errc::invalid_argument, "ordering key must be 'lst' or 'airtemp'");
    }
    SceneKeys k;
    k.scene_ids = city.scene_ids();
    k.keys.resize(city.scenes.size());
    k.truth_mean.resize(city.scenes.size());
    parallel_for(city.scenes.size(), jobs, [&](std::size_t i) {
        const SceneRecord& s = city.scenes[i];
        k.truth_mean[i] = grid_mean(scene_truth(city, s));
        if (ordering_key == "lst") {
            k.keys[i] = k.truth_mean[i];
        } else if (const double* air = std::get_if<double>(&s.air_temp)) {
            k.keys[i] = *air;
        } else {
            k.keys[i] = grid_mean(read_grid(std::get<fs::path>(s.air_temp)));
        }
    });
    return k;
}

SplitPlan plan_split(const SceneKeys& keys, SplitStrategy strategy, const SplitConfig& cfg) {
    if (strategy == SplitStrategy::random) {
        SplitPlan p = split_random(keys.keys.size(), cfg.fractions, cfg.seed);
        p.ordering_key = cfg.ordering_key;
        return p;
    }
    return split_high_heat(keys.keys, cfg.q, cfg.train_val_ratio, cfg.seed, cfg.ordering_key);
}

SplitPlan load_or_plan_split(const City& city, const SceneKeys& keys) {
    const fs::path path = analysis_path(city.ws, "split.json");
    if (fs::exists(path)) return split_from_json(read_json_file(path).at("plan"), keys.scene_ids);
    return plan_split(keys, SplitStrategy::high_heat, city.ws.config.split);
}

LinearLstModel fit_city_baseline(const City& city, const std::vector<std::string>& scene_ids, int jobs) {
    if (scene_ids.empty()) throw Error(Errc::empty_input, "fit-baseline: no training scenes");
    std::vector<const SceneRecord*> recs;
    for (const auto& id : scene_ids) recs.push_back(&city.filtered_scene(id));
    return fit_baseline(
        recs.size(),
        [&](std::size_t k) { return TrainingPair{build_stack(*recs[k], city.ws), scene_truth(city, *recs[k])}; },
        city.ws.config.albedo, jobs);
}

VariantEvaluation evaluate_variant(const City& city, const Predictor& p, const SceneKeys& keys,
                                   const SplitPlan& plan, int jobs) {
    const std::size_t n = city.scenes.size();
    if (keys.scene_ids != city.scene_ids()) throw Error(Errc::invalid_argument, "scene keys do not match the workspace");
    VariantEvaluation e;
    e.variant = p.variant();
    e.scenes.resize(n);
    std::vector<double> abs_sum(n), sq_sum(n), err_sum(n);
    parallel_for(n, jobs, [&](std::size_t k) {
        const SceneRecord& s = city.scenes[k];
        const auto [pred, truth] = paired_valid(scene_prediction(city, p, s), scene_truth(city, s));
        SceneEvaluation row;
        row.scene_id = s.scene_id;
        row.key = keys.keys[k];
        row.mean_truth = mean_of(truth);
        row.mean_prediction = mean_of(pred);
        if (!pred.empty()) row.pixels = metrics(pred, truth);
        for (std::size_t i = 0; i < pred.size(); ++i) {
            const double d = pred[i] - truth[i];
            abs_sum[k] += std::abs(d);
            sq_sum[k] += d * d;
            err_sum[k] += d;
        }
        e.scenes[k] = row;
    });
    double a = 0.0, q = 0.0, b = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        a += abs_sum[k];
        q += sq_sum[k];
        b += err_sum[k];
        e.pixels.n += e.scenes[k].pixels.n;
    }
    if (e.pixels.n == 0) throw Error(Errc::empty_input, "evaluate: no valid prediction/truth pixel pairs");
    const auto total = static_cast<double>(e.pixels.n);
    e.pixels.mae = a / total;
    e.pixels.mse = q / total;
    e.pixels.rmse = std::sqrt(e.pixels.mse);
    e.pixels.mbe = b / total;
    if (!plan.test.empty()) {
        std::vector<double> pred(n), truth(n);
        for (std::size_t k = 0; k < n; ++k) {
            pred[k] = e.scenes[k].mean_prediction;
            truth[k] = e.scenes[k].mean_truth;
        }
        e.extrapolation = extrapolation_report(plan, keys.keys, pred, truth, city.ws.config.split.success_tolerance);
    }
    return e;
}

Json to_json(const VariantEvaluation& e, const SplitPlan& plan, const SceneKeys& keys) {
    Json rows = Json::array();
    for (const auto& s : e.scenes) {
        rows.push_back(Json{{"scene_id", s.scene_id},
                            {"key", s.key},
                            {"mean_truth", s.mean_truth},
                            {"mean_prediction", s.mean_prediction},
                            {"metrics", to_json(s.pixels)}});
    }
    return Json{{"schema", "heatlab.evaluation/1"},
                {"variant", e.variant},
                {"pixels", to_json(e.pixels)},
                {"split", to_json(plan, keys.scene_ids)},
                {"extrapolation", e.extrapolation ? to_json(*e.extrapolation) : Json(nullptr)},
                {"scenes", rows}};
}

DirectoryEvaluation evaluate_directories(const fs::path& truth_dir, const fs::path& pred_dir) {
    for (const auto& d : {truth_dir, pred_dir}) {
        if (!fs::is_directory(d)) throw Error(Errc::io_error, "not a directory: " + d.string());
    }
    auto stems = [](const fs::path& dir) {
        std::set<std::string> out;
        for (const auto& e : fs::directory_iterator(dir)) {
            if (e.path().extension() == ".grid") out.insert(e.path().stem().string());
        }
        return out;
    };
    const auto truth = stems(truth_dir), pred = stems(pred_dir);
    DirectoryEvaluation out;
    std::vector<double> all_p, all_t;
    for (const auto& id : truth) {
        if (!pred.contains(id)) {
            out.unpaired.push_back(id);
            continue;
        }
        const auto [p, t] = paired_valid(read_grid(pred_dir / (id + ".grid")), read_grid(truth_dir / (id + ".grid")));
        if (p.empty()) {
            out.unpaired.push_back(id);
            continue;
        }
        out.scenes.emplace_back(id, metrics(p, t));
        all_p.insert(all_p.end(), p.begin(), p.end());
        all_t.insert(all_t.end(), t.begin(), t.end());
    }
    for (const auto& id : pred) {
        if (!truth.contains(id)) out.unpaired.push_back(id);
    }
    std::sort(out.unpaired.begin(), out.unpaired.end());
    if (all_p.empty()) throw Error(Errc::empty_input, "eval: no scene pairs with valid pixels");
    out.pooled = metrics(all_p, all_t);
    return out;
}

Json to_json(const DirectoryEvaluation& e) {
    Json rows = Json::array();
    for (const auto& [id, m] : e.scenes) rows.push_back(Json{{"scene_id", id}, {"metrics", to_json(m)}});
    return Json{{"schema", "heatlab.eval/1"}, {"pooled", to_json(e.pooled)}, {"scenes", rows}, {"unpaired", e.unpaired}};
}

std::optional<ExtrapolationReport> load_extrapolation(const Workspace& ws, std::string_view variant) {
    const fs::path path = analysis_path(ws, "extrapolation_" + std::string(variant) + ".json");
    if (!fs::exists(path)) return std::nullopt;
    const Json j = read_json_file(path);
    if (j.at("report").is_null()) return std::nullopt;
    return extrapolation_from_json(j.at("report"));
}

// --- forecast -------------------------------------------------------------------

const ClimateScenario& find_scenario(const WorkspaceConfig& config, double rcp, int year) {
    for (const auto& s : config.forecast.scenarios) {
        if (std::abs(s.rcp - rcp) < 1e-9 && s.horizon_year == year) return s;
    }
    std::ostringstream os;
    os << "no scenario for rcp " << rcp << " and year " << year;
    throw Error(Errc::scenario_not_found, os.str());
}

ForecastResult run_forecast(const City& city, const ClimateScenario& scenario, const Predictor& p, int jobs) {
    ForecastInputs in;
    in.scene_count = city.scenes.size();
    in.scene = [&city](std::size_t k) { return build_stack(city.scenes[k], city.ws); };
    in.urban = city.built;
    in.rural = city.rural;
    in.threshold = city.ws.config.forecast.uhi_threshold;
    in.ordering_key = city.ws.config.split.ordering_key;
    in.extrapolation = load_extrapolation(city.ws, p.variant());
    return forecast(in, scenario, p, jobs);
}

// --- interventions ----------------------------------------------------------------

InterventionSpec resolve_intervention(const City& city, InterventionSpec spec) {
    check_label(spec.variant, "variant");
    if (spec.scene_id.empty()) {
        if (city.scenes.empty()) throw Error(Errc::empty_input, "no scenes pass the filters");
        spec.scene_id = city.scenes.front().scene_id;
    } else {
        city.ws.scene(spec.scene_id);
    }
    spec.validate();
    return spec;
}

InterventionResult run_intervention(const City& city, const InterventionSpec& resolved, const Predictor& p) {
    const SceneStack stack = build_stack(city.ws.scene(resolved.scene_id), city.ws);
    return evaluate_intervention(p, stack, city.lulc, resolved, city.ws.config);
}

fs::path intervention_dir(const Workspace& ws, std::string_view id) {
    check_label(id, "intervention id");
    return ws.root / "interventions" / std::string(id);
}

void save_intervention(const Workspace& ws, const InterventionResult& r) {
    const fs::path dir = intervention_dir(ws, r.id);
    fs::create_directories(dir);
    write_grid(dir / "before.grid", r.before_lst, GridMetadata{"lst", ""});
    write_grid(dir / "after.grid", r.after_lst, GridMetadata{"lst", ""});
    write_grid(dir / "delta.grid", r.delta, GridMetadata{"delta", ""});
    std::vector<float> m(r.mask.size());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = r.mask[i] ? 1.0f : 0.0f;
    write_grid(dir / "mask.grid", GeoGrid(r.mask.spec(), std::move(m)), GridMetadata{"mask", ""});
    const LayerStyle lst = layer_style("lst"), delta = layer_style("delta");
    write_bytes(dir / "before.png", encode_png(render_scalar(r.before_lst, palette_by_name(lst.palette), lst.lo, lst.hi)));
    write_bytes(dir / "after.png", encode_png(render_scalar(r.after_lst, palette_by_name(lst.palette), lst.lo, lst.hi)));
    write_bytes(dir / "delta.png", encode_png(render_scalar(r.delta, palette_by_name(delta.palette), delta.lo, delta.hi)));
    // Written last: its presence marks a complete result.
    write_json_file(dir / "result.json", to_json(r));
}

Json load_intervention(const Workspace& ws, std::string_view id) {
    if (id.size() != 16 || !std::all_of(id.begin(), id.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
        throw Error(Errc::intervention_not_found, "no intervention '" + std::string(id) + "'");
    }
    const fs::path path = intervention_dir(ws, id) / "result.json";
    if (!fs::exists(path)) throw Error(Errc::intervention_not_found, "no intervention '" + std::string(id) + "'");
    return read_json_file(path);
}

// --- layers -------------------------------------------------------------------

LayerRender render_layer(const City& city, const LayerRequest& req) {
    if (std::find(kLayers.begin(), kLayers.end(), req.layer) == kLayers.end()) {
        throw Error(Errc::layer_not_found, "unknown layer '" + req.layer + "'");
    }
    LayerRender out;
    if (req.layer == "lulc") {
        out.image = render_categorical(city.lulc, city.ws.config.lulc_codes);
        out.stats = grid_stats(city.lulc);
        return out;
    }
    if (req.scene_id.empty() && city.scenes.empty()) throw Error(Errc::empty_input, "no scenes pass the filters");
    const SceneRecord& scene = req.scene_id.empty() ? city.scenes.front() : city.ws.scene(req.scene_id);
    out.scene_id = scene.scene_id;
    const SceneStack stack = build_stack(scene, city.ws);
    if (req.layer == "rgb") {
        const GeoGrid &r = stack.channel("red"), &g = stack.channel("green"), &b = stack.channel("blue");
        out.image = render_rgb(r, g, b);
        out.stats = grid_stats(pixelwise([](double x, double y, double z) { return (x + y + z) / 3.0; }, r, g, b));
        return out;
    }
    GeoGrid values;
    if (req.layer == "ndvi") {
        values = ndvi(stack.channel("nir"), stack.channel("red"));
    } else {
        values = req.variant.empty() ? scene_truth(city, scene)
                                     : scene_prediction(city, *make_predictor(city.ws, req.variant), scene);
        if (req.layer == "anomaly") values = rural_anomaly(values, city.rural);
    }
    const LayerStyle style = layer_style(req.layer);
    const Palette palette = palette_by_name(req.palette.empty() ? style.palette : req.palette);
    out.image = render_scalar(values, palette, style.lo, style.hi);
    out.stats = grid_stats(values);
    return out;
}

void check_sync_size(const City& city) {
    const auto n = static_cast<std::int64_t>(city.ws.grid.size());
    if (n > city.ws.config.max_sync_pixels) {
        throw Error(Errc::grid_too_large, "grid has " + std::to_string(n) + " pixels; synchronous requests allow " +
                                              std::to_string(city.ws.config.max_sync_pixels));
    }
}

} // namespace heatlab
