#include "heatlab/cli.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <iostream>
#include <set>

#include "heatlab/config.hpp"
#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/parallel.hpp"
#include "heatlab/pipeline.hpp"
#include "heatlab/reports.hpp"
#include "heatlab/service.hpp"
#include "heatlab/synthetic.hpp"

namespace heatlab {

namespace {

struct Manifest {
    std::string command;
    std::vector<std::string> argv;
    Json config = nullptr;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    Json seed = nullptr;
    Json summary = Json::object();
};

void write_manifest(const fs::path& dir, const Manifest& m, double wall_seconds) {
    const std::string config_hash = m.config.is_null() ? std::string() : sha256_hex(m.config.dump());
    Json j{{"command", m.command},
           {"argv", m.argv},
           {"config_hash", config_hash},
           {"effective_config", m.config},
           {"inputs", m.inputs},
           {"outputs", m.outputs},
           {"seed", m.seed},
           {"version", HEATLAB_VERSION},
           {"wall_time_s", wall_seconds},
           {"summary", m.summary}};
    std::string slug = m.command;
    std::replace(slug.begin(), slug.end(), ' ', '-');
    const std::string stamp = std::to_string(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch()).count());
    write_json_file(dir / "manifests" / (slug + "-" + stamp + ".json"), j);
}

/// Parses `a.b.c=value`; the value is JSON when it parses, else a string.
Json override_from_assignment(const std::string& text) {
    const auto eq = text.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw Error(Errc::invalid_argument, "--set expects key=value, got '" + text + "'");
    }
    const std::string path = text.substr(0, eq);
    const std::string raw = text.substr(eq + 1);
    Json value = Json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    std::vector<std::string> keys;
    std::string k;
    std::istringstream is(path);
    while (std::getline(is, k, '.')) keys.push_back(k);
    Json out = value;
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) out = Json{{*it, out}};
    return out;
}

struct Common {
    std::string workspace;
    int jobs = 0;
    std::vector<std::string> sets;

    Json overrides(Json extra = Json::object()) const {
        Json o = Json::object();
        for (const auto& s : sets) o = merge_json(o, override_from_assignment(s));
        return merge_json(o, extra);
    }
};

void add_common(CLI::App* cmd, Common& c, bool workspace_required = true) {
    auto* opt = cmd->add_option("-w,--workspace", c.workspace,
                                "workspace directory, or a name under $HEATLAB_WORKSPACES");
    if (workspace_required) opt->required();
    cmd->add_option("-j,--jobs", c.jobs, "scene-level threads (default: all cores)");
    cmd->add_option("--set", c.sets, "config override key.path=value (repeatable)");
}

std::string rel(const Workspace& ws, const fs::path& p) { return fs::relative(p, ws.root).generic_string(); }

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"heatlab: urban heat island analysis toolkit"};
    app.set_version_flag("--version", HEATLAB_VERSION);
    app.require_subcommand(1);

    Manifest m;
    fs::path manifest_root;
    std::function<void()> action;

    // synth
    Common synth_c;
    std::string synth_config = "default";
    std::string city_id = "synthetic";
    int size = 512;
    std::uint64_t synth_seed = 7;
    double noise = 0.0;
    int scene_count = 20;
    bool gridded = false;
    bool force = false;
    auto* synth = app.add_subcommand("synth", "write a synthetic city workspace with planted physics");
    add_common(synth, synth_c);
    synth->add_option("--config", synth_config, "'default' or a JSON file of synthetic-world overrides");
    synth->add_option("--city-id", city_id, "city id recorded in workspace.json");
    synth->add_option("--size", size, "grid width and height in pixels")->check(CLI::Range(64, 4096));
    synth->add_option("--seed", synth_seed, "generator seed");
    synth->add_option("--noise", noise, "Gaussian LST noise sigma (degrees C)")->check(CLI::NonNegativeNumber);
    synth->add_option("--scenes", scene_count, "number of scenes")->check(CLI::Range(1, 1000));
    synth->add_flag("--gridded-airtemp", gridded, "store air temperature as a grid with an urban gradient");
    synth->add_flag("--force", force, "overwrite an existing workspace");
    synth->callback([&] {
        action = [&] {
            const fs::path root = resolve_workspace(synth_c.workspace);
            if (fs::exists(root / "workspace.json") && !force) {
                throw Error(Errc::invalid_argument, root.string() + " already holds a workspace; pass --force");
            }
            SyntheticWorldSpec spec = SyntheticWorldSpec::defaults(size);
            spec.seed = synth_seed;
            spec.noise_std = noise;
            spec.scene_count = scene_count;
            spec.gridded_airtemp = gridded;
            if (synth_config != "default") {
                const Json j = read_json_file(synth_config);
                m.inputs.push_back(synth_config);
                if (j.contains("physics")) spec.physics = physics_from_json(merge_json(to_json(spec.physics), j["physics"]));
                spec.noise_std = j.value("noise_std", spec.noise_std);
                spec.scene_count = j.value("scene_count", spec.scene_count);
                spec.seed = j.value("seed", spec.seed);
                spec.gridded_airtemp = j.value("gridded_airtemp", spec.gridded_airtemp);
            }
            spec.validate();
            const SyntheticCity city(spec);
            write_synthetic_workspace(root, city_id, city, synth_c.jobs);
            m.seed = spec.seed;
            m.config = to_json(synthetic_workspace_config());
            m.outputs = {"workspace.json", "synthetic.json", "lulc/lulc.grid", "scenes/", "predictions/oracle/"};
            m.summary = Json{{"size", size}, {"scenes", spec.scene_count}, {"noise_std", spec.noise_std},
                             {"park_pixels", city.park_mask().count()}};
            manifest_root = root;
            out << "wrote synthetic workspace " << root.string() << " (" << spec.scene_count << " scenes, " << size
                << "x" << size << ")\n";
        };
    });

    // ingest
    Common ingest_c;
    bool strict = false;
    auto* ingest = app.add_subcommand("ingest", "convert GeoTIFFs, catalog scenes and derive LST");
    add_common(ingest, ingest_c);
    ingest->add_flag("--strict", strict, "fail on the first malformed scene instead of skipping it");
    ingest->callback([&] {
        action = [&] {
            const fs::path root = resolve_workspace(ingest_c.workspace);
            const auto converted = convert_geotiffs(root);
            const City city = open_city(root, ingest_c.overrides(), strict ? CatalogMode::strict : CatalogMode::lenient);
            const Workspace& ws = city.ws;
            parallel_for(city.scenes.size(), ingest_c.jobs, [&](std::size_t k) {
                const SceneRecord& s = city.scenes[k];
                const fs::path target = truth_lst_path(ws, s.scene_id);
                if (fs::exists(target)) return;
                const GeoGrid lst =
                    mask_clouds(derive_lst(build_stack(s, ws), ws.config), city.lulc, ws.config.lulc_codes);
                write_grid(target, lst, GridMetadata{"lst", format_iso8601(s.timestamp)});
            });
            Json scenes = Json::array();
            for (const auto& s : city.scenes) {
                scenes.push_back(Json{{"scene_id", s.scene_id}, {"timestamp", format_iso8601(s.timestamp)}});
            }
            Json conv = Json::array();
            for (const auto& p : converted) conv.push_back(rel(ws, p));
            write_json_file(root / "lst" / "index.json",
                            Json{{"schema", "heatlab.lst_index/1"},
                                 {"city_id", ws.city_id},
                                 {"scenes", scenes},
                                 {"skipped", ws.issues},
                                 {"converted", conv}});
            m.config = ws.config_json;
            m.inputs = {"workspace.json", "scenes/"};
            m.outputs = {"lst/index.json", "lst/"};
            m.summary = Json{{"catalogued", ws.scenes.size()}, {"filtered", city.scenes.size()},
                             {"skipped", ws.issues.size()}, {"converted", converted.size()}};
            manifest_root = root;
            out << "ingested " << city.scenes.size() << " scenes (" << ws.issues.size() << " skipped)\n";
            for (const auto& issue : ws.issues) err << "warning: " << issue << "\n";
        };
    });

    // analyze
    auto* analyze = app.add_subcommand("analyze", "phase-1 analyses");
    analyze->require_subcommand(1);
    Common an_c;
    std::vector<std::string> an_variants;
    bool no_variants = false;
    auto* cooling = analyze->add_subcommand("cooling", "internal and spillover cooling profiles");
    add_common(cooling, an_c);
    cooling->add_option("--variant", an_variants, "predictor variants to compare (default: all available)");
    cooling->add_flag("--truth-only", no_variants, "skip predictor variants");
    cooling->callback([&] {
        action = [&] {
            const City city = open_city(resolve_workspace(an_c.workspace), an_c.overrides());
            std::vector<std::string> variants = an_variants;
            if (variants.empty() && !no_variants) variants = list_variants(city.ws);
            const CoolingAnalysis a = analyze_cooling(city, variants, an_c.jobs);
            write_json_file(analysis_path(city.ws, "cooling.json"), to_json(a, city));
            m.config = city.ws.config_json;
            m.inputs = {"lulc/", "scenes/"};
            m.outputs = {"analysis/cooling.json"};
            m.summary = Json{{"scenes", a.scene_ids.size()}, {"parks", a.park_count}, {"variants", variants}};
            manifest_root = city.ws.root;
            out << "cooling profiles for " << a.park_count << " parks over " << a.scene_ids.size() << " scenes\n";
        };
    });
    auto* gradient = analyze->add_subcommand("gradient", "urban anomaly gradient by built fraction and radius");
    add_common(gradient, an_c);
    gradient->callback([&] {
        action = [&] {
            const City city = open_city(resolve_workspace(an_c.workspace), an_c.overrides());
            const GeoGrid anomaly = mean_truth_anomaly(city, an_c.jobs);
            write_grid(analysis_path(city.ws, "anomaly_truth.grid"), anomaly, GridMetadata{"anomaly", ""});
            write_json_file(analysis_path(city.ws, "gradient.json"), gradient_report(city, anomaly));
            m.config = city.ws.config_json;
            m.inputs = {"lulc/", "scenes/"};
            m.outputs = {"analysis/gradient.json", "analysis/anomaly_truth.grid"};
            manifest_root = city.ws.root;
            out << "urban gradient over " << city.scenes.size() << " scenes\n";
        };
    });
    auto* sourcesink = analyze->add_subcommand("source-sink", "hottest and coolest anomaly quantiles by land cover");
    add_common(sourcesink, an_c);
    sourcesink->callback([&] {
        action = [&] {
            const City city = open_city(resolve_workspace(an_c.workspace), an_c.overrides());
            const GeoGrid anomaly = mean_truth_anomaly(city, an_c.jobs);
            write_json_file(analysis_path(city.ws, "source_sink.json"), source_sink_report(city, anomaly));
            m.config = city.ws.config_json;
            m.inputs = {"lulc/", "scenes/"};
            m.outputs = {"analysis/source_sink.json"};
            manifest_root = city.ws.root;
            out << "source/sink table over " << city.scenes.size() << " scenes\n";
        };
    });

    // split
    Common split_c;
    std::string strategy = "high-heat";
    std::optional<double> split_q;
    std::optional<std::uint64_t> split_seed;
    std::optional<std::string> ordering;
    auto* split = app.add_subcommand("split", "train/val/test plan over the filtered scenes");
    add_common(split, split_c);
    split->add_option("--strategy", strategy, "random or high-heat")->check(CLI::IsMember({"random", "high-heat"}));
    split->add_option("--q", split_q, "high-heat quantile");
    split->add_option("--seed", split_seed, "shuffle seed");
    split->add_option("--ordering-key", ordering, "lst or airtemp")->check(CLI::IsMember({"lst", "airtemp"}));
    split->callback([&] {
        action = [&] {
            Json extra = Json::object();
            if (split_q) extra["split"]["q"] = *split_q;
            if (split_seed) extra["split"]["seed"] = *split_seed;
            if (ordering) extra["split"]["ordering_key"] = *ordering;
            const City city = open_city(resolve_workspace(split_c.workspace), split_c.overrides(extra));
            const SplitConfig& cfg = city.ws.config.split;
            const SceneKeys keys = scene_keys(city, cfg.ordering_key, split_c.jobs);
            const SplitPlan plan = plan_split(keys, parse_split_strategy(strategy), cfg);
            Json key_rows = Json::array();
            for (std::size_t i = 0; i < keys.scene_ids.size(); ++i) {
                key_rows.push_back(Json{{"scene_id", keys.scene_ids[i]}, {"key", keys.keys[i]}});
            }
            write_json_file(analysis_path(city.ws, "split.json"),
                            Json{{"schema", "heatlab.split/1"},
                                 {"city_id", city.ws.city_id},
                                 {"plan", to_json(plan, keys.scene_ids)},
                                 {"keys", key_rows}});
            m.config = city.ws.config_json;
            m.seed = cfg.seed;
            m.inputs = {"scenes/"};
            m.outputs = {"analysis/split.json"};
            m.summary = Json{{"strategy", strategy},
                             {"train", plan.train.size()},
                             {"val", plan.val.size()},
                             {"test", plan.test.size()},
                             {"threshold", plan.threshold ? Json(*plan.threshold) : Json(nullptr)},
                             {"warnings", plan.warnings}};
            manifest_root = city.ws.root;
            out << "split " << strategy << ": train " << plan.train.size() << ", val " << plan.val.size() << ", test "
                << plan.test.size() << "\n";
            for (const auto& w : plan.warnings) err << "warning: " << w << "\n";
        };
    });

    // fit-baseline
    Common fit_c;
    auto* fit = app.add_subcommand("fit-baseline", "least-squares baseline on the train and val scenes");
    add_common(fit, fit_c);
    fit->callback([&] {
        action = [&] {
            const City city = open_city(resolve_workspace(fit_c.workspace), fit_c.overrides());
            const SceneKeys keys = scene_keys(city, city.ws.config.split.ordering_key, fit_c.jobs);
            const SplitPlan plan = load_or_plan_split(city, keys);
            std::vector<std::size_t> idx(plan.train);
            idx.insert(idx.end(), plan.val.begin(), plan.val.end());
            std::sort(idx.begin(), idx.end());
            std::vector<std::string> ids;
            for (std::size_t i : idx) ids.push_back(keys.scene_ids[i]);
            const LinearLstModel model = fit_city_baseline(city, ids, fit_c.jobs);
            write_json_file(baseline_model_path(city.ws), Json{{"schema", "heatlab.baseline_model/1"},
                                                               {"model", to_json(model)},
                                                               {"trained_on", ids},
                                                               {"split", to_json(plan, keys.scene_ids)}});
            const LinearPredictor p(model);
            const VariantEvaluation e = evaluate_variant(city, p, keys, plan, fit_c.jobs);
            write_json_file(analysis_path(city.ws, "eval_baseline.json"), to_json(e, plan, keys));
            write_json_file(analysis_path(city.ws, "extrapolation_baseline.json"),
                            Json{{"schema", "heatlab.extrapolation/1"},
                                 {"variant", "baseline"},
                                 {"ordering_key", plan.ordering_key},
                                 {"report", e.extrapolation ? to_json(*e.extrapolation) : Json(nullptr)}});
            m.config = city.ws.config_json;
            m.seed = plan.seed;
            m.inputs = {"scenes/", "analysis/split.json"};
            m.outputs = {"models/baseline.json", "analysis/eval_baseline.json", "analysis/extrapolation_baseline.json"};
            m.summary = Json{{"trained_on", ids.size()}, {"training_pixels", model.training_pixels},
                             {"pixel_mae", e.pixels.mae}};
            manifest_root = city.ws.root;
            out << "baseline fitted on " << ids.size() << " scenes; w_airtemp " << model.w_airtemp << "\n";
        };
    });

    // predict
    Common pred_c;
    std::string pred_variant = "baseline";
    std::vector<std::string> pred_scenes;
    auto* predict = app.add_subcommand("predict", "write predicted LST grids for the filtered scenes");
    add_common(predict, pred_c);
    predict->add_option("--variant", pred_variant, "predictor variant");
    predict->add_option("--scene", pred_scenes, "restrict to these scene ids");
    predict->callback([&] {
        action = [&] {
            const City city = open_city(resolve_workspace(pred_c.workspace), pred_c.overrides());
            const auto p = make_predictor(city.ws, pred_variant);
            std::vector<const SceneRecord*> recs;
            if (pred_scenes.empty()) {
                for (const auto& s : city.scenes) recs.push_back(&s);
            } else {
                for (const auto& id : pred_scenes) recs.push_back(&city.ws.scene(id));
            }
            const fs::path dir = city.ws.root / "predicted" / pred_variant;
            parallel_for(recs.size(), pred_c.jobs, [&](std::size_t k) {
                const SceneRecord& s = *recs[k];
                write_grid(dir / (s.scene_id + ".grid"), scene_prediction(city, *p, s),
                           GridMetadata{"lst", format_iso8601(s.timestamp)});
            });
            m.config = city.ws.config_json;
            m.inputs = {"scenes/"};
            m.outputs = {rel(city.ws, dir) + "/"};
            m.summary = Json{{"variant", pred_variant}, {"scenes", recs.size()}};
            manifest_root = city.ws.root;
            out << "predicted " << recs.size() << " scenes with " << pred_variant << "\n";
        };
    });

    // eval
    Common eval_c;
    std::string truth_dir, pred_dir, eval_out, eval_variant;
    auto* eval = app.add_subcommand("eval", "metrics between truth and predictions");
    add_common(eval, eval_c, false);
    eval->add_option("--truth", truth_dir, "directory of truth grids named <scene>.grid");
    eval->add_option("--pred", pred_dir, "directory of predicted grids named <scene>.grid");
    eval->add_option("--out", eval_out, "report path (directory mode; default: stdout)");
    eval->add_option("--variant", eval_variant, "workspace mode: evaluate this variant on the stored split");
    eval->callback([&] {
        action = [&] {
            if (!eval_c.workspace.empty()) {
                if (eval_variant.empty()) throw Error(Errc::invalid_argument, "eval --workspace needs --variant");
                const City city = open_city(resolve_workspace(eval_c.workspace), eval_c.overrides());
                const SceneKeys keys = scene_keys(city, city.ws.config.split.ordering_key, eval_c.jobs);
                const SplitPlan plan = load_or_plan_split(city, keys);
                const auto p = make_predictor(city.ws, eval_variant);
                const VariantEvaluation e = evaluate_variant(city, *p, keys, plan, eval_c.jobs);
                write_json_file(analysis_path(city.ws, "eval_" + eval_variant + ".json"), to_json(e, plan, keys));
                write_json_file(analysis_path(city.ws, "extrapolation_" + eval_variant + ".json"),
                                Json{{"schema", "heatlab.extrapolation/1"},
                                     {"variant", eval_variant},
                                     {"ordering_key", plan.ordering_key},
                                     {"report", e.extrapolation ? to_json(*e.extrapolation) : Json(nullptr)}});
                m.config = city.ws.config_json;
                m.seed = plan.seed;
                m.inputs = {"scenes/"};
                m.outputs = {"analysis/eval_" + eval_variant + ".json", "analysis/extrapolation_" + eval_variant + ".json"};
                m.summary = Json{{"variant", eval_variant}, {"pixels", to_json(e.pixels)}};
                manifest_root = city.ws.root;
                out << eval_variant << ": MAE " << e.pixels.mae << ", RMSE " << e.pixels.rmse << ", MBE " << e.pixels.mbe
                    << "\n";
                return;
            }
            if (truth_dir.empty() || pred_dir.empty()) {
                throw Error(Errc::invalid_argument, "eval needs --truth and --pred, or --workspace and --variant");
            }
            const DirectoryEvaluation e = evaluate_directories(truth_dir, pred_dir);
            const Json report = to_json(e);
            m.inputs = {truth_dir, pred_dir};
            m.summary = Json{{"pooled", report["pooled"]}};
            if (eval_out.empty()) {
                out << report.dump(2) << "\n";
                manifest_root = fs::current_path();
            } else {
                write_json_file(eval_out, report);
                m.outputs = {eval_out};
                manifest_root = fs::absolute(eval_out).parent_path();
            }
        };
    });

    // forecast
    Common fc_c;
    std::optional<double> rcp;
    std::optional<int> year;
    std::string fc_variant = "baseline";
    auto* fc = app.add_subcommand("forecast", "UHI extent under climate scenarios");
    add_common(fc, fc_c);
    fc->add_option("--rcp", rcp, "RCP value, e.g. 4.5 (default: every configured scenario)");
    fc->add_option("--year", year, "horizon year");
    fc->add_option("--variant", fc_variant, "predictor variant");
    fc->callback([&] {
        action = [&] {
            if (rcp.has_value() != year.has_value()) throw Error(Errc::invalid_argument, "give both --rcp and --year, or neither");
            const City city = open_city(resolve_workspace(fc_c.workspace), fc_c.overrides());
            std::vector<ClimateScenario> list;
            if (rcp) {
                list.push_back(find_scenario(city.ws.config, *rcp, *year));
            } else {
                list = city.ws.config.forecast.scenarios;
            }
            if (list.empty()) throw Error(Errc::scenario_not_found, "the workspace config lists no scenarios");
            const auto p = make_predictor(city.ws, fc_variant);
            Json rows = Json::array();
            for (const auto& s : list) {
                const ForecastResult r = run_forecast(city, s, *p, fc_c.jobs);
                const std::string stem = "forecast/" + s.key() + "_" + fc_variant;
                write_json_file(analysis_path(city.ws, stem + ".json"), to_json(r));
                write_grid(analysis_path(city.ws, stem + ".grid"), r.anomaly, GridMetadata{"anomaly", ""});
                const LayerStyle st = layer_style("anomaly");
                write_bytes(analysis_path(city.ws, stem + ".png"),
                            encode_png(render_scalar(r.anomaly, palette_by_name(st.palette), st.lo, st.hi)));
                m.outputs.push_back("analysis/" + stem + ".json");
                rows.push_back(Json{{"scenario", s.key()},
                                    {"exceed_fraction", r.extent.exceed_fraction},
                                    {"out_of_validated_range", r.out_of_validated_range}});
                out << s.key() << ": exceed fraction " << r.extent.exceed_fraction
                    << (r.out_of_validated_range ? " (outside validated range)" : "") << "\n";
            }
            m.config = city.ws.config_json;
            m.inputs = {"scenes/"};
            m.summary = Json{{"variant", fc_variant}, {"scenarios", rows}};
            manifest_root = city.ws.root;
        };
    });

    // inpaint
    Common ip_c;
    std::string spec_path;
    std::optional<std::string> ip_variant;
    std::optional<std::uint64_t> ip_seed;
    auto* ip = app.add_subcommand("inpaint", "simulate a greening intervention");
    add_common(ip, ip_c);
    ip->add_option("--spec", spec_path, "intervention spec JSON")->required();
    ip->add_option("--variant", ip_variant, "predictor variant (overrides the spec)");
    ip->add_option("--seed", ip_seed, "jitter seed (overrides the spec)");
    ip->callback([&] {
        action = [&] {
            const City city = open_city(resolve_workspace(ip_c.workspace), ip_c.overrides());
            Json body = read_json_file(spec_path);
            if (ip_variant) body["variant"] = *ip_variant;
            if (ip_seed) body["seed"] = *ip_seed;
            const InterventionSpec spec =
                resolve_intervention(city, intervention_from_json(body, city.ws.config.intervention));
            const auto p = make_predictor(city.ws, spec.variant);
            const InterventionResult r = run_intervention(city, spec, *p);
            save_intervention(city.ws, r);
            m.config = city.ws.config_json;
            m.seed = spec.seed;
            m.inputs = {spec_path};
            m.outputs = {rel(city.ws, intervention_dir(city.ws, r.id)) + "/"};
            m.summary = Json{{"id", r.id}, {"mask_pixels", r.mask.count()}, {"mean_delta_in_mask", r.mean_delta_in_mask}};
            manifest_root = city.ws.root;
            out << "intervention " << r.id << ": " << r.mask.count() << " pixels, mean delta " << r.mean_delta_in_mask
                << " C\n";
        };
    });

    // serve
    int port = 8080;
    std::string host = "127.0.0.1";
    std::string roots;
    int serve_jobs = 0;
    auto* serve = app.add_subcommand("serve", "HTTP API over a directory of workspaces");
    serve->add_option("--port", port, "TCP port (0 picks a free one)")->check(CLI::Range(0, 65535));
    serve->add_option("--host", host, "bind address");
    serve->add_option("--workspaces", roots, "directory of workspaces (default: $HEATLAB_WORKSPACES)");
    serve->add_option("-j,--jobs", serve_jobs, "scene-level threads per request");
    serve->callback([&] {
        action = [&] {
            if (roots.empty()) {
                const char* env = std::getenv(std::string(kWorkspacesEnv).c_str());
                if (!env || !*env) throw Error(Errc::invalid_argument, "serve needs --workspaces or $HEATLAB_WORKSPACES");
                roots = env;
            }
            Service service(roots, Service::Options{serve_jobs, true});
            HttpServer server(service);
            const int bound = server.bind(host, port);
            m.inputs = {roots};
            m.summary = Json{{"host", host}, {"port", bound}, {"cities", service.city_ids()}};
            write_manifest(roots, m, 0.0);
            out << "serving " << service.city_ids().size() << " cities on http://" << host << ":" << bound << "\n"
                << std::flush;
            server.run();
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }
    for (const auto& a : args) m.argv.push_back(a);
    for (auto* sub : app.get_subcommands()) {
        m.command = sub->get_name();
        for (auto* subsub : sub->get_subcommands()) m.command += " " + subsub->get_name();
    }
    const auto start = std::chrono::steady_clock::now();
    try {
        if (!action) throw InvariantViolation("no action selected");
        action();
        if (!manifest_root.empty() && m.command != "serve") {
            const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            write_manifest(manifest_root, m, wall);
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "error[" << errc_name(e.code()) << "]: " << e.what() << "\n";
        if (!e.detail().empty()) err << "  " << e.detail() << "\n";
        return kExitData;
    } catch (const InvariantViolation& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

} // namespace heatlab
