#include "heatlab/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <mutex>
#include <sstream>

#include "heatlab/pipeline.hpp"
#include "heatlab/reports.hpp"

namespace heatlab {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> out;
    std::string part;
    std::istringstream is(path);
    while (std::getline(is, part, '/')) {
        if (!part.empty()) out.push_back(part);
    }
    return out;
}

HttpResponse json_response(const Json& j, int status = 200) {
    HttpResponse r;
    r.status = status;
    r.body = j.dump(2);
    return r;
}

HttpResponse png_response(const std::vector<std::uint8_t>& bytes) {
    HttpResponse r;
    r.content_type = "image/png";
    r.body.assign(bytes.begin(), bytes.end());
    return r;
}

HttpResponse error_response(Errc code, const std::string& message, const std::string& detail = {}) {
    return json_response(Json{{"error", {{"code", std::string(errc_name(code))}, {"message", message}, {"detail", detail}}}},
                         http_status(code));
}

std::string query(const HttpRequest& req, const std::string& key, const std::string& fallback = {}) {
    auto it = req.query.find(key);
    return it == req.query.end() ? fallback : it->second;
}

double query_double(const HttpRequest& req, const std::string& key) {
    const std::string v = query(req, key);
    if (v.empty()) throw Error(Errc::invalid_argument, "missing query parameter '" + key + "'");
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(out)) {
        throw Error(Errc::invalid_argument, "query parameter '" + key + "' is not a number");
    }
    return out;
}

int query_int(const HttpRequest& req, const std::string& key) {
    const std::string v = query(req, key);
    if (v.empty()) throw Error(Errc::invalid_argument, "missing query parameter '" + key + "'");
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
        throw Error(Errc::invalid_argument, "query parameter '" + key + "' is not an integer");
    }
    return out;
}

std::string format_rcp(double rcp) {
    std::ostringstream os;
    os << rcp;
    return os.str();
}

Json city_summary(const City& c) {
    Json range = nullptr;
    if (!c.ws.scenes.empty()) {
        range = Json{{"first", format_iso8601(c.ws.scenes.front().timestamp)},
                     {"last", format_iso8601(c.ws.scenes.back().timestamp)}};
    }
    return Json{{"city_id", c.ws.city_id},
                {"grid", to_json(c.ws.grid)},
                {"scene_count", c.ws.scenes.size()},
                {"filtered_scene_count", c.scenes.size()},
                {"date_range", range},
                {"variants", list_variants(c.ws)},
                {"issues", c.ws.issues}};
}

Json profile_arrays(const CoolingProfile& p) {
    const Json j = to_json(p);
    return Json{{"mean_dt", j["mean_dt"]}, {"std_dt", j["std_dt"]}, {"mean_distance", j["mean_distance"]}, {"count", j["count"]}};
}

} // namespace

int http_status(Errc code) {
    switch (code) {
    case Errc::scene_not_found:
    case Errc::city_not_found:
    case Errc::layer_not_found:
    case Errc::variant_not_found:
    case Errc::scenario_not_found:
    case Errc::intervention_not_found:
    case Errc::route_not_found: return 404;
    case Errc::method_not_allowed: return 405;
    case Errc::analysis_pending: return 409;
    case Errc::grid_too_large: return 413;
    case Errc::invalid_argument:
    case Errc::out_of_bounds:
    case Errc::format_error:
    case Errc::invalid_polygon:
    case Errc::mask_not_built:
    case Errc::empty_input:
    case Errc::insufficient_data:
    case Errc::rank_deficient:
    case Errc::infeasible_layout: return 422;
    case Errc::predictor_unavailable: return 503;
    case Errc::misaligned:
    case Errc::missing_band:
    case Errc::io_error:
    case Errc::internal_error: return 500;
    }
    return 500;
}

std::string_view error_description(Errc code) {
    switch (code) {
    case Errc::invalid_argument: return "a parameter or request body field is malformed or out of range";
    case Errc::out_of_bounds: return "an index or coordinate lies outside the grid";
    case Errc::misaligned: return "workspace rasters do not share one grid";
    case Errc::io_error: return "a workspace file could not be read or written";
    case Errc::format_error: return "a workspace file or request body could not be parsed";
    case Errc::missing_band: return "a scene lacks a required band";
    case Errc::scene_not_found: return "unknown scene id";
    case Errc::city_not_found: return "unknown city id";
    case Errc::layer_not_found: return "unknown layer name";
    case Errc::variant_not_found: return "unknown predictor variant";
    case Errc::scenario_not_found: return "no configured scenario matches the rcp and year";
    case Errc::intervention_not_found: return "unknown intervention id";
    case Errc::analysis_pending: return "the requested analysis has not been computed yet";
    case Errc::empty_input: return "no data remain after filtering";
    case Errc::insufficient_data: return "too few valid pixels or samples for the computation";
    case Errc::rank_deficient: return "the baseline features are collinear";
    case Errc::invalid_polygon: return "the polygon is degenerate or self-intersecting";
    case Errc::mask_not_built: return "the polygon covers no built-up pixel";
    case Errc::predictor_unavailable: return "the variant cannot predict the requested (modified) scene";
    case Errc::grid_too_large: return "the grid exceeds the synchronous size limit";
    case Errc::infeasible_layout: return "a synthetic layout does not fit its grid";
    case Errc::route_not_found: return "no endpoint at this path";
    case Errc::method_not_allowed: return "the endpoint does not accept this method";
    case Errc::internal_error: return "an internal invariant failed";
    }
    return "";
}

Json error_catalog() {
    Json out = Json::array();
    for (Errc c : kAllErrc) {
        out.push_back(Json{{"code", std::string(errc_name(c))},
                           {"status", http_status(c)},
                           {"description", std::string(error_description(c))}});
    }
    return out;
}

struct Service::Impl {
    struct Entry {
        City city;
        std::mutex write;
        std::mutex cache_lock;
        std::map<std::string, std::shared_ptr<const ForecastResult>> forecasts;
    };

    Options options;
    std::map<std::string, std::unique_ptr<Entry>> cities;

    Entry& city(const std::string& id) {
        auto it = cities.find(id);
        if (it == cities.end()) throw Error(Errc::city_not_found, "no city '" + id + "'");
        return *it->second;
    }

    HttpResponse route(const HttpRequest& req);
    HttpResponse layers(Entry& e, const HttpRequest& req, const std::vector<std::string>& seg);
    HttpResponse interventions(Entry& e, const HttpRequest& req, const std::vector<std::string>& seg);
    HttpResponse scenarios(Entry& e, const HttpRequest& req, const std::vector<std::string>& seg);
    HttpResponse profiles(Entry& e, const HttpRequest& req);
    std::shared_ptr<const ForecastResult> forecast_for(Entry& e, const ClimateScenario& s, const std::string& variant);
};

Service::Service(const fs::path& root) : Service(root, Options{}) {}

Service::Service(const fs::path& root, Options options) : impl_(std::make_unique<Impl>()) {
    impl_->options = options;
    if (!fs::is_directory(root)) throw Error(Errc::io_error, "workspaces directory not found: " + root.string());
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(root)) {
        if (e.is_directory() && fs::exists(e.path() / "workspace.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    const CatalogMode mode = options.lenient ? CatalogMode::lenient : CatalogMode::strict;
    for (const auto& dir : dirs) {
        auto entry = std::make_unique<Impl::Entry>();
        entry->city = open_city(dir, Json::object(), mode);
        const std::string id = entry->city.ws.city_id;
        if (impl_->cities.contains(id)) throw Error(Errc::invalid_argument, "two workspaces share city id '" + id + "'");
        impl_->cities.emplace(id, std::move(entry));
    }
}

Service::~Service() = default;

std::vector<std::string> Service::city_ids() const {
    std::vector<std::string> out;
    for (const auto& [id, e] : impl_->cities) out.push_back(id);
    return out;
}

HttpResponse Service::handle(const HttpRequest& req) {
    try {
        return impl_->route(req);
    } catch (const Error& e) {
        return error_response(e.code(), e.what(), e.detail());
    } catch (const nlohmann::json::exception& e) {
        return error_response(Errc::format_error, e.what());
    } catch (const std::exception& e) {
        return error_response(Errc::internal_error, e.what());
    }
}

HttpResponse Service::Impl::route(const HttpRequest& req) {
    const auto seg = split_path(req.path);
    if (seg.empty() || seg[0] != "api") throw Error(Errc::route_not_found, "no endpoint at " + req.path);
    const bool get = req.method == "GET" || req.method == "HEAD";
    auto require_get = [&] {
        if (!get) throw Error(Errc::method_not_allowed, req.method + " is not allowed on " + req.path);
    };
    if (seg.size() == 2 && seg[1] == "version") {
        require_get();
        return json_response(Json{{"api", std::string(kApiVersion)},
                                  {"toolkit", HEATLAB_VERSION},
                                  {"palette", std::string(kPaletteVersion)},
                                  {"schemas",
                                   {"heatlab.cooling/1", "heatlab.profiles/1", "heatlab.scenario/1",
                                    "heatlab.intervention/1", "heatlab.layer_stats/1"}}});
    }
    if (seg.size() == 2 && seg[1] == "errors") {
        require_get();
        return json_response(error_catalog());
    }
    if (seg.size() < 2 || seg[1] != "cities") throw Error(Errc::route_not_found, "no endpoint at " + req.path);
    if (seg.size() == 2) {
        require_get();
        Json out = Json::array();
        for (const auto& [id, e] : cities) out.push_back(city_summary(e->city));
        return json_response(out);
    }
    Entry& e = city(seg[2]);
    if (seg.size() == 3) {
        require_get();
        return json_response(city_summary(e.city));
    }
    const std::string& what = seg[3];
    if (what == "scenes" && seg.size() == 4) {
        require_get();
        Json out = Json::array();
        const auto passing = e.city.scene_ids();
        for (const auto& s : e.city.ws.scenes) {
            out.push_back(Json{{"scene_id", s.scene_id},
                               {"timestamp", format_iso8601(s.timestamp)},
                               {"cloud_fraction", s.cloud_fraction},
                               {"passes_filter", std::find(passing.begin(), passing.end(), s.scene_id) != passing.end()}});
        }
        return json_response(out);
    }
    if (what == "layers") {
        require_get();
        return layers(e, req, seg);
    }
    if (what == "interventions") return interventions(e, req, seg);
    if (what == "scenarios") {
        require_get();
        return scenarios(e, req, seg);
    }
    if (what == "profiles" && seg.size() == 4) {
        require_get();
        return profiles(e, req);
    }
    throw Error(Errc::route_not_found, "no endpoint at " + req.path);
}

HttpResponse Service::Impl::layers(Entry& e, const HttpRequest& req, const std::vector<std::string>& seg) {
    if (seg.size() < 5 || seg.size() > 6 || (seg.size() == 6 && seg[5] != "stats")) {
        throw Error(Errc::route_not_found, "no endpoint at " + req.path);
    }
    LayerRequest lr{seg[4], query(req, "scene"), query(req, "variant"), query(req, "palette")};
    const LayerRender r = render_layer(e.city, lr);
    Json stats{{"schema", "heatlab.layer_stats/1"},
               {"layer", lr.layer},
               {"scene_id", r.scene_id.empty() ? Json(nullptr) : Json(r.scene_id)},
               {"variant", lr.variant.empty() ? Json("truth") : Json(lr.variant)},
               {"palette_version", std::string(kPaletteVersion)},
               {"stats", to_json(r.stats)}};
    if (lr.layer == "lst" || lr.layer == "anomaly" || lr.layer == "ndvi") {
        const LayerStyle style = layer_style(lr.layer);
        stats["palette"] = lr.palette.empty() ? style.palette : lr.palette;
        stats["bounds"] = {style.lo, style.hi};
    }
    if (seg.size() == 6) return json_response(stats);
    HttpResponse resp = png_response(encode_png(r.image));
    resp.headers["X-Heatlab-Stats"] = stats.dump();
    return resp;
}

HttpResponse Service::Impl::interventions(Entry& e, const HttpRequest& req, const std::vector<std::string>& seg) {
    const Workspace& ws = e.city.ws;
    if (seg.size() == 4) {
        if (req.method != "POST") throw Error(Errc::method_not_allowed, "interventions accept POST");
        Json body;
        try {
            body = Json::parse(req.body);
        } catch (const nlohmann::json::exception& ex) {
            throw Error(Errc::invalid_argument, std::string("request body is not JSON: ") + ex.what());
        }
        const InterventionSpec spec =
            resolve_intervention(e.city, intervention_from_json(body, ws.config.intervention));
        check_sync_size(e.city);
        const std::string id = intervention_id(spec);
        std::lock_guard lock(e.write);
        if (!fs::exists(intervention_dir(ws, id) / "result.json")) {
            const auto p = make_predictor(ws, spec.variant);
            save_intervention(ws, run_intervention(e.city, spec, *p));
        }
        return json_response(load_intervention(ws, id));
    }
    if (req.method != "GET") throw Error(Errc::method_not_allowed, req.method + " is not allowed on " + req.path);
    if (seg.size() == 5) return json_response(load_intervention(ws, seg[4]));
    if (seg.size() == 7 && seg[5] == "layers") {
        load_intervention(ws, seg[4]);
        const std::string& layer = seg[6];
        if (layer != "before" && layer != "after" && layer != "delta") {
            throw Error(Errc::layer_not_found, "intervention layers are before, after and delta");
        }
        const fs::path png = intervention_dir(ws, seg[4]) / (layer + ".png");
        const std::string bytes = read_text_file(png);
        HttpResponse r;
        r.content_type = "image/png";
        r.body = bytes;
        return r;
    }
    throw Error(Errc::route_not_found, "no endpoint at " + req.path);
}

std::shared_ptr<const ForecastResult> Service::Impl::forecast_for(Entry& e, const ClimateScenario& s,
                                                                  const std::string& variant) {
    const std::string key = s.key() + "|" + variant;
    {
        std::lock_guard lock(e.cache_lock);
        if (auto it = e.forecasts.find(key); it != e.forecasts.end()) return it->second;
    }
    check_sync_size(e.city);
    const auto p = make_predictor(e.city.ws, variant);
    auto result = std::make_shared<const ForecastResult>(run_forecast(e.city, s, *p, options.jobs));
    std::lock_guard lock(e.cache_lock);
    return e.forecasts.emplace(key, std::move(result)).first->second;
}

HttpResponse Service::Impl::scenarios(Entry& e, const HttpRequest& req, const std::vector<std::string>& seg) {
    const WorkspaceConfig& cfg = e.city.ws.config;
    if (seg.size() == 4 && !req.query.contains("rcp") && !req.query.contains("year")) {
        Json out = Json::array();
        for (const auto& s : cfg.forecast.scenarios) out.push_back(to_json(s));
        return json_response(out);
    }
    if (seg.size() > 5 || (seg.size() == 5 && seg[4] != "map")) {
        throw Error(Errc::route_not_found, "no endpoint at " + req.path);
    }
    const ClimateScenario& s = find_scenario(cfg, query_double(req, "rcp"), query_int(req, "year"));
    const std::string variant = query(req, "variant", "baseline");
    const auto result = forecast_for(e, s, variant);
    if (seg.size() == 5) {
        const LayerStyle style = layer_style("anomaly");
        const std::string pal = query(req, "palette", style.palette);
        return png_response(encode_png(render_scalar(result->anomaly, palette_by_name(pal), style.lo, style.hi)));
    }
    Json j = to_json(*result);
    Json out{{"schema", "heatlab.scenario/1"}, {"city_id", e.city.ws.city_id}};
    for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = it.value();
    out["anomaly_map"] = "/api/cities/" + e.city.ws.city_id + "/scenarios/map?rcp=" + format_rcp(s.rcp) +
                         "&year=" + std::to_string(s.horizon_year) + "&variant=" + variant;
    return json_response(out);
}

HttpResponse Service::Impl::profiles(Entry& e, const HttpRequest& req) {
    const std::string kind = query(req, "kind", "internal");
    if (kind != "internal" && kind != "spillover") {
        throw Error(Errc::invalid_argument, "kind must be internal or spillover");
    }
    const std::string variant = query(req, "variant");
    const auto known = list_variants(e.city.ws);
    if (!variant.empty() && std::find(known.begin(), known.end(), variant) == known.end()) {
        throw Error(Errc::variant_not_found, "unknown variant '" + variant + "'");
    }
    const fs::path path = analysis_path(e.city.ws, "cooling.json");
    if (!fs::exists(path)) throw Error(Errc::analysis_pending, "cooling profiles not computed; run analyze cooling");
    const Json a = read_json_file(path);
    const CoolingProfile truth = profile_from_json(a.at("truth").at(kind));
    Json variants = Json::array();
    bool found = variant.empty();
    for (const auto& v : a.at("variants")) {
        const std::string name = v.at("variant").get<std::string>();
        if (!variant.empty() && name != variant) continue;
        found = true;
        Json row = profile_arrays(profile_from_json(v.at(kind)));
        row["variant"] = name;
        row["metrics"] = v.at("metrics").at(kind);
        variants.push_back(row);
    }
    if (!found) throw Error(Errc::analysis_pending, "no cooling profiles for variant '" + variant + "' yet");
    return json_response(Json{{"schema", "heatlab.profiles/1"},
                              {"city_id", e.city.ws.city_id},
                              {"kind", kind},
                              {"scenes", a.at("scenes")},
                              {"bin_edges", truth.bin_edges},
                              {"truth", profile_arrays(truth)},
                              {"variants", variants}});
}

// --- httplib front end --------------------------------------------------------

struct HttpServer::Impl {
    Service& service;
    httplib::Server server;
    explicit Impl(Service& s) : service(s) {}
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {
    auto handler = [this](const httplib::Request& in, httplib::Response& out) {
        HttpRequest req;
        req.method = in.method;
        req.path = in.path;
        req.body = in.body;
        for (const auto& [k, v] : in.params) req.query.emplace(k, v);
        const HttpResponse r = impl_->service.handle(req);
        out.status = r.status;
        for (const auto& [k, v] : r.headers) out.set_header(k, v);
        out.set_content(r.body, r.content_type);
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Put(".*", handler);
    impl_->server.Delete(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int p = impl_->server.bind_to_any_port(host);
        if (p < 0) throw Error(Errc::io_error, "cannot bind " + host);
        return p;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw Error(Errc::io_error, "cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

} // namespace heatlab
