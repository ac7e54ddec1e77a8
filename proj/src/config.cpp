#include "heatlab/config.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "heatlab/error.hpp"

namespace heatlab {

namespace {

// Reads fields of one JSON object and rejects keys nobody asked for.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
        if (!j.is_object()) throw Error(Errc::format_error, where_ + " must be a JSON object");
    }

    const Json* find(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    template <typename T>
    void get(const char* key, T& out) {
        if (const Json* v = find(key)) {
            try {
                out = v->get<T>();
            } catch (const nlohmann::json::exception& e) {
                throw Error(Errc::format_error, where_ + "." + key + ": " + e.what());
            }
        }
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) {
                throw Error(Errc::format_error, where_ + ": unknown key '" + it.key() + "'");
            }
        }
    }

    const std::string& where() const { return where_; }

private:
    const Json& j_;
    std::string where_;
    std::set<std::string> seen_;
};

LulcClass lulc_from_string(const std::string& name) {
    auto c = parse_lulc_name(name);
    if (!c) throw Error(Errc::format_error, "unknown land-cover class '" + name + "'");
    return *c;
}

Json class_list(const std::vector<LulcClass>& classes) {
    Json a = Json::array();
    for (auto c : classes) a.push_back(std::string(lulc_name(c)));
    return a;
}

std::vector<LulcClass> read_class_list(const Json& a) {
    if (!a.is_array()) throw Error(Errc::format_error, "land-cover class list must be an array");
    std::vector<LulcClass> out;
    for (const auto& v : a) out.push_back(lulc_from_string(v.get<std::string>()));
    return out;
}

SplitWindowCoefficients coefficients_from_json(const Json& j, const std::string& name) {
    ObjectReader r(j, "split_window_presets." + name);
    SplitWindowCoefficients c;
    std::vector<double> b;
    r.get("b", b);
    if (b.size() != 8) throw Error(Errc::format_error, r.where() + ".b must hold 8 coefficients");
    std::copy(b.begin(), b.end(), c.b.begin());
    r.get("source_label", c.source_label);
    r.finish();
    c.validate();
    return c;
}

std::string format_rcp(double rcp) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", rcp);
    return buf;
}

} // namespace

void ClimateScenario::validate() const {
    for (double d : monthly_delta) {
        if (!std::isfinite(d)) throw Error(Errc::invalid_argument, "scenario " + key() + ": deltas must be finite");
    }
    if (!std::isfinite(rcp)) throw Error(Errc::invalid_argument, "scenario rcp must be finite");
}

std::string ClimateScenario::key() const { return "rcp" + format_rcp(rcp) + "-" + std::to_string(horizon_year); }

std::string_view donor_statistic_name(DonorStatistic s) { return s == DonorStatistic::median ? "median" : "mean"; }

DonorStatistic parse_donor_statistic(std::string_view name) {
    if (name == "median") return DonorStatistic::median;
    if (name == "mean") return DonorStatistic::mean;
    throw Error(Errc::invalid_argument, "donor statistic must be 'median' or 'mean'");
}

std::map<std::string, std::string> hls_l30_band_mapping() {
    return {{"blue", "B02"},  {"green", "B03"}, {"red", "B04"},   {"nir", "B05"},
            {"swir1", "B06"}, {"swir2", "B07"}, {"tirs1", "B10"}, {"tirs2", "B11"}};
}

WorkspaceConfig::WorkspaceConfig() : band_mapping(hls_l30_band_mapping()) {
    SplitWindowCoefficients identity;
    identity.b = {0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    identity.source_label = "identity: mean of the two brightness temperatures, no emissivity correction";
    split_window_presets.emplace("identity", identity);
}

void WorkspaceConfig::validate() const {
    lulc_codes.validate();
    emissivity.validate();
    baseline.validate();
    split_window();
    if (!(min_park_area >= 0.0)) throw Error(Errc::invalid_argument, "min_park_area must be nonnegative");
    if (!(scene_filter.hour_begin < scene_filter.hour_end)) {
        throw Error(Errc::invalid_argument, "scene_filter hour range is empty");
    }
    if (!(scene_filter.max_cloud >= 0.0 && scene_filter.max_cloud <= 1.0)) {
        throw Error(Errc::invalid_argument, "scene_filter.max_cloud must lie in [0, 1]");
    }
    for (unsigned m : scene_filter.months) {
        if (m < 1 || m > 12) throw Error(Errc::invalid_argument, "scene_filter months must lie in 1..12");
    }
    if (thermal_unit != "celsius" && thermal_unit != "kelvin") {
        throw Error(Errc::invalid_argument, "thermal_unit must be 'celsius' or 'kelvin'");
    }
    if (built_fraction_window < 1 || built_fraction_window % 2 == 0) {
        throw Error(Errc::invalid_argument, "built_fraction_window must be a positive odd pixel count");
    }
    if (!(profile.bin_width > 0.0 && profile.internal_max > 0.0 && profile.spillover_max > 0.0)) {
        throw Error(Errc::invalid_argument, "profile widths must be positive");
    }
    if (intervention.jitter_scale < 0.0) throw Error(Errc::invalid_argument, "jitter_scale must be nonnegative");
    if (!(intervention.transect_step > 0.0) || intervention.transect_extension < 0.0) {
        throw Error(Errc::invalid_argument, "transect step must be positive and extension nonnegative");
    }
    if (split.ordering_key != "lst" && split.ordering_key != "airtemp") {
        throw Error(Errc::invalid_argument, "split.ordering_key must be 'lst' or 'airtemp'");
    }
    for (const auto& s : forecast.scenarios) s.validate();
    if (max_sync_pixels < 1) throw Error(Errc::invalid_argument, "max_sync_pixels must be positive");
}

const SplitWindowCoefficients& WorkspaceConfig::split_window() const {
    auto it = split_window_presets.find(split_window_preset);
    if (it == split_window_presets.end()) {
        throw Error(Errc::invalid_argument, "split-window preset '" + split_window_preset + "' is not defined");
    }
    return it->second;
}

std::set<int> WorkspaceConfig::green_codes() const { return lulc_codes.codes_for(green_classes); }
std::set<int> WorkspaceConfig::built_codes() const { return lulc_codes.codes_for(built_classes); }

Json to_json(const ClimateScenario& s) {
    return Json{{"rcp", s.rcp},
                {"year", s.horizon_year},
                {"monthly_delta", s.monthly_delta},
                {"source_label", s.source_label}};
}

ClimateScenario scenario_from_json(const Json& j) {
    ObjectReader r(j, "scenario");
    ClimateScenario s;
    r.get("rcp", s.rcp);
    r.get("year", s.horizon_year);
    std::vector<double> d;
    r.get("monthly_delta", d);
    if (d.size() != 12) throw Error(Errc::format_error, "scenario monthly_delta must hold 12 values");
    std::copy(d.begin(), d.end(), s.monthly_delta.begin());
    r.get("source_label", s.source_label);
    r.finish();
    s.validate();
    return s;
}

Json to_json(const WorkspaceConfig& c) {
    Json codes = Json::object();
    for (auto cls : kAllLulcClasses) codes[std::string(lulc_name(cls))] = c.lulc_codes.code(cls);
    Json presets = Json::object();
    for (const auto& [name, p] : c.split_window_presets) {
        presets[name] = Json{{"b", p.b}, {"source_label", p.source_label}};
    }
    Json scenarios = Json::array();
    for (const auto& s : c.forecast.scenarios) scenarios.push_back(to_json(s));
    return Json{
        {"lulc_codes", codes},
        {"green_classes", class_list(c.green_classes)},
        {"built_classes", class_list(c.built_classes)},
        {"min_park_area", c.min_park_area},
        {"scene_filter",
         {{"months", c.scene_filter.months},
          {"hour_begin", c.scene_filter.hour_begin},
          {"hour_end", c.scene_filter.hour_end},
          {"max_cloud", c.scene_filter.max_cloud}}},
        {"utc_offset_hours", c.utc_offset_hours},
        {"band_mapping", c.band_mapping},
        {"thermal_unit", c.thermal_unit},
        {"split_window_presets", presets},
        {"split_window_preset", c.split_window_preset},
        {"eps_diff", c.eps_diff},
        {"emissivity",
         {{"ndvi_soil_threshold", c.emissivity.ndvi_soil_threshold},
          {"ndvi_veg_threshold", c.emissivity.ndvi_veg_threshold},
          {"eps_water", c.emissivity.eps_water},
          {"eps_soil", c.emissivity.eps_soil},
          {"eps_veg", c.emissivity.eps_veg}}},
        {"albedo",
         {{"blue", c.albedo.blue},
          {"green", c.albedo.green},
          {"red", c.albedo.red},
          {"nir", c.albedo.nir},
          {"swir1", c.albedo.swir1},
          {"swir2", c.albedo.swir2},
          {"intercept", c.albedo.intercept},
          {"source_label", c.albedo.source_label}}},
        {"baseline",
         {{"ring_inner", c.baseline.ring_inner},
          {"ring_outer", c.baseline.ring_outer},
          {"min_pixels", c.baseline.min_pixels},
          {"fallback", c.baseline.fallback == BaselineFallback::error ? "error" : "citywide_built"}}},
        {"profile",
         {{"bin_width", c.profile.bin_width},
          {"internal_max", c.profile.internal_max},
          {"spillover_max", c.profile.spillover_max}}},
        {"built_fraction_window", c.built_fraction_window},
        {"radial_bin_width", c.radial_bin_width},
        {"source_sink_quantiles", {c.source_sink_quantiles.first, c.source_sink_quantiles.second}},
        {"split",
         {{"fractions", c.split.fractions},
          {"q", c.split.q},
          {"train_val_ratio", c.split.train_val_ratio},
          {"seed", c.split.seed},
          {"ordering_key", c.split.ordering_key},
          {"success_tolerance", c.split.success_tolerance}}},
        {"forecast", {{"uhi_threshold", c.forecast.uhi_threshold}, {"scenarios", scenarios}}},
        {"intervention",
         {{"target", std::string(lulc_name(c.intervention.target))},
          {"donor", std::string(donor_statistic_name(c.intervention.donor))},
          {"jitter_scale", c.intervention.jitter_scale},
          {"min_donor_pixels", c.intervention.min_donor_pixels},
          {"transect_extension", c.intervention.transect_extension},
          {"transect_step", c.intervention.transect_step}}},
        {"max_sync_pixels", c.max_sync_pixels},
    };
}

WorkspaceConfig config_from_json(const Json& j) {
    WorkspaceConfig c;
    ObjectReader r(j, "config");
    if (const Json* v = r.find("lulc_codes")) {
        ObjectReader cr(*v, "config.lulc_codes");
        for (auto cls : kAllLulcClasses) {
            cr.get(std::string(lulc_name(cls)).c_str(), c.lulc_codes.codes[static_cast<std::size_t>(cls)]);
        }
        cr.finish();
    }
    if (const Json* v = r.find("green_classes")) c.green_classes = read_class_list(*v);
    if (const Json* v = r.find("built_classes")) c.built_classes = read_class_list(*v);
    r.get("min_park_area", c.min_park_area);
    if (const Json* v = r.find("scene_filter")) {
        ObjectReader fr(*v, "config.scene_filter");
        fr.get("months", c.scene_filter.months);
        fr.get("hour_begin", c.scene_filter.hour_begin);
        fr.get("hour_end", c.scene_filter.hour_end);
        fr.get("max_cloud", c.scene_filter.max_cloud);
        fr.finish();
    }
    r.get("utc_offset_hours", c.utc_offset_hours);
    if (const Json* v = r.find("band_mapping")) {
        ObjectReader br(*v, "config.band_mapping");
        for (auto& [band, stem] : c.band_mapping) br.get(band.c_str(), stem);
        br.finish();
    }
    r.get("thermal_unit", c.thermal_unit);
    if (const Json* v = r.find("split_window_presets")) {
        if (!v->is_object()) throw Error(Errc::format_error, "config.split_window_presets must be an object");
        for (auto it = v->begin(); it != v->end(); ++it) {
            c.split_window_presets[it.key()] = coefficients_from_json(it.value(), it.key());
        }
    }
    r.get("split_window_preset", c.split_window_preset);
    r.get("eps_diff", c.eps_diff);
    if (const Json* v = r.find("emissivity")) {
        ObjectReader er(*v, "config.emissivity");
        er.get("ndvi_soil_threshold", c.emissivity.ndvi_soil_threshold);
        er.get("ndvi_veg_threshold", c.emissivity.ndvi_veg_threshold);
        er.get("eps_water", c.emissivity.eps_water);
        er.get("eps_soil", c.emissivity.eps_soil);
        er.get("eps_veg", c.emissivity.eps_veg);
        er.finish();
    }
    if (const Json* v = r.find("albedo")) {
        ObjectReader ar(*v, "config.albedo");
        ar.get("blue", c.albedo.blue);
        ar.get("green", c.albedo.green);
        ar.get("red", c.albedo.red);
        ar.get("nir", c.albedo.nir);
        ar.get("swir1", c.albedo.swir1);
        ar.get("swir2", c.albedo.swir2);
        ar.get("intercept", c.albedo.intercept);
        ar.get("source_label", c.albedo.source_label);
        ar.finish();
    }
    if (const Json* v = r.find("baseline")) {
        ObjectReader br(*v, "config.baseline");
        br.get("ring_inner", c.baseline.ring_inner);
        br.get("ring_outer", c.baseline.ring_outer);
        br.get("min_pixels", c.baseline.min_pixels);
        std::string fallback = "citywide_built";
        br.get("fallback", fallback);
        if (fallback == "error") {
            c.baseline.fallback = BaselineFallback::error;
        } else if (fallback == "citywide_built") {
            c.baseline.fallback = BaselineFallback::citywide_built;
        } else {
            throw Error(Errc::format_error, "config.baseline.fallback must be 'citywide_built' or 'error'");
        }
        br.finish();
    }
    if (const Json* v = r.find("profile")) {
        ObjectReader pr(*v, "config.profile");
        pr.get("bin_width", c.profile.bin_width);
        pr.get("internal_max", c.profile.internal_max);
        pr.get("spillover_max", c.profile.spillover_max);
        pr.finish();
    }
    r.get("built_fraction_window", c.built_fraction_window);
    r.get("radial_bin_width", c.radial_bin_width);
    if (const Json* v = r.find("source_sink_quantiles")) {
        if (!v->is_array() || v->size() != 2) {
            throw Error(Errc::format_error, "config.source_sink_quantiles must be [low, high]");
        }
        c.source_sink_quantiles = {(*v)[0].get<double>(), (*v)[1].get<double>()};
    }
    if (const Json* v = r.find("split")) {
        ObjectReader sr(*v, "config.split");
        sr.get("fractions", c.split.fractions);
        sr.get("q", c.split.q);
        sr.get("train_val_ratio", c.split.train_val_ratio);
        sr.get("seed", c.split.seed);
        sr.get("ordering_key", c.split.ordering_key);
        sr.get("success_tolerance", c.split.success_tolerance);
        sr.finish();
    }
    if (const Json* v = r.find("forecast")) {
        ObjectReader fr(*v, "config.forecast");
        fr.get("uhi_threshold", c.forecast.uhi_threshold);
        if (const Json* s = fr.find("scenarios")) {
            if (!s->is_array()) throw Error(Errc::format_error, "config.forecast.scenarios must be an array");
            for (const auto& e : *s) c.forecast.scenarios.push_back(scenario_from_json(e));
        }
        fr.finish();
    }
    if (const Json* v = r.find("intervention")) {
        ObjectReader ir(*v, "config.intervention");
        std::string target = std::string(lulc_name(c.intervention.target));
        ir.get("target", target);
        c.intervention.target = lulc_from_string(target);
        std::string donor = std::string(donor_statistic_name(c.intervention.donor));
        ir.get("donor", donor);
        c.intervention.donor = parse_donor_statistic(donor);
        ir.get("jitter_scale", c.intervention.jitter_scale);
        ir.get("min_donor_pixels", c.intervention.min_donor_pixels);
        ir.get("transect_extension", c.intervention.transect_extension);
        ir.get("transect_step", c.intervention.transect_step);
        ir.finish();
    }
    r.get("max_sync_pixels", c.max_sync_pixels);
    r.finish();
    c.validate();
    return c;
}

Json merge_json(const Json& base, const Json& overlay) {
    if (!base.is_object() || !overlay.is_object()) return overlay;
    Json out = base;
    for (auto it = overlay.begin(); it != overlay.end(); ++it) {
        auto found = out.find(it.key());
        out[it.key()] = found == out.end() ? it.value() : merge_json(*found, it.value());
    }
    return out;
}

} // namespace heatlab
