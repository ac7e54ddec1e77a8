#include "heatlab/reports.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "heatlab/error.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Json num(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

Json nums(const std::vector<double>& v) {
    Json out = Json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

double read_num(const Json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::vector<double> read_nums(const Json& j) {
    std::vector<double> out;
    for (const auto& x : j) out.push_back(read_num(x));
    return out;
}

template <typename Fn>
auto parse(const char* what, Fn&& fn) {
    try {
        return fn();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, std::string(what) + ": " + e.what());
    }
}

Json opt(const std::optional<double>& v) { return v ? num(*v) : Json(nullptr); }

} // namespace

Json to_json(const GridSpec& g) {
    return Json{{"width", g.width},       {"height", g.height},         {"origin_x", g.origin_x},
                {"origin_y", g.origin_y}, {"pixel_size", g.pixel_size}, {"epsg", g.crs_code}};
}

Json to_json(const MetricReport& m) {
    return Json{{"mae", num(m.mae)}, {"mse", num(m.mse)}, {"rmse", num(m.rmse)}, {"mbe", num(m.mbe)}, {"n", m.n}};
}

MetricReport metrics_from_json(const Json& j) {
    return parse("metric report", [&] {
        MetricReport m;
        m.mae = read_num(j.at("mae"));
        m.mse = read_num(j.at("mse"));
        m.rmse = read_num(j.at("rmse"));
        m.mbe = read_num(j.at("mbe"));
        m.n = j.at("n").get<std::int64_t>();
        return m;
    });
}

Json to_json(const CoolingProfile& p) {
    return Json{{"side", std::string(profile_side_name(p.side))},
                {"bin_edges", p.bin_edges},
                {"mean_dt", nums(p.mean_dt)},
                {"std_dt", nums(p.std_dt)},
                {"mean_distance", nums(p.mean_distance)},
                {"count", p.count}};
}

CoolingProfile profile_from_json(const Json& j) {
    return parse("cooling profile", [&] {
        CoolingProfile p;
        p.side = parse_profile_side(j.at("side").get<std::string>());
        p.bin_edges = j.at("bin_edges").get<std::vector<double>>();
        p.mean_dt = read_nums(j.at("mean_dt"));
        p.std_dt = read_nums(j.at("std_dt"));
        p.mean_distance = read_nums(j.at("mean_distance"));
        p.count = j.at("count").get<std::vector<std::int64_t>>();
        if (p.bin_edges.size() != p.mean_dt.size() + 1 || p.count.size() != p.mean_dt.size()) {
            throw Error(Errc::format_error, "cooling profile arrays disagree in length");
        }
        return p;
    });
}

Json to_json(const SplitPlan& plan, const std::vector<std::string>& ids) {
    auto part = [&](const std::vector<std::size_t>& idx) {
        Json out = Json::array();
        for (std::size_t i : idx) {
            if (ids.empty()) {
                out.push_back(i);
            } else {
                out.push_back(ids.at(i));
            }
        }
        return out;
    };
    return Json{{"strategy", std::string(split_strategy_name(plan.strategy))},
                {"seed", plan.seed},
                {"ordering_key", plan.ordering_key},
                {"threshold", opt(plan.threshold)},
                {"sizes", {plan.train.size(), plan.val.size(), plan.test.size()}},
                {"train", part(plan.train)},
                {"val", part(plan.val)},
                {"test", part(plan.test)},
                {"warnings", plan.warnings}};
}

SplitPlan split_from_json(const Json& j, const std::vector<std::string>& ids) {
    return parse("split plan", [&] {
        std::map<std::string, std::size_t> index;
        for (std::size_t i = 0; i < ids.size(); ++i) index.emplace(ids[i], i);
        auto part = [&](const Json& arr) {
            std::vector<std::size_t> out;
            for (const auto& x : arr) {
                if (ids.empty()) {
                    out.push_back(x.get<std::size_t>());
                    continue;
                }
                auto it = index.find(x.get<std::string>());
                if (it == index.end()) {
                    throw Error(Errc::scene_not_found, "split plan names scene " + x.get<std::string>() +
                                                           ", which is not among the filtered scenes");
                }
                out.push_back(it->second);
            }
            return out;
        };
        SplitPlan plan;
        plan.strategy = parse_split_strategy(j.at("strategy").get<std::string>());
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.ordering_key = j.at("ordering_key").get<std::string>();
        if (!j.at("threshold").is_null()) plan.threshold = j.at("threshold").get<double>();
        plan.train = part(j.at("train"));
        plan.val = part(j.at("val"));
        plan.test = part(j.at("test"));
        plan.warnings = j.at("warnings").get<std::vector<std::string>>();
        if (!ids.empty() && plan.size() != ids.size()) {
            throw Error(Errc::format_error, "split plan covers " + std::to_string(plan.size()) + " scenes, the workspace has " +
                                                std::to_string(ids.size()));
        }
        return plan;
    });
}

Json to_json(const ExtrapolationReport& r) {
    return Json{{"train_max_key", num(r.train_max_key)},
                {"test_key_range", {num(r.test_key_range.first), num(r.test_key_range.second)}},
                {"predicted_max", opt(r.predicted_max)},
                {"margin", opt(r.margin)},
                {"success_tolerance", r.success_tolerance},
                {"accepted", r.accepted},
                {"metrics", to_json(r.metrics)}};
}

ExtrapolationReport extrapolation_from_json(const Json& j) {
    return parse("extrapolation report", [&] {
        ExtrapolationReport r;
        r.train_max_key = read_num(j.at("train_max_key"));
        r.test_key_range = {read_num(j.at("test_key_range").at(0)), read_num(j.at("test_key_range").at(1))};
        if (!j.at("predicted_max").is_null()) r.predicted_max = j.at("predicted_max").get<double>();
        if (!j.at("margin").is_null()) r.margin = j.at("margin").get<double>();
        r.success_tolerance = j.at("success_tolerance").get<double>();
        r.accepted = j.at("accepted").get<std::int64_t>();
        r.metrics = metrics_from_json(j.at("metrics"));
        return r;
    });
}

Json to_json(const UrbanGradient& g) {
    return Json{{"axis", g.axis == GradientAxis::radial_distance ? "radial_distance" : "built_fraction_decile"},
                {"bin_centers", nums(g.bin_centers)},
                {"mean_anomaly", nums(g.mean_anomaly)},
                {"count", g.count}};
}

Json to_json(const SourceSinkTable& t, const LulcCodes& codes) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        const auto cls = codes.classify(r.code);
        rows.push_back(Json{{"code", r.code},
                            {"class", cls ? Json(std::string(lulc_name(*cls))) : Json(nullptr)},
                            {"source_fraction", num(r.source_fraction)},
                            {"neutral_fraction", num(r.neutral_fraction)},
                            {"sink_fraction", num(r.sink_fraction)},
                            {"mean_anomaly", num(r.mean_anomaly)},
                            {"pixel_count", r.pixel_count}});
    }
    return Json{{"low_quantile", t.low_quantile},
                {"high_quantile", t.high_quantile},
                {"low_threshold", num(t.low_threshold)},
                {"high_threshold", num(t.high_threshold)},
                {"rows", rows}};
}

Json to_json(const UhiExtentReport& r) {
    return Json{{"threshold", r.threshold},
                {"exceed_area_km2", num(r.exceed_area_km2)},
                {"exceed_fraction", num(r.exceed_fraction)},
                {"mean_urban_anomaly", num(r.mean_urban_anomaly)},
                {"urban_pixels", r.urban_pixels}};
}

Json to_json(const ForecastResult& r) {
    Json scenes = Json::array();
    for (const auto& s : r.scenes) {
        scenes.push_back(Json{{"scene_id", s.scene_id},
                              {"delta", s.delta},
                              {"reference", num(s.reference)},
                              {"mean_prediction", num(s.mean_prediction)},
                              {"key", num(s.key)},
                              {"out_of_validated_range", s.out_of_validated_range}});
    }
    return Json{{"scenario", to_json(r.scenario)},
                {"variant", r.variant},
                {"extent", to_json(r.extent)},
                {"out_of_validated_range", r.out_of_validated_range},
                {"validated_max_key", opt(r.validated_max_key)},
                {"guard_note", r.guard_note},
                {"anomaly_stats", to_json(grid_stats(r.anomaly))},
                {"scenes", scenes}};
}

Json to_json(const GridStats& s) {
    return Json{{"min", num(s.min)}, {"mean", num(s.mean)}, {"max", num(s.max)}, {"valid", s.valid}};
}

Json to_json(const DonorSignature& d) {
    return Json{{"statistic", std::string(donor_statistic_name(d.statistic))},
                {"pixels", d.pixels},
                {"channels", d.channels},
                {"center", nums(d.center)},
                {"stddev", nums(d.stddev)}};
}

Json to_json(const TransectSample& t) {
    return Json{{"distance", t.distance}, {"x", t.x},         {"y", t.y},
                {"before", num(t.before)}, {"after", num(t.after)}, {"in_mask", t.in_mask}};
}

Json to_json(const InterventionResult& r) {
    Json transect = Json::array();
    for (const auto& t : r.transect) transect.push_back(to_json(t));
    return Json{{"id", r.id},
                {"spec", to_json(r.spec)},
                {"scene_id", r.scene_id},
                {"variant", r.spec.variant},
                {"mask_pixels", r.mask.count()},
                {"mean_delta_in_mask", num(r.mean_delta_in_mask)},
                {"before_stats", to_json(grid_stats(r.before_lst))},
                {"after_stats", to_json(grid_stats(r.after_lst))},
                {"delta_stats", to_json(grid_stats(r.delta))},
                {"transect", transect},
                {"internal_profile", to_json(r.internal_profile)},
                {"spillover_profile", to_json(r.spillover_profile)},
                {"donor", to_json(r.donor)}};
}

} // namespace heatlab
