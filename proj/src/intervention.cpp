#include "heatlab/intervention.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "heatlab/error.hpp"
#include "heatlab/random.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double cross(Point o, Point a, Point b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

bool on_segment(Point a, Point b, Point p) {
    const double scale = std::max({std::abs(a.x), std::abs(a.y), std::abs(b.x), std::abs(b.y), 1.0});
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    if (std::abs(cross(a, b, p)) > 1e-12 * scale * std::max(len, 1.0)) return false;
    return p.x >= std::min(a.x, b.x) && p.x <= std::max(a.x, b.x) && p.y >= std::min(a.y, b.y) &&
           p.y <= std::max(a.y, b.y);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

bool segments_touch(Point a, Point b, Point c, Point d) {
    const int d1 = sign(cross(c, d, a)), d2 = sign(cross(c, d, b));
    const int d3 = sign(cross(a, b, c)), d4 = sign(cross(a, b, d));
    if (d1 != d2 && d3 != d4 && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0) return true;
    return on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d);
}

std::vector<Point> ring(const Polygon& poly) {
    std::vector<Point> v = poly.vertices;
    if (v.size() > 1 && v.front() == v.back()) v.pop_back();
    return v;
}

} // namespace

double Polygon::signed_area() const {
    const auto v = ring(*this);
    double a = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Point& p = v[i];
        const Point& q = v[(i + 1) % v.size()];
        a += p.x * q.y - q.x * p.y;
    }
    return a / 2.0;
}

void Polygon::validate() const {
    const auto v = ring(*this);
    for (const auto& p : v) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
            throw Error(Errc::invalid_polygon, "polygon vertices must be finite");
        }
    }
    if (v.size() < 3) throw Error(Errc::invalid_polygon, "a polygon needs at least 3 vertices");
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == v[(i + 1) % v.size()]) throw Error(Errc::invalid_polygon, "polygon repeats a vertex");
    }
    if (std::abs(signed_area()) <= 0.0) throw Error(Errc::invalid_polygon, "polygon has zero area");
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
            const Point a = v[i], b = v[(i + 1) % n], c = v[j], d = v[(j + 1) % n];
            if (adjacent) {
                // Adjacent edges share one vertex; they may not fold back over each other.
                const Point shared = j == i + 1 ? b : a;
                const Point p = j == i + 1 ? a : b;
                const Point q = j == i + 1 ? d : c;
                if (cross(shared, p, q) == 0.0 && (p.x - shared.x) * (q.x - shared.x) + (p.y - shared.y) * (q.y - shared.y) > 0) {
                    throw Error(Errc::invalid_polygon, "polygon edges overlap");
                }
                continue;
            }
            if (segments_touch(a, b, c, d)) throw Error(Errc::invalid_polygon, "polygon is self-intersecting");
        }
    }
}

bool point_in_polygon(const Polygon& poly, Point p) {
    const auto v = ring(poly);
    bool inside = false;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
        if (on_segment(v[j], v[i], p)) return true;
        if ((v[i].y > p.y) != (v[j].y > p.y)) {
            const double x = v[j].x + (p.y - v[j].y) * (v[i].x - v[j].x) / (v[i].y - v[j].y);
            if (p.x < x) inside = !inside;
        }
    }
    return inside;
}

PixelMask rasterize_polygon(const Polygon& poly, const GridSpec& grid) {
    poly.validate();
    grid.validate();
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
    for (const auto& p : poly.vertices) {
        xmin = std::min(xmin, p.x);
        xmax = std::max(xmax, p.x);
        ymin = std::min(ymin, p.y);
        ymax = std::max(ymax, p.y);
    }
    PixelMask mask(grid);
    const double ps = grid.pixel_size;
    const int c0 = std::max(0, static_cast<int>(std::floor((xmin - grid.origin_x) / ps - 0.5)));
    const int c1 = std::min(grid.width - 1, static_cast<int>(std::ceil((xmax - grid.origin_x) / ps - 0.5)));
    const int r0 = std::max(0, static_cast<int>(std::floor((grid.origin_y - ymax) / ps - 0.5)));
    const int r1 = std::min(grid.height - 1, static_cast<int>(std::ceil((grid.origin_y - ymin) / ps - 0.5)));
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            if (point_in_polygon(poly, {grid.center_x(c), grid.center_y(r)})) mask.set(c, r, true);
        }
    }
    return mask;
}

std::vector<std::string> inpaint_channels() {
    return {"blue", "green", "red", "nir", "swir1", "swir2", "tirs1", "tirs2"};
}

double median_of(std::vector<double> values) {
    if (values.empty()) throw Error(Errc::empty_input, "median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

DonorSignature donor_signature(const SceneStack& stack, const GeoGrid& lulc, int target_code,
                               DonorStatistic statistic, std::int64_t min_pixels) {
    require_aligned(stack.spec(), lulc.spec(), "donor_signature");
    const auto target = static_cast<float>(target_code);
    const std::vector<std::string> channels = inpaint_channels();
    std::vector<std::size_t> donors;
    for (std::size_t i = 0; i < lulc.size(); ++i) {
        if (lulc.is_nodata(i) || lulc[i] != target) continue;
        bool ok = true;
        for (const auto& c : channels) ok = ok && stack.channel(c).is_valid(i);
        if (ok) donors.push_back(i);
    }
    if (static_cast<std::int64_t>(donors.size()) < min_pixels || donors.empty()) {
        throw Error(Errc::insufficient_data, "donor_signature: " + std::to_string(donors.size()) +
                                                 " donor pixels, at least " + std::to_string(min_pixels) +
                                                 " required");
    }
    DonorSignature sig;
    sig.channels = channels;
    sig.statistic = statistic;
    sig.pixels = static_cast<std::int64_t>(donors.size());
    for (const auto& c : channels) {
        const GeoGrid& g = stack.channel(c);
        std::vector<double> v;
        v.reserve(donors.size());
        for (std::size_t i : donors) v.push_back(g[i]);
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        sig.stddev.push_back(std::sqrt(var / static_cast<double>(v.size())));
        sig.center.push_back(statistic == DonorStatistic::median ? median_of(std::move(v)) : mean);
    }
    return sig;
}

void InterventionSpec::validate() const {
    polygon.validate();
    if (!(jitter_scale >= 0.0) || !std::isfinite(jitter_scale)) {
        throw Error(Errc::invalid_argument, "jitter_scale must be finite and nonnegative");
    }
}

Json to_json(const InterventionSpec& s) {
    Json poly = Json::array();
    for (const auto& p : s.polygon.vertices) poly.push_back(Json::array({p.x, p.y}));
    return Json{{"polygon", poly},
                {"target", std::string(lulc_name(s.target))},
                {"donor", std::string(donor_statistic_name(s.donor))},
                {"jitter_scale", s.jitter_scale},
                {"seed", s.seed},
                {"scene", s.scene_id},
                {"variant", s.variant}};
}

InterventionSpec intervention_from_json(const Json& j, const InterventionConfig& defaults) {
    if (!j.is_object()) throw Error(Errc::invalid_argument, "intervention spec must be a JSON object");
    static const std::set<std::string> known{"polygon", "target", "donor", "jitter_scale", "seed", "scene", "variant"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.contains(it.key())) throw Error(Errc::invalid_argument, "unknown intervention field '" + it.key() + "'");
    }
    InterventionSpec s;
    s.target = defaults.target;
    s.donor = defaults.donor;
    s.jitter_scale = defaults.jitter_scale;
    try {
        const Json& poly = j.at("polygon");
        if (!poly.is_array()) throw Error(Errc::invalid_polygon, "polygon must be an array of [x, y] pairs");
        for (const auto& v : poly) {
            if (!v.is_array() || v.size() != 2) throw Error(Errc::invalid_polygon, "polygon vertices must be [x, y] pairs");
            s.polygon.vertices.push_back({v[0].get<double>(), v[1].get<double>()});
        }
        if (j.contains("target")) {
            const auto c = parse_lulc_name(j.at("target").get<std::string>());
            if (!c) throw Error(Errc::invalid_argument, "unknown target class");
            s.target = *c;
        }
        if (j.contains("donor")) s.donor = parse_donor_statistic(j.at("donor").get<std::string>());
        s.jitter_scale = j.value("jitter_scale", s.jitter_scale);
        s.seed = j.value("seed", std::uint64_t{0});
        s.scene_id = j.value("scene", std::string());
        s.variant = j.value("variant", std::string("baseline"));
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::invalid_argument, std::string("intervention spec: ") + e.what());
    }
    s.validate();
    return s;
}

std::string intervention_id(const InterventionSpec& s) { return sha256_hex(to_json(s).dump()).substr(0, 16); }

InpaintResult apply_signature(const SceneStack& stack, const GeoGrid& lulc, const PixelMask& mask,
                              const DonorSignature& donor, int target_code, double jitter_scale,
                              std::uint64_t seed, const std::string& provenance) {
    require_aligned(stack.spec(), lulc.spec(), "inpaint");
    require_aligned(stack.spec(), mask.spec(), "inpaint");
    std::vector<std::size_t> pixels;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i]) pixels.push_back(i);
    }
    if (pixels.empty()) throw Error(Errc::mask_not_built, "inpaint: the effective mask is empty");

    std::vector<std::vector<float>> values;
    for (const auto& c : donor.channels) {
        const auto v = stack.channel(c).values();
        values.emplace_back(v.begin(), v.end());
    }
    Rng rng(seed);
    for (std::size_t i : pixels) {
        for (std::size_t b = 0; b < donor.channels.size(); ++b) {
            double v = donor.center[b];
            const double sd = jitter_scale * donor.stddev[b];
            if (sd > 0.0) v += sd * rng.normal();
            const bool reflectance = donor.channels[b] != "tirs1" && donor.channels[b] != "tirs2";
            if (reflectance) v = std::clamp(v, 0.0, 1.0);
            values[b][i] = static_cast<float>(v);
        }
    }
    InpaintResult out{stack, lulc, mask, donor};
    for (std::size_t b = 0; b < donor.channels.size(); ++b) {
        out.stack = out.stack.with_channel(donor.channels[b], stack.channel(donor.channels[b]).with_values(std::move(values[b])),
                                           provenance);
    }
    std::vector<float> cover(lulc.values().begin(), lulc.values().end());
    for (std::size_t i : pixels) cover[i] = static_cast<float>(target_code);
    out.lulc = lulc.with_values(std::move(cover));
    return out;
}

InpaintResult inpaint(const SceneStack& stack, const GeoGrid& lulc, const InterventionSpec& spec,
                      const WorkspaceConfig& config) {
    spec.validate();
    const PixelMask poly = rasterize_polygon(spec.polygon, stack.spec());
    const PixelMask mask = poly & built_mask(lulc, config.built_codes());
    if (!mask.any()) {
        throw Error(Errc::mask_not_built, "the intervention polygon covers no built pixel");
    }
    const int target = config.lulc_codes.code(spec.target);
    const DonorSignature donor =
        donor_signature(stack, lulc, target, spec.donor, config.intervention.min_donor_pixels);
    return apply_signature(stack, lulc, mask, donor, target, spec.jitter_scale, spec.seed,
                           "inpaint " + intervention_id(spec));
}

std::vector<TransectSample> transect(const PixelMask& mask, const GeoGrid& before, const GeoGrid& after,
                                     double extension, double step) {
    require_aligned(mask.spec(), before.spec(), "transect");
    require_aligned(mask.spec(), after.spec(), "transect");
    if (!(step > 0.0) || extension < 0.0) throw Error(Errc::invalid_argument, "transect step must be positive");
    const GridSpec& g = mask.spec();
    double sx = 0.0, sy = 0.0;
    std::int64_t n = 0;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!mask.at(c, r)) continue;
            sx += g.center_x(c);
            sy += g.center_y(r);
            ++n;
        }
    }
    if (n == 0) throw Error(Errc::empty_input, "transect: empty mask");
    const double cx = sx / static_cast<double>(n), cy = sy / static_cast<double>(n);
    double cxx = 0.0, cyy = 0.0, cxy = 0.0;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!mask.at(c, r)) continue;
            const double dx = g.center_x(c) - cx, dy = g.center_y(r) - cy;
            cxx += dx * dx;
            cyy += dy * dy;
            cxy += dx * dy;
        }
    }
    const double theta = 0.5 * std::atan2(2.0 * cxy, cxx - cyy);
    double ux = std::cos(theta), uy = std::sin(theta);
    if (ux < 0.0 || (ux == 0.0 && uy < 0.0)) {
        ux = -ux;
        uy = -uy;
    }
    double tmin = std::numeric_limits<double>::infinity(), tmax = -tmin;
    for (int r = 0; r < g.height; ++r) {
        for (int c = 0; c < g.width; ++c) {
            if (!mask.at(c, r)) continue;
            const double t = (g.center_x(c) - cx) * ux + (g.center_y(r) - cy) * uy;
            tmin = std::min(tmin, t);
            tmax = std::max(tmax, t);
        }
    }
    const double start = tmin - extension;
    const double length = tmax - tmin + 2.0 * extension;
    std::vector<TransectSample> out;
    for (std::int64_t k = 0;; ++k) {
        const double s = static_cast<double>(k) * step;
        if (s > length + 1e-9) break;
        const double x = cx + (start + s) * ux;
        const double y = cy + (start + s) * uy;
        const auto col = static_cast<int>(std::floor((x - g.origin_x) / g.pixel_size));
        const auto row = static_cast<int>(std::floor((g.origin_y - y) / g.pixel_size));
        if (!g.contains(col, row)) continue;
        const std::size_t i = g.index(col, row);
        TransectSample t;
        t.distance = s;
        t.x = x;
        t.y = y;
        t.before = before.is_valid(i) ? static_cast<double>(before[i]) : kNaN;
        t.after = after.is_valid(i) ? static_cast<double>(after[i]) : kNaN;
        t.in_mask = mask[i];
        out.push_back(t);
    }
    return out;
}

InterventionResult evaluate_intervention(const Predictor& predictor, const SceneStack& before, const GeoGrid& lulc,
                                         const InterventionSpec& spec, const WorkspaceConfig& config) {
    if (!predictor.accepts_modified_stacks()) {
        throw Error(Errc::predictor_unavailable,
                    "variant " + predictor.variant() + " cannot predict edited scenes (stored predictions only)");
    }
    const InpaintResult edit = inpaint(before, lulc, spec, config);
    InterventionResult r;
    r.id = intervention_id(spec);
    r.spec = spec;
    r.scene_id = before.scene_id();
    r.before_lst = predictor.predict(before);
    r.after_lst = predictor.predict(edit.stack);
    r.mask = edit.mask;
    r.donor = edit.donor;

    std::vector<float> delta(r.before_lst.size(), kDefaultNodata);
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < delta.size(); ++i) {
        if (r.before_lst.is_nodata(i) || r.after_lst.is_nodata(i)) continue;
        const double d = static_cast<double>(r.after_lst[i]) - static_cast<double>(r.before_lst[i]);
        delta[i] = static_cast<float>(d);
        if (edit.mask[i]) {
            sum += d;
            ++n;
        }
    }
    r.delta = GeoGrid(r.before_lst.spec(), std::move(delta));
    r.mean_delta_in_mask = n > 0 ? sum / static_cast<double>(n) : kNaN;
    r.transect = transect(edit.mask, r.before_lst, r.after_lst, config.intervention.transect_extension,
                          config.intervention.transect_step);

    // Profiles of the park(s) that now contain the mask.
    ParkSet parks = extract_parks(edit.lulc, config.green_codes(), config.min_park_area);
    auto overlapping = [&](const ParkSet& p) {
        std::set<int> labels;
        for (std::size_t i = 0; i < edit.mask.size(); ++i) {
            if (edit.mask[i] && p.label_at(i) > 0) labels.insert(p.label_at(i));
        }
        return labels;
    };
    std::set<int> labels = overlapping(parks);
    if (labels.empty()) {
        parks = extract_parks(edit.lulc, config.green_codes(), 0.0);
        labels = overlapping(parks);
    }
    const CoolingGeometry geo = cooling_geometry(std::move(parks), built_mask(edit.lulc, config.built_codes()));
    const SceneCooling sc = scene_cooling(r.after_lst, geo, config.baseline, config.profile);
    std::vector<CoolingProfile> internal, spill;
    for (const auto& pc : sc.parks) {
        if (!labels.contains(pc.park)) continue;
        internal.push_back(pc.internal);
        spill.push_back(pc.spillover);
    }
    r.internal_profile = aggregate_profiles(internal);
    r.spillover_profile = aggregate_profiles(spill);
    return r;
}

} // namespace heatlab
