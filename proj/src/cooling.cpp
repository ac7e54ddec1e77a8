#include "heatlab/cooling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "heatlab/error.hpp"
#include "heatlab/pixelwise.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Welford accumulator per distance bin.
class BinAccumulator {
public:
    BinAccumulator(double bin_width, double max_dist) : width_(bin_width), max_(max_dist) {
        if (!(bin_width > 0.0) || !(max_dist > 0.0)) {
            throw Error(Errc::invalid_argument, "profile bin_width and max_dist must be positive");
        }
        const auto bins = static_cast<std::size_t>(std::ceil(max_dist / bin_width - 1e-9));
        for (std::size_t k = 0; k <= bins; ++k) {
            edges_.push_back(std::min(static_cast<double>(k) * bin_width, max_dist));
        }
        n_.assign(bins, 0);
        mean_.assign(bins, 0.0);
        m2_.assign(bins, 0.0);
        dist_.assign(bins, 0.0);
    }

    void add(double distance, double value) {
        if (!(distance >= 0.0) || !(distance < max_)) return;
        auto k = static_cast<std::size_t>(distance / width_);
        k = std::min(k, n_.size() - 1);
        const auto n = static_cast<double>(++n_[k]);
        const double delta = value - mean_[k];
        mean_[k] += delta / n;
        m2_[k] += delta * (value - mean_[k]);
        dist_[k] += (distance - dist_[k]) / n;
    }

    CoolingProfile finish(ProfileSide side) const {
        CoolingProfile p;
        p.side = side;
        p.bin_edges = edges_;
        p.count = n_;
        for (std::size_t k = 0; k < n_.size(); ++k) {
            if (n_[k] == 0) {
                p.mean_dt.push_back(kNaN);
                p.std_dt.push_back(kNaN);
                p.mean_distance.push_back(kNaN);
            } else {
                p.mean_dt.push_back(mean_[k]);
                p.std_dt.push_back(std::sqrt(std::max(0.0, m2_[k] / static_cast<double>(n_[k]))));
                p.mean_distance.push_back(dist_[k]);
            }
        }
        return p;
    }

private:
    double width_;
    double max_;
    std::vector<double> edges_;
    std::vector<std::int64_t> n_;
    std::vector<double> mean_, m2_, dist_;
};

double citywide_built_mean(const GeoGrid& lst, const PixelMask& built, std::int64_t* count) {
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < lst.size(); ++i) {
        if (built[i] && lst.is_valid(i)) {
            sum += lst[i];
            ++n;
        }
    }
    *count = n;
    return n > 0 ? sum / static_cast<double>(n) : kNaN;
}

BaselineResult resolve_baseline(double ring_sum, std::int64_t ring_n, const BaselineSpec& spec, const GeoGrid& lst,
                                const PixelMask& built) {
    if (ring_n >= spec.min_pixels && ring_n > 0) {
        return BaselineResult{ring_sum / static_cast<double>(ring_n), ring_n, false};
    }
    if (spec.fallback == BaselineFallback::error) {
        throw Error(Errc::insufficient_data, "baseline ring holds " + std::to_string(ring_n) + " built pixels, " +
                                                 std::to_string(spec.min_pixels) + " required");
    }
    std::int64_t n = 0;
    const double mean = citywide_built_mean(lst, built, &n);
    if (n == 0) {
        throw Error(Errc::insufficient_data, "baseline ring underpopulated and no built pixels for the fallback");
    }
    return BaselineResult{mean, n, true};
}

} // namespace

std::string_view profile_side_name(ProfileSide side) {
    return side == ProfileSide::internal ? "internal" : "spillover";
}

ProfileSide parse_profile_side(std::string_view name) {
    if (name == "internal") return ProfileSide::internal;
    if (name == "spillover") return ProfileSide::spillover;
    throw Error(Errc::invalid_argument, "profile side must be 'internal' or 'spillover', got '" + std::string(name) +
                                            "'");
}

std::int64_t CoolingProfile::total_count() const {
    std::int64_t n = 0;
    for (auto c : count) n += c;
    return n;
}

void BaselineSpec::validate() const {
    if (!(ring_inner > 0.0) || !(ring_inner < ring_outer)) {
        throw Error(Errc::invalid_argument, "baseline ring requires 0 < ring_inner < ring_outer");
    }
    if (min_pixels < 1) {
        throw Error(Errc::invalid_argument, "baseline min_pixels must be at least 1");
    }
}

BaselineResult builtup_baseline(const GeoGrid& lst, const PixelMask& built, const GeoGrid& park_outside_dist,
                                const BaselineSpec& spec) {
    spec.validate();
    require_aligned(lst.spec(), built.spec(), "builtup_baseline");
    require_aligned(lst.spec(), park_outside_dist.spec(), "builtup_baseline");
    double sum = 0.0;
    std::int64_t n = 0;
    for (std::size_t i = 0; i < lst.size(); ++i) {
        if (!built[i] || lst.is_nodata(i) || park_outside_dist.is_nodata(i)) continue;
        const double d = park_outside_dist[i];
        if (d >= spec.ring_inner && d <= spec.ring_outer) {
            sum += lst[i];
            ++n;
        }
    }
    return resolve_baseline(sum, n, spec, lst, built);
}

GeoGrid anomaly(const GeoGrid& lst, double baseline) {
    return pixelwise([baseline](double v) { return v - baseline; }, lst);
}

CoolingProfile cooling_profile(const GeoGrid& dt, const GeoGrid& dist, const PixelMask& domain, double bin_width,
                               double max_dist, ProfileSide side) {
    require_aligned(dt.spec(), dist.spec(), "cooling_profile");
    require_aligned(dt.spec(), domain.spec(), "cooling_profile");
    BinAccumulator acc(bin_width, max_dist);
    for (std::size_t i = 0; i < dt.size(); ++i) {
        if (!domain[i] || dt.is_nodata(i) || dist.is_nodata(i)) continue;
        acc.add(dist[i], dt[i]);
    }
    return acc.finish(side);
}

CoolingProfile aggregate_profiles(std::span<const CoolingProfile> profiles) {
    if (profiles.empty()) {
        throw Error(Errc::empty_input, "aggregate_profiles needs at least one profile");
    }
    const CoolingProfile& first = profiles.front();
    for (const auto& p : profiles) {
        if (p.bin_edges != first.bin_edges || p.side != first.side) {
            throw Error(Errc::invalid_argument, "aggregate_profiles: bin edges or side differ between profiles");
        }
    }
    const std::size_t bins = first.bins();
    CoolingProfile out;
    out.side = first.side;
    out.bin_edges = first.bin_edges;
    out.count.assign(bins, 0);
    out.mean_dt.assign(bins, kNaN);
    out.std_dt.assign(bins, kNaN);
    out.mean_distance.assign(bins, kNaN);
    for (std::size_t k = 0; k < bins; ++k) {
        std::int64_t n = 0;
        double sum = 0.0, dist_sum = 0.0;
        for (const auto& p : profiles) {
            if (p.count[k] == 0) continue;
            n += p.count[k];
            sum += static_cast<double>(p.count[k]) * p.mean_dt[k];
            dist_sum += static_cast<double>(p.count[k]) * p.mean_distance[k];
        }
        if (n == 0) continue;
        const double mean = sum / static_cast<double>(n);
        double m2 = 0.0;
        for (const auto& p : profiles) {
            if (p.count[k] == 0) continue;
            const double dm = p.mean_dt[k] - mean;
            m2 += static_cast<double>(p.count[k]) * (p.std_dt[k] * p.std_dt[k] + dm * dm);
        }
        out.count[k] = n;
        out.mean_dt[k] = mean;
        out.std_dt[k] = std::sqrt(m2 / static_cast<double>(n));
        out.mean_distance[k] = dist_sum / static_cast<double>(n);
    }
    return out;
}

UrbanGradient urban_gradient(const GeoGrid& dt, const GeoGrid& bf, GradientAxis axis, double radial_bin_width) {
    require_aligned(dt.spec(), bf.spec(), "urban_gradient");
    UrbanGradient g;
    g.axis = axis;
    std::vector<double> sum;
    if (axis == GradientAxis::built_fraction_decile) {
        sum.assign(10, 0.0);
        g.count.assign(10, 0);
        for (std::size_t i = 0; i < dt.size(); ++i) {
            if (dt.is_nodata(i) || bf.is_nodata(i)) continue;
            const double f = std::clamp(static_cast<double>(bf[i]), 0.0, 1.0);
            const auto k = std::min<std::size_t>(9, static_cast<std::size_t>(std::floor(f * 10.0 + 1e-6)));
            sum[k] += dt[i];
            ++g.count[k];
        }
        for (std::size_t k = 0; k < 10; ++k) g.bin_centers.push_back(0.05 + 0.1 * static_cast<double>(k));
    } else {
        if (!(radial_bin_width > 0.0)) {
            throw Error(Errc::invalid_argument, "radial bin width must be positive");
        }
        const GridSpec& s = bf.spec();
        double wx = 0.0, wy = 0.0, wsum = 0.0;
        for (int r = 0; r < s.height; ++r) {
            for (int c = 0; c < s.width; ++c) {
                const std::size_t i = s.index(c, r);
                if (bf.is_nodata(i)) continue;
                wx += bf[i] * s.center_x(c);
                wy += bf[i] * s.center_y(r);
                wsum += bf[i];
            }
        }
        if (wsum <= 0.0) {
            throw Error(Errc::empty_input, "urban_gradient: no built mass to anchor the radial axis");
        }
        const double cx = wx / wsum, cy = wy / wsum;
        for (int r = 0; r < s.height; ++r) {
            for (int c = 0; c < s.width; ++c) {
                const std::size_t i = s.index(c, r);
                if (dt.is_nodata(i) || bf.is_nodata(i)) continue;
                const double rad = std::hypot(s.center_x(c) - cx, s.center_y(r) - cy);
                const auto k = static_cast<std::size_t>(rad / radial_bin_width);
                if (k >= sum.size()) {
                    sum.resize(k + 1, 0.0);
                    g.count.resize(k + 1, 0);
                }
                sum[k] += dt[i];
                ++g.count[k];
            }
        }
        for (std::size_t k = 0; k < sum.size(); ++k) {
            g.bin_centers.push_back((static_cast<double>(k) + 0.5) * radial_bin_width);
        }
    }
    for (std::size_t k = 0; k < sum.size(); ++k) {
        g.mean_anomaly.push_back(g.count[k] > 0 ? sum[k] / static_cast<double>(g.count[k]) : kNaN);
    }
    return g;
}

double nearest_rank(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw Error(Errc::empty_input, "quantile of an empty sample");
    }
    if (!(q >= 0.0 && q <= 1.0)) {
        throw Error(Errc::invalid_argument, "quantile must lie in [0, 1]");
    }
    const auto n = static_cast<double>(sorted.size());
    auto rank = static_cast<std::size_t>(std::ceil(q * n - 1e-9));
    rank = std::clamp<std::size_t>(rank, 1, sorted.size());
    return sorted[rank - 1];
}

SourceSinkTable source_sink(const GeoGrid& dt, const GeoGrid& lulc, std::pair<double, double> quantiles) {
    require_aligned(dt.spec(), lulc.spec(), "source_sink");
    if (!(quantiles.first <= quantiles.second)) {
        throw Error(Errc::invalid_argument, "source_sink: low quantile must not exceed high quantile");
    }
    std::vector<double> values;
    for (std::size_t i = 0; i < dt.size(); ++i) {
        if (dt.is_valid(i) && lulc.is_valid(i)) values.push_back(dt[i]);
    }
    SourceSinkTable table;
    table.low_quantile = quantiles.first;
    table.high_quantile = quantiles.second;
    if (values.empty()) {
        table.low_threshold = table.high_threshold = kNaN;
        return table;
    }
    std::sort(values.begin(), values.end());
    table.low_threshold = nearest_rank(values, quantiles.first);
    table.high_threshold = nearest_rank(values, quantiles.second);

    struct Tally {
        std::int64_t source = 0, neutral = 0, sink = 0;
        double sum = 0.0;
    };
    std::map<int, Tally> tallies;
    for (std::size_t i = 0; i < dt.size(); ++i) {
        if (dt.is_nodata(i) || lulc.is_nodata(i)) continue;
        const double v = dt[i];
        Tally& t = tallies[static_cast<int>(std::lround(lulc[i]))];
        if (v < table.low_threshold) {
            ++t.sink;
        } else if (v > table.high_threshold) {
            ++t.source;
        } else {
            ++t.neutral;
        }
        t.sum += v;
    }
    for (const auto& [code, t] : tallies) {
        const std::int64_t n = t.source + t.neutral + t.sink;
        const auto dn = static_cast<double>(n);
        table.rows.push_back(SourceSinkRow{code, static_cast<double>(t.source) / dn,
                                           static_cast<double>(t.neutral) / dn, static_cast<double>(t.sink) / dn,
                                           t.sum / dn, n});
    }
    return table;
}

CoolingGeometry cooling_geometry(ParkSet parks, PixelMask built) {
    require_aligned(parks.labels.spec(), built.spec(), "cooling_geometry");
    const GridSpec spec = built.spec();
    const PixelMask park_mask = parks.park_mask();
    CoolingGeometry g{std::move(parks), std::move(built), GeoGrid::filled(spec, kDefaultNodata),
                      GeoGrid::filled(spec, kDefaultNodata), std::vector<std::int32_t>(spec.size(), 0)};
    const std::size_t n_park = park_mask.count();
    if (n_park == 0 || n_park == park_mask.size()) {
        return g;
    }
    g.inside = euclidean_distance(park_mask, DistanceSide::inside);
    const NearestFeature nf = nearest_feature_transform(park_mask);
    std::vector<float> outside(spec.size(), kDefaultNodata);
    for (std::size_t i = 0; i < spec.size(); ++i) {
        if (park_mask[i]) continue;
        outside[i] = static_cast<float>(std::sqrt(static_cast<double>(nf.sq_dist[i])) * spec.pixel_size);
        g.owner[i] = g.parks.label_at(static_cast<std::size_t>(nf.nearest[i]));
    }
    g.outside = GeoGrid(spec, std::move(outside));
    return g;
}

SceneCooling scene_cooling(const GeoGrid& lst, const CoolingGeometry& geo, const BaselineSpec& baseline,
                           const ProfileConfig& cfg) {
    baseline.validate();
    require_aligned(lst.spec(), geo.built.spec(), "scene_cooling");
    const std::size_t n_parks = geo.parks.count();
    std::vector<double> ring_sum(n_parks + 1, 0.0);
    std::vector<std::int64_t> ring_n(n_parks + 1, 0);
    for (std::size_t i = 0; i < lst.size(); ++i) {
        const int p = geo.owner[i];
        if (p == 0 || !geo.built[i] || lst.is_nodata(i)) continue;
        const double d = geo.outside[i];
        if (d >= baseline.ring_inner && d <= baseline.ring_outer) {
            ring_sum[static_cast<std::size_t>(p)] += lst[i];
            ++ring_n[static_cast<std::size_t>(p)];
        }
    }

    SceneCooling out;
    std::vector<BinAccumulator> internal, spill;
    std::vector<BaselineResult> base(n_parks + 1);
    for (std::size_t p = 1; p <= n_parks; ++p) {
        base[p] = resolve_baseline(ring_sum[p], ring_n[p], baseline, lst, geo.built);
    }
    internal.reserve(n_parks + 1);
    spill.reserve(n_parks + 1);
    for (std::size_t p = 0; p <= n_parks; ++p) {
        internal.emplace_back(cfg.bin_width, cfg.internal_max);
        spill.emplace_back(cfg.bin_width, cfg.spillover_max);
    }
    for (std::size_t i = 0; i < lst.size(); ++i) {
        if (lst.is_nodata(i)) continue;
        const int label = geo.parks.label_at(i);
        if (label > 0) {
            const auto p = static_cast<std::size_t>(label);
            internal[p].add(geo.inside[i], lst[i] - base[p].celsius);
        } else if (geo.owner[i] > 0 && geo.built[i]) {
            const auto p = static_cast<std::size_t>(geo.owner[i]);
            spill[p].add(geo.outside[i], lst[i] - base[p].celsius);
        }
    }
    std::vector<CoolingProfile> all_internal, all_spill;
    for (std::size_t p = 1; p <= n_parks; ++p) {
        ParkCooling pc{static_cast<int>(p), base[p], internal[p].finish(ProfileSide::internal),
                       spill[p].finish(ProfileSide::spillover)};
        all_internal.push_back(pc.internal);
        all_spill.push_back(pc.spillover);
        out.parks.push_back(std::move(pc));
    }
    if (n_parks == 0) {
        out.internal = BinAccumulator(cfg.bin_width, cfg.internal_max).finish(ProfileSide::internal);
        out.spillover = BinAccumulator(cfg.bin_width, cfg.spillover_max).finish(ProfileSide::spillover);
    } else {
        out.internal = aggregate_profiles(all_internal);
        out.spillover = aggregate_profiles(all_spill);
    }
    return out;
}

GeoGrid citywide_anomaly(const GeoGrid& lst, const CoolingGeometry& geo, const BaselineSpec& baseline) {
    const BaselineResult b = builtup_baseline(lst, geo.built, geo.outside, baseline);
    return anomaly(lst, b.celsius);
}

} // namespace heatlab
