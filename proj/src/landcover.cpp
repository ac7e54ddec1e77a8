#include "heatlab/landcover.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_map>

#include "heatlab/error.hpp"

namespace heatlab {

std::string_view lulc_name(LulcClass c) {
    switch (c) {
    case LulcClass::water: return "water";
    case LulcClass::trees: return "trees";
    case LulcClass::flooded_vegetation: return "flooded_vegetation";
    case LulcClass::crops: return "crops";
    case LulcClass::built: return "built";
    case LulcClass::bare_ground: return "bare_ground";
    case LulcClass::snow_ice: return "snow_ice";
    case LulcClass::clouds: return "clouds";
    case LulcClass::rangeland: return "rangeland";
    }
    return "unknown";
}

std::optional<LulcClass> parse_lulc_name(std::string_view name) {
    for (LulcClass c : kAllLulcClasses) {
        if (lulc_name(c) == name) return c;
    }
    return std::nullopt;
}

LulcCodes LulcCodes::impact_observatory() {
    LulcCodes out;
    out.codes = {1, 2, 4, 5, 7, 8, 9, 10, 11};
    return out;
}

std::optional<LulcClass> LulcCodes::classify(int code) const {
    for (std::size_t i = 0; i < codes.size(); ++i) {
        if (codes[i] == code) return kAllLulcClasses[i];
    }
    return std::nullopt;
}

std::set<int> LulcCodes::codes_for(std::span<const LulcClass> classes) const {
    std::set<int> out;
    for (LulcClass c : classes) out.insert(code(c));
    return out;
}

void LulcCodes::validate() const {
    std::set<int> seen(codes.begin(), codes.end());
    if (seen.size() != codes.size()) {
        throw Error(Errc::invalid_argument, "LULC category codes must be unique");
    }
}

PixelMask ParkSet::park_mask() const {
    PixelMask m(labels.spec());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        m.set(i, labels[i] > 0.0f);
    }
    return m;
}

namespace {

std::uint32_t find_root(std::vector<std::uint32_t>& parent, std::uint32_t x) {
    while (parent[x] != x) {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    return x;
}

void unite(std::vector<std::uint32_t>& parent, std::uint32_t a, std::uint32_t b) {
    a = find_root(parent, a);
    b = find_root(parent, b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent[a] = b;
}

} // namespace

ParkSet extract_parks(const GeoGrid& lulc, const std::set<int>& green_codes, double min_area) {
    const GridSpec& s = lulc.spec();
    PixelMask green(s);
    for (std::size_t i = 0; i < lulc.size(); ++i) {
        if (lulc.is_valid(i) && green_codes.contains(static_cast<int>(std::lround(lulc[i])))) {
            green.set(i, true);
        }
    }

    // Provisional labels with union-find over the already-visited 8-neighbours.
    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> provisional(s.size(), kNone);
    std::vector<std::uint32_t> parent;
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c) {
            const std::size_t i = s.index(c, r);
            if (!green[i]) continue;
            std::uint32_t label = kNone;
            const int nbr[4][2] = {{-1, 0}, {-1, -1}, {0, -1}, {1, -1}};
            for (const auto& d : nbr) {
                const int nc = c + d[0], nr = r + d[1];
                if (!s.contains(nc, nr)) continue;
                const std::uint32_t other = provisional[s.index(nc, nr)];
                if (other == kNone) continue;
                if (label == kNone) {
                    label = other;
                } else {
                    unite(parent, label, other);
                }
            }
            if (label == kNone) {
                label = static_cast<std::uint32_t>(parent.size());
                parent.push_back(label);
            }
            provisional[i] = label;
        }
    }

    std::vector<std::size_t> root_count(parent.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (provisional[i] != kNone) ++root_count[find_root(parent, provisional[i])];
    }

    // Final ids follow the row-major order of each kept component's first pixel.
    std::vector<int> final_id(parent.size(), 0);
    std::vector<double> areas;
    std::vector<float> labels(s.size(), 0.0f);
    const double pixel_area = s.pixel_area();
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (provisional[i] == kNone) continue;
        const std::uint32_t root = find_root(parent, provisional[i]);
        if (final_id[root] == 0) {
            const double area = static_cast<double>(root_count[root]) * pixel_area;
            if (area + 1e-9 * pixel_area < min_area) {
                final_id[root] = -1;
            } else {
                areas.push_back(area);
                final_id[root] = static_cast<int>(areas.size());
            }
        }
        if (final_id[root] > 0) labels[i] = static_cast<float>(final_id[root]);
    }
    return ParkSet{GeoGrid(s, std::move(labels)), std::move(areas), std::move(green)};
}

namespace {

// Lower envelope of parabolas (Felzenszwalb & Huttenlocher) over the finite
// sites of f; writes the minimum and the arg-min site for every position.
void squared_distance_1d(std::span<const std::int64_t> f, std::span<std::int64_t> d, std::span<std::int64_t> arg,
                         std::vector<std::int64_t>& sites, std::vector<double>& bounds) {
    const std::size_t n = f.size();
    sites.clear();
    bounds.clear();
    for (std::size_t q = 0; q < n; ++q) {
        if (f[q] < 0) continue;
        const auto qq = static_cast<std::int64_t>(q);
        while (!sites.empty()) {
            const std::int64_t p = sites.back();
            const double s = static_cast<double>((f[q] + qq * qq) - (f[static_cast<std::size_t>(p)] + p * p)) /
                             static_cast<double>(2 * (qq - p));
            if (s <= bounds.back()) {
                sites.pop_back();
                bounds.pop_back();
            } else {
                sites.push_back(qq);
                bounds.push_back(s);
                break;
            }
        }
        if (sites.empty()) {
            sites.push_back(qq);
            bounds.push_back(-std::numeric_limits<double>::infinity());
        }
    }
    if (sites.empty()) {
        std::fill(d.begin(), d.end(), -1);
        std::fill(arg.begin(), arg.end(), -1);
        return;
    }
    std::size_t k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double x = static_cast<double>(q);
        while (k + 1 < sites.size() && bounds[k + 1] < x) ++k;
        const std::int64_t p = sites[k];
        const std::int64_t dx = static_cast<std::int64_t>(q) - p;
        d[q] = dx * dx + f[static_cast<std::size_t>(p)];
        arg[q] = p;
    }
}

} // namespace

NearestFeature nearest_feature_transform(const PixelMask& features) {
    const GridSpec& s = features.spec();
    const auto w = static_cast<std::size_t>(s.width);
    const auto h = static_cast<std::size_t>(s.height);
    std::vector<std::int64_t> col_sq(s.size()), col_row(s.size());
    std::vector<std::int64_t> sites;
    std::vector<double> bounds;

    std::vector<std::int64_t> f(h), d(h), arg(h);
    for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t y = 0; y < h; ++y) f[y] = features[y * w + x] ? 0 : -1;
        squared_distance_1d(f, d, arg, sites, bounds);
        for (std::size_t y = 0; y < h; ++y) {
            col_sq[y * w + x] = d[y];
            col_row[y * w + x] = arg[y];
        }
    }

    NearestFeature out{std::vector<std::int64_t>(s.size()), std::vector<std::int64_t>(s.size())};
    std::vector<std::int64_t> rd(w), rarg(w);
    for (std::size_t y = 0; y < h; ++y) {
        const std::span<const std::int64_t> row(col_sq.data() + y * w, w);
        squared_distance_1d(row, rd, rarg, sites, bounds);
        for (std::size_t x = 0; x < w; ++x) {
            out.sq_dist[y * w + x] = rd[x];
            if (rarg[x] < 0) {
                out.nearest[y * w + x] = -1;
            } else {
                const auto fx = static_cast<std::size_t>(rarg[x]);
                out.nearest[y * w + x] = col_row[y * w + fx] * static_cast<std::int64_t>(w) + rarg[x];
            }
        }
    }
    return out;
}

namespace {

void require_both_sides(const PixelMask& mask) {
    const std::size_t n = mask.count();
    if (n == 0) {
        throw Error(Errc::empty_input, "distance transform: mask has no set pixels");
    }
    if (n == mask.size()) {
        throw Error(Errc::empty_input, "distance transform: mask covers the whole grid");
    }
}

} // namespace

std::vector<double> euclidean_distance_values(const PixelMask& mask, DistanceSide side) {
    require_both_sides(mask);
    const bool inside = side == DistanceSide::inside;
    const PixelMask features = inside ? ~mask : mask;
    const NearestFeature nf = nearest_feature_transform(features);
    const double ps = mask.spec().pixel_size;
    std::vector<double> out(mask.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] == inside) {
            out[i] = std::sqrt(static_cast<double>(nf.sq_dist[i])) * ps;
        }
    }
    return out;
}

GeoGrid euclidean_distance(const PixelMask& mask, DistanceSide side) {
    const std::vector<double> d = euclidean_distance_values(mask, side);
    std::vector<float> values(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        values[i] = std::isnan(d[i]) ? kDefaultNodata : static_cast<float>(d[i]);
    }
    return GeoGrid(mask.spec(), std::move(values));
}

DistanceField distance_field(const PixelMask& parks) {
    return DistanceField{euclidean_distance(parks, DistanceSide::inside),
                         euclidean_distance(parks, DistanceSide::outside)};
}

PixelMask built_mask(const GeoGrid& lulc, const std::set<int>& built_codes) {
    PixelMask m(lulc.spec());
    for (std::size_t i = 0; i < lulc.size(); ++i) {
        m.set(i, lulc.is_valid(i) && built_codes.contains(static_cast<int>(std::lround(lulc[i]))));
    }
    return m;
}

GeoGrid built_fraction(const PixelMask& built, int window) {
    if (window < 1 || window % 2 == 0) {
        throw Error(Errc::invalid_argument, "built_fraction window must be a positive odd pixel count");
    }
    const GridSpec& s = built.spec();
    const int half = window / 2;
    const auto w = static_cast<std::size_t>(s.width);
    // Summed-area table with a zero border row and column.
    std::vector<std::int64_t> sat((w + 1) * (static_cast<std::size_t>(s.height) + 1), 0);
    for (int r = 0; r < s.height; ++r) {
        std::int64_t row_sum = 0;
        for (int c = 0; c < s.width; ++c) {
            row_sum += built.at(c, r) ? 1 : 0;
            sat[(r + 1) * (w + 1) + (c + 1)] = sat[r * (w + 1) + (c + 1)] + row_sum;
        }
    }
    std::vector<float> out(s.size());
    for (int r = 0; r < s.height; ++r) {
        const int r0 = std::max(0, r - half), r1 = std::min(s.height, r + half + 1);
        for (int c = 0; c < s.width; ++c) {
            const int c0 = std::max(0, c - half), c1 = std::min(s.width, c + half + 1);
            const std::int64_t sum = sat[r1 * (w + 1) + c1] - sat[r0 * (w + 1) + c1] - sat[r1 * (w + 1) + c0] +
                                     sat[r0 * (w + 1) + c0];
            const auto area = static_cast<double>((r1 - r0) * (c1 - c0));
            out[s.index(c, r)] = static_cast<float>(static_cast<double>(sum) / area);
        }
    }
    return GeoGrid(s, std::move(out));
}

} // namespace heatlab
