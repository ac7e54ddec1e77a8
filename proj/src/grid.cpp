#include "heatlab/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>
#include <utility>

#include "heatlab/error.hpp"

namespace heatlab {

void GridSpec::validate() const {
    if (width < 1 || height < 1) {
        throw Error(Errc::invalid_argument,
                    "grid dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
    }
    if (!(pixel_size > 0.0) || !std::isfinite(pixel_size)) {
        throw Error(Errc::invalid_argument, "pixel_size must be positive and finite");
    }
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y)) {
        throw Error(Errc::invalid_argument, "grid origin must be finite");
    }
}

GeoGrid::GeoGrid(const GridSpec& spec, std::vector<float> values, float nodata)
    : spec_(spec), nodata_(nodata), values_(std::move(values)) {
    spec_.validate();
    if (values_.size() != spec_.size()) {
        throw Error(Errc::invalid_argument, "value count " + std::to_string(values_.size()) +
                                                " does not match grid size " + std::to_string(spec_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const float v = values_[i];
        if (!std::isfinite(v) && !is_nodata_value(v)) {
            throw Error(Errc::invalid_argument, "non-finite value at index " + std::to_string(i) +
                                                    " is not the nodata sentinel");
        }
    }
}

GeoGrid GeoGrid::filled(const GridSpec& spec, float value, float nodata) {
    spec.validate();
    return GeoGrid(spec, std::vector<float>(spec.size(), value), nodata);
}

bool GeoGrid::is_nodata_value(float v) const {
    if (std::isnan(nodata_)) {
        return std::isnan(v);
    }
    return v == nodata_;
}

std::size_t GeoGrid::valid_count() const {
    std::size_t n = 0;
    for (float v : values_) {
        n += is_nodata_value(v) ? 0 : 1;
    }
    return n;
}

bool GeoGrid::identical(const GeoGrid& other) const {
    if (!(spec_ == other.spec_) || values_.size() != other.values_.size()) {
        return false;
    }
    if (std::memcmp(&nodata_, &other.nodata_, sizeof(float)) != 0) {
        return false;
    }
    return values_.empty() ||
           std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0;
}

PixelMask::PixelMask(const GridSpec& spec, bool fill) : spec_(spec) {
    spec_.validate();
    bits_.assign(spec_.size(), fill ? 1 : 0);
}

PixelMask::PixelMask(const GridSpec& spec, std::vector<std::uint8_t> bits) : spec_(spec), bits_(std::move(bits)) {
    spec_.validate();
    if (bits_.size() != spec_.size()) {
        throw Error(Errc::invalid_argument, "mask size does not match grid size");
    }
    for (auto& b : bits_) {
        b = b ? 1 : 0;
    }
}

std::size_t PixelMask::count() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

PixelMask PixelMask::operator&(const PixelMask& other) const {
    require_aligned(spec_, other.spec_, "mask intersection");
    PixelMask out(spec_);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        out.bits_[i] = bits_[i] & other.bits_[i];
    }
    return out;
}

PixelMask PixelMask::operator|(const PixelMask& other) const {
    require_aligned(spec_, other.spec_, "mask union");
    PixelMask out(spec_);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        out.bits_[i] = bits_[i] | other.bits_[i];
    }
    return out;
}

PixelMask PixelMask::operator~() const {
    PixelMask out(spec_);
    for (std::size_t i = 0; i < bits_.size(); ++i) {
        out.bits_[i] = bits_[i] ? 0 : 1;
    }
    return out;
}

bool align_check(const GridSpec& a, const GridSpec& b) { return a == b; }

bool align_check(const GeoGrid& a, const GeoGrid& b) { return align_check(a.spec(), b.spec()); }

void require_aligned(const GridSpec& a, const GridSpec& b, const char* what) {
    if (!align_check(a, b)) {
        throw Error(Errc::misaligned, std::string(what) + ": grids are not aligned");
    }
}

GridSpec crop(const GridSpec& spec, const PixelWindow& w) {
    if (w.width < 1 || w.height < 1 || w.x < 0 || w.y < 0 || w.x + w.width > spec.width ||
        w.y + w.height > spec.height) {
        throw Error(Errc::out_of_bounds, "crop window (" + std::to_string(w.x) + "," + std::to_string(w.y) + "," +
                                             std::to_string(w.width) + "x" + std::to_string(w.height) +
                                             ") exceeds grid bounds");
    }
    GridSpec out = spec;
    out.width = w.width;
    out.height = w.height;
    out.origin_x = spec.origin_x + w.x * spec.pixel_size;
    out.origin_y = spec.origin_y - w.y * spec.pixel_size;
    return out;
}

GeoGrid crop(const GeoGrid& g, const PixelWindow& w) {
    const GridSpec out_spec = crop(g.spec(), w);
    std::vector<float> values;
    values.reserve(out_spec.size());
    for (int r = 0; r < w.height; ++r) {
        const auto row = g.values().subspan(g.spec().index(w.x, w.y + r), static_cast<std::size_t>(w.width));
        values.insert(values.end(), row.begin(), row.end());
    }
    return GeoGrid(out_spec, std::move(values), g.nodata());
}

namespace {

// Returns the integer n for which value == n * unit, or -1 when none exists.
long long integral_ratio(double value, double unit) {
    const double r = value / unit;
    const double n = std::round(r);
    if (std::abs(r - n) > 1e-6) {
        return -1;
    }
    return static_cast<long long>(n);
}

} // namespace

GeoGrid resample_majority(const GeoGrid& src, const GridSpec& target) {
    target.validate();
    const GridSpec& s = src.spec();
    if (s.crs_code != target.crs_code) {
        throw Error(Errc::misaligned, "resample_majority: crs codes differ (" + std::to_string(s.crs_code) + " vs " +
                                          std::to_string(target.crs_code) + ")");
    }
    const long long k = integral_ratio(target.pixel_size, s.pixel_size);
    if (k < 1) {
        throw Error(Errc::invalid_argument, "resample_majority: target pixel size is not an integer multiple of source");
    }
    const double off_x = (target.origin_x - s.origin_x) / s.pixel_size;
    const double off_y = (s.origin_y - target.origin_y) / s.pixel_size;
    if (std::abs(off_x - std::round(off_x)) > 1e-6 || std::abs(off_y - std::round(off_y)) > 1e-6) {
        throw Error(Errc::invalid_argument, "resample_majority: target origin is not on the source pixel lattice");
    }
    const long long col0 = static_cast<long long>(std::round(off_x));
    const long long row0 = static_cast<long long>(std::round(off_y));
    const long long span_x = static_cast<long long>(target.width) * k;
    const long long span_y = static_cast<long long>(target.height) * k;
    if (col0 >= s.width || row0 >= s.height || col0 + span_x <= 0 || row0 + span_y <= 0) {
        throw Error(Errc::out_of_bounds, "resample_majority: source and target extents are disjoint");
    }

    std::vector<float> out(target.size(), src.nodata());
    std::vector<float> votes;
    votes.reserve(static_cast<std::size_t>(k * k));
    for (int tr = 0; tr < target.height; ++tr) {
        for (int tc = 0; tc < target.width; ++tc) {
            votes.clear();
            for (long long dy = 0; dy < k; ++dy) {
                const long long r = row0 + tr * k + dy;
                if (r < 0 || r >= s.height) continue;
                for (long long dx = 0; dx < k; ++dx) {
                    const long long c = col0 + tc * k + dx;
                    if (c < 0 || c >= s.width) continue;
                    const std::size_t i = s.index(static_cast<int>(c), static_cast<int>(r));
                    if (src.is_valid(i)) votes.push_back(src[i]);
                }
            }
            if (votes.empty()) continue;
            std::sort(votes.begin(), votes.end());
            // Ascending order makes the first run of maximal length the lowest code.
            float best = votes.front();
            std::size_t best_run = 0;
            for (std::size_t i = 0; i < votes.size();) {
                std::size_t j = i;
                while (j < votes.size() && votes[j] == votes[i]) ++j;
                if (j - i > best_run) {
                    best_run = j - i;
                    best = votes[i];
                }
                i = j;
            }
            out[target.index(tc, tr)] = best;
        }
    }
    return GeoGrid(target, std::move(out), src.nodata());
}

} // namespace heatlab
