#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace heatlab {

/// Geometry of a north-up raster in a projected CRS. The origin is the outer
/// corner of the top-left pixel; rows run south.
struct GridSpec {
    int width = 0;
    int height = 0;
    double origin_x = 0.0;
    double origin_y = 0.0;
    double pixel_size = 30.0;
    int crs_code = 0;

    /// Throws Error(invalid_argument) unless width, height >= 1 and pixel_size > 0.
    void validate() const;

    std::size_t size() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
    std::size_t index(int col, int row) const {
        return static_cast<std::size_t>(row) * static_cast<std::size_t>(width) + static_cast<std::size_t>(col);
    }
    bool contains(int col, int row) const { return col >= 0 && row >= 0 && col < width && row < height; }

    double center_x(int col) const { return origin_x + (col + 0.5) * pixel_size; }
    double center_y(int row) const { return origin_y - (row + 0.5) * pixel_size; }
    double pixel_area() const { return pixel_size * pixel_size; }

    bool operator==(const GridSpec&) const = default;
};

inline constexpr float kDefaultNodata = -9999.0f;

/// Single-band georeferenced raster of 32-bit values. Immutable once built;
/// every value is finite or exactly the nodata sentinel.
class GeoGrid {
public:
    GeoGrid() = default;
    /// Validates geometry and the value invariant.
    GeoGrid(const GridSpec& spec, std::vector<float> values, float nodata = kDefaultNodata);

    static GeoGrid filled(const GridSpec& spec, float value, float nodata = kDefaultNodata);

    const GridSpec& spec() const { return spec_; }
    int width() const { return spec_.width; }
    int height() const { return spec_.height; }
    float nodata() const { return nodata_; }
    std::span<const float> values() const { return values_; }
    std::size_t size() const { return values_.size(); }

    float at(int col, int row) const { return values_[spec_.index(col, row)]; }
    float operator[](std::size_t i) const { return values_[i]; }
    bool is_nodata(std::size_t i) const { return is_nodata_value(values_[i]); }
    bool is_valid(std::size_t i) const { return !is_nodata(i); }
    bool is_nodata_value(float v) const;

    std::size_t valid_count() const;

    /// Copy with the same geometry and nodata but new values.
    GeoGrid with_values(std::vector<float> values) const { return GeoGrid(spec_, std::move(values), nodata_); }

    /// Bitwise equality of geometry, nodata and payload.
    bool identical(const GeoGrid& other) const;

private:
    GridSpec spec_{};
    float nodata_ = kDefaultNodata;
    std::vector<float> values_;
};

class PixelMask {
public:
    PixelMask() = default;
    explicit PixelMask(const GridSpec& spec, bool fill = false);
    PixelMask(const GridSpec& spec, std::vector<std::uint8_t> bits);

    const GridSpec& spec() const { return spec_; }
    int width() const { return spec_.width; }
    int height() const { return spec_.height; }
    std::size_t size() const { return bits_.size(); }

    bool operator[](std::size_t i) const { return bits_[i] != 0; }
    bool at(int col, int row) const { return bits_[spec_.index(col, row)] != 0; }
    void set(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }
    void set(int col, int row, bool v) { set(spec_.index(col, row), v); }

    std::span<const std::uint8_t> bits() const { return bits_; }
    std::size_t count() const;
    bool any() const { return count() > 0; }

    PixelMask operator&(const PixelMask& other) const;
    PixelMask operator|(const PixelMask& other) const;
    PixelMask operator~() const;

    bool operator==(const PixelMask&) const = default;

private:
    GridSpec spec_{};
    std::vector<std::uint8_t> bits_;
};

struct PixelWindow {
    int x = 0;
    int y = 0;
    int width = 0;
    int height = 0;
};

bool align_check(const GridSpec& a, const GridSpec& b);
bool align_check(const GeoGrid& a, const GeoGrid& b);

/// Throws Error(misaligned) naming `what` when the geometries differ.
void require_aligned(const GridSpec& a, const GridSpec& b, const char* what);

/// Sub-grid whose retained pixels keep their world coordinates.
GeoGrid crop(const GeoGrid& g, const PixelWindow& window);
GridSpec crop(const GridSpec& spec, const PixelWindow& window);

/// Modal category over each k x k block of `src`, where k is the integer
/// ratio of the pixel sizes. Nodata pixels do not vote; ties go to the lowest
/// code; an all-nodata block yields nodata.
GeoGrid resample_majority(const GeoGrid& src, const GridSpec& target);

} // namespace heatlab
