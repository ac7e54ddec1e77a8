#pragma once

#include <filesystem>
#include <string>

#include "heatlab/grid.hpp"

namespace heatlab {

/// Descriptive sidecar fields that do not affect geometry.
struct GridMetadata {
    std::string band;
    std::string timestamp; ///< ISO-8601 UTC, may be empty
};

/// Portable grid format: `<name>.grid` holds width*height little-endian
/// float32 values row-major; `<name>.grid.json` holds width, height,
/// origin_x, origin_y, pixel_size, epsg, nodata, band and timestamp.
void write_grid(const std::filesystem::path& grid_path, const GeoGrid& grid, const GridMetadata& meta = {});
GeoGrid read_grid(const std::filesystem::path& grid_path, GridMetadata* meta = nullptr);

/// Geometry from the sidecar only; the payload is not touched.
GridSpec read_grid_spec(const std::filesystem::path& grid_path);

std::filesystem::path sidecar_path(const std::filesystem::path& grid_path);

/// Single-band striped GeoTIFF (uncompressed or DEFLATE) with
/// ModelPixelScale/ModelTiepoint georeferencing. Non-square pixels and
/// rotated transforms are rejected. The GDAL_NODATA tag sets the sentinel.
GeoGrid import_geotiff(const std::filesystem::path& path, GridMetadata* meta = nullptr);

/// Uncompressed or DEFLATE striped float32 GeoTIFF with the same tag set.
void export_geotiff(const std::filesystem::path& path, const GeoGrid& grid, bool deflate = false);

} // namespace heatlab
