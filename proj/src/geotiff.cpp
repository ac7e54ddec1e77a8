#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <tiffio.h>

#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"

namespace heatlab {

namespace fs = std::filesystem;

namespace {

constexpr ttag_t kTagPixelScale = 33550;
constexpr ttag_t kTagTiepoint = 33922;
constexpr ttag_t kTagTransformation = 34264;
constexpr ttag_t kTagGeoKeys = 34735;
constexpr ttag_t kTagGdalNodata = 42113;

constexpr std::uint16_t kKeyModelType = 1024;
constexpr std::uint16_t kKeyRasterType = 1025;
constexpr std::uint16_t kKeyGeographicType = 2048;
constexpr std::uint16_t kKeyProjectedType = 3072;
constexpr std::uint16_t kRasterPixelIsPoint = 2;

const TIFFFieldInfo kGeoFields[] = {
    {kTagPixelScale, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, const_cast<char*>("ModelPixelScaleTag")},
    {kTagTiepoint, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, const_cast<char*>("ModelTiepointTag")},
    {kTagTransformation, -1, -1, TIFF_DOUBLE, FIELD_CUSTOM, 1, 1, const_cast<char*>("ModelTransformationTag")},
    {kTagGeoKeys, -1, -1, TIFF_SHORT, FIELD_CUSTOM, 1, 1, const_cast<char*>("GeoKeyDirectoryTag")},
    {kTagGdalNodata, -1, -1, TIFF_ASCII, FIELD_CUSTOM, 1, 0, const_cast<char*>("GDALNoDataTag")},
};

TIFFExtendProc g_parent_extender = nullptr;

void geotiff_tag_extender(TIFF* tif) {
    TIFFMergeFieldInfo(tif, kGeoFields, sizeof(kGeoFields) / sizeof(kGeoFields[0]));
    if (g_parent_extender != nullptr) {
        g_parent_extender(tif);
    }
}

void register_geotiff_tags() {
    static std::once_flag once;
    std::call_once(once, [] {
        g_parent_extender = TIFFSetTagExtender(geotiff_tag_extender);
        // libtiff warns on every unknown private tag; those are not errors here.
        TIFFSetWarningHandler(nullptr);
    });
}

struct TiffCloser {
    void operator()(TIFF* t) const { TIFFClose(t); }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

std::vector<double> double_array(TIFF* tif, ttag_t tag) {
    std::uint16_t count = 0;
    double* data = nullptr;
    if (TIFFGetField(tif, tag, &count, &data) != 1 || data == nullptr) {
        return {};
    }
    return std::vector<double>(data, data + count);
}

std::vector<std::uint16_t> short_array(TIFF* tif, ttag_t tag) {
    std::uint16_t count = 0;
    std::uint16_t* data = nullptr;
    if (TIFFGetField(tif, tag, &count, &data) != 1 || data == nullptr) {
        return {};
    }
    return std::vector<std::uint16_t>(data, data + count);
}

// Inline SHORT value of a GeoKey, or -1 when absent.
int geokey_value(const std::vector<std::uint16_t>& dir, std::uint16_t key) {
    if (dir.size() < 4) return -1;
    const std::size_t n = dir[3];
    for (std::size_t k = 0; k < n && 4 + 4 * k + 3 < dir.size(); ++k) {
        const std::uint16_t* e = &dir[4 + 4 * k];
        if (e[0] == key && e[1] == 0) return e[3];
    }
    return -1;
}

float sample_to_float(const unsigned char* row, std::size_t col, std::uint16_t bits, std::uint16_t format) {
    switch (format) {
    case SAMPLEFORMAT_IEEEFP:
        if (bits == 32) return reinterpret_cast<const float*>(row)[col];
        if (bits == 64) return static_cast<float>(reinterpret_cast<const double*>(row)[col]);
        break;
    case SAMPLEFORMAT_INT:
        if (bits == 8) return reinterpret_cast<const std::int8_t*>(row)[col];
        if (bits == 16) return reinterpret_cast<const std::int16_t*>(row)[col];
        if (bits == 32) return static_cast<float>(reinterpret_cast<const std::int32_t*>(row)[col]);
        break;
    case SAMPLEFORMAT_UINT:
        if (bits == 8) return row[col];
        if (bits == 16) return reinterpret_cast<const std::uint16_t*>(row)[col];
        if (bits == 32) return static_cast<float>(reinterpret_cast<const std::uint32_t*>(row)[col]);
        break;
    default:
        break;
    }
    throw Error(Errc::format_error, "unsupported GeoTIFF sample layout: " + std::to_string(bits) + "-bit format " +
                                        std::to_string(format));
}

} // namespace

GeoGrid import_geotiff(const fs::path& path, GridMetadata* meta) {
    register_geotiff_tags();
    TiffHandle tif(TIFFOpen(path.c_str(), "r"));
    if (!tif) {
        throw Error(Errc::io_error, "cannot open GeoTIFF " + path.string());
    }
    TIFF* t = tif.get();
    if (TIFFIsTiled(t)) {
        throw Error(Errc::format_error, path.string() + ": tiled GeoTIFF layouts are not supported");
    }
    std::uint32_t width = 0, height = 0;
    std::uint16_t spp = 1, bits = 0, format = SAMPLEFORMAT_UINT, compression = COMPRESSION_NONE;
    TIFFGetField(t, TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(t, TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(t, TIFFTAG_BITSPERSAMPLE, &bits);
    TIFFGetFieldDefaulted(t, TIFFTAG_SAMPLEFORMAT, &format);
    TIFFGetFieldDefaulted(t, TIFFTAG_COMPRESSION, &compression);
    if (spp != 1) {
        throw Error(Errc::format_error, path.string() + ": expected a single band, found " + std::to_string(spp));
    }
    if (compression != COMPRESSION_NONE && compression != COMPRESSION_ADOBE_DEFLATE &&
        compression != COMPRESSION_DEFLATE) {
        throw Error(Errc::format_error, path.string() + ": only uncompressed or DEFLATE GeoTIFFs are supported");
    }

    if (!double_array(t, kTagTransformation).empty()) {
        throw Error(Errc::format_error, path.string() + ": ModelTransformation (rotated) rasters are not supported");
    }
    const std::vector<double> scale = double_array(t, kTagPixelScale);
    const std::vector<double> tie = double_array(t, kTagTiepoint);
    if (scale.size() < 2 || tie.size() < 6) {
        throw Error(Errc::format_error, path.string() + ": missing ModelPixelScale/ModelTiepoint georeferencing");
    }
    if (std::abs(scale[0] - scale[1]) > 1e-9 * std::max(scale[0], scale[1])) {
        throw Error(Errc::format_error, path.string() + ": non-square pixels (" + std::to_string(scale[0]) + " x " +
                                            std::to_string(scale[1]) + ") are rejected");
    }
    const std::vector<std::uint16_t> keys = short_array(t, kTagGeoKeys);

    GridSpec spec;
    spec.width = static_cast<int>(width);
    spec.height = static_cast<int>(height);
    spec.pixel_size = scale[0];
    spec.origin_x = tie[3] - tie[0] * scale[0];
    spec.origin_y = tie[4] + tie[1] * scale[0];
    if (geokey_value(keys, kKeyRasterType) == kRasterPixelIsPoint) {
        spec.origin_x -= 0.5 * scale[0];
        spec.origin_y += 0.5 * scale[0];
    }
    int epsg = geokey_value(keys, kKeyProjectedType);
    if (epsg < 0) epsg = geokey_value(keys, kKeyGeographicType);
    spec.crs_code = epsg < 0 ? 0 : epsg;

    float nodata = kDefaultNodata;
    bool has_nodata = false;
    char* nodata_text = nullptr;
    if (TIFFGetField(t, kTagGdalNodata, &nodata_text) == 1 && nodata_text != nullptr) {
        nodata = std::strtof(nodata_text, nullptr);
        has_nodata = true;
    }

    std::vector<float> values(spec.size());
    std::vector<unsigned char> row(static_cast<std::size_t>(TIFFScanlineSize(t)));
    for (std::uint32_t r = 0; r < height; ++r) {
        if (TIFFReadScanline(t, row.data(), r, 0) < 0) {
            throw Error(Errc::format_error, path.string() + ": failed to decode row " + std::to_string(r));
        }
        for (std::uint32_t c = 0; c < width; ++c) {
            float v = sample_to_float(row.data(), c, bits, format);
            if (!std::isfinite(v) && !(has_nodata && std::isnan(nodata))) {
                v = nodata;
            }
            values[spec.index(static_cast<int>(c), static_cast<int>(r))] = v;
        }
    }
    if (meta != nullptr) {
        meta->band = path.stem().string();
        meta->timestamp.clear();
    }
    return GeoGrid(spec, std::move(values), nodata);
}

void export_geotiff(const fs::path& path, const GeoGrid& grid, bool deflate) {
    register_geotiff_tags();
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    TiffHandle tif(TIFFOpen(path.c_str(), "w"));
    if (!tif) {
        throw Error(Errc::io_error, "cannot create GeoTIFF " + path.string());
    }
    TIFF* t = tif.get();
    const GridSpec& s = grid.spec();
    TIFFSetField(t, TIFFTAG_IMAGEWIDTH, static_cast<std::uint32_t>(s.width));
    TIFFSetField(t, TIFFTAG_IMAGELENGTH, static_cast<std::uint32_t>(s.height));
    TIFFSetField(t, TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(1));
    TIFFSetField(t, TIFFTAG_BITSPERSAMPLE, static_cast<std::uint16_t>(32));
    TIFFSetField(t, TIFFTAG_SAMPLEFORMAT, static_cast<std::uint16_t>(SAMPLEFORMAT_IEEEFP));
    TIFFSetField(t, TIFFTAG_PHOTOMETRIC, static_cast<std::uint16_t>(PHOTOMETRIC_MINISBLACK));
    TIFFSetField(t, TIFFTAG_PLANARCONFIG, static_cast<std::uint16_t>(PLANARCONFIG_CONTIG));
    TIFFSetField(t, TIFFTAG_COMPRESSION,
                 static_cast<std::uint16_t>(deflate ? COMPRESSION_ADOBE_DEFLATE : COMPRESSION_NONE));
    TIFFSetField(t, TIFFTAG_ROWSPERSTRIP, static_cast<std::uint32_t>(16));

    double scale[3] = {s.pixel_size, s.pixel_size, 0.0};
    double tie[6] = {0.0, 0.0, 0.0, s.origin_x, s.origin_y, 0.0};
    std::uint16_t keys[16] = {1, 1, 0, 3, kKeyModelType, 0, 1, 1, kKeyRasterType, 0, 1, 1, kKeyProjectedType, 0, 1,
                              static_cast<std::uint16_t>(s.crs_code)};
    TIFFSetField(t, kTagPixelScale, static_cast<std::uint16_t>(3), scale);
    TIFFSetField(t, kTagTiepoint, static_cast<std::uint16_t>(6), tie);
    TIFFSetField(t, kTagGeoKeys, static_cast<std::uint16_t>(16), keys);
    char nodata_text[64];
    std::snprintf(nodata_text, sizeof(nodata_text), "%.9g", static_cast<double>(grid.nodata()));
    TIFFSetField(t, kTagGdalNodata, nodata_text);

    std::vector<float> row(static_cast<std::size_t>(s.width));
    for (int r = 0; r < s.height; ++r) {
        for (int c = 0; c < s.width; ++c) row[static_cast<std::size_t>(c)] = grid.at(c, r);
        if (TIFFWriteScanline(t, row.data(), static_cast<std::uint32_t>(r), 0) < 0) {
            throw Error(Errc::io_error, path.string() + ": failed to write row " + std::to_string(r));
        }
    }
}

} // namespace heatlab
