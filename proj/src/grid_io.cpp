#include "heatlab/grid_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <vector>

#include "heatlab/error.hpp"
#include "heatlab/json_io.hpp"

namespace heatlab {

namespace fs = std::filesystem;

namespace {

Json nodata_to_json(float nodata) {
    if (std::isnan(nodata)) return "nan";
    return static_cast<double>(nodata);
}

float nodata_from_json(const Json& j, const fs::path& where) {
    if (j.is_string() && (j.get<std::string>() == "nan" || j.get<std::string>() == "NaN")) {
        return std::numeric_limits<float>::quiet_NaN();
    }
    if (!j.is_number()) {
        throw Error(Errc::format_error, "nodata must be a number or \"nan\" in " + where.string());
    }
    return static_cast<float>(j.get<double>());
}

template <typename T>
T required(const Json& doc, const char* key, const fs::path& where) {
    if (!doc.contains(key)) {
        throw Error(Errc::format_error, std::string("sidecar ") + where.string() + " lacks '" + key + "'");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, std::string("sidecar ") + where.string() + " has a bad '" + key + "'",
                    e.what());
    }
}

std::uint32_t to_little_endian(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        return ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    }
}

struct Sidecar {
    GridSpec spec;
    float nodata = kDefaultNodata;
    GridMetadata meta;
};

Sidecar read_sidecar(const fs::path& grid_path) {
    const fs::path side = sidecar_path(grid_path);
    if (!fs::exists(side)) {
        throw Error(Errc::io_error, "missing sidecar " + side.string());
    }
    const Json doc = read_json_file(side);
    Sidecar s;
    s.spec.width = required<int>(doc, "width", side);
    s.spec.height = required<int>(doc, "height", side);
    s.spec.origin_x = required<double>(doc, "origin_x", side);
    s.spec.origin_y = required<double>(doc, "origin_y", side);
    s.spec.pixel_size = required<double>(doc, "pixel_size", side);
    s.spec.crs_code = required<int>(doc, "epsg", side);
    s.nodata = nodata_from_json(doc.contains("nodata") ? doc.at("nodata") : Json(kDefaultNodata), side);
    s.meta.band = doc.value("band", std::string{});
    s.meta.timestamp = doc.value("timestamp", std::string{});
    try {
        s.spec.validate();
    } catch (const Error& e) {
        throw Error(Errc::format_error, "sidecar " + side.string() + ": " + e.what());
    }
    return s;
}

} // namespace

fs::path sidecar_path(const fs::path& grid_path) {
    fs::path p = grid_path;
    p += ".json";
    return p;
}

void write_grid(const fs::path& grid_path, const GeoGrid& grid, const GridMetadata& meta) {
    const GridSpec& s = grid.spec();
    std::vector<std::uint8_t> payload(grid.size() * sizeof(float));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const std::uint32_t bits = to_little_endian(std::bit_cast<std::uint32_t>(grid[i]));
        std::memcpy(payload.data() + i * sizeof(float), &bits, sizeof(bits));
    }
    write_bytes(grid_path, payload);

    Json doc;
    doc["width"] = s.width;
    doc["height"] = s.height;
    doc["origin_x"] = s.origin_x;
    doc["origin_y"] = s.origin_y;
    doc["pixel_size"] = s.pixel_size;
    doc["epsg"] = s.crs_code;
    doc["nodata"] = nodata_to_json(grid.nodata());
    doc["band"] = meta.band;
    doc["timestamp"] = meta.timestamp;
    write_json_file(sidecar_path(grid_path), doc);
}

GridSpec read_grid_spec(const fs::path& grid_path) { return read_sidecar(grid_path).spec; }

GeoGrid read_grid(const fs::path& grid_path, GridMetadata* meta) {
    const Sidecar side = read_sidecar(grid_path);
    std::ifstream in(grid_path, std::ios::binary);
    if (!in) {
        throw Error(Errc::io_error, "cannot open " + grid_path.string());
    }
    const std::size_t n = side.spec.size();
    std::vector<std::uint8_t> payload(n * sizeof(float));
    in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()));
    if (static_cast<std::size_t>(in.gcount()) != payload.size() || in.peek() != std::char_traits<char>::eof()) {
        throw Error(Errc::format_error, grid_path.string() + ": payload size does not match " +
                                            std::to_string(side.spec.width) + "x" +
                                            std::to_string(side.spec.height) + " float32");
    }
    std::vector<float> values(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits = 0;
        std::memcpy(&bits, payload.data() + i * sizeof(float), sizeof(bits));
        values[i] = std::bit_cast<float>(to_little_endian(bits));
    }
    if (meta != nullptr) {
        *meta = side.meta;
    }
    try {
        return GeoGrid(side.spec, std::move(values), side.nodata);
    } catch (const Error& e) {
        throw Error(Errc::format_error, grid_path.string() + ": " + e.what());
    }
}

} // namespace heatlab
