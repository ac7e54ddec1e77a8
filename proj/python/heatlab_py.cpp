#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "heatlab/cli.hpp"
#include "heatlab/error.hpp"
#include "heatlab/evaluation.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/landcover.hpp"
#include "heatlab/service.hpp"

namespace py = pybind11;
using namespace heatlab;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

py::dict spec_dict(const GridSpec& s) {
    py::dict d;
    d["width"] = s.width;
    d["height"] = s.height;
    d["origin_x"] = s.origin_x;
    d["origin_y"] = s.origin_y;
    d["pixel_size"] = s.pixel_size;
    d["epsg"] = s.crs_code;
    return d;
}

GridSpec spec_from(const py::dict& d, py::ssize_t rows, py::ssize_t cols) {
    GridSpec s;
    s.width = static_cast<int>(cols);
    s.height = static_cast<int>(rows);
    s.origin_x = d.contains("origin_x") ? d["origin_x"].cast<double>() : 0.0;
    s.origin_y = d.contains("origin_y") ? d["origin_y"].cast<double>() : 0.0;
    s.pixel_size = d.contains("pixel_size") ? d["pixel_size"].cast<double>() : 30.0;
    s.crs_code = d.contains("epsg") ? d["epsg"].cast<int>() : 0;
    s.validate();
    return s;
}

FloatArray to_array(const GeoGrid& g) {
    FloatArray a({g.height(), g.width()});
    std::copy(g.values().begin(), g.values().end(), a.mutable_data());
    return a;
}

GeoGrid from_array(const FloatArray& a, const py::dict& spec, float nodata) {
    if (a.ndim() != 2) throw Error(Errc::invalid_argument, "expected a 2-D array");
    const GridSpec s = spec_from(spec, a.shape(0), a.shape(1));
    return GeoGrid(s, std::vector<float>(a.data(), a.data() + a.size()), nodata);
}

py::tuple read_portable(const std::filesystem::path& path) {
    GridMetadata meta;
    const GeoGrid g = read_grid(path, &meta);
    py::dict d = spec_dict(g.spec());
    d["nodata"] = g.nodata();
    d["band"] = meta.band;
    d["timestamp"] = meta.timestamp;
    return py::make_tuple(to_array(g), d);
}

py::dict metric_dict(const MetricReport& m) {
    py::dict d;
    d["mae"] = m.mae;
    d["mse"] = m.mse;
    d["rmse"] = m.rmse;
    d["mbe"] = m.mbe;
    d["n"] = m.n;
    return d;
}

py::dict plan_dict(const SplitPlan& p) {
    py::dict d;
    d["strategy"] = std::string(split_strategy_name(p.strategy));
    d["train"] = p.train;
    d["val"] = p.val;
    d["test"] = p.test;
    d["threshold"] = p.threshold ? py::cast(*p.threshold) : py::none();
    d["warnings"] = p.warnings;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "heatlab native core";
    m.attr("__version__") = HEATLAB_VERSION;
    m.attr("NODATA") = kDefaultNodata;

    static py::exception<Error> error(m, "HeatlabError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            PyErr_SetString(error.ptr(), (std::string(errc_name(e.code())) + ": " + e.what()).c_str());
        }
    });

    m.def("read_grid", &read_portable, py::arg("path"), "Portable grid as (float32 array, metadata dict).");
    m.def(
        "write_grid",
        [](const std::filesystem::path& path, const FloatArray& a, const py::dict& spec, const std::string& band,
           const std::string& timestamp, float nodata) {
            write_grid(path, from_array(a, spec, nodata), GridMetadata{band, timestamp});
        },
        py::arg("path"), py::arg("values"), py::arg("spec"), py::arg("band") = "", py::arg("timestamp") = "",
        py::arg("nodata") = kDefaultNodata);
    m.def(
        "import_geotiff",
        [](const std::filesystem::path& path) {
            GridMetadata meta;
            const GeoGrid g = import_geotiff(path, &meta);
            py::dict d = spec_dict(g.spec());
            d["nodata"] = g.nodata();
            return py::make_tuple(to_array(g), d);
        },
        py::arg("path"));
    m.def(
        "export_geotiff",
        [](const std::filesystem::path& path, const FloatArray& a, const py::dict& spec, bool deflate) {
            export_geotiff(path, from_array(a, spec, kDefaultNodata), deflate);
        },
        py::arg("path"), py::arg("values"), py::arg("spec"), py::arg("deflate") = false);

    m.def(
        "euclidean_distance",
        [](const py::array_t<bool, py::array::c_style | py::array::forcecast>& mask, double pixel_size,
           const std::string& side) {
            if (mask.ndim() != 2) throw Error(Errc::invalid_argument, "expected a 2-D mask");
            GridSpec s;
            s.width = static_cast<int>(mask.shape(1));
            s.height = static_cast<int>(mask.shape(0));
            s.pixel_size = pixel_size;
            s.validate();
            std::vector<std::uint8_t> bits(mask.data(), mask.data() + mask.size());
            if (side != "inside" && side != "outside") throw Error(Errc::invalid_argument, "side must be inside or outside");
            const auto d = euclidean_distance_values(PixelMask(s, std::move(bits)),
                                                     side == "inside" ? DistanceSide::inside : DistanceSide::outside);
            py::array_t<double> out({mask.shape(0), mask.shape(1)});
            std::copy(d.begin(), d.end(), out.mutable_data());
            return out;
        },
        py::arg("mask"), py::arg("pixel_size") = 30.0, py::arg("side") = "outside",
        "Distance in metres to the nearest pixel on the other side; NaN off the requested side.");

    m.def(
        "metrics",
        [](const std::vector<double>& pred, const std::vector<double>& truth) { return metric_dict(metrics(pred, truth)); },
        py::arg("pred"), py::arg("truth"));
    m.def(
        "split_random",
        [](std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
            return plan_dict(split_random(n, fractions, seed));
        },
        py::arg("n"), py::arg("fractions") = std::array<double, 3>{0.72, 0.18, 0.10}, py::arg("seed") = 42);
    m.def(
        "split_high_heat",
        [](const std::vector<double>& keys, double q, double ratio, std::uint64_t seed) {
            return plan_dict(split_high_heat(keys, q, ratio, seed));
        },
        py::arg("keys"), py::arg("q") = 0.9, py::arg("train_val_ratio") = 0.8, py::arg("seed") = 42);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            int rc;
            {
                py::gil_scoped_release release;
                rc = run_cli(args, out, err);
            }
            return py::make_tuple(rc, out.str(), err.str());
        },
        py::arg("args"), "Run one heatlab command line; returns (exit code, stdout, stderr).");

    py::class_<Service>(m, "Service")
        .def(py::init([](const std::filesystem::path& root, int jobs) {
                 return std::make_unique<Service>(root, Service::Options{jobs, true});
             }),
             py::arg("workspaces"), py::arg("jobs") = 1)
        .def("city_ids", &Service::city_ids)
        .def(
            "request",
            [](Service& s, const std::string& method, const std::string& path,
               const std::map<std::string, std::string>& query, const std::string& body) {
                HttpRequest req{method, path, query, body};
                HttpResponse r;
                {
                    py::gil_scoped_release release;
                    r = s.handle(req);
                }
                return py::make_tuple(r.status, r.content_type, py::bytes(r.body));
            },
            py::arg("method"), py::arg("path"), py::arg("query") = std::map<std::string, std::string>{},
            py::arg("body") = "", "Returns (status, content type, body bytes).");
}
