#include "heatlab/predictor.hpp"

#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "heatlab/error.hpp"
#include "heatlab/grid_io.hpp"
#include "heatlab/parallel.hpp"

namespace heatlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::size_t kFeatures = 4;

double normalized_difference(double a, double b) {
    const double den = a + b;
    return den == 0.0 ? kNaN : (a - b) / den;
}

// True where every channel of the stack holds data.
std::vector<std::uint8_t> stack_valid(const SceneStack& stack) {
    std::vector<std::uint8_t> ok(stack.spec().size(), 1);
    for (const auto& name : stack.names()) {
        const GeoGrid& g = stack.channel(name);
        for (std::size_t i = 0; i < ok.size(); ++i) {
            if (g.is_nodata(i)) ok[i] = 0;
        }
    }
    return ok;
}

// Count, means and co-moment sums of (airtemp, ndvi, ndbi, albedo, truth).
struct Moments {
    static constexpr std::size_t kDim = kFeatures + 1;
    double n = 0.0;
    std::array<double, kDim> mean{};
    std::array<std::array<double, kDim>, kDim> m2{};

    void merge(const Moments& o) {
        if (o.n == 0.0) return;
        if (n == 0.0) {
            *this = o;
            return;
        }
        const double total = n + o.n;
        std::array<double, kDim> delta{};
        for (std::size_t i = 0; i < kDim; ++i) delta[i] = o.mean[i] - mean[i];
        for (std::size_t i = 0; i < kDim; ++i) {
            for (std::size_t j = 0; j < kDim; ++j) {
                m2[i][j] += o.m2[i][j] + delta[i] * delta[j] * n * o.n / total;
            }
        }
        for (std::size_t i = 0; i < kDim; ++i) mean[i] += delta[i] * o.n / total;
        n = total;
    }
};

// Exact two-pass moments of one scene.
Moments scene_moments(const TrainingPair& pair, const AlbedoWeights& albedo) {
    require_aligned(pair.stack.spec(), pair.truth.spec(), "fit_baseline truth");
    const FeatureColumns f = feature_columns(pair.stack, albedo);
    const std::array<const std::vector<double>*, kFeatures> cols{&f.airtemp, &f.ndvi, &f.ndbi, &f.albedo};
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < pair.truth.size(); ++i) {
        if (pair.truth.is_nodata(i) || std::isnan(f.airtemp[i])) continue;
        rows.push_back(i);
    }
    Moments m;
    if (rows.empty()) return m;
    auto value = [&](std::size_t d, std::size_t i) {
        return d < kFeatures ? (*cols[d])[i] : static_cast<double>(pair.truth[i]);
    };
    m.n = static_cast<double>(rows.size());
    for (std::size_t d = 0; d < Moments::kDim; ++d) {
        double s = 0.0;
        for (std::size_t i : rows) s += value(d, i);
        m.mean[d] = s / m.n;
    }
    for (std::size_t i : rows) {
        std::array<double, Moments::kDim> c{};
        for (std::size_t d = 0; d < Moments::kDim; ++d) c[d] = value(d, i) - m.mean[d];
        for (std::size_t a = 0; a < Moments::kDim; ++a) {
            for (std::size_t b = 0; b < Moments::kDim; ++b) m.m2[a][b] += c[a] * c[b];
        }
    }
    return m;
}

} // namespace

GeoGrid Predictor::predict(const SceneStack& stack) const {
    const std::vector<double> v = predict_values(stack);
    std::vector<float> out(v.size(), kDefaultNodata);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const auto f = static_cast<float>(v[i]);
        if (std::isfinite(f)) out[i] = f;
    }
    return GeoGrid(stack.spec(), std::move(out));
}

void LinearLstModel::validate() const {
    for (double w : {w0, w_airtemp, w_ndvi, w_ndbi, w_albedo}) {
        if (!std::isfinite(w)) throw Error(Errc::invalid_argument, "linear model weights must be finite");
    }
}

Json to_json(const LinearLstModel& m) {
    return Json{{"w0", m.w0},
                {"w_airtemp", m.w_airtemp},
                {"w_ndvi", m.w_ndvi},
                {"w_ndbi", m.w_ndbi},
                {"w_albedo", m.w_albedo},
                {"albedo",
                 {{"blue", m.albedo.blue},
                  {"green", m.albedo.green},
                  {"red", m.albedo.red},
                  {"nir", m.albedo.nir},
                  {"swir1", m.albedo.swir1},
                  {"swir2", m.albedo.swir2},
                  {"intercept", m.albedo.intercept},
                  {"source_label", m.albedo.source_label}}},
                {"training_pixels", m.training_pixels},
                {"ridge_lambda", kRidgeLambda}};
}

LinearLstModel model_from_json(const Json& j) {
    LinearLstModel m;
    try {
        m.w0 = j.at("w0").get<double>();
        m.w_airtemp = j.at("w_airtemp").get<double>();
        m.w_ndvi = j.at("w_ndvi").get<double>();
        m.w_ndbi = j.at("w_ndbi").get<double>();
        m.w_albedo = j.at("w_albedo").get<double>();
        if (j.contains("albedo")) {
            const Json& a = j.at("albedo");
            m.albedo.blue = a.at("blue").get<double>();
            m.albedo.green = a.at("green").get<double>();
            m.albedo.red = a.at("red").get<double>();
            m.albedo.nir = a.at("nir").get<double>();
            m.albedo.swir1 = a.at("swir1").get<double>();
            m.albedo.swir2 = a.at("swir2").get<double>();
            m.albedo.intercept = a.at("intercept").get<double>();
            m.albedo.source_label = a.value("source_label", std::string());
        }
        m.training_pixels = j.value("training_pixels", std::int64_t{0});
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::format_error, std::string("linear model: ") + e.what());
    }
    m.validate();
    return m;
}

FeatureColumns feature_columns(const SceneStack& stack, const AlbedoWeights& albedo) {
    const std::vector<std::uint8_t> ok = stack_valid(stack);
    const GeoGrid& air = stack.channel(kAirTempChannel);
    const GeoGrid& blue = stack.channel("blue");
    const GeoGrid& green = stack.channel("green");
    const GeoGrid& red = stack.channel("red");
    const GeoGrid& nir = stack.channel("nir");
    const GeoGrid& swir1 = stack.channel("swir1");
    const GeoGrid& swir2 = stack.channel("swir2");
    const std::size_t n = ok.size();
    FeatureColumns f;
    f.airtemp.assign(n, kNaN);
    f.ndvi.assign(n, kNaN);
    f.ndbi.assign(n, kNaN);
    f.albedo.assign(n, kNaN);
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) continue;
        const double v = normalized_difference(nir[i], red[i]);
        const double b = normalized_difference(swir1[i], nir[i]);
        if (std::isnan(v) || std::isnan(b)) continue;
        f.airtemp[i] = air[i];
        f.ndvi[i] = v;
        f.ndbi[i] = b;
        f.albedo[i] = albedo_value({blue[i], green[i], red[i], nir[i], swir1[i], swir2[i]}, albedo);
    }
    return f;
}

LinearLstModel fit_baseline(std::span<const TrainingPair> train, const AlbedoWeights& albedo) {
    return fit_baseline(train.size(), [&](std::size_t k) { return train[k]; }, albedo, 1);
}

LinearLstModel fit_baseline(std::size_t scenes, const std::function<TrainingPair(std::size_t)>& load,
                            const AlbedoWeights& albedo, int jobs) {
    std::vector<Moments> parts(scenes);
    parallel_for(scenes, jobs, [&](std::size_t k) { parts[k] = scene_moments(load(k), albedo); });
    // Merged in scene order so the result does not depend on the thread count.
    Moments total;
    for (const auto& m : parts) total.merge(m);
    if (total.n < static_cast<double>(5 * kFeatures)) {
        throw Error(Errc::insufficient_data, "fit_baseline: " + std::to_string(static_cast<long long>(total.n)) +
                                                 " usable pixels, at least " + std::to_string(5 * kFeatures) +
                                                 " required");
    }
    // Standardize the features that vary; constant ones keep weight 0.
    std::vector<std::size_t> active;
    std::array<double, kFeatures> sd{};
    for (std::size_t d = 0; d < kFeatures; ++d) {
        const double var = total.m2[d][d] / total.n;
        sd[d] = std::sqrt(std::max(var, 0.0));
        if (var > 1e-12 * (1.0 + total.mean[d] * total.mean[d])) active.push_back(d);
    }
    std::array<double, kFeatures> w{};
    if (!active.empty()) {
        const auto k = static_cast<Eigen::Index>(active.size());
        Eigen::MatrixXd r(k, k);
        Eigen::VectorXd rhs(k);
        for (Eigen::Index a = 0; a < k; ++a) {
            const std::size_t da = active[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < k; ++b) {
                const std::size_t db = active[static_cast<std::size_t>(b)];
                r(a, b) = total.m2[da][db] / (total.n * sd[da] * sd[db]);
            }
            rhs(a) = total.m2[da][kFeatures] / (total.n * sd[da]);
        }
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() < 1e-10) {
            throw Error(Errc::rank_deficient, "fit_baseline: features are collinear beyond the ridge guard");
        }
        r.diagonal().array() += kRidgeLambda;
        const Eigen::VectorXd beta = r.ldlt().solve(rhs);
        for (Eigen::Index a = 0; a < k; ++a) {
            const std::size_t d = active[static_cast<std::size_t>(a)];
            w[d] = beta(a) / sd[d];
        }
    }
    LinearLstModel m;
    m.w_airtemp = w[0];
    m.w_ndvi = w[1];
    m.w_ndbi = w[2];
    m.w_albedo = w[3];
    m.w0 = total.mean[kFeatures];
    for (std::size_t d = 0; d < kFeatures; ++d) m.w0 -= w[d] * total.mean[d];
    m.albedo = albedo;
    m.training_pixels = static_cast<std::int64_t>(total.n);
    m.validate();
    return m;
}

std::vector<double> predict_baseline_values(const LinearLstModel& m, const SceneStack& s) {
    const FeatureColumns f = feature_columns(s, m.albedo);
    std::vector<double> out(f.airtemp.size(), kNaN);
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (std::isnan(f.airtemp[i])) continue;
        out[i] = m.w0 + m.w_airtemp * f.airtemp[i] + m.w_ndvi * f.ndvi[i] + m.w_ndbi * f.ndbi[i] +
                 m.w_albedo * f.albedo[i];
    }
    return out;
}

GeoGrid predict_baseline(const LinearLstModel& m, const SceneStack& s) { return LinearPredictor(m).predict(s); }

std::vector<double> LinearPredictor::predict_values(const SceneStack& stack) const {
    return predict_baseline_values(model_, stack);
}

ExternalPredictions::ExternalPredictions(std::string variant, GridSpec grid,
                                         std::map<std::string, std::filesystem::path> files)
    : variant_(std::move(variant)), grid_(grid), files_(std::move(files)) {}

std::vector<double> ExternalPredictions::predict_values(const SceneStack& stack) const {
    if (!stack.provenance().empty()) {
        throw Error(Errc::predictor_unavailable, "variant " + variant_ + " serves stored predictions only; scene " +
                                                     stack.scene_id() + " was modified (" +
                                                     stack.provenance().back() + ")");
    }
    auto it = files_.find(stack.scene_id());
    if (it == files_.end()) {
        throw Error(Errc::scene_not_found,
                    "variant " + variant_ + " has no stored prediction for scene " + stack.scene_id());
    }
    const GeoGrid g = read_grid(it->second);
    require_aligned(grid_, g.spec(), "stored prediction");
    std::vector<double> out(g.size(), kNaN);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (g.is_valid(i)) out[i] = g[i];
    }
    return out;
}

std::vector<std::string> ExternalPredictions::scene_ids() const {
    std::vector<std::string> ids;
    for (const auto& [id, path] : files_) ids.push_back(id);
    return ids;
}

std::unique_ptr<ExternalPredictions> load_external_predictions(const std::filesystem::path& dir,
                                                               const Workspace& ws, const std::string& variant) {
    if (!std::filesystem::is_directory(dir)) {
        throw Error(Errc::variant_not_found, "no prediction directory for variant '" + variant + "'");
    }
    std::map<std::string, std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() != ".grid") continue;
        if (!align_check(read_grid_spec(e.path()), ws.grid)) {
            throw Error(Errc::misaligned, "prediction " + e.path().filename().string() + " of variant " + variant +
                                              " is not aligned with the workspace grid");
        }
        files.emplace(e.path().stem().string(), e.path());
    }
    return std::make_unique<ExternalPredictions>(variant, ws.grid, std::move(files));
}

} // namespace heatlab
