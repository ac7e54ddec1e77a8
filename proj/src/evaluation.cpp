#include "heatlab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "heatlab/error.hpp"
#include "heatlab/random.hpp"

namespace heatlab {

MetricReport metrics(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) {
        throw Error(Errc::invalid_argument, "metrics: prediction and truth lengths differ (" +
                                                std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) +
                                                ")");
    }
    if (pred.empty()) {
        throw Error(Errc::empty_input, "metrics: no usable prediction/truth pairs");
    }
    double abs_sum = 0.0, sq_sum = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double e = pred[i] - truth[i];
        abs_sum += std::abs(e);
        sq_sum += e * e;
        sum += e;
    }
    const auto n = static_cast<double>(pred.size());
    MetricReport r;
    r.n = static_cast<std::int64_t>(pred.size());
    r.mae = abs_sum / n;
    r.mse = sq_sum / n;
    r.rmse = std::sqrt(r.mse);
    r.mbe = sum / n;
    return r;
}

std::pair<std::vector<double>, std::vector<double>> paired_valid(const GeoGrid& pred, const GeoGrid& truth) {
    require_aligned(pred.spec(), truth.spec(), "paired_valid");
    std::pair<std::vector<double>, std::vector<double>> out;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (pred.is_valid(i) && truth.is_valid(i)) {
            out.first.push_back(pred[i]);
            out.second.push_back(truth[i]);
        }
    }
    return out;
}

MetricReport compare_profiles(const CoolingProfile& truth, const CoolingProfile& pred) {
    if (truth.bin_edges != pred.bin_edges) {
        throw Error(Errc::invalid_argument, "compare_profiles: bin edges differ");
    }
    std::vector<double> p, t;
    for (std::size_t k = 0; k < truth.bins(); ++k) {
        if (truth.populated(k) && pred.populated(k)) {
            p.push_back(pred.mean_dt[k]);
            t.push_back(truth.mean_dt[k]);
        }
    }
    if (p.empty()) {
        throw Error(Errc::empty_input, "compare_profiles: no bin is populated in both profiles");
    }
    return metrics(p, t);
}

std::string_view split_strategy_name(SplitStrategy s) { return s == SplitStrategy::random ? "random" : "high-heat"; }

SplitStrategy parse_split_strategy(std::string_view name) {
    if (name == "random") return SplitStrategy::random;
    if (name == "high-heat" || name == "high_heat") return SplitStrategy::high_heat;
    throw Error(Errc::invalid_argument, "unknown split strategy '" + std::string(name) + "'");
}

std::vector<std::size_t> apportion(std::size_t n, std::span<const double> fractions) {
    double total = 0.0;
    for (double f : fractions) {
        if (!(f >= 0.0)) throw Error(Errc::invalid_argument, "split fractions must be nonnegative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw Error(Errc::invalid_argument, "split fractions must sum to 1");
    }
    std::vector<std::size_t> sizes(fractions.size());
    std::vector<double> remainder(fractions.size());
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < fractions.size(); ++i) {
        const double exact = static_cast<double>(n) * fractions[i];
        // Snap values within rounding noise of an integer before flooring.
        const double snapped = std::abs(exact - std::round(exact)) < 1e-9 ? std::round(exact) : exact;
        sizes[i] = static_cast<std::size_t>(std::floor(snapped));
        remainder[i] = snapped - static_cast<double>(sizes[i]);
        assigned += sizes[i];
    }
    std::vector<std::size_t> order(fractions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t k = 0; assigned < n; ++k) {
        ++sizes[order[k % order.size()]];
        ++assigned;
    }
    return sizes;
}

SplitPlan split_random(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
    if (n < 10) {
        throw Error(Errc::insufficient_data, "split_random needs at least 10 samples, got " + std::to_string(n));
    }
    const std::vector<std::size_t> sizes = apportion(n, fractions);
    if (sizes[0] == 0 || sizes[1] == 0 || sizes[2] == 0) {
        throw Error(Errc::insufficient_data, "split_random: " + std::to_string(n) +
                                                 " samples cannot give every part at least one");
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span(idx));
    SplitPlan plan;
    plan.strategy = SplitStrategy::random;
    plan.seed = seed;
    plan.ordering_key = "none";
    plan.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
    plan.val.assign(idx.begin() + static_cast<std::ptrdiff_t>(sizes[0]),
                    idx.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]));
    plan.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(sizes[0] + sizes[1]), idx.end());
    return plan;
}

SplitPlan split_high_heat(std::span<const double> keys, double q, double train_val_ratio, std::uint64_t seed,
                          std::string ordering_key) {
    const std::size_t n = keys.size();
    if (n < 10) {
        throw Error(Errc::insufficient_data, "split_high_heat needs at least 10 samples, got " + std::to_string(n));
    }
    if (!(q > 0.0 && q < 1.0) || !(train_val_ratio > 0.0 && train_val_ratio < 1.0)) {
        throw Error(Errc::invalid_argument, "split_high_heat: q and train_val_ratio must lie in (0, 1)");
    }
    for (double k : keys) {
        if (!std::isfinite(k)) throw Error(Errc::invalid_argument, "split_high_heat: keys must be finite");
    }
    std::vector<double> sorted(keys.begin(), keys.end());
    std::sort(sorted.begin(), sorted.end());
    const double threshold = nearest_rank(sorted, q);

    SplitPlan plan;
    plan.strategy = SplitStrategy::high_heat;
    plan.seed = seed;
    plan.ordering_key = std::move(ordering_key);
    plan.threshold = threshold;
    std::vector<std::size_t> cool;
    for (std::size_t i = 0; i < n; ++i) {
        if (keys[i] > threshold) {
            plan.test.push_back(i);
        } else {
            cool.push_back(i);
        }
    }
    if (plan.test.empty()) {
        plan.warnings.push_back("no key exceeds the q-quantile threshold; the test set is empty");
    }
    Rng rng(seed);
    rng.shuffle(std::span(cool));
    const std::array<double, 2> parts{train_val_ratio, 1.0 - train_val_ratio};
    const std::vector<std::size_t> sizes = apportion(cool.size(), parts);
    plan.train.assign(cool.begin(), cool.begin() + static_cast<std::ptrdiff_t>(sizes[0]));
    plan.val.assign(cool.begin() + static_cast<std::ptrdiff_t>(sizes[0]), cool.end());
    return plan;
}

ExtrapolationReport extrapolation_report(const SplitPlan& plan, std::span<const double> keys,
                                         std::span<const double> pred, std::span<const double> truth,
                                         double success_tolerance) {
    if (plan.test.empty()) {
        throw Error(Errc::empty_input, "extrapolation_report: the plan has an empty test set");
    }
    if (keys.size() != pred.size() || keys.size() != truth.size()) {
        throw Error(Errc::invalid_argument, "extrapolation_report: keys, predictions and truth differ in length");
    }
    if (plan.train.empty() && plan.val.empty()) {
        throw Error(Errc::empty_input, "extrapolation_report: the plan has no training samples");
    }
    auto check = [&](std::size_t i) {
        if (i >= keys.size()) throw Error(Errc::out_of_bounds, "split plan index exceeds the sample count");
        return i;
    };
    ExtrapolationReport r;
    r.success_tolerance = success_tolerance;
    r.train_max_key = -std::numeric_limits<double>::infinity();
    for (const auto* part : {&plan.train, &plan.val}) {
        for (std::size_t i : *part) r.train_max_key = std::max(r.train_max_key, keys[check(i)]);
    }
    std::vector<double> p, t;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (std::size_t i : plan.test) {
        check(i);
        lo = std::min(lo, keys[i]);
        hi = std::max(hi, keys[i]);
        p.push_back(pred[i]);
        t.push_back(truth[i]);
        if (std::abs(pred[i] - truth[i]) <= success_tolerance) {
            ++r.accepted;
            r.predicted_max = r.predicted_max ? std::max(*r.predicted_max, pred[i]) : pred[i];
        }
    }
    r.test_key_range = {lo, hi};
    r.metrics = metrics(p, t);
    if (r.predicted_max) r.margin = *r.predicted_max - r.train_max_key;
    return r;
}

} // namespace heatlab
