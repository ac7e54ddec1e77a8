#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "heatlab/cooling.hpp"
#include "heatlab/grid.hpp"

namespace heatlab {

/// Error metrics of predictions against truth, in degrees Celsius
/// (mse in degrees squared).
struct MetricReport {
    double mae = 0.0;
    double mse = 0.0;
    double rmse = 0.0;
    double mbe = 0.0;
    std::int64_t n = 0;
};

/// pred and truth must have equal, nonzero length. Errors are pred - truth.
MetricReport metrics(std::span<const double> pred, std::span<const double> truth);

/// Values at pixels where both grids hold data.
std::pair<std::vector<double>, std::vector<double>> paired_valid(const GeoGrid& pred, const GeoGrid& truth);

/// Metrics over bin means populated on both sides.
MetricReport compare_profiles(const CoolingProfile& truth, const CoolingProfile& pred);

enum class SplitStrategy { random, high_heat };

std::string_view split_strategy_name(SplitStrategy s);
SplitStrategy parse_split_strategy(std::string_view name);

struct SplitPlan {
    SplitStrategy strategy = SplitStrategy::random;
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    std::string ordering_key;
    std::optional<double> threshold;   ///< high-heat nearest-rank quantile of the keys
    std::vector<std::string> warnings; ///< e.g. an empty test set from tied keys

    std::size_t size() const { return train.size() + val.size() + test.size(); }
};

/// Largest-remainder apportionment of n items to the given fractions; ties
/// in the fractional parts go to the earlier part.
std::vector<std::size_t> apportion(std::size_t n, std::span<const double> fractions);

/// Seeded shuffle then contiguous train/val/test slices.
SplitPlan split_random(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

/// Samples whose key exceeds the nearest-rank q-quantile form the test set;
/// the rest is shuffled and split train/val by train_val_ratio.
SplitPlan split_high_heat(std::span<const double> keys, double q, double train_val_ratio, std::uint64_t seed,
                          std::string ordering_key = "lst");

struct ExtrapolationReport {
    double train_max_key = 0.0;
    std::pair<double, double> test_key_range{0.0, 0.0};
    std::optional<double> predicted_max; ///< absent when no test prediction is accepted
    std::optional<double> margin;        ///< predicted_max - train_max_key
    double success_tolerance = 2.0;
    std::int64_t accepted = 0;
    MetricReport metrics;
};

/// Test-set metrics plus the largest accepted prediction beyond the training
/// range. A prediction is accepted when |pred - truth| <= success_tolerance.
ExtrapolationReport extrapolation_report(const SplitPlan& plan, std::span<const double> keys,
                                         std::span<const double> pred, std::span<const double> truth,
                                         double success_tolerance = 2.0);

} // namespace heatlab
