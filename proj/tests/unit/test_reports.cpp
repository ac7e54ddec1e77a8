#include <doctest.h>

#include <cmath>

#include "heatlab/error.hpp"
#include "heatlab/reports.hpp"
#include "oracles.hpp"

using namespace heatlab;

TEST_CASE("metric report round-trip") {
    MetricReport m{0.5, 0.3, std::sqrt(0.3), -0.1, 42};
    const MetricReport back = metrics_from_json(Json::parse(to_json(m).dump()));
    CHECK(back.mae == m.mae);
    CHECK(back.rmse == m.rmse);
    CHECK(back.mbe == m.mbe);
    CHECK(back.n == 42);

    MetricReport nan{std::nan(""), std::nan(""), std::nan(""), std::nan(""), 0};
    const Json j = to_json(nan);
    CHECK(j["mae"].is_null());
    CHECK(std::isnan(metrics_from_json(j).mae));
}

TEST_CASE("cooling profile round-trip") {
    CoolingProfile p;
    p.side = ProfileSide::spillover;
    p.bin_edges = {0, 30, 60, 90};
    p.mean_dt = {std::nan(""), -1.5, -0.5};
    p.std_dt = {std::nan(""), 0.1, 0.2};
    p.mean_distance = {std::nan(""), 45.0, 72.5};
    p.count = {0, 10, 20};
    const Json j = to_json(p);
    CHECK(j.dump() == to_json(profile_from_json(Json::parse(j.dump()))).dump());
    Json bad = j;
    bad["count"] = {1, 2};
    CHECK_THROWS_AS(profile_from_json(bad), Error);
    CHECK_THROWS_AS(profile_from_json(Json{{"side", "internal"}}), Error);
}

TEST_CASE("split plan round-trip by scene id") {
    SplitPlan plan;
    plan.strategy = SplitStrategy::high_heat;
    plan.train = {2, 0};
    plan.val = {3};
    plan.test = {1};
    plan.seed = 8;
    plan.ordering_key = "airtemp";
    plan.threshold = 23.29;
    const std::vector<std::string> ids{"a", "b", "c", "d"};
    const SplitPlan back = split_from_json(to_json(plan, ids), ids);
    CHECK(back.train == plan.train);
    CHECK(back.val == plan.val);
    CHECK(back.test == plan.test);
    CHECK(*back.threshold == 23.29);
    CHECK(back.strategy == SplitStrategy::high_heat);
    CHECK_THROWS_AS(split_from_json(to_json(plan, ids), {"a", "b", "c", "zz"}), Error);
    CHECK_THROWS_AS(split_from_json(to_json(plan, ids), {"a", "b", "c", "d", "e"}), Error);
}

TEST_CASE("extrapolation report round-trip") {
    ExtrapolationReport r;
    r.train_max_key = 23.29;
    r.test_key_range = {23.5, 27.0};
    r.predicted_max = 26.91;
    r.margin = 26.91 - 23.29;
    r.accepted = 3;
    r.metrics = MetricReport{0.4, 0.2, std::sqrt(0.2), 0.1, 3};
    const ExtrapolationReport back = extrapolation_from_json(to_json(r));
    CHECK(*back.margin == *r.margin);
    CHECK(back.test_key_range == r.test_key_range);
    ExtrapolationReport none;
    CHECK_FALSE(extrapolation_from_json(to_json(none)).margin.has_value());
}
