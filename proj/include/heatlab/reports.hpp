#pragma once

#include <string>
#include <vector>

#include "heatlab/climate.hpp"
#include "heatlab/cooling.hpp"
#include "heatlab/evaluation.hpp"
#include "heatlab/intervention.hpp"
#include "heatlab/json_io.hpp"
#include "heatlab/render.hpp"

// JSON forms of analysis results. NaN is written as null and read back as NaN.

namespace heatlab {

Json to_json(const GridSpec& g);

Json to_json(const MetricReport& m);
MetricReport metrics_from_json(const Json& j);

Json to_json(const CoolingProfile& p);
CoolingProfile profile_from_json(const Json& j);

/// Indices are replaced by scene ids when `ids` is non-empty.
Json to_json(const SplitPlan& plan, const std::vector<std::string>& ids);
SplitPlan split_from_json(const Json& j, const std::vector<std::string>& ids);

Json to_json(const ExtrapolationReport& r);
ExtrapolationReport extrapolation_from_json(const Json& j);

Json to_json(const UrbanGradient& g);
Json to_json(const SourceSinkTable& t, const LulcCodes& codes);
Json to_json(const UhiExtentReport& r);
Json to_json(const ForecastResult& r);
Json to_json(const GridStats& s);
Json to_json(const DonorSignature& d);
Json to_json(const TransectSample& t);

/// Everything except the grids, which are stored beside it.
Json to_json(const InterventionResult& r);

} // namespace heatlab
