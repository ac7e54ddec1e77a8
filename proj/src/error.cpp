#include "heatlab/error.hpp"

namespace heatlab {

std::string_view errc_name(Errc code) noexcept {
    switch (code) {
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::out_of_bounds: return "out_of_bounds";
    case Errc::misaligned: return "misaligned";
    case Errc::io_error: return "io_error";
    case Errc::format_error: return "format_error";
    case Errc::missing_band: return "missing_band";
    case Errc::scene_not_found: return "scene_not_found";
    case Errc::city_not_found: return "city_not_found";
    case Errc::layer_not_found: return "layer_not_found";
    case Errc::variant_not_found: return "variant_not_found";
    case Errc::scenario_not_found: return "scenario_not_found";
    case Errc::intervention_not_found: return "intervention_not_found";
    case Errc::analysis_pending: return "analysis_pending";
    case Errc::empty_input: return "empty_input";
    case Errc::insufficient_data: return "insufficient_data";
    case Errc::rank_deficient: return "rank_deficient";
    case Errc::invalid_polygon: return "invalid_polygon";
    case Errc::mask_not_built: return "mask_not_built";
    case Errc::predictor_unavailable: return "predictor_unavailable";
    case Errc::grid_too_large: return "grid_too_large";
    case Errc::infeasible_layout: return "infeasible_layout";
    case Errc::route_not_found: return "route_not_found";
    case Errc::method_not_allowed: return "method_not_allowed";
    case Errc::internal_error: return "internal_error";
    }
    return "unknown";
}

} // namespace heatlab
