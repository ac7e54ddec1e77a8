#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace heatlab {

/// Machine-readable failure classes shared by the library, the CLI and the
/// HTTP service. Every code has a stable snake_case name.
enum class Errc {
    invalid_argument,
    out_of_bounds,
    misaligned,
    io_error,
    format_error,
    missing_band,
    scene_not_found,
    city_not_found,
    layer_not_found,
    variant_not_found,
    scenario_not_found,
    intervention_not_found,
    analysis_pending,
    empty_input,
    insufficient_data,
    rank_deficient,
    invalid_polygon,
    mask_not_built,
    predictor_unavailable,
    grid_too_large,
    infeasible_layout,
    route_not_found,
    method_not_allowed,
    internal_error,
};

inline constexpr std::array<Errc, 24> kAllErrc = {
    Errc::invalid_argument,      Errc::out_of_bounds,      Errc::misaligned,
    Errc::io_error,              Errc::format_error,       Errc::missing_band,
    Errc::scene_not_found,       Errc::city_not_found,     Errc::layer_not_found,
    Errc::variant_not_found,     Errc::scenario_not_found, Errc::intervention_not_found,
    Errc::analysis_pending,      Errc::empty_input,        Errc::insufficient_data,
    Errc::rank_deficient,        Errc::invalid_polygon,    Errc::mask_not_built,
    Errc::predictor_unavailable, Errc::grid_too_large,     Errc::infeasible_layout,
    Errc::route_not_found,       Errc::method_not_allowed, Errc::internal_error,
};

std::string_view errc_name(Errc code) noexcept;

/// Data-level failure: bad inputs, missing files, contract violations by the caller.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message, std::string detail = {})
        : std::runtime_error(message), code_(code), detail_(std::move(detail)) {}

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

/// Internal invariant broken; always a bug in this library.
class InvariantViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace heatlab
