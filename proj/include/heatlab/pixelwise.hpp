#pragma once

#include <cmath>
#include <vector>

#include "heatlab/grid.hpp"

namespace heatlab {

/// Applies `f` to every pixel of aligned grids. Any nodata operand, or a
/// non-finite result, yields nodata (the first grid's sentinel).
template <typename F, typename... Rest>
GeoGrid pixelwise(F&& f, const GeoGrid& first, const Rest&... rest) {
    (require_aligned(first.spec(), rest.spec(), "pixelwise kernel"), ...);
    const float nodata = first.nodata();
    std::vector<float> out(first.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        if (first.is_nodata(i) || (rest.is_nodata(i) || ...)) {
            out[i] = nodata;
            continue;
        }
        const double r = f(static_cast<double>(first[i]), static_cast<double>(rest[i])...);
        const float v = static_cast<float>(r);
        out[i] = std::isfinite(v) ? v : nodata;
    }
    return GeoGrid(first.spec(), std::move(out), nodata);
}

} // namespace heatlab
