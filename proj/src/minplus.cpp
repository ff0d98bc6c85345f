#include "burst/minplus.hpp"

#include <algorithm>
#include <limits>

namespace burst {

Curve minplus_convolve(const Curve& f, const Curve& g) {
    require_same_grid(f, g, "minplus_convolve");
    const std::int64_t n = f.points();
    std::vector<std::uint64_t> out(n);
    for (std::int64_t t = 0; t < n; ++t) {
        std::uint64_t best = std::numeric_limits<std::uint64_t>::max();
        for (std::int64_t s = 0; s <= t; ++s)
            best = std::min(best, f.values[s] + g.values[t - s]);
        out[t] = best;
    }
    return Curve(f.grid, std::move(out));
}

Curve minplus_deconvolve(const Curve& f, const Curve& g) {
    require_same_grid(f, g, "minplus_deconvolve");
    if (g.values.empty() || g.values.front() != 0)
        throw InvariantError("minplus_deconvolve: g(0) must be 0");
    const std::int64_t n = f.points();
    std::vector<std::uint64_t> out(n);
    for (std::int64_t t = 0; t < n; ++t) {
        // s = 0 yields f(t) - g(0) = f(t) >= 0, so the max is never negative.
        std::uint64_t best = f.values[t];
        for (std::int64_t s = 1; t + s < n; ++s) {
            const std::uint64_t ft = f.values[t + s];
            const std::uint64_t gs = g.values[s];
            if (ft > gs) best = std::max(best, ft - gs);
        }
        out[t] = best;
    }
    return Curve(f.grid, std::move(out));
}

Curve RateServiceCurve::sample(TimeGrid grid) const {
    std::vector<std::uint64_t> v(grid.point_count());
    for (std::int64_t k = 0; k < grid.point_count(); ++k) {
        const __int128 num = static_cast<__int128>(rate_bps) * k * grid.bin_width_ns;
        v[k] = static_cast<std::uint64_t>(num / kNsPerSec);
    }
    return Curve(grid, std::move(v));
}

}  // namespace burst
