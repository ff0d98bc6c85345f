#pragma once

#include "burst/curve.hpp"

namespace burst {

// (f (x) g)(t) = min over 0 <= s <= t of f(s) + g(t-s). O(n^2).
Curve minplus_convolve(const Curve& f, const Curve& g);

// (f (/) g)(t) = max over s >= 0 of f(t+s) - g(s), truncated at the grid
// horizon (t + s <= last point): the envelope of the observed trace.
// Requires g(0) == 0 so every value is >= f(t) >= 0.
Curve minplus_deconvolve(const Curve& f, const Curve& g);

// Exact service curve of a work-conserving rate-r link: values[k] = r*k*dt,
// rounded down to whole bytes per point (exact when r*dt is a byte multiple).
struct RateServiceCurve {
    std::int64_t rate_bps = 0;  // bytes per second, > 0

    explicit RateServiceCurve(std::int64_t bytes_per_second) : rate_bps(bytes_per_second) {
        if (rate_bps <= 0) throw InvariantError("RateServiceCurve: rate must be > 0");
    }
    Curve sample(TimeGrid grid) const;
};

inline Curve rate_curve(std::int64_t rate_bytes_per_s, TimeGrid grid) {
    return RateServiceCurve(rate_bytes_per_s).sample(grid);
}

}  // namespace burst
