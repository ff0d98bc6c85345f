#pragma once

#include <cstdint>

#include "burst/errors.hpp"

namespace burst {

inline constexpr std::int64_t kNsPerSec = 1'000'000'000;

// Uniform discrete time grid: bin_count bins of bin_width_ns each.
// Curves live on the bin boundaries (bin_count + 1 points), so a grid
// spanning [0, duration] carries values at t = 0, dt, 2*dt, ..., duration.
struct TimeGrid {
    std::int64_t bin_width_ns = 1000;  // default 1 us
    std::int64_t bin_count = 0;

    TimeGrid() = default;
    TimeGrid(std::int64_t width_ns, std::int64_t bins)
        : bin_width_ns(width_ns), bin_count(bins) {
        if (width_ns <= 0) throw InvariantError("TimeGrid: bin_width must be > 0");
        if (bins < 0) throw InvariantError("TimeGrid: bin_count must be >= 0");
    }

    std::int64_t duration_ns() const { return bin_width_ns * bin_count; }
    double duration_s() const { return static_cast<double>(duration_ns()) / kNsPerSec; }
    std::int64_t point_count() const { return bin_count + 1; }

    // Bin containing timestamp t (ns since trace start).
    std::int64_t bin_of(std::int64_t t_ns) const { return t_ns / bin_width_ns; }

    double point_time_s(std::int64_t k) const {
        return static_cast<double>(k * bin_width_ns) / kNsPerSec;
    }

    bool operator==(const TimeGrid&) const = default;
};

}  // namespace burst
