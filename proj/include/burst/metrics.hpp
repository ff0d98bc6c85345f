#pragma once

#include <cstdint>
#include <vector>

#include "burst/trace.hpp"

namespace burst {

// Backlog and bmax values are kept exact in nanobytes (bytes * 1e9): the
// drain of a rate-r server over one bin is r * bin_width_ns nanobytes, an
// integer for integer rates, so Lindley recursions and envelope-minus-line
// maxima compare with zero tolerance.
using nanobytes = __int128;
inline constexpr nanobytes kNanobytesPerByte = kNsPerSec;

inline double nanobytes_to_bytes(nanobytes v) {
    return static_cast<double>(v) / static_cast<double>(kNanobytesPerByte);
}

// Strictly increasing lags, as bin multiples, all within the trace duration.
struct LagSet {
    std::vector<std::int64_t> lag_bins;

    static LagSet full(const TimeGrid& grid);
    // Every bin up to dense_upto_ns, then log-spaced points_per_decade per
    // decade up to the duration (duration always included).
    static LagSet dense_then_log(const TimeGrid& grid, std::int64_t dense_upto_ns = 10'000'000,
                                 int points_per_decade = 32);
    void validate(const TimeGrid& grid) const;
    std::size_t size() const { return lag_bins.size(); }
};

// Empirical envelope E(tau) over a lag set: the maximum bytes observed in
// any window of each lag. E(0) = 0, E(duration) = total bytes.
struct BurstinessCurve {
    TimeGrid grid;
    std::vector<std::int64_t> lag_bins;
    std::vector<std::uint64_t> values;  // bytes, one per lag
    std::uint64_t total_bytes = 0;

    std::int64_t lag_ns(std::size_t i) const { return lag_bins[i] * grid.bin_width_ns; }
    // Only valid when the lag set is full (every bin 0..n).
    Curve as_curve() const;
};

BurstinessCurve burstiness_curve(const ArrivalFunction& a, const LagSet& lags);

// PtM(tau) = E(tau) / (mean_rate * tau), for lags >= one bin.
struct PtmSeries {
    std::vector<std::int64_t> lag_ns;
    std::vector<double> ratio;
};
PtmSeries peak_to_mean(const BurstinessCurve& e);

// Exact backlog at bin boundaries of a work-conserving rate-r server fed by
// a (Lindley recursion; independent of the envelope code path).
std::vector<nanobytes> backlog_series(const ArrivalFunction& a, std::int64_t rate_bps);

nanobytes max_backlog(const ArrivalFunction& a, std::int64_t rate_bps);

// max over the lag set of E(tau) - r*tau, floored at zero; equals the
// recursion's maximum when the lag set is full.
nanobytes envelope_bmax(const BurstinessCurve& e, std::int64_t rate_bps);

// B_max(tau; r) = max{E(tau) - r*tau, 0} per lag.
std::vector<nanobytes> interval_bmax(const BurstinessCurve& e, std::int64_t rate_bps);

struct BmaxPoint {
    double inv_utilization = 0.0;
    std::int64_t rate_bps = 0;  // bytes per second
    nanobytes bmax = 0;
};
struct BmaxSweep {
    std::vector<BmaxPoint> points;  // ordered by increasing rate
};

// Rates are lambda/U per utilization; bmax computed by the exact recursion.
BmaxSweep bmax_sweep(const ArrivalFunction& a, const std::vector<double>& utilizations);

std::int64_t rate_for_utilization(const ArrivalFunction& a, double utilization);

// Worst-case-alignment headroom of a set of flows: sum of per-flow envelopes
// against the envelope of the aggregate. potential = sum_env - agg_env >= 0.
struct PotentialResult {
    BurstinessCurve sum_env;
    BurstinessCurve agg_env;
    BurstinessCurve potential;
};
PotentialResult burstiness_potential(const std::vector<ArrivalFunction>& flows,
                                     const LagSet& lags);

void write_envelope_csv(const std::string& path, const BurstinessCurve& e);
void write_ptm_csv(const std::string& path, const PtmSeries& s);
void write_bmax_csv(const std::string& path, const BmaxSweep& s);
void write_interval_bmax_csv(const std::string& path, const BurstinessCurve& e,
                             const std::vector<nanobytes>& series);

}  // namespace burst
