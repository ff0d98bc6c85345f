#include "burst/metrics.hpp"

#include <algorithm>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "burst/errors.hpp"

namespace burst {

LagSet LagSet::full(const TimeGrid& grid) {
    LagSet s;
    s.lag_bins.resize(grid.bin_count + 1);
    for (std::int64_t k = 0; k <= grid.bin_count; ++k) s.lag_bins[k] = k;
    return s;
}

LagSet LagSet::dense_then_log(const TimeGrid& grid, std::int64_t dense_upto_ns,
                              int points_per_decade) {
    LagSet s;
    const std::int64_t n = grid.bin_count;
    const std::int64_t dense_bins = std::min(n, dense_upto_ns / grid.bin_width_ns);
    for (std::int64_t k = 0; k <= dense_bins; ++k) s.lag_bins.push_back(k);
    if (dense_bins < n) {
        const double step = std::pow(10.0, 1.0 / points_per_decade);
        double x = static_cast<double>(std::max<std::int64_t>(dense_bins, 1));
        std::int64_t last = dense_bins;
        while (true) {
            x *= step;
            auto k = static_cast<std::int64_t>(std::llround(x));
            if (k >= n) break;
            if (k > last) {
                s.lag_bins.push_back(k);
                last = k;
            }
        }
        s.lag_bins.push_back(n);
    }
    return s;
}

void LagSet::validate(const TimeGrid& grid) const {
    std::int64_t prev = -1;
    for (std::int64_t k : lag_bins) {
        if (k <= prev) throw InvariantError("LagSet: lags must be strictly increasing");
        if (k > grid.bin_count) throw InvariantError("LagSet: lag exceeds trace duration");
        prev = k;
    }
    if (lag_bins.empty()) throw InvariantError("LagSet: empty");
}

Curve BurstinessCurve::as_curve() const {
    if (static_cast<std::int64_t>(lag_bins.size()) != grid.bin_count + 1)
        throw InvariantError("BurstinessCurve: full lag set required for as_curve");
    return Curve(grid, values);
}

BurstinessCurve burstiness_curve(const ArrivalFunction& a, const LagSet& lags) {
    lags.validate(a.grid());
    const auto& c = a.cumulative.values;
    const std::int64_t n = a.bins();
    BurstinessCurve e;
    e.grid = a.grid();
    e.lag_bins = lags.lag_bins;
    e.total_bytes = a.total_bytes;
    e.values.resize(lags.size());
    for (std::size_t i = 0; i < lags.size(); ++i) {
        const std::int64_t p = lags.lag_bins[i];
        std::uint64_t best = 0;
        for (std::int64_t j = 0; j + p <= n; ++j) best = std::max(best, c[j + p] - c[j]);
        e.values[i] = best;
    }
    return e;
}

PtmSeries peak_to_mean(const BurstinessCurve& e) {
    if (e.total_bytes == 0) throw DataError("peak_to_mean: empty trace");
    PtmSeries out;
    const long double dur = static_cast<long double>(e.grid.duration_ns());
    const long double total = static_cast<long double>(e.total_bytes);
    for (std::size_t i = 0; i < e.lag_bins.size(); ++i) {
        if (e.lag_bins[i] == 0) continue;  // PtM(0) undefined
        const long double tau = static_cast<long double>(e.lag_ns(i));
        out.lag_ns.push_back(e.lag_ns(i));
        out.ratio.push_back(
            static_cast<double>(static_cast<long double>(e.values[i]) * dur / (total * tau)));
    }
    return out;
}

std::vector<nanobytes> backlog_series(const ArrivalFunction& a, std::int64_t rate_bps) {
    if (rate_bps <= 0) throw InvariantError("backlog_series: rate must be > 0");
    const nanobytes drain = static_cast<nanobytes>(rate_bps) * a.grid().bin_width_ns;
    std::vector<nanobytes> q(a.bins() + 1);
    q[0] = 0;
    for (std::int64_t k = 0; k < a.bins(); ++k) {
        const nanobytes next =
            q[k] + static_cast<nanobytes>(a.bin_bytes(k)) * kNanobytesPerByte - drain;
        q[k + 1] = next > 0 ? next : 0;
    }
    return q;
}

nanobytes max_backlog(const ArrivalFunction& a, std::int64_t rate_bps) {
    if (rate_bps <= 0) throw InvariantError("max_backlog: rate must be > 0");
    const nanobytes drain = static_cast<nanobytes>(rate_bps) * a.grid().bin_width_ns;
    nanobytes q = 0, peak = 0;
    for (std::int64_t k = 0; k < a.bins(); ++k) {
        q += static_cast<nanobytes>(a.bin_bytes(k)) * kNanobytesPerByte - drain;
        if (q < 0) q = 0;
        if (q > peak) peak = q;
    }
    return peak;
}

nanobytes envelope_bmax(const BurstinessCurve& e, std::int64_t rate_bps) {
    if (rate_bps <= 0) throw InvariantError("envelope_bmax: rate must be > 0");
    nanobytes best = 0;
    for (std::size_t i = 0; i < e.lag_bins.size(); ++i) {
        const nanobytes v = static_cast<nanobytes>(e.values[i]) * kNanobytesPerByte -
                            static_cast<nanobytes>(rate_bps) * e.lag_ns(i);
        if (v > best) best = v;
    }
    return best;
}

std::vector<nanobytes> interval_bmax(const BurstinessCurve& e, std::int64_t rate_bps) {
    if (rate_bps <= 0) throw InvariantError("interval_bmax: rate must be > 0");
    std::vector<nanobytes> out(e.lag_bins.size());
    for (std::size_t i = 0; i < e.lag_bins.size(); ++i) {
        const nanobytes v = static_cast<nanobytes>(e.values[i]) * kNanobytesPerByte -
                            static_cast<nanobytes>(rate_bps) * e.lag_ns(i);
        out[i] = v > 0 ? v : 0;
    }
    return out;
}

std::int64_t rate_for_utilization(const ArrivalFunction& a, double utilization) {
    if (!(utilization > 0.0) || utilization > 1.0)
        throw DataError("utilization must lie in (0, 1]");
    const long double lambda = static_cast<long double>(a.total_bytes) * kNsPerSec /
                               static_cast<long double>(a.duration_ns());
    auto r = static_cast<std::int64_t>(std::llroundl(lambda / utilization));
    return std::max<std::int64_t>(r, 1);
}

BmaxSweep bmax_sweep(const ArrivalFunction& a, const std::vector<double>& utilizations) {
    BmaxSweep sweep;
    for (double u : utilizations) {
        BmaxPoint p;
        p.inv_utilization = 1.0 / u;
        p.rate_bps = rate_for_utilization(a, u);
        p.bmax = max_backlog(a, p.rate_bps);
        sweep.points.push_back(p);
    }
    std::sort(sweep.points.begin(), sweep.points.end(),
              [](const BmaxPoint& x, const BmaxPoint& y) { return x.rate_bps < y.rate_bps; });
    return sweep;
}

PotentialResult burstiness_potential(const std::vector<ArrivalFunction>& flows,
                                     const LagSet& lags) {
    if (flows.size() < 2) throw DataError("burstiness_potential: at least 2 flows required");
    for (const auto& f : flows)
        if (!(f.grid() == flows.front().grid()))
            throw InvariantError("burstiness_potential: flows must share one grid");
    PotentialResult res;
    res.agg_env = burstiness_curve(aggregate(flows), lags);
    res.sum_env = res.agg_env;  // same grid and lags; values replaced below
    std::fill(res.sum_env.values.begin(), res.sum_env.values.end(), 0);
    res.sum_env.total_bytes = 0;
    for (const auto& f : flows) {
        const auto e = burstiness_curve(f, lags);
        for (std::size_t i = 0; i < e.values.size(); ++i) res.sum_env.values[i] += e.values[i];
        res.sum_env.total_bytes += e.total_bytes;
    }
    res.potential = res.sum_env;
    for (std::size_t i = 0; i < res.potential.values.size(); ++i) {
        if (res.sum_env.values[i] < res.agg_env.values[i])
            throw InvariantError("burstiness_potential: aggregate envelope exceeds sum");
        res.potential.values[i] = res.sum_env.values[i] - res.agg_env.values[i];
    }
    return res;
}

namespace {

std::string seconds_string(std::int64_t t_ns) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%" PRId64 ".%09" PRId64, t_ns / kNsPerSec,
                  t_ns % kNsPerSec);
    return buf;
}

std::string nanobytes_string(nanobytes v) {
    const auto whole = static_cast<std::int64_t>(v / kNanobytesPerByte);
    const auto frac = static_cast<std::int64_t>(v % kNanobytesPerByte);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%" PRId64 ".%09" PRId64, whole, frac);
    return buf;
}

}  // namespace

void write_envelope_csv(const std::string& path, const BurstinessCurve& e) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "tau_seconds,bytes\n";
    for (std::size_t i = 0; i < e.lag_bins.size(); ++i)
        out << seconds_string(e.lag_ns(i)) << ',' << e.values[i] << '\n';
}

void write_ptm_csv(const std::string& path, const PtmSeries& s) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "tau_seconds,ratio\n";
    char buf[48];
    for (std::size_t i = 0; i < s.lag_ns.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", s.ratio[i]);
        out << seconds_string(s.lag_ns[i]) << ',' << buf << '\n';
    }
}

void write_bmax_csv(const std::string& path, const BmaxSweep& s) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "inv_utilization,rate_bps,bmax_bytes\n";
    char buf[48];
    for (const auto& p : s.points) {
        std::snprintf(buf, sizeof buf, "%.9g", p.inv_utilization);
        // rate in bits per second on the interface, bytes internally
        out << buf << ',' << p.rate_bps * 8 << ',' << nanobytes_string(p.bmax) << '\n';
    }
}

void write_interval_bmax_csv(const std::string& path, const BurstinessCurve& e,
                             const std::vector<nanobytes>& series) {
    if (series.size() != e.lag_bins.size())
        throw InvariantError("interval_bmax csv: series/lag size mismatch");
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "tau_seconds,bytes\n";
    for (std::size_t i = 0; i < series.size(); ++i)
        out << seconds_string(e.lag_ns(i)) << ',' << nanobytes_string(series[i]) << '\n';
}

}  // namespace burst
