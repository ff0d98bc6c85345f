#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "burst/curve.hpp"

namespace burst {

struct PacketRecord {
    std::int64_t timestamp_ns = 0;  // since capture start, >= 0
    std::int64_t bytes = 0;         // > 0
};

// Cumulative arrivals of one flow on a uniform grid. cumulative.values[k]
// holds the bytes that arrived in bins [0, k); the last point equals
// total_bytes.
struct ArrivalFunction {
    Curve cumulative;
    std::uint64_t total_bytes = 0;

    const TimeGrid& grid() const { return cumulative.grid; }
    std::int64_t duration_ns() const { return grid().duration_ns(); }
    double duration_s() const { return grid().duration_s(); }
    // Exact as a (bytes, ns) pair; double form for reporting.
    double mean_rate_bps() const {
        return static_cast<double>(total_bytes) * kNsPerSec / static_cast<double>(duration_ns());
    }
    std::uint64_t bin_bytes(std::int64_t k) const { return cumulative.bin_bytes(k); }
    std::int64_t bins() const { return grid().bin_count; }

    static ArrivalFunction from_bins(TimeGrid grid, const std::vector<std::uint64_t>& per_bin);
    std::vector<std::uint64_t> to_bins() const;
};

struct IngestOptions {
    std::int64_t bin_width_ns = 1000;  // 1 us default
    // Optional fixed horizon; 0 means "end of last packet's bin".
    std::int64_t horizon_ns = 0;
};

struct IngestResult {
    ArrivalFunction arrivals;
    bool reordered = false;  // input was not time-sorted; a stable sort was applied
};

IngestResult ingest(std::vector<PacketRecord> records, const IngestOptions& opt);

// Half-open time interval in ns.
struct Interval {
    std::int64_t begin_ns = 0;
    std::int64_t end_ns = 0;
    std::int64_t length_ns() const { return end_ns - begin_ns; }
};

// Replace the per-bin bytes of `remove` with those copied from `source`
// (equal-length intervals, both inside the trace). Cumulative totals are
// rebuilt.
ArrivalFunction splice(const ArrivalFunction& a, Interval remove, Interval source);

// Per-bin sum of all flows. Flows on different grids are re-binned to the
// coarsest common bin width first (must divide evenly); the horizon is the
// longest flow's.
ArrivalFunction aggregate(const std::vector<ArrivalFunction>& flows);

ArrivalFunction rebin(const ArrivalFunction& a, std::int64_t bin_width_ns);

// Trace CSV: rows `timestamp_ns,bytes`, header auto-detected.
std::vector<PacketRecord> read_trace_csv(const std::string& path);
void write_trace_csv(const std::string& path, const std::vector<PacketRecord>& records);

// Binned CSV export: `bin_start_s,bytes`.
void write_binned_csv(const std::string& path, const ArrivalFunction& a);

// Curve CSV: `tau_seconds,bytes` with 9 fractional digits of seconds.
void write_curve_csv(const std::string& path, const Curve& c);
Curve read_curve_csv(const std::string& path, std::int64_t bin_width_ns);

// Generic numeric CSV (header row plus uniform-width numeric rows), the
// round-trip reader for the tool's metric and series outputs.
struct CsvTable {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};
CsvTable read_numeric_csv(const std::string& path);

}  // namespace burst
