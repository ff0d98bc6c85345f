#include "burst/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "burst/errors.hpp"

namespace burst {

ArrivalFunction ArrivalFunction::from_bins(TimeGrid grid,
                                           const std::vector<std::uint64_t>& per_bin) {
    if (static_cast<std::int64_t>(per_bin.size()) != grid.bin_count)
        throw InvariantError("from_bins: per_bin size must equal bin_count");
    std::vector<std::uint64_t> cum(grid.point_count());
    cum[0] = 0;
    for (std::int64_t k = 0; k < grid.bin_count; ++k) cum[k + 1] = cum[k] + per_bin[k];
    ArrivalFunction a;
    a.cumulative = Curve(grid, std::move(cum));
    a.total_bytes = a.cumulative.back();
    return a;
}

std::vector<std::uint64_t> ArrivalFunction::to_bins() const {
    std::vector<std::uint64_t> out(bins());
    for (std::int64_t k = 0; k < bins(); ++k) out[k] = bin_bytes(k);
    return out;
}

IngestResult ingest(std::vector<PacketRecord> records, const IngestOptions& opt) {
    if (records.empty()) throw DataError("empty trace");
    if (opt.bin_width_ns <= 0) throw InvariantError("ingest: bin width must be > 0");
    for (const auto& r : records) {
        if (r.bytes <= 0) throw DataError("ingest: packet size must be > 0");
        if (r.timestamp_ns < 0) throw DataError("ingest: negative timestamp");
    }
    IngestResult res;
    const bool sorted = std::is_sorted(records.begin(), records.end(),
                                       [](const PacketRecord& a, const PacketRecord& b) {
                                           return a.timestamp_ns < b.timestamp_ns;
                                       });
    if (!sorted) {
        std::stable_sort(records.begin(), records.end(),
                         [](const PacketRecord& a, const PacketRecord& b) {
                             return a.timestamp_ns < b.timestamp_ns;
                         });
        res.reordered = true;
    }
    const std::int64_t last_ts = records.back().timestamp_ns;
    std::int64_t horizon = opt.horizon_ns;
    if (horizon == 0) horizon = (last_ts / opt.bin_width_ns + 1) * opt.bin_width_ns;
    if (horizon <= last_ts) throw DataError("ingest: horizon shorter than trace");
    const std::int64_t bins = (horizon + opt.bin_width_ns - 1) / opt.bin_width_ns;

    TimeGrid grid(opt.bin_width_ns, bins);
    std::vector<std::uint64_t> per_bin(bins, 0);
    for (const auto& r : records) per_bin[grid.bin_of(r.timestamp_ns)] += r.bytes;
    res.arrivals = ArrivalFunction::from_bins(grid, per_bin);
    return res;
}

namespace {

std::pair<std::int64_t, std::int64_t> interval_bins(const ArrivalFunction& a, Interval iv,
                                                    const char* name) {
    const auto& g = a.grid();
    if (iv.begin_ns < 0 || iv.end_ns > g.duration_ns() || iv.begin_ns >= iv.end_ns)
        throw DataError(std::string("splice: ") + name + " interval out of range");
    if (iv.begin_ns % g.bin_width_ns != 0 || iv.end_ns % g.bin_width_ns != 0)
        throw DataError(std::string("splice: ") + name +
                        " interval must align to bin boundaries");
    return {iv.begin_ns / g.bin_width_ns, iv.end_ns / g.bin_width_ns};
}

}  // namespace

ArrivalFunction splice(const ArrivalFunction& a, Interval remove, Interval source) {
    if (remove.length_ns() != source.length_ns())
        throw DataError("splice: intervals must have equal length");
    const auto [rb, re] = interval_bins(a, remove, "remove");
    const auto [sb, se] = interval_bins(a, source, "source");
    (void)se;
    auto per_bin = a.to_bins();
    for (std::int64_t k = rb; k < re; ++k) per_bin[k] = a.bin_bytes(sb + (k - rb));
    return ArrivalFunction::from_bins(a.grid(), per_bin);
}

ArrivalFunction rebin(const ArrivalFunction& a, std::int64_t bin_width_ns) {
    const std::int64_t w = a.grid().bin_width_ns;
    if (bin_width_ns == w) return a;
    if (bin_width_ns < w || bin_width_ns % w != 0)
        throw DataError("rebin: target width must be a multiple of the source width");
    const std::int64_t factor = bin_width_ns / w;
    const std::int64_t bins = (a.bins() + factor - 1) / factor;
    std::vector<std::uint64_t> per_bin(bins, 0);
    for (std::int64_t k = 0; k < a.bins(); ++k) per_bin[k / factor] += a.bin_bytes(k);
    return ArrivalFunction::from_bins(TimeGrid(bin_width_ns, bins), per_bin);
}

ArrivalFunction aggregate(const std::vector<ArrivalFunction>& flows) {
    if (flows.empty()) throw DataError("aggregate: no flows given");
    std::int64_t width = 0;
    for (const auto& f : flows) width = std::max(width, f.grid().bin_width_ns);
    for (const auto& f : flows)
        if (width % f.grid().bin_width_ns != 0)
            throw DataError("aggregate: bin widths lack a common multiple grid");
    std::int64_t bins = 0;
    std::vector<ArrivalFunction> common;
    common.reserve(flows.size());
    for (const auto& f : flows) {
        common.push_back(rebin(f, width));
        bins = std::max(bins, common.back().bins());
    }
    std::vector<std::uint64_t> per_bin(bins, 0);
    for (const auto& f : common)
        for (std::int64_t k = 0; k < f.bins(); ++k) per_bin[k] += f.bin_bytes(k);
    return ArrivalFunction::from_bins(TimeGrid(width, bins), per_bin);
}

namespace {

bool parse_two_ints(const std::string& line, std::int64_t& a, std::int64_t& b) {
    const char* p = line.c_str();
    const char* end = p + line.size();
    auto r1 = std::from_chars(p, end, a);
    if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ',') return false;
    auto r2 = std::from_chars(r1.ptr + 1, end, b);
    if (r2.ec != std::errc()) return false;
    for (const char* q = r2.ptr; q != end; ++q)
        if (*q != ' ' && *q != '\r') return false;
    return true;
}

}  // namespace

std::vector<PacketRecord> read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open trace file: " + path);
    std::vector<PacketRecord> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::int64_t ts = 0, sz = 0;
        if (!parse_two_ints(line, ts, sz)) {
            if (lineno == 1) continue;  // header row
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed trace row");
        }
        out.push_back({ts, sz});
    }
    if (out.empty()) throw DataError("empty trace: " + path);
    return out;
}

void write_trace_csv(const std::string& path, const std::vector<PacketRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write trace file: " + path);
    out << "timestamp_ns,bytes\n";
    for (const auto& r : records) out << r.timestamp_ns << ',' << r.bytes << '\n';
}

namespace {

std::string seconds_string(std::int64_t t_ns) {
    char buf[48];
    const std::int64_t whole = t_ns / kNsPerSec;
    const std::int64_t frac = t_ns % kNsPerSec;
    std::snprintf(buf, sizeof buf, "%" PRId64 ".%09" PRId64, whole, frac);
    return buf;
}

}  // namespace

void write_binned_csv(const std::string& path, const ArrivalFunction& a) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "bin_start_s,bytes\n";
    for (std::int64_t k = 0; k < a.bins(); ++k)
        out << seconds_string(k * a.grid().bin_width_ns) << ',' << a.bin_bytes(k) << '\n';
}

void write_curve_csv(const std::string& path, const Curve& c) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "tau_seconds,bytes\n";
    for (std::int64_t k = 0; k < c.points(); ++k)
        out << seconds_string(k * c.grid.bin_width_ns) << ',' << c.values[k] << '\n';
}

Curve read_curve_csv(const std::string& path, std::int64_t bin_width_ns) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open curve file: " + path);
    std::vector<std::uint64_t> vals;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed curve row");
        std::uint64_t b = 0;
        const char* p = line.c_str() + comma + 1;
        auto r = std::from_chars(p, line.c_str() + line.size(), b);
        if (r.ec != std::errc()) {
            if (lineno == 1) continue;  // header
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed curve row");
        }
        vals.push_back(b);
    }
    if (vals.empty()) throw DataError("empty curve file: " + path);
    const TimeGrid grid(bin_width_ns, static_cast<std::int64_t>(vals.size()) - 1);
    return Curve(grid, std::move(vals));
}

CsvTable read_numeric_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open csv: " + path);
    CsvTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::size_t pos = 0;
        while (true) {
            const auto comma = line.find(',', pos);
            cells.push_back(line.substr(pos, comma - pos));
            if (comma == std::string::npos) break;
            pos = comma + 1;
        }
        if (lineno == 1) {
            table.columns = cells;
            continue;
        }
        if (cells.size() != table.columns.size())
            throw DataError(path + ":" + std::to_string(lineno) + ": ragged csv row");
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(c, &used));
                if (used != c.size()) throw std::invalid_argument(c);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(lineno) +
                                ": non-numeric cell '" + c + "'");
            }
        }
        table.rows.push_back(std::move(row));
    }
    if (table.columns.empty()) throw DataError("empty csv: " + path);
    return table;
}

}  // namespace burst
