#include "burst/workload.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>

#include "burst/errors.hpp"
#include "burst/rng.hpp"

namespace burst {

std::int64_t LayerManifest::total_params() const {
    return std::accumulate(param_counts.begin(), param_counts.end(), std::int64_t{0});
}

LayerManifest load_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path);
    LayerManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const char* p = line.c_str();
        const char* end = p + line.size();
        std::int64_t idx = 0, count = 0;
        auto r1 = std::from_chars(p, end, idx);
        if (r1.ec != std::errc() || r1.ptr == end || *r1.ptr != ',') {
            if (lineno == 1) continue;  // header
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed manifest row");
        }
        auto r2 = std::from_chars(r1.ptr + 1, end, count);
        if (r2.ec != std::errc())
            throw DataError(path + ":" + std::to_string(lineno) + ": malformed manifest row");
        if (count <= 0)
            throw DataError(path + ":" + std::to_string(lineno) +
                            ": param count must be > 0");
        m.param_counts.push_back(count);
    }
    if (m.param_counts.empty()) throw DataError("empty manifest: " + path);
    return m;
}

void WorkloadSpec::validate() const {
    if (manifest.param_counts.empty()) throw DataError("workload: empty manifest");
    if (n_workers < 1) throw DataError("workload: n_workers must be >= 1");
    if (mode == AllreduceMode::kRing && n_workers < 2)
        throw DataError("workload: ring mode needs n_workers >= 2");
    if (rounds < 1) throw DataError("workload: rounds must be >= 1");
    if (forward_gap_ns < 0 || gap_low_ns < 0) throw DataError("workload: negative gap");
    if (gap_low_ns > gap_high_ns) throw DataError("workload: gap bounds inverted");
    if (rate_low_bps <= 0 || rate_low_bps > rate_high_bps)
        throw DataError("workload: bad burst rate bounds");
    if (rate_high_bps > line_rate_bps)
        throw DataError("workload: burst rate above line rate");
    if (bin_width_ns <= 0) throw DataError("workload: bin width must be > 0");
}

std::int64_t GeneratedWorkload::worker_bytes(int w) const {
    return static_cast<std::int64_t>(worker_traces[w].total_bytes);
}

std::int64_t ring_chunk_bytes(const LayerManifest& m, std::int64_t layer, int n_workers) {
    const std::int64_t bytes = m.layer_bytes(layer);
    if (m.param_counts[layer] < n_workers) return bytes;  // single chunk per step
    return (bytes + n_workers - 1) / n_workers;           // ceil
}

std::int64_t round_bytes_linear(const LayerManifest& m) { return m.gradient_bytes(); }

std::int64_t round_bytes_ring(const LayerManifest& m, int n_workers) {
    std::int64_t total = 0;
    for (std::int64_t l = 0; l < m.layers(); ++l)
        total += 2 * (n_workers - 1) * ring_chunk_bytes(m, l, n_workers);
    return total;
}

namespace {

std::int64_t burst_duration_ns(std::int64_t bytes, std::int64_t rate_bps) {
    const __int128 num = static_cast<__int128>(bytes) * kNsPerSec;
    return static_cast<std::int64_t>((num + rate_bps - 1) / rate_bps);
}

// Spread a constant-rate burst over bins with exact integer byte totals.
void fill_burst(std::vector<std::uint64_t>& per_bin, std::int64_t bin_width_ns,
                std::int64_t start_ns, std::int64_t end_ns, std::int64_t bytes) {
    if (bytes == 0) return;
    const std::int64_t dur = end_ns - start_ns;
    auto bytes_until = [&](std::int64_t t) -> std::int64_t {
        if (t <= start_ns) return 0;
        if (t >= end_ns) return bytes;
        return static_cast<std::int64_t>(static_cast<__int128>(bytes) * (t - start_ns) / dur);
    };
    const std::int64_t first = start_ns / bin_width_ns;
    const std::int64_t last = (end_ns - 1) / bin_width_ns;
    for (std::int64_t b = first; b <= last; ++b) {
        const std::int64_t lo = bytes_until(b * bin_width_ns);
        const std::int64_t hi = bytes_until((b + 1) * bin_width_ns);
        per_bin[b] += static_cast<std::uint64_t>(hi - lo);
    }
}

GeneratedWorkload finish(const WorkloadSpec& spec,
                         std::vector<std::vector<std::uint64_t>>& worker_bins,
                         std::vector<std::vector<std::uint64_t>>& return_bins,
                         std::vector<BurstEvent> events, std::int64_t horizon_ns) {
    const std::int64_t bins = (horizon_ns + spec.bin_width_ns - 1) / spec.bin_width_ns;
    TimeGrid grid(spec.bin_width_ns, std::max<std::int64_t>(bins, 1));
    GeneratedWorkload out;
    out.spec = spec;
    for (auto& wb : worker_bins) {
        wb.resize(grid.bin_count, 0);
        out.worker_traces.push_back(ArrivalFunction::from_bins(grid, wb));
    }
    for (auto& rb : return_bins) {
        rb.resize(grid.bin_count, 0);
        out.return_traces.push_back(ArrivalFunction::from_bins(grid, rb));
    }
    out.events = std::move(events);
    return out;
}

}  // namespace

GeneratedWorkload gen_linear(const WorkloadSpec& spec) {
    spec.validate();
    if (spec.mode != AllreduceMode::kLinear)
        throw InvariantError("gen_linear: spec mode is not linear");
    Rng rng(spec.seed);
    const auto& m = spec.manifest;
    const int n = spec.n_workers;

    // Generous bin store sized later; grow on demand.
    std::vector<std::vector<std::uint64_t>> bins(n);
    std::vector<std::vector<std::uint64_t>> ret_bins(spec.return_traffic ? n : 0);
    std::vector<BurstEvent> events;
    auto ensure = [&](std::vector<std::uint64_t>& v, std::int64_t end_ns) {
        const auto need = static_cast<std::size_t>(end_ns / spec.bin_width_ns + 1);
        if (v.size() < need) v.resize(need, 0);
    };

    std::int64_t t = 0;
    for (int round = 0; round < spec.rounds; ++round) {
        t += spec.forward_gap_ns;
        for (std::int64_t layer = m.layers() - 1; layer >= 0; --layer) {
            const std::int64_t bytes = m.layer_bytes(layer);
            for (int w = 0; w < n; ++w) {
                const auto rate = static_cast<std::int64_t>(
                    rng.uniform(static_cast<double>(spec.rate_low_bps),
                                static_cast<double>(spec.rate_high_bps)));
                const std::int64_t end = t + burst_duration_ns(bytes, rate);
                ensure(bins[w], end);
                fill_burst(bins[w], spec.bin_width_ns, t, end, bytes);
                events.push_back({w, layer, "reduce", t, end, bytes, rate});
                t = end;  // fixed worker order, never overlapping
            }
            if (spec.return_traffic) {
                // Server echoes the reduced layer to every worker in turn.
                for (int w = 0; w < n; ++w) {
                    const auto rate = static_cast<std::int64_t>(
                        rng.uniform(static_cast<double>(spec.rate_low_bps),
                                    static_cast<double>(spec.rate_high_bps)));
                    const std::int64_t end = t + burst_duration_ns(bytes, rate);
                    ensure(ret_bins[w], end);
                    fill_burst(ret_bins[w], spec.bin_width_ns, t, end, bytes);
                    events.push_back({w, layer, "return", t, end, bytes, rate});
                    t = end;
                }
            }
            if (layer > 0) t += rng.uniform_int(spec.gap_low_ns, spec.gap_high_ns);
        }
    }
    return finish(spec, bins, ret_bins, std::move(events), t);
}

GeneratedWorkload gen_ring(const WorkloadSpec& spec) {
    spec.validate();
    if (spec.mode != AllreduceMode::kRing)
        throw InvariantError("gen_ring: spec mode is not ring");
    Rng rng(spec.seed);
    const auto& m = spec.manifest;
    const int n = spec.n_workers;
    const int steps = 2 * (n - 1);

    std::vector<std::vector<std::uint64_t>> bins(n);
    std::vector<std::vector<std::uint64_t>> ret_bins;
    std::vector<BurstEvent> events;
    auto ensure = [&](std::vector<std::uint64_t>& v, std::int64_t end_ns) {
        const auto need = static_cast<std::size_t>(end_ns / spec.bin_width_ns + 1);
        if (v.size() < need) v.resize(need, 0);
    };

    std::vector<std::int64_t> ready(n, 0);  // next layer may start at this time
    std::int64_t horizon = 0;
    for (int round = 0; round < spec.rounds; ++round) {
        for (auto& r : ready) r += spec.forward_gap_ns;
        for (std::int64_t layer = m.layers() - 1; layer >= 0; --layer) {
            const std::int64_t chunk = ring_chunk_bytes(m, layer, n);
            std::vector<std::int64_t> prev_end = ready;  // per worker, step-wise
            std::vector<std::int64_t> own_end = ready;
            for (int s = 0; s < steps; ++s) {
                std::vector<std::int64_t> end_now(n);
                for (int w = 0; w < n; ++w) {
                    const int pred = (w + n - 1) % n;
                    // A chunk leaves only after its dependency arrived from
                    // the predecessor (step s-1) and the worker's own
                    // previous send finished.
                    std::int64_t start = own_end[w];
                    if (s > 0) start = std::max(start, prev_end[pred]);
                    const auto rate = static_cast<std::int64_t>(
                        rng.uniform(static_cast<double>(spec.rate_low_bps),
                                    static_cast<double>(spec.rate_high_bps)));
                    const std::int64_t end = start + burst_duration_ns(chunk, rate);
                    ensure(bins[w], end);
                    fill_burst(bins[w], spec.bin_width_ns, start, end, chunk);
                    events.push_back({w, layer,
                                      s < n - 1 ? "reduce_scatter" : "allgather", start, end,
                                      chunk, rate});
                    end_now[w] = end;
                    own_end[w] = end;
                }
                prev_end = end_now;
            }
            for (int w = 0; w < n; ++w) {
                const int pred = (w + n - 1) % n;
                // Completion needs the final chunk received from the ring.
                const std::int64_t done = std::max(own_end[w], prev_end[pred]);
                ready[w] = done + (layer > 0
                                       ? rng.uniform_int(spec.gap_low_ns, spec.gap_high_ns)
                                       : 0);
                horizon = std::max(horizon, done);
            }
        }
    }
    for (auto r : ready) horizon = std::max(horizon, r);
    return finish(spec, bins, ret_bins, std::move(events), horizon);
}

GeneratedWorkload generate(const WorkloadSpec& spec) {
    return spec.mode == AllreduceMode::kLinear ? gen_linear(spec) : gen_ring(spec);
}

void write_event_log_csv(const std::string& path, const std::vector<BurstEvent>& events) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write event log: " + path);
    out << "worker,layer,phase,start_ns,bytes\n";
    for (const auto& e : events)
        out << e.worker << ',' << e.layer << ',' << e.phase << ',' << e.start_ns << ','
            << e.bytes << '\n';
}

std::vector<PacketRecord> to_packet_records(const ArrivalFunction& a) {
    std::vector<PacketRecord> out;
    for (std::int64_t k = 0; k < a.bins(); ++k) {
        const std::uint64_t b = a.bin_bytes(k);
        if (b > 0)
            out.push_back({k * a.grid().bin_width_ns, static_cast<std::int64_t>(b)});
    }
    return out;
}

RingKernelResult ring_allreduce_kernel(const std::vector<std::vector<std::int64_t>>& vectors,
                                       const RingKernelOptions& opt) {
    const int n = static_cast<int>(vectors.size());
    if (n == 0) throw DataError("ring kernel: no vectors");
    const std::size_t len = vectors[0].size();
    for (const auto& v : vectors)
        if (v.size() != len) throw DataError("ring kernel: vector lengths differ");

    RingKernelResult res;
    res.vectors = vectors;
    if (n == 1) return res;  // degenerate ring: nothing to exchange

    const std::size_t chunk_len = (len + n - 1) / n;
    auto chunk_range = [&](int c) {
        const std::size_t lo = std::min(len, static_cast<std::size_t>(c) * chunk_len);
        const std::size_t hi = std::min(len, lo + chunk_len);
        return std::pair<std::size_t, std::size_t>(lo, hi);
    };

    for (int s = 0; s < 2 * (n - 1); ++s) {
        const bool rs = s < n - 1;
        // All sends within a step leave simultaneously: stage them first.
        std::vector<std::vector<std::int64_t>> staged(n);
        std::vector<int> chunk_of(n);
        for (int w = 0; w < n; ++w) {
            const int c = rs ? ((w - s) % n + n) % n : ((w + 1 - (s - (n - 1))) % n + n) % n;
            chunk_of[w] = c;
            const auto [lo, hi] = chunk_range(c);
            staged[w].assign(res.vectors[w].begin() + lo, res.vectors[w].begin() + hi);
            if (opt.fault_step == s && opt.fault_worker == w && !staged[w].empty())
                staged[w][0] += 1;
        }
        for (int w = 0; w < n; ++w) {
            const int to = (w + 1) % n;
            const auto [lo, hi] = chunk_range(chunk_of[w]);
            for (std::size_t i = lo; i < hi; ++i) {
                if (rs)
                    res.vectors[to][i] += staged[w][i - lo];
                else
                    res.vectors[to][i] = staged[w][i - lo];
            }
            res.transfers.push_back({s, w, to, chunk_of[w], rs});
        }
    }
    return res;
}

}  // namespace burst
