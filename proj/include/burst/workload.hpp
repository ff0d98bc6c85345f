#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "burst/trace.hpp"

namespace burst {

// Ordered per-layer parameter counts of the trained model, forward order.
struct LayerManifest {
    std::vector<std::int64_t> param_counts;
    std::int64_t bytes_per_param = 4;  // 32-bit gradients

    std::int64_t layers() const { return static_cast<std::int64_t>(param_counts.size()); }
    std::int64_t total_params() const;
    std::int64_t layer_bytes(std::int64_t i) const {
        return param_counts[i] * bytes_per_param;
    }
    // Full gradient volume of one round, per worker, in linear mode.
    std::int64_t gradient_bytes() const { return total_params() * bytes_per_param; }
};

// CSV `layer_index,param_count`, header auto-detected.
LayerManifest load_manifest(const std::string& path);

enum class AllreduceMode { kLinear, kRing };

struct WorkloadSpec {
    LayerManifest manifest;
    int n_workers = 3;
    int rounds = 10;
    std::int64_t forward_gap_ns = 2'300'000'000;  // idle forward pass per round
    std::int64_t gap_low_ns = 2'000'000;          // inter-burst gap between layers
    std::int64_t gap_high_ns = 4'000'000;
    std::int64_t rate_low_bps = 3'125'000'000;   // 25 Gbps in bytes/s
    std::int64_t rate_high_bps = 4'375'000'000;  // 35 Gbps
    std::int64_t line_rate_bps = 12'500'000'000; // 100 Gbps
    AllreduceMode mode = AllreduceMode::kLinear;
    std::uint64_t seed = 1;
    std::int64_t bin_width_ns = 10'000;  // grid of the generated traces
    bool return_traffic = false;         // server->worker direction (linear only)

    void validate() const;
};

struct BurstEvent {
    int worker = 0;
    std::int64_t layer = 0;
    std::string phase;  // "reduce", "reduce_scatter", "allgather", "return"
    std::int64_t start_ns = 0;
    std::int64_t end_ns = 0;
    std::int64_t bytes = 0;
    std::int64_t rate_bps = 0;
};

struct GeneratedWorkload {
    WorkloadSpec spec;
    std::vector<ArrivalFunction> worker_traces;  // one per worker
    std::vector<ArrivalFunction> return_traces;  // empty unless enabled
    std::vector<BurstEvent> events;

    std::int64_t worker_bytes(int w) const;
};

GeneratedWorkload gen_linear(const WorkloadSpec& spec);
GeneratedWorkload gen_ring(const WorkloadSpec& spec);
GeneratedWorkload generate(const WorkloadSpec& spec);

// Chunk size sent per ring step for a layer: layers smaller than the worker
// count go out as one chunk per step instead of being zero-padded.
std::int64_t ring_chunk_bytes(const LayerManifest& m, std::int64_t layer, int n_workers);
// Per-worker bytes of one full round, by mode (closed form, exact).
std::int64_t round_bytes_linear(const LayerManifest& m);
std::int64_t round_bytes_ring(const LayerManifest& m, int n_workers);

void write_event_log_csv(const std::string& path, const std::vector<BurstEvent>& events);

// One CSV row per nonempty bin so the trace re-ingests to the same grid.
std::vector<PacketRecord> to_packet_records(const ArrivalFunction& a);

// --- Ring Allreduce correctness kernel (data plane, not traffic) ---

struct ChunkTransfer {
    int step = 0;  // 0 .. 2(N-1)-1; first N-1 are Reduce-Scatter
    int from = 0;
    int to = 0;
    int chunk = 0;
    bool reduce_scatter = true;
};

struct RingKernelResult {
    std::vector<std::vector<std::int64_t>> vectors;
    std::vector<ChunkTransfer> transfers;  // 2(N-1) per worker
};

struct RingKernelOptions {
    // Test hook: corrupt one element of the named worker's outgoing chunk at
    // the named step (-1 disables).
    int fault_step = -1;
    int fault_worker = 0;
};

RingKernelResult ring_allreduce_kernel(const std::vector<std::vector<std::int64_t>>& vectors,
                                       const RingKernelOptions& opt = {});

}  // namespace burst
