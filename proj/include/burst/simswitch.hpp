#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "burst/workload.hpp"

namespace burst {

struct PfcParams {
    double xoff_kb_per_gbps = 9.5;
    double xon_kb_per_gbps = 9.25;
};

struct PfcThresholds {
    std::int64_t xoff_bytes = 0;
    std::int64_t xon_bytes = 0;
};

PfcThresholds pfc_thresholds(const PfcParams& p, double port_speed_gbps);

struct DcqcnParams {
    std::int64_t kmin_bytes = 7'000;
    std::int64_t kmax_bytes = 488'000;
    double pmax = 0.30;
    double g = 1.0 / 256.0;
    std::int64_t cnp_interval_ns = 50'000;
    std::int64_t alpha_timer_ns = 55'000;  // K of the parameter table
    std::int64_t rate_timer_ns = 55'000;   // T
    std::int64_t byte_counter_bytes = 10'000'000;  // B
    std::int64_t r_ai_bps = 625'000;    // 5 Mbps additive step, bytes/s
    std::int64_t r_hi_bps = 6'250'000;  // 50 Mbps hyper step
    int fast_recovery_stages = 5;

    void validate() const;
};

// RED/ECN marking probability from egress queue depth: zero below kmin,
// linear up to pmax at kmax, one above kmax.
double red_mark_probability(std::int64_t queue_bytes, const DcqcnParams& p);

// DCQCN sender rate state. Rates in bytes/s.
struct DcqcnState {
    double rc_bps = 0;  // current (permitted) rate
    double rt_bps = 0;  // target rate
    double alpha = 0;
    int timer_stage = 0;
    int byte_stage = 0;
    std::int64_t bytes_since_counter = 0;
    bool cnp_since_alpha_tick = false;
};

enum class IncreaseTrigger { kTimer, kByteCounter };

// Multiplicative decrease on CNP arrival; resets the increase stages.
void dcqcn_on_cnp(DcqcnState& s, const DcqcnParams& p);
// Alpha EWMA tick: decays alpha when no CNP arrived in the last window.
void dcqcn_alpha_tick(DcqcnState& s, const DcqcnParams& p);
// Fast-recovery / additive / hyper increase, capped at the line rate.
void dcqcn_increase_tick(DcqcnState& s, const DcqcnParams& p, double line_rate_bps,
                         IncreaseTrigger trigger);

struct SimConfig {
    int n_workers = 30;
    int switch_ports = 32;
    std::int64_t line_rate_bps = 12'500'000'000;  // bytes/s (100 Gbps)
    std::int64_t prop_delay_ns = 1'000;
    std::int64_t mtu_bytes = 1'500;
    PfcParams pfc;
    DcqcnParams dcqcn;

    // Workload fragment: the backward pass of one Linear-Allreduce round per
    // worker, all starting at t=0 with the last layer's burst, or that first
    // burst alone.
    enum class Fragment { kLastBurst, kRound };
    Fragment fragment = Fragment::kRound;
    LayerManifest manifest;
    std::int64_t rate_low_bps = 3'125'000'000;   // offered app rate, 25 Gbps
    std::int64_t rate_high_bps = 4'375'000'000;  // 35 Gbps
    std::int64_t gap_low_ns = 2'000'000;
    std::int64_t gap_high_ns = 4'000'000;

    std::int64_t sim_duration_ns = 10'000'000;  // 10 ms window
    std::int64_t sample_interval_ns = 10'000;
    std::uint64_t seed = 1;

    // Sender state at burst onset. The preceding idle period has driven the
    // permitted rate to the line rate; alpha starts part-decayed.
    double initial_alpha = 0.6;
    std::int64_t min_rate_bps = 12'500'000;  // 100 Mbps floor
    std::int64_t shared_buffer_bytes = 64'000'000;
    std::int64_t counterfactual_reaction_ns = 10'000;

    void validate() const;
};

struct SimResult {
    std::int64_t sample_interval_ns = 0;
    std::vector<double> agg_arrival_bps;        // bytes/s per sample window
    std::vector<std::int64_t> backlog_bytes;    // egress occupancy at sample end
    std::vector<std::vector<double>> worker_rc_bps;  // [sample][worker]
    std::vector<std::vector<double>> worker_alpha;

    std::uint64_t cnps_sent = 0;
    std::uint64_t pause_frames = 0;
    std::uint64_t resume_frames = 0;
    std::uint64_t marks = 0;
    std::uint64_t drops = 0;
    std::uint64_t packets_emitted = 0;
    std::uint64_t packets_enqueued = 0;
    std::uint64_t packets_dequeued = 0;
    std::uint64_t packets_delivered = 0;
    std::int64_t peak_backlog_bytes = 0;
    std::int64_t peak_ingress_occupancy_bytes = 0;
    std::int64_t first_mark_ns = -1;

    std::int64_t time_of_sample_ns(std::size_t k) const {
        return static_cast<std::int64_t>(k + 1) * sample_interval_ns;
    }
};

SimResult run_fanin(const SimConfig& cfg);
// Same scenario, but every sender clamps to the floor rate a fixed delay
// after the first packet is marked at the switch.
SimResult run_counterfactual_fast_reaction(const SimConfig& cfg);

// Plateau detection on the aggregate-arrival series: the first sample that
// falls below `drop_fraction` of the running maximum.
struct FaninAnalysis {
    double initial_agg_bps = 0;
    std::int64_t first_reduction_ns = -1;
    std::int64_t backlog_at_reduction_bytes = -1;
};
FaninAnalysis analyze_fanin(const SimResult& r, double drop_fraction = 0.9);

void write_series_csv(const std::string& path, const SimResult& r);
void write_worker_rates_csv(const std::string& path, const SimResult& r);
void write_event_summary_json(const std::string& path, const SimResult& r);

// Loads a config; if workers are present the layer manifest named in the file
// (or the fallback) is read too, and its resolved path reported when asked.
SimConfig read_sim_config_json(const std::string& path, const std::string& manifest_fallback,
                               std::string* manifest_path_out = nullptr);

}  // namespace burst
