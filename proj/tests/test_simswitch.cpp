#include <doctest.h>

#include "burst/simswitch.hpp"

using namespace burst;

namespace {

SimConfig table_config(int workers) {
    SimConfig cfg;
    cfg.n_workers = workers;
    cfg.manifest = load_manifest(BURSTLAB_DEFAULT_MANIFEST);
    return cfg;
}

}  // namespace

TEST_CASE("red marking: zero below kmin, linear ramp, one above kmax") {
    DcqcnParams p;
    CHECK(red_mark_probability(7'000, p) == 0.0);
    CHECK(red_mark_probability(0, p) == 0.0);
    CHECK(red_mark_probability((7'000 + 488'000) / 2, p) ==
          doctest::Approx(0.15).epsilon(1e-12));
    CHECK(red_mark_probability(500'000, p) == 1.0);
    CHECK(red_mark_probability(488'001, p) == 1.0);
}

TEST_CASE("cnp reaction: multiplicative decrease scaled by alpha") {
    DcqcnParams p;
    DcqcnState s;
    s.rc_bps = 12.5e9;  // 100 Gbps
    s.alpha = 1.0;
    dcqcn_on_cnp(s, p);
    CHECK(s.rc_bps == doctest::Approx(6.25e9));  // 50 Gbps
    CHECK(s.rt_bps == doctest::Approx(12.5e9));

    s = DcqcnState{.rc_bps = 12.5e9, .rt_bps = 12.5e9, .alpha = 0.5};
    dcqcn_on_cnp(s, p);
    CHECK(s.rc_bps == doctest::Approx(9.375e9));  // 75 Gbps, the observed first cut
    CHECK(s.alpha == doctest::Approx((1.0 - p.g) * 0.5 + p.g));

    s = DcqcnState{.rc_bps = 4e9, .rt_bps = 4e9, .alpha = 0.0, .timer_stage = 3,
                   .byte_stage = 2, .bytes_since_counter = 123};
    dcqcn_on_cnp(s, p);
    CHECK(s.rc_bps == doctest::Approx(4e9));  // alpha 0: no decrease
    CHECK(s.timer_stage == 0);
    CHECK(s.byte_stage == 0);
    CHECK(s.bytes_since_counter == 0);
}

TEST_CASE("alpha tick decays only when no cnp arrived") {
    DcqcnParams p;
    DcqcnState s;
    s.alpha = 0.5;
    s.cnp_since_alpha_tick = true;
    dcqcn_alpha_tick(s, p);
    CHECK(s.alpha == 0.5);
    CHECK_FALSE(s.cnp_since_alpha_tick);
    dcqcn_alpha_tick(s, p);
    CHECK(s.alpha == doctest::Approx(0.5 * (1.0 - p.g)));
}

TEST_CASE("increase ticks: cap, midpoint recovery, staged additive increase") {
    DcqcnParams p;
    const double line = 12.5e9;

    // At the line rate the permitted rate stays pinned there.
    DcqcnState s{.rc_bps = line, .rt_bps = line};
    for (int i = 0; i < 20; ++i) dcqcn_increase_tick(s, p, line, IncreaseTrigger::kTimer);
    CHECK(s.rc_bps == line);

    // Fast recovery moves halfway to the target.
    s = DcqcnState{.rc_bps = 6.25e9, .rt_bps = 12.5e9};
    dcqcn_increase_tick(s, p, line, IncreaseTrigger::kTimer);
    CHECK(s.rc_bps == doctest::Approx(9.375e9));  // 75 Gbps

    // Five halvings from 50 toward 100 Gbps reach at least 98.4.
    s = DcqcnState{.rc_bps = 6.25e9, .rt_bps = 12.5e9};
    for (int i = 0; i < 5; ++i) dcqcn_increase_tick(s, p, line, IncreaseTrigger::kTimer);
    CHECK(s.rc_bps >= 0.984 * 12.5e9);
    CHECK(s.rc_bps == doctest::Approx(12.5e9 * 0.984375));

    // Beyond the recovery stages the target grows additively per tick.
    const double rt_before = s.rt_bps;
    dcqcn_increase_tick(s, p, line, IncreaseTrigger::kTimer);  // stage 6 > F
    CHECK(s.rt_bps == doctest::Approx(std::min(rt_before + p.r_ai_bps, line)));

    // Hyper increase requires both stage counters past the threshold.
    s = DcqcnState{.rc_bps = 1e9, .rt_bps = 1e9, .timer_stage = 6, .byte_stage = 6};
    dcqcn_increase_tick(s, p, line, IncreaseTrigger::kTimer);
    CHECK(s.rt_bps == doctest::Approx(1e9 + p.r_hi_bps));
}

TEST_CASE("pfc thresholds scale with the port speed") {
    PfcParams p;
    const auto t100 = pfc_thresholds(p, 100.0);
    CHECK(t100.xoff_bytes == 950'000);
    CHECK(t100.xon_bytes == 925'000);
    const auto t1 = pfc_thresholds(p, 1.0);
    CHECK(t1.xoff_bytes == 9'500);
    CHECK(t1.xon_bytes == 9'250);
    const auto t50 = pfc_thresholds(p, 50.0);
    CHECK(t50.xoff_bytes == 475'000);
    CHECK(t50.xon_bytes == 462'500);
}

TEST_CASE("config validation rejects bad setups") {
    auto cfg = table_config(30);
    cfg.n_workers = 32;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = table_config(30);
    cfg.dcqcn.kmin_bytes = cfg.dcqcn.kmax_bytes;
    CHECK_THROWS_AS(cfg.validate(), DataError);
    cfg = table_config(30);
    cfg.initial_alpha = 1.5;
    CHECK_THROWS_AS(cfg.validate(), DataError);
}

TEST_CASE("zero workers produce an idle switch") {
    SimConfig cfg;
    cfg.n_workers = 0;
    cfg.sim_duration_ns = 200'000;
    const auto res = run_fanin(cfg);
    CHECK(res.packets_emitted == 0);
    CHECK(res.peak_backlog_bytes == 0);
    for (double r : res.agg_arrival_bps) REQUIRE(r == 0.0);
}

TEST_CASE("one underloaded worker leaves no standing queue") {
    auto cfg = table_config(1);
    cfg.fragment = SimConfig::Fragment::kLastBurst;
    cfg.rate_low_bps = cfg.rate_high_bps = 3'750'000'000;  // 30 Gbps into 100
    cfg.sim_duration_ns = 2'000'000;
    const auto res = run_fanin(cfg);
    CHECK(res.packets_emitted > 0);
    CHECK(res.peak_backlog_bytes <= cfg.mtu_bytes);  // store-and-forward, one in queue
    CHECK(res.drops == 0);
    CHECK(res.marks == 0);
}

TEST_CASE("the fan-in run is deterministic and conserves packets") {
    auto cfg = table_config(8);
    cfg.sim_duration_ns = 1'000'000;
    const auto a = run_fanin(cfg);
    const auto b = run_fanin(cfg);
    CHECK(a.agg_arrival_bps == b.agg_arrival_bps);
    CHECK(a.backlog_bytes == b.backlog_bytes);
    CHECK(a.worker_rc_bps == b.worker_rc_bps);
    CHECK(a.cnps_sent == b.cnps_sent);

    CHECK(a.drops == 0);
    CHECK(a.packets_emitted >= a.packets_enqueued);
    CHECK(a.packets_enqueued >= a.packets_dequeued);
    CHECK(a.packets_dequeued >= a.packets_delivered);
}

TEST_CASE("rate and alpha stay within their domains") {
    auto cfg = table_config(10);
    cfg.sim_duration_ns = 2'000'000;
    const auto res = run_fanin(cfg);
    for (const auto& sample : res.worker_rc_bps)
        for (double rc : sample) {
            REQUIRE(rc > 0.0);
            REQUIRE(rc <= static_cast<double>(cfg.line_rate_bps));
        }
    for (const auto& sample : res.worker_alpha)
        for (double al : sample) {
            REQUIRE(al >= 0.0);
            REQUIRE(al <= 1.0);
        }
    CHECK(res.peak_backlog_bytes <= cfg.shared_buffer_bytes);
}

TEST_CASE("pfc keeps the buffer lossless and bounded without congestion control") {
    auto cfg = table_config(30);
    // Disable marking so only PFC pushes back.
    cfg.dcqcn.kmin_bytes = 60'000'000;
    cfg.dcqcn.kmax_bytes = 63'000'000;
    cfg.sim_duration_ns = 3'000'000;
    const auto res = run_fanin(cfg);
    CHECK(res.marks == 0);
    CHECK(res.cnps_sent == 0);
    CHECK(res.pause_frames > 0);
    CHECK(res.resume_frames > 0);
    CHECK(res.drops == 0);
    const auto th = pfc_thresholds(cfg.pfc, 100.0);
    // Headroom: one MTU in flight per direction plus the pause round trip.
    const std::int64_t in_flight =
        2 * cfg.prop_delay_ns * cfg.line_rate_bps / kNsPerSec + 2 * cfg.mtu_bytes;
    CHECK(res.peak_ingress_occupancy_bytes <= th.xoff_bytes + in_flight);
    CHECK(res.peak_backlog_bytes <= cfg.shared_buffer_bytes);
}

TEST_CASE("reaction delay grows as the offered app rate falls") {
    std::vector<double> offered_gbps{35, 30, 25, 20};
    std::vector<std::int64_t> delay;
    for (double g : offered_gbps) {
        auto cfg = table_config(30);
        cfg.rate_low_bps = cfg.rate_high_bps = static_cast<std::int64_t>(g * 1e9 / 8.0);
        cfg.sim_duration_ns = 1'500'000;
        const auto res = run_fanin(cfg);
        const auto an = analyze_fanin(res);
        REQUIRE(res.first_mark_ns >= 0);
        REQUIRE(an.first_reduction_ns >= 0);
        delay.push_back(an.first_reduction_ns - res.first_mark_ns);
    }
    for (std::size_t i = 1; i < delay.size(); ++i) REQUIRE(delay[i] >= delay[i - 1]);
}

TEST_CASE("counterfactual fast reaction caps the backlog far below the default") {
    auto cfg = table_config(30);
    cfg.sim_duration_ns = 3'000'000;
    const auto slow = run_fanin(cfg);
    const auto fast = run_counterfactual_fast_reaction(cfg);
    CHECK(fast.peak_backlog_bytes * 5 <= slow.peak_backlog_bytes);
    CHECK(fast.peak_backlog_bytes <= 2'000'000);
}

TEST_CASE("counterfactual edge cases: idle switch and an underloaded sender") {
    SimConfig empty;
    empty.n_workers = 0;
    empty.sim_duration_ns = 100'000;
    const auto idle = run_counterfactual_fast_reaction(empty);
    CHECK(idle.peak_backlog_bytes == 0);
    CHECK(idle.first_mark_ns == -1);

    auto cfg = table_config(1);
    cfg.fragment = SimConfig::Fragment::kLastBurst;
    cfg.rate_low_bps = cfg.rate_high_bps = 3'750'000'000;
    cfg.sim_duration_ns = 1'000'000;
    const auto one = run_counterfactual_fast_reaction(cfg);
    CHECK(one.peak_backlog_bytes <= cfg.mtu_bytes);
}
