#include "burst/simswitch.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>

#include "burst/errors.hpp"
#include "burst/rng.hpp"

namespace burst {

PfcThresholds pfc_thresholds(const PfcParams& p, double port_speed_gbps) {
    if (port_speed_gbps <= 0) throw InvariantError("pfc_thresholds: port speed must be > 0");
    PfcThresholds t;
    t.xoff_bytes = static_cast<std::int64_t>(std::llround(p.xoff_kb_per_gbps * 1000.0 *
                                                          port_speed_gbps));
    t.xon_bytes = static_cast<std::int64_t>(std::llround(p.xon_kb_per_gbps * 1000.0 *
                                                         port_speed_gbps));
    if (t.xon_bytes >= t.xoff_bytes) throw InvariantError("pfc: xon must be below xoff");
    return t;
}

void DcqcnParams::validate() const {
    if (kmin_bytes >= kmax_bytes) throw InvariantError("dcqcn: kmin must be below kmax");
    if (!(pmax > 0.0) || pmax > 1.0) throw InvariantError("dcqcn: pmax must be in (0,1]");
    if (!(g > 0.0) || g >= 1.0) throw InvariantError("dcqcn: g must be in (0,1)");
    if (cnp_interval_ns <= 0 || alpha_timer_ns <= 0 || rate_timer_ns <= 0)
        throw InvariantError("dcqcn: timer intervals must be > 0");
    if (byte_counter_bytes <= 0 || r_ai_bps <= 0 || r_hi_bps <= 0)
        throw InvariantError("dcqcn: increase parameters must be > 0");
    if (fast_recovery_stages < 1) throw InvariantError("dcqcn: fast_recovery_stages >= 1");
}

double red_mark_probability(std::int64_t queue_bytes, const DcqcnParams& p) {
    if (queue_bytes < 0) throw InvariantError("red_mark_probability: negative queue");
    if (queue_bytes <= p.kmin_bytes) return 0.0;
    if (queue_bytes > p.kmax_bytes) return 1.0;
    return p.pmax * static_cast<double>(queue_bytes - p.kmin_bytes) /
           static_cast<double>(p.kmax_bytes - p.kmin_bytes);
}

void dcqcn_on_cnp(DcqcnState& s, const DcqcnParams& p) {
    s.rt_bps = s.rc_bps;
    s.rc_bps = s.rc_bps * (1.0 - s.alpha / 2.0);
    s.alpha = (1.0 - p.g) * s.alpha + p.g;
    s.timer_stage = 0;
    s.byte_stage = 0;
    s.bytes_since_counter = 0;
    s.cnp_since_alpha_tick = true;
}

void dcqcn_alpha_tick(DcqcnState& s, const DcqcnParams& p) {
    if (!s.cnp_since_alpha_tick) s.alpha = (1.0 - p.g) * s.alpha;
    s.cnp_since_alpha_tick = false;
}

void dcqcn_increase_tick(DcqcnState& s, const DcqcnParams& p, double line_rate_bps,
                         IncreaseTrigger trigger) {
    if (trigger == IncreaseTrigger::kTimer)
        ++s.timer_stage;
    else
        ++s.byte_stage;
    const int f = p.fast_recovery_stages;
    if (s.timer_stage > f && s.byte_stage > f) {
        s.rt_bps = std::min(s.rt_bps + static_cast<double>(p.r_hi_bps), line_rate_bps);
    } else if (s.timer_stage > f || s.byte_stage > f) {
        s.rt_bps = std::min(s.rt_bps + static_cast<double>(p.r_ai_bps), line_rate_bps);
    }
    // Fast recovery and both increase modes move halfway to the target.
    s.rc_bps = std::min((s.rc_bps + s.rt_bps) / 2.0, line_rate_bps);
}

void SimConfig::validate() const {
    if (n_workers < 0) throw DataError("sim: n_workers must be >= 0");
    if (n_workers >= switch_ports)
        throw DataError("sim: workers must leave one switch port for the destination");
    if (line_rate_bps <= 0 || mtu_bytes <= 0 || prop_delay_ns < 0)
        throw DataError("sim: bad link parameters");
    if (rate_low_bps <= 0 || rate_low_bps > rate_high_bps ||
        rate_high_bps > line_rate_bps)
        throw DataError("sim: bad offered rate bounds");
    if (sim_duration_ns <= 0 || sample_interval_ns <= 0)
        throw DataError("sim: bad duration/sampling");
    if (initial_alpha < 0.0 || initial_alpha > 1.0)
        throw DataError("sim: initial_alpha must be in [0,1]");
    if (min_rate_bps <= 0) throw DataError("sim: min_rate must be > 0");
    if (n_workers > 0 && manifest.param_counts.empty())
        throw DataError("sim: manifest required");
    try {
        dcqcn.validate();
        pfc_thresholds(pfc, static_cast<double>(line_rate_bps) * 8.0 / 1e9);
    } catch (const InvariantError& e) {
        throw DataError(e.what());  // configuration input, not internal state
    }
}

namespace {

enum class Ev {
    kWorkerSend,
    kAppBurst,
    kEnqueue,
    kTxDone,
    kDestArrive,
    kCnpArrive,
    kAlphaTick,
    kRateTimer,
    kPauseArrive,
    kResumeArrive,
    kGlobalClamp,
    kSample,
};

struct Event {
    std::int64_t t = 0;
    std::uint64_t seq = 0;
    Ev kind{};
    int worker = -1;
    std::int64_t a = 0;  // bytes / generation, by kind
    std::int64_t b = 0;  // marked flag for kDestArrive
};

struct EventOrder {
    bool operator()(const Event& x, const Event& y) const {
        if (x.t != y.t) return x.t > y.t;
        return x.seq > y.seq;
    }
};

struct Burst {
    std::int64_t remaining = 0;
    std::int64_t offered_bps = 0;
};

struct Worker {
    DcqcnState dcqcn;
    std::deque<Burst> bursts;
    std::int64_t next_layer = -1;  // next manifest layer to schedule, -1 = done
    bool paused = false;
    bool send_scheduled = false;
    std::int64_t earliest_send_ns = 0;
    std::int64_t timer_gen = 0;
    bool pause_sent = false;            // switch-side PFC state for this ingress
    std::int64_t ingress_occupancy = 0; // switch-side buffered bytes from this port
    std::int64_t last_cnp_ns = 0;       // destination-side pacing
    bool any_cnp = false;
};

struct Pkt {
    std::int64_t bytes = 0;
    int ingress = 0;
    bool marked = false;
};

class FaninSim {
  public:
    FaninSim(const SimConfig& cfg, bool counterfactual)
        : cfg_(cfg), counterfactual_(counterfactual), rng_(cfg.seed) {
        cfg_.validate();
        thresholds_ = pfc_thresholds(cfg_.pfc, static_cast<double>(cfg_.line_rate_bps) * 8.0 / 1e9);
        workers_.resize(cfg_.n_workers);
    }

    SimResult run() {
        res_.sample_interval_ns = cfg_.sample_interval_ns;
        for (int w = 0; w < cfg_.n_workers; ++w) {
            auto& wk = workers_[w];
            wk.dcqcn.rc_bps = static_cast<double>(cfg_.line_rate_bps);
            wk.dcqcn.rt_bps = static_cast<double>(cfg_.line_rate_bps);
            wk.dcqcn.alpha = cfg_.initial_alpha;
            wk.next_layer = cfg_.manifest.layers() - 1;
            wk.last_cnp_ns = -cfg_.dcqcn.cnp_interval_ns - 1;
            push(0, Ev::kAppBurst, w);
            push(cfg_.dcqcn.alpha_timer_ns, Ev::kAlphaTick, w);
            push(cfg_.dcqcn.rate_timer_ns, Ev::kRateTimer, w, wk.timer_gen);
        }
        push(cfg_.sample_interval_ns, Ev::kSample, -1);

        while (!queue_.empty()) {
            Event ev = queue_.top();
            if (ev.t > cfg_.sim_duration_ns) break;
            queue_.pop();
            now_ = ev.t;
            dispatch(ev);
        }
        return res_;
    }

  private:
    void push(std::int64_t t, Ev kind, int worker, std::int64_t a = 0, std::int64_t b = 0) {
        queue_.push(Event{t, seq_++, kind, worker, a, b});
    }

    std::int64_t serialization_ns(std::int64_t bytes) const {
        const __int128 num = static_cast<__int128>(bytes) * kNsPerSec;
        return static_cast<std::int64_t>((num + cfg_.line_rate_bps - 1) / cfg_.line_rate_bps);
    }

    void dispatch(const Event& ev) {
        switch (ev.kind) {
            case Ev::kAppBurst: on_app_burst(ev.worker); break;
            case Ev::kWorkerSend: on_worker_send(ev.worker); break;
            case Ev::kEnqueue: on_enqueue(ev.worker, ev.a); break;
            case Ev::kTxDone: on_tx_done(); break;
            case Ev::kDestArrive: on_dest_arrive(ev.worker, ev.b != 0); break;
            case Ev::kCnpArrive: on_cnp_arrive(ev.worker); break;
            case Ev::kAlphaTick: on_alpha_tick(ev.worker); break;
            case Ev::kRateTimer: on_rate_timer(ev.worker, ev.a); break;
            case Ev::kPauseArrive: on_pause(ev.worker, true); break;
            case Ev::kResumeArrive: on_pause(ev.worker, false); break;
            case Ev::kGlobalClamp: on_global_clamp(); break;
            case Ev::kSample: on_sample(); break;
        }
    }

    void wake_sender(int w) {
        auto& wk = workers_[w];
        if (wk.send_scheduled || wk.paused || wk.bursts.empty()) return;
        wk.send_scheduled = true;
        push(std::max(now_, wk.earliest_send_ns), Ev::kWorkerSend, w);
    }

    void on_app_burst(int w) {
        auto& wk = workers_[w];
        if (wk.next_layer < 0) return;
        const std::int64_t bytes = cfg_.manifest.layer_bytes(wk.next_layer);
        const auto offered = static_cast<std::int64_t>(
            rng_.uniform(static_cast<double>(cfg_.rate_low_bps),
                         static_cast<double>(cfg_.rate_high_bps)));
        wk.bursts.push_back({bytes, offered});
        wk.next_layer = cfg_.fragment == SimConfig::Fragment::kLastBurst ? -1
                                                                         : wk.next_layer - 1;
        wake_sender(w);
    }

    void on_worker_send(int w) {
        auto& wk = workers_[w];
        wk.send_scheduled = false;
        if (wk.paused || wk.bursts.empty()) return;
        auto& burst = wk.bursts.front();
        const std::int64_t bytes = std::min<std::int64_t>(cfg_.mtu_bytes, burst.remaining);
        burst.remaining -= bytes;
        ++res_.packets_emitted;

        // Pacing at the offered app rate, capped by the permitted DCQCN rate.
        const double pace =
            std::min(static_cast<double>(burst.offered_bps), wk.dcqcn.rc_bps);
        const auto interval = static_cast<std::int64_t>(
            std::ceil(static_cast<double>(bytes) * kNsPerSec / pace));
        wk.earliest_send_ns = now_ + interval;

        push(now_ + serialization_ns(bytes) + cfg_.prop_delay_ns, Ev::kEnqueue, w, bytes);

        wk.dcqcn.bytes_since_counter += bytes;
        if (wk.dcqcn.bytes_since_counter >= cfg_.dcqcn.byte_counter_bytes) {
            wk.dcqcn.bytes_since_counter -= cfg_.dcqcn.byte_counter_bytes;
            dcqcn_increase_tick(wk.dcqcn, cfg_.dcqcn,
                                static_cast<double>(cfg_.line_rate_bps),
                                IncreaseTrigger::kByteCounter);
        }

        if (burst.remaining == 0) {
            wk.bursts.pop_front();
            if (wk.next_layer >= 0) {
                const std::int64_t gap = rng_.uniform_int(cfg_.gap_low_ns, cfg_.gap_high_ns);
                push(wk.earliest_send_ns + gap, Ev::kAppBurst, w);
            }
        }
        if (!wk.bursts.empty()) {
            wk.send_scheduled = true;
            push(wk.earliest_send_ns, Ev::kWorkerSend, w);
        }
    }

    void on_enqueue(int w, std::int64_t bytes) {
        if (occupancy_ + bytes > cfg_.shared_buffer_bytes) {
            ++res_.drops;
            return;
        }
        const double p = red_mark_probability(occupancy_, cfg_.dcqcn);
        bool marked = false;
        if (p >= 1.0)
            marked = true;
        else if (p > 0.0)
            marked = rng_.uniform01() < p;
        if (marked) {
            ++res_.marks;
            if (res_.first_mark_ns < 0) {
                res_.first_mark_ns = now_;
                if (counterfactual_)
                    push(now_ + cfg_.counterfactual_reaction_ns, Ev::kGlobalClamp, -1);
            }
        }

        occupancy_ += bytes;
        auto& wk = workers_[w];
        wk.ingress_occupancy += bytes;
        res_.peak_backlog_bytes = std::max(res_.peak_backlog_bytes, occupancy_);
        res_.peak_ingress_occupancy_bytes =
            std::max(res_.peak_ingress_occupancy_bytes, wk.ingress_occupancy);
        window_bytes_ += bytes;
        ++res_.packets_enqueued;
        fifo_.push_back({bytes, w, marked});
        if (!egress_busy_) {
            egress_busy_ = true;
            push(now_ + serialization_ns(bytes), Ev::kTxDone, -1);
        }

        if (!wk.pause_sent && wk.ingress_occupancy >= thresholds_.xoff_bytes) {
            wk.pause_sent = true;
            ++res_.pause_frames;
            push(now_ + cfg_.prop_delay_ns, Ev::kPauseArrive, w);
        }
    }

    void on_tx_done() {
        if (fifo_.empty()) throw InvariantError("sim: egress fired with empty queue");
        const Pkt pkt = fifo_.front();
        fifo_.pop_front();
        occupancy_ -= pkt.bytes;
        auto& wk = workers_[pkt.ingress];
        wk.ingress_occupancy -= pkt.bytes;
        if (occupancy_ < 0 || wk.ingress_occupancy < 0)
            throw InvariantError("sim: buffer accounting went negative");
        ++res_.packets_dequeued;
        push(now_ + cfg_.prop_delay_ns, Ev::kDestArrive, pkt.ingress, 0, pkt.marked ? 1 : 0);

        if (wk.pause_sent && wk.ingress_occupancy <= thresholds_.xon_bytes) {
            wk.pause_sent = false;
            ++res_.resume_frames;
            push(now_ + cfg_.prop_delay_ns, Ev::kResumeArrive, pkt.ingress);
        }
        if (!fifo_.empty())
            push(now_ + serialization_ns(fifo_.front().bytes), Ev::kTxDone, -1);
        else
            egress_busy_ = false;
    }

    void on_dest_arrive(int w, bool marked) {
        ++res_.packets_delivered;
        if (!marked) return;
        auto& wk = workers_[w];
        if (now_ - wk.last_cnp_ns < cfg_.dcqcn.cnp_interval_ns) return;
        wk.last_cnp_ns = now_;
        ++res_.cnps_sent;
        push(now_ + cfg_.prop_delay_ns, Ev::kCnpArrive, w);
    }

    void on_cnp_arrive(int w) {
        auto& wk = workers_[w];
        dcqcn_on_cnp(wk.dcqcn, cfg_.dcqcn);
        wk.dcqcn.rc_bps =
            std::max(wk.dcqcn.rc_bps, static_cast<double>(cfg_.min_rate_bps));
        wk.any_cnp = true;
        ++wk.timer_gen;  // CNP restarts the rate-increase period
        push(now_ + cfg_.dcqcn.rate_timer_ns, Ev::kRateTimer, w, wk.timer_gen);
    }

    void on_alpha_tick(int w) {
        dcqcn_alpha_tick(workers_[w].dcqcn, cfg_.dcqcn);
        push(now_ + cfg_.dcqcn.alpha_timer_ns, Ev::kAlphaTick, w);
    }

    void on_rate_timer(int w, std::int64_t gen) {
        auto& wk = workers_[w];
        if (gen != wk.timer_gen) return;  // superseded by a CNP
        dcqcn_increase_tick(wk.dcqcn, cfg_.dcqcn, static_cast<double>(cfg_.line_rate_bps),
                            IncreaseTrigger::kTimer);
        push(now_ + cfg_.dcqcn.rate_timer_ns, Ev::kRateTimer, w, gen);
    }

    void on_pause(int w, bool pause) {
        auto& wk = workers_[w];
        wk.paused = pause;
        if (!pause) wake_sender(w);
    }

    void on_global_clamp() {
        for (auto& wk : workers_) {
            wk.dcqcn.rc_bps = static_cast<double>(cfg_.min_rate_bps);
            wk.dcqcn.rt_bps = static_cast<double>(cfg_.min_rate_bps);
        }
    }

    void on_sample() {
        std::int64_t queued = 0;
        for (const auto& p : fifo_) queued += p.bytes;
        if (queued != occupancy_)
            throw InvariantError("sim: occupancy disagrees with queue contents");

        res_.agg_arrival_bps.push_back(static_cast<double>(window_bytes_) * kNsPerSec /
                                       static_cast<double>(cfg_.sample_interval_ns));
        window_bytes_ = 0;
        res_.backlog_bytes.push_back(occupancy_);
        std::vector<double> rc(workers_.size()), al(workers_.size());
        for (std::size_t i = 0; i < workers_.size(); ++i) {
            rc[i] = workers_[i].dcqcn.rc_bps;
            al[i] = workers_[i].dcqcn.alpha;
        }
        res_.worker_rc_bps.push_back(std::move(rc));
        res_.worker_alpha.push_back(std::move(al));
        if (now_ + cfg_.sample_interval_ns <= cfg_.sim_duration_ns)
            push(now_ + cfg_.sample_interval_ns, Ev::kSample, -1);
    }

    SimConfig cfg_;
    bool counterfactual_ = false;
    Rng rng_;
    PfcThresholds thresholds_;
    std::vector<Worker> workers_;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;
    std::uint64_t seq_ = 0;
    std::int64_t now_ = 0;
    std::deque<Pkt> fifo_;
    std::int64_t occupancy_ = 0;
    bool egress_busy_ = false;
    std::int64_t window_bytes_ = 0;
    SimResult res_;
};

}  // namespace

SimResult run_fanin(const SimConfig& cfg) { return FaninSim(cfg, false).run(); }

SimResult run_counterfactual_fast_reaction(const SimConfig& cfg) {
    return FaninSim(cfg, true).run();
}

FaninAnalysis analyze_fanin(const SimResult& r, double drop_fraction) {
    FaninAnalysis a;
    if (r.agg_arrival_bps.empty()) return a;
    a.initial_agg_bps = r.agg_arrival_bps.front();
    double running_max = a.initial_agg_bps;
    for (std::size_t k = 1; k < r.agg_arrival_bps.size(); ++k) {
        if (r.agg_arrival_bps[k] < drop_fraction * running_max) {
            a.first_reduction_ns = r.time_of_sample_ns(k);
            a.backlog_at_reduction_bytes = r.backlog_bytes[k];
            break;
        }
        running_max = std::max(running_max, r.agg_arrival_bps[k]);
    }
    return a;
}

}  // namespace burst
