#include <cinttypes>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "burst/errors.hpp"
#include "burst/simswitch.hpp"

namespace burst {

namespace {

std::string seconds_string(std::int64_t t_ns) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%" PRId64 ".%09" PRId64, t_ns / kNsPerSec,
                  t_ns % kNsPerSec);
    return buf;
}

std::string rate_string(double bytes_per_s) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.6e", bytes_per_s * 8.0);  // bits/s on disk
    return buf;
}

}  // namespace

void write_series_csv(const std::string& path, const SimResult& r) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << "time_s,agg_rate_bps,backlog_bytes\n";
    for (std::size_t k = 0; k < r.agg_arrival_bps.size(); ++k)
        out << seconds_string(r.time_of_sample_ns(k)) << ',' << rate_string(r.agg_arrival_bps[k])
            << ',' << r.backlog_bytes[k] << '\n';
}

void write_worker_rates_csv(const std::string& path, const SimResult& r) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    const std::size_t n = r.worker_rc_bps.empty() ? 0 : r.worker_rc_bps.front().size();
    out << "time_s";
    for (std::size_t w = 0; w < n; ++w) out << ",rc_bps_w" << w;
    for (std::size_t w = 0; w < n; ++w) out << ",alpha_w" << w;
    out << '\n';
    char buf[48];
    for (std::size_t k = 0; k < r.worker_rc_bps.size(); ++k) {
        out << seconds_string(r.time_of_sample_ns(k));
        for (std::size_t w = 0; w < n; ++w) out << ',' << rate_string(r.worker_rc_bps[k][w]);
        for (std::size_t w = 0; w < n; ++w) {
            std::snprintf(buf, sizeof buf, "%.9g", r.worker_alpha[k][w]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

void write_event_summary_json(const std::string& path, const SimResult& r) {
    nlohmann::ordered_json j;
    j["cnps_sent"] = r.cnps_sent;
    j["pause_frames"] = r.pause_frames;
    j["resume_frames"] = r.resume_frames;
    j["marks"] = r.marks;
    j["drops"] = r.drops;
    j["packets_emitted"] = r.packets_emitted;
    j["packets_enqueued"] = r.packets_enqueued;
    j["packets_dequeued"] = r.packets_dequeued;
    j["packets_delivered"] = r.packets_delivered;
    j["peak_backlog_bytes"] = r.peak_backlog_bytes;
    j["peak_ingress_occupancy_bytes"] = r.peak_ingress_occupancy_bytes;
    j["first_mark_ns"] = r.first_mark_ns;
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    out << j.dump(2) << '\n';
}

SimConfig read_sim_config_json(const std::string& path, const std::string& manifest_fallback,
                               std::string* manifest_path_out) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open sim config: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("sim config " + path + ": " + e.what());
    }

    SimConfig cfg;
    auto get = [&](const nlohmann::json& o, const char* key, auto def) {
        using T = decltype(def);
        if (!o.contains(key)) return def;
        try {
            return o.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw DataError(std::string("sim config: bad value for '") + key + "'");
        }
    };
    auto gbps_to_Bps = [](double gbps) {
        return static_cast<std::int64_t>(gbps * 1e9 / 8.0);
    };

    cfg.n_workers = get(j, "n_workers", cfg.n_workers);
    cfg.switch_ports = get(j, "switch_ports", cfg.switch_ports);
    cfg.line_rate_bps = gbps_to_Bps(get(j, "line_rate_gbps", 100.0));
    cfg.prop_delay_ns = get(j, "prop_delay_ns", cfg.prop_delay_ns);
    cfg.mtu_bytes = get(j, "mtu_bytes", cfg.mtu_bytes);
    if (j.contains("pfc")) {
        const auto& p = j.at("pfc");
        cfg.pfc.xoff_kb_per_gbps = get(p, "xoff_kb_per_gbps", cfg.pfc.xoff_kb_per_gbps);
        cfg.pfc.xon_kb_per_gbps = get(p, "xon_kb_per_gbps", cfg.pfc.xon_kb_per_gbps);
    }
    if (j.contains("dcqcn")) {
        const auto& d = j.at("dcqcn");
        auto& q = cfg.dcqcn;
        q.kmin_bytes = get(d, "kmin_bytes", q.kmin_bytes);
        q.kmax_bytes = get(d, "kmax_bytes", q.kmax_bytes);
        q.pmax = get(d, "pmax", q.pmax);
        q.g = get(d, "g", q.g);
        q.cnp_interval_ns = get(d, "cnp_interval_us", std::int64_t{50}) * 1000;
        q.alpha_timer_ns = get(d, "alpha_timer_us", std::int64_t{55}) * 1000;
        q.rate_timer_ns = get(d, "rate_timer_us", std::int64_t{55}) * 1000;
        q.byte_counter_bytes = get(d, "byte_counter_bytes", q.byte_counter_bytes);
        q.r_ai_bps = static_cast<std::int64_t>(get(d, "r_ai_mbps", 5.0) * 1e6 / 8.0);
        q.r_hi_bps = static_cast<std::int64_t>(get(d, "r_hi_mbps", 50.0) * 1e6 / 8.0);
        q.fast_recovery_stages = get(d, "fast_recovery_stages", q.fast_recovery_stages);
    }
    std::string manifest_path = manifest_fallback;
    if (j.contains("workload")) {
        const auto& w = j.at("workload");
        const std::string frag = get(w, "fragment", std::string("round"));
        if (frag == "round")
            cfg.fragment = SimConfig::Fragment::kRound;
        else if (frag == "last_burst")
            cfg.fragment = SimConfig::Fragment::kLastBurst;
        else
            throw DataError("sim config: fragment must be 'round' or 'last_burst'");
        manifest_path = get(w, "manifest_csv", manifest_path);
        cfg.rate_low_bps = gbps_to_Bps(get(w, "rate_low_gbps", 25.0));
        cfg.rate_high_bps = gbps_to_Bps(get(w, "rate_high_gbps", 35.0));
        cfg.gap_low_ns = get(w, "gap_low_us", std::int64_t{2000}) * 1000;
        cfg.gap_high_ns = get(w, "gap_high_us", std::int64_t{4000}) * 1000;
    }
    cfg.sim_duration_ns = get(j, "sim_duration_us", std::int64_t{10'000}) * 1000;
    cfg.sample_interval_ns = get(j, "sample_interval_us", std::int64_t{10}) * 1000;
    cfg.seed = get(j, "seed", cfg.seed);
    cfg.initial_alpha = get(j, "initial_alpha", cfg.initial_alpha);
    cfg.min_rate_bps = static_cast<std::int64_t>(get(j, "min_rate_mbps", 100.0) * 1e6 / 8.0);
    cfg.shared_buffer_bytes = get(j, "shared_buffer_bytes", cfg.shared_buffer_bytes);
    cfg.counterfactual_reaction_ns =
        get(j, "counterfactual_reaction_us", std::int64_t{10}) * 1000;

    if (cfg.n_workers > 0) {
        cfg.manifest = load_manifest(manifest_path);
        if (manifest_path_out) *manifest_path_out = manifest_path;
    }
    return cfg;
}

}  // namespace burst
