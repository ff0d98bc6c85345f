// burstlab: traffic burstiness metrics, Allreduce workload synthesis, and
// PFC/DCQCN fan-in simulation. Time is seconds and rates are bits/s on every
// external interface; bytes and nanoseconds internally.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "burst/errors.hpp"
#include "burst/metrics.hpp"
#include "burst/minplus.hpp"
#include "burst/rng.hpp"
#include "burst/simswitch.hpp"
#include "burst/trace.hpp"
#include "burst/workload.hpp"

#ifndef BURSTLAB_DEFAULT_MANIFEST
#define BURSTLAB_DEFAULT_MANIFEST "data/resnet50_layers.csv"
#endif

namespace {

constexpr const char* kVersion = "0.1.0";

std::string fnv1a_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw burst::DataError("cannot open for digest: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    char hex[32];
    std::snprintf(hex, sizeof hex, "%016" PRIx64, h);
    return hex;
}

// Reproducibility record: inputs and outputs by digest, plus the exact
// invocation. Rerunning the same command line must reproduce the digests.
class RunManifest {
  public:
    RunManifest(std::string command, int argc, char** argv) : command_(std::move(command)) {
        for (int i = 0; i < argc; ++i) args_.push_back(argv[i]);
    }
    void add_input(const std::string& path) { inputs_[path] = fnv1a_hex(path); }
    void add_output(const std::string& path) { outputs_.push_back(path); }
    void set_seed(std::uint64_t seed) { seed_ = seed; }

    void write(const std::filesystem::path& dir) const {
        nlohmann::ordered_json j;
        j["tool_version"] = kVersion;
        j["command"] = command_;
        j["arguments"] = args_;
        j["seed"] = seed_;
        j["inputs"] = inputs_;
        nlohmann::ordered_json outs = nlohmann::ordered_json::object();
        for (const auto& o : outputs_) outs[o] = fnv1a_hex(o);
        j["outputs"] = outs;
        std::ofstream out(dir / "run_manifest.json");
        if (!out) throw burst::DataError("cannot write run manifest");
        out << j.dump(2) << '\n';
    }

  private:
    std::string command_;
    std::vector<std::string> args_;
    std::uint64_t seed_ = 0;
    std::map<std::string, std::string> inputs_;
    std::vector<std::string> outputs_;
};

burst::ArrivalFunction load_trace(const std::string& path, double bin_s) {
    burst::IngestOptions opt;
    opt.bin_width_ns = static_cast<std::int64_t>(bin_s * burst::kNsPerSec + 0.5);
    auto res = burst::ingest(burst::read_trace_csv(path), opt);
    if (res.reordered)
        std::cerr << "warning: " << path << " was not time-sorted; applied a stable sort\n";
    return std::move(res.arrivals);
}

std::vector<double> parse_utilizations(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const double u = std::stod(tok);
        if (!(u > 0.0) || u > 1.0)
            throw burst::DataError("utilization must lie in (0, 1]: " + tok);
        out.push_back(u);
    }
    if (out.empty()) throw burst::DataError("no utilizations given");
    return out;
}

std::string out_path(const std::filesystem::path& dir, const std::string& name) {
    return (dir / name).string();
}

int cmd_analyze(const std::string& trace_path, double bin_s, const std::string& lag_mode,
                const std::string& utils_csv, const std::string& interval_utils_csv,
                const std::filesystem::path& out_dir, RunManifest& manifest) {
    const auto a = load_trace(trace_path, bin_s);
    manifest.add_input(trace_path);
    const auto lags = lag_mode == "full" ? burst::LagSet::full(a.grid())
                                         : burst::LagSet::dense_then_log(a.grid());
    const auto env = burst::burstiness_curve(a, lags);

    const auto binned_csv = out_path(out_dir, "binned.csv");
    burst::write_binned_csv(binned_csv, a);
    manifest.add_output(binned_csv);

    const auto envelope_csv = out_path(out_dir, "envelope.csv");
    burst::write_envelope_csv(envelope_csv, env);
    manifest.add_output(envelope_csv);

    const auto ptm_csv = out_path(out_dir, "ptm.csv");
    burst::write_ptm_csv(ptm_csv, burst::peak_to_mean(env));
    manifest.add_output(ptm_csv);

    const auto sweep = burst::bmax_sweep(a, parse_utilizations(utils_csv));
    const auto bmax_csv = out_path(out_dir, "bmax.csv");
    burst::write_bmax_csv(bmax_csv, sweep);
    manifest.add_output(bmax_csv);

    for (double u : parse_utilizations(interval_utils_csv)) {
        const auto r = burst::rate_for_utilization(a, u);
        char name[64];
        std::snprintf(name, sizeof name, "interval_bmax_u%gpct.csv", u * 100.0);
        const auto p = out_path(out_dir, name);
        burst::write_interval_bmax_csv(p, env, burst::interval_bmax(env, r));
        manifest.add_output(p);
    }
    std::cout << "analyzed " << trace_path << ": " << a.bins() << " bins, total "
              << a.total_bytes << " B, mean rate " << a.mean_rate_bps() * 8.0 << " bit/s\n";
    return 0;
}

int cmd_splice(const std::string& trace_path, const std::string& remove_csv,
               const std::string& source_csv, double bin_s,
               const std::filesystem::path& out_dir, RunManifest& manifest) {
    auto parse_interval = [](const std::string& s) {
        const auto comma = s.find(',');
        if (comma == std::string::npos)
            throw burst::DataError("interval must be 'begin_s,end_s': " + s);
        burst::Interval iv;
        iv.begin_ns =
            static_cast<std::int64_t>(std::stod(s.substr(0, comma)) * burst::kNsPerSec + 0.5);
        iv.end_ns =
            static_cast<std::int64_t>(std::stod(s.substr(comma + 1)) * burst::kNsPerSec + 0.5);
        return iv;
    };
    const auto a = load_trace(trace_path, bin_s);
    manifest.add_input(trace_path);
    const auto spliced = burst::splice(a, parse_interval(remove_csv), parse_interval(source_csv));
    const auto out = out_path(out_dir, "spliced.csv");
    burst::write_trace_csv(out, burst::to_packet_records(spliced));
    manifest.add_output(out);
    std::cout << "spliced trace written to " << out << " (total " << spliced.total_bytes
              << " B)\n";
    return 0;
}

burst::WorkloadSpec read_workload_spec(const std::string& path,
                                       const std::string& manifest_fallback,
                                       std::string& manifest_path_out) {
    std::ifstream in(path);
    if (!in) throw burst::DataError("cannot open workload spec: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw burst::DataError("workload spec " + path + ": " + e.what());
    }
    burst::WorkloadSpec spec;
    auto get = [&](const char* key, auto def) {
        using T = decltype(def);
        if (!j.contains(key)) return def;
        try {
            return j.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw burst::DataError(std::string("workload spec: bad value for '") + key + "'");
        }
    };
    const std::string mode = get("mode", std::string("linear"));
    if (mode == "linear")
        spec.mode = burst::AllreduceMode::kLinear;
    else if (mode == "ring")
        spec.mode = burst::AllreduceMode::kRing;
    else
        throw burst::DataError("workload spec: mode must be 'linear' or 'ring'");
    manifest_path_out = get("manifest_csv", manifest_fallback);
    spec.manifest = burst::load_manifest(manifest_path_out);
    spec.n_workers = get("n_workers", spec.n_workers);
    spec.rounds = get("rounds", spec.rounds);
    spec.forward_gap_ns = static_cast<std::int64_t>(get("forward_gap_s", 2.3) * 1e9);
    spec.gap_low_ns = static_cast<std::int64_t>(get("gap_low_s", 0.002) * 1e9);
    spec.gap_high_ns = static_cast<std::int64_t>(get("gap_high_s", 0.004) * 1e9);
    spec.rate_low_bps = static_cast<std::int64_t>(get("rate_low_gbps", 25.0) * 1e9 / 8.0);
    spec.rate_high_bps = static_cast<std::int64_t>(get("rate_high_gbps", 35.0) * 1e9 / 8.0);
    spec.line_rate_bps = static_cast<std::int64_t>(get("line_rate_gbps", 100.0) * 1e9 / 8.0);
    spec.seed = get("seed", spec.seed);
    spec.bin_width_ns = get("bin_width_us", std::int64_t{10}) * 1000;
    spec.return_traffic = get("return_traffic", false);
    return spec;
}

int cmd_generate(const std::string& spec_path, std::int64_t seed_override,
                 const std::string& manifest_fallback, const std::filesystem::path& out_dir,
                 RunManifest& manifest) {
    std::string layer_manifest_path;
    auto spec = read_workload_spec(spec_path, manifest_fallback, layer_manifest_path);
    manifest.add_input(spec_path);
    manifest.add_input(layer_manifest_path);
    if (seed_override >= 0) spec.seed = static_cast<std::uint64_t>(seed_override);
    manifest.set_seed(spec.seed);
    const auto wl = burst::generate(spec);
    for (std::size_t w = 0; w < wl.worker_traces.size(); ++w) {
        const auto p = out_path(out_dir, "worker_" + std::to_string(w) + ".csv");
        burst::write_trace_csv(p, burst::to_packet_records(wl.worker_traces[w]));
        manifest.add_output(p);
    }
    for (std::size_t w = 0; w < wl.return_traces.size(); ++w) {
        const auto p = out_path(out_dir, "return_" + std::to_string(w) + ".csv");
        burst::write_trace_csv(p, burst::to_packet_records(wl.return_traces[w]));
        manifest.add_output(p);
    }
    const auto ev = out_path(out_dir, "events.csv");
    burst::write_event_log_csv(ev, wl.events);
    manifest.add_output(ev);
    std::cout << "generated " << wl.worker_traces.size() << " worker traces, "
              << wl.events.size() << " bursts\n";
    return 0;
}

int cmd_potential(const std::vector<std::string>& traces, double bin_s,
                  const std::filesystem::path& out_dir, RunManifest& manifest) {
    if (traces.size() < 2) throw burst::DataError("potential: at least 2 traces required");
    std::vector<burst::ArrivalFunction> flows;
    std::int64_t max_bins = 0;
    for (const auto& t : traces) {
        flows.push_back(load_trace(t, bin_s));
        manifest.add_input(t);
        max_bins = std::max(max_bins, flows.back().bins());
    }
    // Pad to a common horizon so the flows share one grid.
    for (auto& f : flows) {
        if (f.bins() == max_bins) continue;
        auto bins = f.to_bins();
        bins.resize(max_bins, 0);
        f = burst::ArrivalFunction::from_bins(
            burst::TimeGrid(f.grid().bin_width_ns, max_bins), bins);
    }
    const auto lags = burst::LagSet::dense_then_log(flows.front().grid());
    const auto res = burst::burstiness_potential(flows, lags);
    const auto sum_csv = out_path(out_dir, "sum_envelope.csv");
    burst::write_envelope_csv(sum_csv, res.sum_env);
    manifest.add_output(sum_csv);
    const auto agg_csv = out_path(out_dir, "aggregate_envelope.csv");
    burst::write_envelope_csv(agg_csv, res.agg_env);
    manifest.add_output(agg_csv);
    const auto pot_csv = out_path(out_dir, "potential.csv");
    burst::write_envelope_csv(pot_csv, res.potential);
    manifest.add_output(pot_csv);
    std::cout << "burstiness potential over " << flows.size() << " flows written\n";
    return 0;
}

int cmd_simulate(const std::string& config_path, bool counterfactual, int workers_override,
                 std::int64_t seed_override, const std::string& manifest_fallback,
                 const std::filesystem::path& out_dir, RunManifest& manifest) {
    std::string layer_manifest_path;
    auto cfg = burst::read_sim_config_json(config_path, manifest_fallback, &layer_manifest_path);
    manifest.add_input(config_path);
    if (!layer_manifest_path.empty()) manifest.add_input(layer_manifest_path);
    if (workers_override >= 0) cfg.n_workers = workers_override;
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    manifest.set_seed(cfg.seed);
    const auto res = counterfactual ? burst::run_counterfactual_fast_reaction(cfg)
                                    : burst::run_fanin(cfg);
    const auto series = out_path(out_dir, "series.csv");
    burst::write_series_csv(series, res);
    manifest.add_output(series);
    const auto rates = out_path(out_dir, "worker_rates.csv");
    burst::write_worker_rates_csv(rates, res);
    manifest.add_output(rates);
    const auto summary = out_path(out_dir, "summary.json");
    burst::write_event_summary_json(summary, res);
    manifest.add_output(summary);

    const auto an = burst::analyze_fanin(res);
    std::cout << "simulated " << cfg.n_workers << " workers for "
              << cfg.sim_duration_ns / 1e6 << " ms: initial aggregate "
              << an.initial_agg_bps * 8.0 / 1e9 << " Gbit/s, peak backlog "
              << res.peak_backlog_bytes / 1e6 << " MB";
    if (an.first_reduction_ns >= 0)
        std::cout << ", first rate reduction at " << an.first_reduction_ns / 1000.0
                  << " us with backlog " << an.backlog_at_reduction_bytes / 1e6 << " MB";
    std::cout << '\n';
    return 0;
}

int cmd_ring_verify(int n, int len, std::uint64_t seed, bool inject_fault,
                    const std::filesystem::path& out_dir, RunManifest& manifest) {
    if (n < 1) throw burst::DataError("ring-verify: n must be >= 1");
    if (len < 0) throw burst::DataError("ring-verify: len must be >= 0");
    burst::Rng rng(seed);
    std::vector<std::vector<std::int64_t>> vecs(n, std::vector<std::int64_t>(len));
    for (auto& v : vecs)
        for (auto& x : v) x = rng.uniform_int(-1'000'000, 1'000'000);

    std::vector<std::int64_t> expected(len, 0);
    for (const auto& v : vecs)
        for (int i = 0; i < len; ++i) expected[i] += v[i];

    burst::RingKernelOptions opt;
    if (inject_fault && n > 1) opt.fault_step = 0;
    const auto res = burst::ring_allreduce_kernel(vecs, opt);

    manifest.set_seed(seed);
    manifest.write(out_dir);
    for (int w = 0; w < n; ++w) {
        for (int i = 0; i < len; ++i) {
            if (res.vectors[w][i] != expected[i]) {
                std::cout << "FAIL: worker " << w << " element " << i << " holds "
                          << res.vectors[w][i] << ", expected " << expected[i] << '\n';
                return 3;
            }
        }
    }
    std::cout << "PASS: " << n << " workers, " << len << " elements, "
              << res.transfers.size() << " transfers\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"burstiness metrics, Allreduce traffic synthesis, and fan-in simulation"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string out_dir_s = ".";
    app.add_option("--out-dir", out_dir_s, "output directory (created if missing)")
        ->capture_default_str();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "compute burstiness metrics of a trace");
    std::string trace_path, lag_mode = "default";
    double bin_s = 1e-6;
    std::string utils = "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,"
                        "0.8,0.85,0.9,0.95,1.0";
    std::string interval_utils = "0.05,0.5,0.95";
    analyze->add_option("trace", trace_path, "trace CSV (timestamp_ns,bytes)")->required();
    analyze->add_option("--bin", bin_s, "bin width in seconds")->capture_default_str();
    analyze->add_option("--lags", lag_mode, "lag set: default|full")->capture_default_str();
    analyze->add_option("--utilizations", utils, "comma list of U in (0,1] for the bmax sweep")
        ->capture_default_str();
    analyze
        ->add_option("--interval-utilizations", interval_utils,
                     "U values for interval-bmax curves")
        ->capture_default_str();

    // splice
    auto* splice_cmd = app.add_subcommand("splice", "replace a time interval with another");
    std::string splice_trace, remove_iv, source_iv;
    double splice_bin_s = 1e-6;
    splice_cmd->add_option("trace", splice_trace, "trace CSV")->required();
    splice_cmd->add_option("--remove", remove_iv, "interval 'begin_s,end_s' to overwrite")
        ->required();
    splice_cmd->add_option("--source", source_iv, "interval 'begin_s,end_s' to copy from")
        ->required();
    splice_cmd->add_option("--bin", splice_bin_s, "bin width in seconds")->capture_default_str();

    // generate
    auto* generate = app.add_subcommand("generate", "synthesize Allreduce training traffic");
    std::string spec_path;
    std::int64_t seed_override = -1;
    generate->add_option("spec", spec_path, "workload spec JSON")->required();
    generate->add_option("--seed", seed_override, "override the spec's RNG seed");

    // potential
    auto* potential = app.add_subcommand("potential", "actual vs worst-case burstiness");
    std::vector<std::string> potential_traces;
    double potential_bin_s = 1e-5;
    potential->add_option("traces", potential_traces, "two or more trace CSVs")->required();
    potential->add_option("--bin", potential_bin_s, "bin width in seconds")
        ->capture_default_str();

    // simulate
    auto* simulate = app.add_subcommand("simulate", "PFC/DCQCN fan-in switch simulation");
    std::string sim_config;
    bool counterfactual = false;
    int workers_override = -1;
    std::int64_t sim_seed_override = -1;
    simulate->add_option("config", sim_config, "simulation config JSON")->required();
    simulate->add_flag("--counterfactual", counterfactual,
                       "senders clamp shortly after the first mark");
    simulate->add_option("--workers", workers_override, "override worker count");
    simulate->add_option("--seed", sim_seed_override, "override the config's RNG seed");

    // ring-verify
    auto* ring = app.add_subcommand("ring-verify", "check the Ring Allreduce kernel");
    int ring_n = 4, ring_len = 1000;
    std::uint64_t ring_seed = 1;
    bool inject_fault = false;
    ring->add_option("--n", ring_n, "number of workers")->capture_default_str();
    ring->add_option("--len", ring_len, "vector length")->capture_default_str();
    ring->add_option("--seed", ring_seed, "RNG seed")->capture_default_str();
    ring->add_flag("--inject-fault", inject_fault, "corrupt one chunk (error-path check)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage errors exit 1; --help/--version exit 0
    }

    try {
        std::filesystem::path out_dir(out_dir_s);
        std::filesystem::create_directories(out_dir);
        const std::string manifest_fallback = BURSTLAB_DEFAULT_MANIFEST;

        if (app.got_subcommand(analyze)) {
            RunManifest m("analyze", argc, argv);
            const int rc = cmd_analyze(trace_path, bin_s, lag_mode, utils, interval_utils,
                                       out_dir, m);
            m.write(out_dir);
            return rc;
        }
        if (app.got_subcommand(splice_cmd)) {
            RunManifest m("splice", argc, argv);
            const int rc = cmd_splice(splice_trace, remove_iv, source_iv, splice_bin_s,
                                      out_dir, m);
            m.write(out_dir);
            return rc;
        }
        if (app.got_subcommand(generate)) {
            RunManifest m("generate", argc, argv);
            const int rc = cmd_generate(spec_path, seed_override, manifest_fallback, out_dir, m);
            m.write(out_dir);
            return rc;
        }
        if (app.got_subcommand(potential)) {
            RunManifest m("potential", argc, argv);
            const int rc = cmd_potential(potential_traces, potential_bin_s, out_dir, m);
            m.write(out_dir);
            return rc;
        }
        if (app.got_subcommand(simulate)) {
            RunManifest m("simulate", argc, argv);
            const int rc = cmd_simulate(sim_config, counterfactual, workers_override,
                                        sim_seed_override, manifest_fallback, out_dir, m);
            m.write(out_dir);
            return rc;
        }
        if (app.got_subcommand(ring)) {
            RunManifest m("ring-verify", argc, argv);
            return cmd_ring_verify(ring_n, ring_len, ring_seed, inject_fault, out_dir, m);
        }
    } catch (const burst::DataError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const burst::InvariantError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
