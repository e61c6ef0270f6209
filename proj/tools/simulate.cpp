// Command-line sweep driver.
#include "plcsim/config.hpp"
#include "plcsim/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace plcsim;

int main(int argc, char** argv) {
    CLI::App app{"OFDM powerline link simulator with an adaptive analog impulse limiter"};
    std::string config_path, axis, values, chain, out, dump, format;
    std::optional<double> sir, beta, eb_n0;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--axis", axis, "sweep axis: eb_n0, sir, beta or threshold");
    app.add_option("--values", values, "axis values, lo:step:hi or a comma list");
    app.add_option("--chain", chain, "acdl, linear, blanking, clipping (comma list shares noise)");
    app.add_option("--eb-n0", eb_n0, "Eb/N0 in dB");
    app.add_option("--sir", sir, "signal to impulsive noise ratio in dB");
    app.add_option("--beta", beta, "Tukey range coefficient");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out, "result file");
    app.add_option("--format", format, "csv or json");
    app.add_option("--dump-probes", dump, "directory for probe traces, PSDs and densities");
    app.add_option("--set", overrides, "extra key=value overrides");
    CLI11_PARSE(app, argc, argv);

    try {
        ConfigMap map = config_path.empty() ? ConfigMap{} : ConfigMap::load(config_path);
        auto put = [&](const char* key, const std::string& v) {
            if (!v.empty()) map.set(key, v);
        };
        auto put_num = [&](const char* key, const auto& v) {
            if (v) map.set(key, std::to_string(*v));
        };
        put("axis", axis);
        put("values", values);
        put("chain", chain);
        put("out", out);
        put("format", format);
        put("probe_dump", dump);
        put_num("eb_n0_db", eb_n0);
        put_num("sir_db", sir);
        put_num("beta", beta);
        put_num("seed", seed);
        for (const auto& kv : overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
            map.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        const SimulationConfig cfg = build_config(map);
        const std::string snapshot = config_snapshot(cfg);

        if (!cfg.probe_dump.empty()) {
            dump_probes(at_axis_value(cfg.harness, cfg.sweep.axis, cfg.sweep.values.front()),
                        point_seed(cfg.sweep.base_seed, 0), cfg.probe_dump);
            std::cerr << "probes written to " << cfg.probe_dump.string() << '\n';
        }

        const auto outcome = run_sweep(cfg.harness, cfg.sweep);
        std::printf("%-9s %10s %12s %24s %9s %10s %8s\n", "chain", to_string(cfg.sweep.axis).data(), "ber",
                    "95% ci", "snr_db", "bits", "time_s");
        for (const auto& r : outcome.results)
            std::printf("%-9s %10.3f %12.4e [%10.3e,%10.3e] %9.3f %10llu %8.1f\n", to_string(r.chain).data(),
                        r.axis_value, r.ber, r.ci.lo, r.ci.hi, r.output_snr_db,
                        static_cast<unsigned long long>(r.bits), r.wall_time_s);
        if (!outcome.results.empty()) emit_results(outcome.results, cfg.out, cfg.format, snapshot);
        for (const auto& e : outcome.errors) std::cerr << "error: " << e << '\n';
        return outcome.errors.empty() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
