#include "plcsim/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace plcsim {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& v) {
    std::size_t used = 0;
    double d = 0;
    try {
        d = std::stod(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != v.size()) throw std::invalid_argument("not a number: '" + v + "'");
    return d;
}

std::uint64_t to_u64(const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size()) throw std::invalid_argument("not a non-negative integer: '" + v + "'");
    return out;
}

bool to_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("not a boolean: '" + v + "'");
}

std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string boolean(bool b) { return b ? "true" : "false"; }

template <class T>
std::string integer(T v) {
    return std::to_string(v);
}

struct Key {
    std::string name;
    std::function<void(SimulationConfig&, const std::string&)> set;
    std::function<std::string(const SimulationConfig&)> get;
};

#define PLC_DOUBLE(key, field) \
    Key { key, [](SimulationConfig& c, const std::string& v) { c.field = to_double(v); }, [](const SimulationConfig& c) { return num(c.field); } }
#define PLC_SIZE(key, field) \
    Key { key, [](SimulationConfig& c, const std::string& v) { c.field = static_cast<std::size_t>(to_u64(v)); }, [](const SimulationConfig& c) { return integer(c.field); } }
#define PLC_U64(key, field) \
    Key { key, [](SimulationConfig& c, const std::string& v) { c.field = to_u64(v); }, [](const SimulationConfig& c) { return integer(c.field); } }
#define PLC_BOOL(key, field) \
    Key { key, [](SimulationConfig& c, const std::string& v) { c.field = to_bool(v); }, [](const SimulationConfig& c) { return boolean(c.field); } }

std::string chains_text(const std::vector<Chain>& chains) {
    std::string s;
    for (Chain c : chains) s += (s.empty() ? "" : ",") + std::string(to_string(c));
    return s;
}

std::string values_text(const std::vector<double>& values) {
    std::string s;
    for (double v : values) s += (s.empty() ? "" : ",") + num(v);
    return s;
}

// OFDM keys come first: the limiter's defaults derive from the chip rate.
const std::vector<Key>& ofdm_keys() {
    static const std::vector<Key> keys = {
        PLC_SIZE("fft_size", harness.ofdm.fft_size),
        PLC_SIZE("data_carrier_lo", harness.ofdm.carrier_lo),
        PLC_SIZE("data_carrier_hi", harness.ofdm.carrier_hi),
        Key{"modulation",
            [](SimulationConfig& c, const std::string& v) {
                if (v == "bpsk") c.harness.ofdm.modulation = Modulation::bpsk;
                else if (v == "qpsk") c.harness.ofdm.modulation = Modulation::qpsk;
                else throw std::invalid_argument("unknown modulation '" + v + "'");
            },
            [](const SimulationConfig& c) { return std::string(c.harness.ofdm.modulation == Modulation::bpsk ? "bpsk" : "qpsk"); }},
        PLC_DOUBLE("fs_hz", harness.ofdm.fs_hz),
        PLC_DOUBLE("fs_adc_hz", harness.ofdm.fs_adc_hz),
        PLC_SIZE("oversample_factor", harness.ofdm.oversample_factor),
        PLC_DOUBLE("rolloff", harness.ofdm.rolloff),
        PLC_SIZE("mf_span_symbols", harness.ofdm.mf_span_symbols),
        PLC_SIZE("cyclic_prefix", harness.ofdm.cyclic_prefix),
        PLC_BOOL("use_modified_mf", harness.ofdm.use_modified_mf),
        Key{"mf_derivative",
            [](SimulationConfig& c, const std::string& v) {
                if (v == "continuous") c.harness.mf_derivative = DerivativeScheme::continuous;
                else if (v == "central_difference") c.harness.mf_derivative = DerivativeScheme::central_difference;
                else throw std::invalid_argument("unknown mf_derivative '" + v + "'");
            },
            [](const SimulationConfig& c) {
                return std::string(c.harness.mf_derivative == DerivativeScheme::continuous ? "continuous" : "central_difference");
            }},
        PLC_DOUBLE("signal_bandwidth_hz", harness.acdl.signal_bandwidth_hz),
    };
    return keys;
}

const std::vector<Key>& other_keys() {
    static const std::vector<Key> keys = {
        // noise
        PLC_DOUBLE("eb_n0_db", harness.noise.eb_n0_db),
        PLC_DOUBLE("sir_db", harness.noise.sir_db),
        PLC_DOUBLE("inv_lambda_s", harness.noise.inv_lambda_s),
        PLC_DOUBLE("tau_cs_s", harness.noise.tau_cs_s),
        PLC_DOUBLE("tau_as_s", harness.noise.tau_as_s),
        PLC_DOUBLE("f_ac_hz", harness.noise.f_ac_hz),
        PLC_DOUBLE("cs_as_ratio", harness.noise.cs_as_ratio),
        PLC_DOUBLE("as_amplitude_mean", harness.noise.as_amplitude_mean),
        PLC_DOUBLE("as_amplitude_std", harness.noise.as_amplitude_std),
        PLC_DOUBLE("psd_slope_db_per_mhz", harness.noise.psd_slope_db_per_mhz),
        PLC_BOOL("shape_thermal", harness.noise.shape_thermal),
        PLC_BOOL("shape_cyclostationary", harness.noise.shape_cyclostationary),
        PLC_BOOL("shape_asynchronous", harness.noise.shape_asynchronous),
        // limiter
        PLC_DOUBLE("tau_s", harness.acdl.tau_s),
        PLC_DOUBLE("t0_s", harness.acdl.t0_s),
        PLC_DOUBLE("beta", harness.acdl.beta),
        PLC_DOUBLE("v_c", harness.acdl.v_c),
        PLC_DOUBLE("xi", harness.acdl.xi),
        PLC_DOUBLE("gain_k", harness.acdl.gain_K),
        PLC_DOUBLE("qtf_step_scale", harness.acdl.qtf_step_scale),
        PLC_DOUBLE("qtf_step_fraction", harness.acdl.qtf_step_fraction),
        PLC_DOUBLE("agc_target_mean_abs", harness.acdl.agc_target_mean_abs),
        PLC_DOUBLE("agc_target_iqr", harness.acdl.agc_target_iqr),
        PLC_DOUBLE("startup_ramps", harness.acdl.startup_ramps),
        PLC_DOUBLE("range_floor", harness.acdl.range_floor),
        PLC_BOOL("rail_cap", harness.acdl.rail_cap),
        PLC_SIZE("euler_substeps", harness.acdl.euler_substeps),
        PLC_BOOL("force_unbounded", harness.acdl.force_unbounded),
        // baselines
        Key{"baseline",
            [](SimulationConfig& c, const std::string& v) {
                if (v == "none") return;
                if (v != "blanking" && v != "clipping") throw std::invalid_argument("unknown baseline '" + v + "'");
                c.sweep.chains = {parse_chain(v)};
            },
            [](const SimulationConfig&) { return std::string("none"); }},
        PLC_DOUBLE("threshold_grid_lo", harness.threshold_grid_lo),
        PLC_DOUBLE("threshold_grid_hi", harness.threshold_grid_hi),
        PLC_SIZE("threshold_grid_points", harness.threshold_grid_points),
        PLC_SIZE("search_trials", harness.search_trials),
        PLC_DOUBLE("threshold", harness.threshold),
        // harness
        PLC_SIZE("payload_symbols", harness.payload_symbols),
        PLC_SIZE("guard_symbols", harness.guard_symbols),
        PLC_SIZE("calibration_symbols", harness.calibration_symbols),
        PLC_SIZE("threads", harness.threads),
        Key{"axis", [](SimulationConfig& c, const std::string& v) { c.sweep.axis = parse_axis(v); },
            [](const SimulationConfig& c) { return std::string(to_string(c.sweep.axis)); }},
        Key{"values", [](SimulationConfig& c, const std::string& v) { c.sweep.values = parse_values(v); },
            [](const SimulationConfig& c) { return values_text(c.sweep.values); }},
        Key{"chain",
            [](SimulationConfig& c, const std::string& v) {
                c.sweep.chains.clear();
                std::istringstream s(v);
                for (std::string item; std::getline(s, item, ',');) c.sweep.chains.push_back(parse_chain(trim(item)));
            },
            [](const SimulationConfig& c) { return chains_text(c.sweep.chains); }},
        PLC_U64("bits_min", sweep.budget.bits_min),
        PLC_U64("stop_at_errors", sweep.budget.stop_at_errors),
        PLC_SIZE("trials", sweep.budget.max_trials),
        PLC_U64("seed", sweep.base_seed),
        Key{"probe_dump", [](SimulationConfig& c, const std::string& v) { c.probe_dump = v; },
            [](const SimulationConfig& c) { return c.probe_dump.string(); }},
        Key{"out", [](SimulationConfig& c, const std::string& v) { c.out = v; },
            [](const SimulationConfig& c) { return c.out.string(); }},
        Key{"format",
            [](SimulationConfig& c, const std::string& v) {
                if (v == "csv") c.format = ResultFormat::csv;
                else if (v == "json") c.format = ResultFormat::json;
                else throw std::invalid_argument("unknown format '" + v + "'");
            },
            [](const SimulationConfig& c) { return std::string(c.format == ResultFormat::csv ? "csv" : "json"); }},
    };
    return keys;
}

#undef PLC_DOUBLE
#undef PLC_SIZE
#undef PLC_U64
#undef PLC_BOOL

SimulationConfig defaults() {
    SimulationConfig c;
    c.sweep.values = {c.harness.noise.eb_n0_db};
    return c;
}

}  // namespace

ConfigMap ConfigMap::parse(std::istream& in, std::string_view source) {
    ConfigMap m;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(std::string(source) + ":" + std::to_string(n) + ": expected 'key = value'");
        const std::string key = trim(body.substr(0, eq));
        if (key.empty()) throw std::invalid_argument(std::string(source) + ":" + std::to_string(n) + ": empty key");
        m.set(key, trim(body.substr(eq + 1)));
    }
    return m;
}

ConfigMap ConfigMap::load(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::invalid_argument("cannot open config file " + path.string());
    return parse(f, path.string());
}

std::vector<double> parse_values(std::string_view text) {
    const std::string t = trim(text);
    if (t.empty()) throw std::invalid_argument("empty value list");
    std::vector<double> out;
    if (t.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::istringstream s(t);
        for (std::string p; std::getline(s, p, ':');) parts.push_back(to_double(trim(p)));
        if (parts.size() != 3 || !(parts[1] > 0) || parts[2] < parts[0])
            throw std::invalid_argument("range must be lo:step:hi with step > 0 and hi >= lo");
        const auto n = static_cast<std::size_t>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
        for (std::size_t i = 0; i <= n; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
        return out;
    }
    std::istringstream s(t);
    for (std::string p; std::getline(s, p, ',');) out.push_back(to_double(trim(p)));
    return out;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> n;
        for (const auto* group : {&ofdm_keys(), &other_keys()})
            for (const auto& k : *group) n.push_back(k.name);
        return n;
    }();
    return names;
}

SimulationConfig build_config(const ConfigMap& map) {
    for (const auto& [k, v] : map.entries())
        if (std::find(config_keys().begin(), config_keys().end(), k) == config_keys().end())
            throw std::invalid_argument("unknown config key '" + k + "'");

    SimulationConfig c = defaults();
    auto apply = [&](const std::vector<Key>& keys) {
        for (const auto& k : keys) {
            const auto it = map.entries().find(k.name);
            if (it == map.entries().end()) continue;
            try {
                k.set(c, it->second);
            } catch (const std::exception& e) {
                throw std::invalid_argument("config key '" + k.name + "': " + e.what());
            }
        }
    };
    apply(ofdm_keys());
    const double b_x = map.has("signal_bandwidth_hz") ? c.harness.acdl.signal_bandwidth_hz : c.harness.ofdm.signal_bandwidth();
    c.harness.acdl = AcdlConfig::for_bandwidth(b_x);
    apply(other_keys());
    if (!map.has("values") && map.has("axis"))
        throw std::invalid_argument("config key 'axis' needs 'values'");
    if (!map.has("values")) {
        const auto& h = c.harness;
        const double v = c.sweep.axis == SweepAxis::eb_n0 ? h.noise.eb_n0_db
                       : c.sweep.axis == SweepAxis::sir   ? h.noise.sir_db
                       : c.sweep.axis == SweepAxis::beta  ? h.acdl.beta
                                                          : h.threshold;
        c.sweep.values = {v};
    }
    c.harness.validate();
    c.sweep.validate();
    return c;
}

std::string config_snapshot(const SimulationConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> lines;
    for (const auto* group : {&ofdm_keys(), &other_keys()})
        for (const auto& k : *group)
            if (k.name != "baseline") lines.emplace_back(k.name, k.get(cfg));
    std::sort(lines.begin(), lines.end());
    std::string out;
    for (const auto& [k, v] : lines) out += k + " = " + v + "\n";
    return out;
}

}  // namespace plcsim
