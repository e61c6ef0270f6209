// Plain "key = value" configuration files ('#' starts a comment) mapped onto
// the harness, OFDM, noise, limiter and baseline settings.
#pragma once

#include "plcsim/harness.hpp"

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace plcsim {

class ConfigMap {
public:
    static ConfigMap parse(std::istream& in, std::string_view source = "<input>");
    static ConfigMap load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { entries_[key] = value; }
    bool has(const std::string& key) const { return entries_.count(key) > 0; }
    const std::map<std::string, std::string>& entries() const { return entries_; }

private:
    std::map<std::string, std::string> entries_;
};

struct SimulationConfig {
    HarnessConfig harness;
    SweepSpec sweep;
    std::filesystem::path out = "results.csv";
    ResultFormat format = ResultFormat::csv;
    std::filesystem::path probe_dump;  // empty: no probe dump
};

// Unknown keys and malformed values throw std::invalid_argument.
SimulationConfig build_config(const ConfigMap& map);

// Every key with its effective value, one "key = value" per line, sorted.
std::string config_snapshot(const SimulationConfig& cfg);

// "lo:step:hi" (inclusive) or a comma-separated list.
std::vector<double> parse_values(std::string_view text);

// All keys understood by build_config.
const std::vector<std::string>& config_keys();

}  // namespace plcsim
