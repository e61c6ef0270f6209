// Monte Carlo harness: operating-point evaluation with common random
// numbers across chains, sweeps, output-SNR metric and result emission.
#pragma once

#include "plcsim/acdl.hpp"
#include "plcsim/baselines.hpp"
#include "plcsim/noise.hpp"
#include "plcsim/ofdm.hpp"
#include "plcsim/stats.hpp"

#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace plcsim {

enum class Chain { linear, acdl, blanking, clipping };
enum class SweepAxis { eb_n0, sir, beta, threshold };

std::string_view to_string(Chain c);
std::string_view to_string(SweepAxis a);
Chain parse_chain(std::string_view s);
SweepAxis parse_axis(std::string_view s);

struct HarnessConfig {
    OfdmConfig ofdm;
    NoiseConfig noise;
    AcdlConfig acdl = AcdlConfig::for_bandwidth(125e3);
    std::size_t payload_symbols = 32;      // scored symbols per trial
    std::size_t guard_symbols = 1;         // trailing, unscored (filter tails)
    std::size_t calibration_symbols = 64;  // AGC and RMS reference segment
    double threshold_grid_lo = 0.5;        // baseline thresholds, multiples of the received RMS
    double threshold_grid_hi = 20;
    std::size_t threshold_grid_points = 40;
    std::size_t search_trials = 16;
    double threshold = std::numeric_limits<double>::quiet_NaN();  // fixed baseline threshold; NaN searches
    DerivativeScheme mf_derivative = DerivativeScheme::continuous;
    std::size_t threads = 1;

    void validate() const;
};

// Per-point Monte Carlo budget. A chain stops at bits_min bits, or earlier
// once stop_at_errors errors are seen (0 disables), or at max_trials (0: no cap).
struct Budget {
    std::uint64_t bits_min = 1'000'000;
    std::uint64_t stop_at_errors = 100;
    std::size_t max_trials = 0;
};

struct RunResult {
    Chain chain = Chain::linear;
    SweepAxis axis = SweepAxis::eb_n0;
    double axis_value = 0;
    double eb_n0_db = 0;
    double sir_db = 0;
    double beta = 0;
    double threshold = std::numeric_limits<double>::quiet_NaN();  // baselines only, x received RMS
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    double ber = 0;
    Interval ci;
    double output_snr_db = 0;
    std::uint64_t seed = 0;
    std::size_t trials = 0;
    bool search_floor = false;   // threshold search saw a zero-error grid point
    double wall_time_s = 0;      // not emitted (keeps output files reproducible)

    // BER below 1e-3 on fewer than 1e5 bits
    bool low_confidence() const { return ber < 1e-3 && bits < 100'000; }
};

// Receiver-side alignment for the configured front end: integer delay and
// per-carrier gains from a noiseless calibration through the linear chain.
DemodAlignment calibrate_receiver(const OfdmConfig& ofdm, const AcdlConfig& acdl, std::uint64_t seed);

// Output SNR, dB, in the signed band: P_ref / P_(processed - reference),
// capped at +100 dB. Throws when the cross-correlation peak within
// +-max_lag samples is not at lag 0.
double measure_output_snr(const SignalBuffer& processed, const SignalBuffer& reference, FrequencyBand band,
                          std::size_t max_lag = 2);

// Evaluates every listed chain on the same trials (common random numbers).
std::vector<RunResult> run_chains(const HarnessConfig& cfg, std::span<const Chain> chains, const Budget& budget,
                                  std::uint64_t seed);

RunResult run_point(const HarnessConfig& cfg, Chain chain, const Budget& budget, std::uint64_t seed);

struct SweepSpec {
    SweepAxis axis = SweepAxis::eb_n0;
    std::vector<double> values;
    std::vector<Chain> chains{Chain::acdl};
    Budget budget;
    std::uint64_t base_seed = 42;

    void validate() const;
};

std::uint64_t point_seed(std::uint64_t base_seed, std::size_t point_index);

// cfg with the axis value applied.
HarnessConfig at_axis_value(HarnessConfig cfg, SweepAxis axis, double value);

struct SweepOutcome {
    std::vector<RunResult> results;  // sorted by axis value, then chain
    std::vector<std::string> errors; // one entry per failed point
};

SweepOutcome run_sweep(const HarnessConfig& cfg, const SweepSpec& spec);

enum class ResultFormat { csv, json };

// CSV columns: axis_value, ber, ber_ci_lo, ber_ci_hi, snr_db, bits, seed, then
// chain, axis, errors, trials, eb_n0_db, sir_db, beta, threshold.
// JSON mirrors these fields and adds the config snapshot and its hash.
void emit_results(std::span<const RunResult> results, const std::filesystem::path& path, ResultFormat format,
                  std::string_view config_snapshot = {});
std::vector<RunResult> parse_results(const std::filesystem::path& path, ResultFormat format);

// Writes time traces, PSDs and amplitude densities at every probe of both
// chains for one trial of the operating point.
void dump_probes(const HarnessConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir);

}  // namespace plcsim
