// Thermal, cyclostationary and asynchronous impulsive noise synthesis
// with power calibration against Eb/N0 and SIR targets.
#pragma once

#include "plcsim/filters.hpp"
#include "plcsim/ofdm.hpp"
#include "plcsim/signal.hpp"

#include <boost/random/normal_distribution.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace plcsim {

struct NoiseConfig {
    double eb_n0_db = 10;
    double sir_db = 0;               // desired power over total impulsive power, full band
    double inv_lambda_s = 2e-5;      // mean Poisson inter-arrival time
    double tau_cs_s = 200e-6;
    double tau_as_s = 2e-6;
    double f_ac_hz = 60;
    double cs_as_ratio = 3;          // cyclostationary : asynchronous power
    double as_amplitude_mean = 0;    // A_k ~ N(mean, std); scale is absorbed by calibration
    double as_amplitude_std = 1;
    double psd_slope_db_per_mhz = -30;
    bool shape_thermal = true;
    bool shape_cyclostationary = true;
    bool shape_asynchronous = false;
    std::uint64_t seed = 1;

    void validate() const;
    double lambda() const { return 1 / inv_lambda_s; }
    double burst_period() const { return 1 / (2 * f_ac_hz); }
};

// Circularly-symmetric complex Gaussian samples.
class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

    double real() { return normal_(engine_); }
    // E|z|^2 == power
    cplx complex(double power = 1.0) {
        const double s = std::sqrt(power / 2);
        const double re = normal_(engine_);
        return {s * re, s * normal_(engine_)};
    }
    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    boost::random::normal_distribution<double> normal_;
};

SignalBuffer gen_awgn(std::size_t n, double sample_rate, double power, std::uint64_t seed);

struct ImpulseTrace {
    SignalBuffer noise;
    std::vector<double> onsets;  // seconds relative to the buffer start (may be negative)
};

// Bursts at absolute times k / (2 f_AC), k >= 1; the buffer covers
// [time_offset, time_offset + n / rate).
ImpulseTrace gen_cyclostationary(std::size_t n, double sample_rate, const NoiseConfig& cfg, double amplitude,
                                 std::uint64_t seed, double time_offset = 0);

// Poisson arrivals with Gaussian amplitudes A_k, each decaying with tau_as.
ImpulseTrace gen_asynchronous(std::size_t n, double sample_rate, const NoiseConfig& cfg, std::uint64_t seed);

// Second-order lowpass whose corner is solved so that a straight-line fit
// of its dB response over 0..1 MHz has the requested slope.
class PsdShaper {
public:
    explicit PsdShaper(double sample_rate, double slope_db_per_mhz = -30);

    SignalBuffer apply(const SignalBuffer& in) const;
    double power_gain(double f_hz) const;
    // Integral of |H|^2 over [-fs/2, fs/2], Hz.
    double noise_bandwidth() const;
    double corner_hz() const { return corner_; }
    double fitted_slope_db_per_mhz() const;
    double sample_rate() const { return rate_; }

private:
    double rate_;
    double corner_;
    Biquad proto_;
};

SignalBuffer shape_psd(const SignalBuffer& buf, double slope_db_per_mhz = -30);

struct PowerTargets {
    double n0 = 0;  // in-band thermal density, power / Hz
    double thermal = 0;
    double cyclostationary = 0;
    double asynchronous = 0;
    double impulsive() const { return cyclostationary + asynchronous; }
};

// signal_power is the measured power of the transmitted trace at the analog rate.
PowerTargets calibrate(double signal_power, const OfdmConfig& ofdm, const NoiseConfig& cfg, const PsdShaper& shaper);

struct NoiseRealization {
    SignalBuffer awgn;
    SignalBuffer cyclostationary;
    SignalBuffer asynchronous;
    std::vector<double> arrival_times;
    std::vector<double> burst_onsets;

    SignalBuffer total() const;
};

// Generates every component at the analog rate, applies PSD shaping where
// configured and rescales each component to exactly hit its target power.
NoiseRealization generate_noise(std::size_t n, const OfdmConfig& ofdm, const NoiseConfig& cfg,
                                const PowerTargets& targets, const PsdShaper& shaper, std::uint64_t seed,
                                double time_offset = 0);

// Scales a buffer so that its mean power equals target (zero stays zero).
void normalize_power(SignalBuffer& buf, double target);

}  // namespace plcsim
