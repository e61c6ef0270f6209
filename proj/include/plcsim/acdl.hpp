// Adaptive Canonical Differential Limiter: front-end lowpass and gain
// staging, Clipped Mean Tracking Filter driven by a Tukey range from two
// Quartile Tracking Filters, anti-aliasing filter and ADC sampling.
// Everything runs at the oversampled "analog" rate.
#pragma once

#include "plcsim/filters.hpp"
#include "plcsim/ofdm.hpp"
#include "plcsim/signal.hpp"

#include <limits>
#include <map>
#include <span>
#include <vector>
#include <optional>

namespace plcsim {

struct ClipRange {
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
};

// min(max(x, lo), hi); throws when lo > hi.
double clip(double x, double lo, double hi);
inline double clip(double x, ClipRange r) { return clip(x, r.lo, r.hi); }

// One forward-Euler step of d(chi)/dt = clip(x - chi) / tau. Requires dt <= tau / 20.
double cmtf_step(double chi, double x, ClipRange range, double tau, double dt);

struct CmtfState {
    double re = 0;
    double im = 0;
    cplx value() const { return {re, im}; }
};

// Per-quadrature update, each path with its own range.
CmtfState cmtf_step(CmtfState s, cplx x, ClipRange re_range, ClipRange im_range, double tau, double dt);

struct QtfState {
    double q1 = 0;
    double q3 = 0;
};

// dQ3/dt = (A/T0)[sgn(y - Q3) + 1/2],  dQ1/dt = (A/T0)[sgn(y - Q1) - 1/2],  sgn(0) = 0.
QtfState qtf_step(QtfState s, double y, double A, double T0, double dt);

// [q1 - beta (q3 - q1), q3 + beta (q3 - q1)]
ClipRange tukey_range(double q1, double q3, double beta);

struct AcdlConfig {
    double signal_bandwidth_hz = 125e3;  // B_x
    double tau_s = 0;                    // CMTF time constant, 1/(2 pi tau) is the anti-aliasing corner
    double t0_s = 0;                     // QTF time constant
    double beta = 3;
    double v_c = 1;                      // supply rail
    double xi = 16;                      // front-end bandwidth / B_x; infinity bypasses it
    double gain_K = 4;
    double gain_G = 1;
    double gain_g = 1;
    double qtf_step_A = 0;               // set by agc_tune
    double qtf_step_scale = 1;           // A in units of the target IQR; 1 makes the QTF ramp time equal T0
    double qtf_step_fraction = std::numeric_limits<double>::quiet_NaN();  // if set: A/T0 = fraction * IQR * crossing rate
    double qtf_init_q1 = std::numeric_limits<double>::quiet_NaN();  // NaN: -target IQR / 2
    double qtf_init_q3 = std::numeric_limits<double>::quiet_NaN();  // NaN: +target IQR / 2
    double agc_target_mean_abs = 0.1;    // mean |output| / V_c
    double agc_target_iqr = 0.4;         // g (Q3 - Q1) / V_c
    double startup_s = 0;                // unclipped convergence window, set by agc_tune
    double startup_ramps = 3;            // startup window in QTF ramp times
    double range_floor = 1e-6;           // minimum (alpha+ - alpha-) in units of V_c
    bool rail_cap = false;               // bounds limited to +-V_c/g
    std::size_t euler_substeps = 1;      // CMTF/QTF integration steps per analog sample
    bool force_unbounded = false;        // clipping bounds at +-infinity (linear regime)

    // tau = 1/(4 pi B_x), T0 = 300 / B_x.
    static AcdlConfig for_bandwidth(double b_x);

    void validate() const;
    double front_end_corner_hz() const { return xi * signal_bandwidth_hz; }
    double anti_alias_corner_hz() const;
};

enum class ChainMode {
    acdl,     // full nonlinear chain
    lowpass,  // CMTF replaced by its linear-regime first-order lowpass
    bypass    // no CMTF stage at all
};

struct QuadratureStats {
    double q1 = 0;
    double q3 = 0;
    double below_q1 = 0;   // fraction of steps with y < Q1
    double below_q3 = 0;
    double clipped = 0;    // fraction of steps where the drive term was clipped
};

struct ChainResult {
    SignalBuffer output;                // ADC rate: probe IV (acdl/lowpass) or c (bypass)
    std::map<Probe, SignalBuffer> probes;
    QuadratureStats re;                 // time averages after the startup window
    QuadratureStats im;
    // With probes: the largest max(|alpha-|, alpha+) / tau applied during
    // each analog sample, per quadrature (infinity while unbounded).
    std::vector<double> rate_bound_re;
    std::vector<double> rate_bound_im;
};

// Streaming form of the front end; state persists across calls.
class AnalogChain {
public:
    AnalogChain(const AcdlConfig& cfg, const OfdmConfig& ofdm, ChainMode mode, bool record_probes = false);

    // Consumes analog-rate samples; appends every oversample_factor-th output
    // (phase 0 aligned with the first sample ever fed) to adc_out.
    void process(std::span<const cplx> in, std::vector<cplx>& adc_out);

    ChainResult finish();
    const QtfState& qtf_re() const { return qtf_re_; }
    const QtfState& qtf_im() const { return qtf_im_; }

private:
    // Returns max(|alpha-|, alpha+) / tau for the step (infinity when unbounded).
    double step_quadrature(double x, double& chi, QtfState& q, QuadratureStats& acc, bool bounded);

    AcdlConfig cfg_;
    ChainMode mode_;
    bool record_;
    double rate_;
    double dt_;
    std::size_t decim_;
    std::size_t n_ = 0;
    std::size_t startup_samples_;
    std::size_t counted_ = 0;
    OnePoleLowpass front_end_;
    Biquad anti_alias_;
    CmtfState chi_;
    bool chi_init_ = false;
    QtfState qtf_re_, qtf_im_;
    QuadratureStats acc_re_, acc_im_;
    std::map<Probe, std::vector<cplx>> probes_;
    std::vector<double> bound_re_, bound_im_;
};

// Full chain of the adaptive limiter on an analog-rate buffer.
ChainResult acdl_process(const SignalBuffer& buf, const AcdlConfig& cfg, const OfdmConfig& ofdm,
                         bool record_probes = false);

// The same chain operating linearly; ChainMode::lowpass keeps the CMTF's
// first-order lowpass, ChainMode::bypass removes the stage.
ChainResult linear_chain_process(const SignalBuffer& buf, const AcdlConfig& cfg, const OfdmConfig& ofdm,
                                 ChainMode mode = ChainMode::lowpass, bool record_probes = false);

// First-order lowpass at xi * B_x, unit DC gain.
SignalBuffer front_end_lowpass(const SignalBuffer& buf, const AcdlConfig& cfg);

struct AgcResult {
    double gain_G = 1;
    double gain_g = 1;
    double qtf_step_A = 0;
    double crossing_rate_hz = 0;  // up-crossings of Q3 by the scaled difference signal
    double step_ratio = 0;        // (A / T0) / (IQR * crossing rate); must be << 1
    double q1 = 0;                // quartiles of the scaled difference signal
    double q3 = 0;
    double startup_s = 0;         // startup_ramps QTF ramp times
};

// Chooses G so mean |output| = target * V_c and g so that g * IQR of the
// linear-regime difference signal = target * V_c; A = scale * target IQR.
AgcResult agc_tune(const SignalBuffer& calibration, const AcdlConfig& cfg, const OfdmConfig& ofdm);

// Returns cfg with the tuned gains, QTF step and startup window applied.
AcdlConfig apply_agc(AcdlConfig cfg, const AgcResult& agc);

}  // namespace plcsim
