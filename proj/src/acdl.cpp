#include "plcsim/acdl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace plcsim {

using std::numbers::pi;

double clip(double x, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clip: lower bound above upper bound");
    return std::min(std::max(x, lo), hi);
}

double cmtf_step(double chi, double x, ClipRange range, double tau, double dt) {
    if (!(tau > 0) || !(dt > 0)) throw std::invalid_argument("cmtf_step: tau and dt must be positive");
    if (dt > tau / 20) throw std::invalid_argument("cmtf_step: dt must not exceed tau/20");
    return chi + dt / tau * clip(x - chi, range);
}

CmtfState cmtf_step(CmtfState s, cplx x, ClipRange re_range, ClipRange im_range, double tau, double dt) {
    return {cmtf_step(s.re, x.real(), re_range, tau, dt), cmtf_step(s.im, x.imag(), im_range, tau, dt)};
}

namespace {
inline double sgn(double v) { return static_cast<double>((v > 0) - (v < 0)); }
}  // namespace

QtfState qtf_step(QtfState s, double y, double A, double T0, double dt) {
    if (!(T0 > 0) || !(dt > 0) || !(A >= 0)) throw std::invalid_argument("qtf_step: bad parameters");
    const double k = A * dt / T0;
    s.q3 += k * (sgn(y - s.q3) + 0.5);
    s.q1 += k * (sgn(y - s.q1) - 0.5);
    return s;
}

ClipRange tukey_range(double q1, double q3, double beta) {
    if (q3 < q1) throw std::invalid_argument("tukey_range: q3 below q1");
    if (!(beta >= 0)) throw std::invalid_argument("tukey_range: beta must be non-negative");
    const double iqr = q3 - q1;
    return {q1 - beta * iqr, q3 + beta * iqr};
}

AcdlConfig AcdlConfig::for_bandwidth(double b_x) {
    AcdlConfig c;
    c.signal_bandwidth_hz = b_x;
    c.tau_s = 1 / (4 * pi * b_x);
    c.t0_s = 300 / b_x;
    return c;
}

double AcdlConfig::anti_alias_corner_hz() const { return 1 / (2 * pi * tau_s); }

void AcdlConfig::validate() const {
    if (!(tau_s > 0) || !(t0_s > 0) || !(v_c > 0) || !(xi > 0) || !(signal_bandwidth_hz > 0))
        throw std::invalid_argument("AcdlConfig: tau, T0, V_c, xi and B_x must be positive");
    if (!(beta >= 0)) throw std::invalid_argument("AcdlConfig: beta must be non-negative");
    if (!(gain_K > 0) || !(gain_G > 0) || !(gain_g > 0)) throw std::invalid_argument("AcdlConfig: gains must be positive");
    if (!(qtf_step_A >= 0) || !(qtf_step_scale > 0) || !(startup_ramps >= 0) ||
        !(std::isnan(qtf_step_fraction) || qtf_step_fraction > 0))
        throw std::invalid_argument("AcdlConfig: bad QTF step");
    if (euler_substeps == 0) throw std::invalid_argument("AcdlConfig: euler_substeps must be >= 1");
    const double ratio = anti_alias_corner_hz() / (2 * signal_bandwidth_hz);
    if (ratio < 0.5 || ratio > 2) throw std::invalid_argument("AcdlConfig: 1/(2 pi tau) must be near 2 B_x");
}

AnalogChain::AnalogChain(const AcdlConfig& cfg, const OfdmConfig& ofdm, ChainMode mode, bool record_probes)
    : cfg_(cfg), mode_(mode), record_(record_probes) {
    cfg_.validate();
    ofdm.validate();
    rate_ = ofdm.analog_rate();
    dt_ = 1 / (rate_ * static_cast<double>(cfg_.euler_substeps));
    decim_ = ofdm.oversample_factor;
    if (mode_ != ChainMode::bypass && dt_ > cfg_.tau_s / 20)
        throw std::invalid_argument("AnalogChain: Euler step exceeds tau/20; raise the rate or substeps");
    if (mode_ == ChainMode::acdl && !cfg_.force_unbounded && !(cfg_.qtf_step_A > 0))
        throw std::invalid_argument("AnalogChain: QTF step A not set (run agc_tune)");
    startup_samples_ = static_cast<std::size_t>(std::ceil(cfg_.startup_s * rate_));
    front_end_ = OnePoleLowpass(cfg_.front_end_corner_hz(), rate_);
    anti_alias_ = Biquad::butterworth_lowpass(cfg_.anti_alias_corner_hz(), rate_);
    const double half = cfg_.agc_target_iqr * cfg_.v_c / 2;
    const double q1 = std::isnan(cfg_.qtf_init_q1) ? -half : cfg_.qtf_init_q1;
    const double q3 = std::isnan(cfg_.qtf_init_q3) ? half : cfg_.qtf_init_q3;
    qtf_re_ = qtf_im_ = QtfState{q1, q3};
}

double AnalogChain::step_quadrature(double x, double& chi, QtfState& q, QuadratureStats& acc, bool bounded) {
    const double d = x - chi;
    const double g = cfg_.gain_g;
    const double y = g * d;
    double drive = d;
    double rate_bound = std::numeric_limits<double>::infinity();
    if (bounded) {
        double lo_q = q.q1, hi_q = q.q3;
        if (hi_q < lo_q) std::swap(lo_q, hi_q);
        const double iqr = hi_q - lo_q;
        double lo = (lo_q - cfg_.beta * iqr) / g;
        double hi = (hi_q + cfg_.beta * iqr) / g;
        if (cfg_.rail_cap) {
            const double rail = cfg_.v_c / g;
            lo = std::clamp(lo, -rail, rail);
            hi = std::clamp(hi, -rail, rail);
        }
        const double floor = cfg_.range_floor * cfg_.v_c / g;
        if (hi - lo < floor) {
            const double mid = (hi + lo) / 2;
            lo = mid - floor / 2;
            hi = mid + floor / 2;
        }
        if (d < lo) {
            drive = lo;
            acc.clipped += 1;
        } else if (d > hi) {
            drive = hi;
            acc.clipped += 1;
        }
        rate_bound = std::max(std::abs(lo), std::abs(hi)) / cfg_.tau_s;
    }
    chi += dt_ / cfg_.tau_s * drive;
    if (mode_ == ChainMode::acdl) {
        const double k = cfg_.qtf_step_A * dt_ / cfg_.t0_s;
        if (n_ >= startup_samples_) {
            acc.below_q1 += y < q.q1;
            acc.below_q3 += y < q.q3;
            acc.q1 += q.q1;
            acc.q3 += q.q3;
        }
        q.q3 += k * (sgn(y - q.q3) + 0.5);
        q.q1 += k * (sgn(y - q.q1) - 0.5);
    }
    return rate_bound;
}

void AnalogChain::process(std::span<const cplx> in, std::vector<cplx>& adc_out) {
    const double front_gain = cfg_.gain_K * cfg_.gain_G;
    const bool probes = record_;
    for (const cplx r : in) {
        const cplx x = front_end_.step(r) * front_gain;
        cplx tracked = x;
        double y_re = 0, y_im = 0;
        if (mode_ != ChainMode::bypass) {
            if (!chi_init_) {
                chi_ = {x.real(), x.imag()};
                chi_init_ = true;
            }
            const bool bounded = mode_ == ChainMode::acdl && !cfg_.force_unbounded && n_ >= startup_samples_;
            if (probes) {
                y_re = cfg_.gain_g * (x.real() - chi_.re);
                y_im = cfg_.gain_g * (x.imag() - chi_.im);
            }
            double bound_re = 0, bound_im = 0;
            for (std::size_t s = 0; s < cfg_.euler_substeps; ++s) {
                bound_re = std::max(bound_re, step_quadrature(x.real(), chi_.re, qtf_re_, acc_re_, bounded));
                bound_im = std::max(bound_im, step_quadrature(x.imag(), chi_.im, qtf_im_, acc_im_, bounded));
            }
            if (probes) {
                bound_re_.push_back(bound_re);
                bound_im_.push_back(bound_im);
            }
            if (n_ >= startup_samples_) counted_ += cfg_.euler_substeps;
            tracked = chi_.value();
        }
        const cplx a = anti_alias_.step(tracked);
        if (n_ % decim_ == 0) adc_out.push_back(a);
        if (probes) {
            if (mode_ == ChainMode::bypass) {
                probes_[Probe::a].push_back(x);
                probes_[Probe::b].push_back(a);
            } else {
                probes_[Probe::I].push_back(x);
                probes_[Probe::II].push_back(tracked);
                probes_[Probe::III].push_back(a);
                probes_[Probe::V].push_back({y_re, y_im});
            }
        }
        ++n_;
    }
}

ChainResult AnalogChain::finish() {
    ChainResult r;
    for (auto& [p, v] : probes_) r.probes.emplace(p, SignalBuffer(std::move(v), rate_, p));
    probes_.clear();
    r.rate_bound_re = std::move(bound_re_);
    r.rate_bound_im = std::move(bound_im_);
    bound_re_.clear();
    bound_im_.clear();
    auto norm = [&](QuadratureStats s) {
        if (counted_ == 0) return QuadratureStats{};
        const double n = static_cast<double>(counted_);
        s.q1 /= n;
        s.q3 /= n;
        s.below_q1 /= n;
        s.below_q3 /= n;
        s.clipped /= n;
        return s;
    };
    r.re = norm(acc_re_);
    r.im = norm(acc_im_);
    return r;
}

namespace {

ChainResult run_chain(const SignalBuffer& buf, const AcdlConfig& cfg, const OfdmConfig& ofdm, ChainMode mode,
                      bool record) {
    if (buf.empty()) throw std::invalid_argument("chain: empty input");
    if (std::abs(buf.sample_rate - ofdm.analog_rate()) > 1e-9 * ofdm.analog_rate())
        throw std::invalid_argument("chain: input must be at the analog emulation rate");
    AnalogChain chain(cfg, ofdm, mode, record);
    std::vector<cplx> adc;
    adc.reserve(buf.size() / ofdm.oversample_factor + 1);
    chain.process(buf.samples, adc);
    ChainResult r = chain.finish();
    const Probe out_probe = mode == ChainMode::bypass ? Probe::c : Probe::IV;
    r.output = SignalBuffer(std::move(adc), ofdm.fs_adc_hz, out_probe);
    if (record) r.probes.emplace(out_probe, r.output);
    return r;
}

}  // namespace

ChainResult acdl_process(const SignalBuffer& buf, const AcdlConfig& cfg, const OfdmConfig& ofdm, bool record_probes) {
    return run_chain(buf, cfg, ofdm, ChainMode::acdl, record_probes);
}

ChainResult linear_chain_process(const SignalBuffer& buf, const AcdlConfig& cfg, const OfdmConfig& ofdm,
                                 ChainMode mode, bool record_probes) {
    if (mode == ChainMode::acdl) throw std::invalid_argument("linear_chain_process: mode must be lowpass or bypass");
    return run_chain(buf, cfg, ofdm, mode, record_probes);
}

SignalBuffer front_end_lowpass(const SignalBuffer& buf, const AcdlConfig& cfg) {
    OnePoleLowpass lp(cfg.front_end_corner_hz(), buf.sample_rate);
    SignalBuffer out = buf;
    lp.process(out.samples);
    return out;
}

namespace {

double quantile(std::vector<double> v, double p) {
    const auto k = static_cast<std::size_t>(std::floor(p * static_cast<double>(v.size() - 1)));
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
    return v[k];
}

}  // namespace

AgcResult agc_tune(const SignalBuffer& calibration, const AcdlConfig& cfg_in, const OfdmConfig& ofdm) {
    AcdlConfig cfg = cfg_in;
    cfg.gain_G = 1;
    cfg.gain_g = 1;
    cfg.validate();
    if (calibration.empty()) throw std::invalid_argument("agc_tune: empty calibration segment");
    if (std::all_of(calibration.samples.begin(), calibration.samples.end(), [](cplx v) { return v == cplx{}; }))
        throw std::invalid_argument("agc_tune: all-zero calibration segment");

    const double rate = ofdm.analog_rate();
    const double dt = 1 / (rate * static_cast<double>(cfg.euler_substeps));
    OnePoleLowpass fe(cfg.front_end_corner_hz(), rate);
    Biquad aa = Biquad::butterworth_lowpass(cfg.anti_alias_corner_hz(), rate);
    // skip the initial filter transients
    const std::size_t skip = std::min(calibration.size() / 10, static_cast<std::size_t>(20e-6 * rate));

    std::vector<double> diff_re, diff_im;
    diff_re.reserve(calibration.size() - skip);
    diff_im.reserve(calibration.size() - skip);
    double abs_acc = 0;
    std::size_t abs_n = 0;
    cplx chi{};
    bool init = false;
    for (std::size_t n = 0; n < calibration.size(); ++n) {
        const cplx x = fe.step(calibration.samples[n]) * cfg.gain_K;
        if (!init) {
            chi = x;
            init = true;
        }
        const cplx d = x - chi;
        for (std::size_t s = 0; s < cfg.euler_substeps; ++s) chi += dt / cfg.tau_s * (x - chi);
        const cplx a = aa.step(chi);
        if (n < skip) continue;
        diff_re.push_back(d.real());
        diff_im.push_back(d.imag());
        if (n % ofdm.oversample_factor == 0) {
            abs_acc += (std::abs(a.real()) + std::abs(a.imag())) / 2;
            ++abs_n;
        }
    }
    if (abs_n == 0 || abs_acc == 0) throw std::invalid_argument("agc_tune: calibration segment too short");

    AgcResult r;
    r.gain_G = cfg.agc_target_mean_abs * cfg.v_c / (abs_acc / static_cast<double>(abs_n));

    std::vector<double> pooled(diff_re);
    pooled.insert(pooled.end(), diff_im.begin(), diff_im.end());
    const double q1 = quantile(pooled, 0.25);
    const double q3 = quantile(pooled, 0.75);
    if (!(q3 > q1)) throw std::invalid_argument("agc_tune: degenerate difference signal");
    const double iqr_target = cfg.agc_target_iqr * cfg.v_c;
    r.gain_g = iqr_target / (r.gain_G * (q3 - q1));

    std::size_t crossings = 0;
    for (const auto* path : {&diff_re, &diff_im})
        for (std::size_t i = 1; i < path->size(); ++i) crossings += ((*path)[i - 1] < q3 && (*path)[i] >= q3);
    const double span = static_cast<double>(diff_re.size()) / rate;
    r.crossing_rate_hz = static_cast<double>(crossings) / (2 * span);
    if (!(r.crossing_rate_hz > 0)) throw std::invalid_argument("agc_tune: no threshold crossings observed");
    r.qtf_step_A = std::isnan(cfg.qtf_step_fraction)
                       ? cfg.qtf_step_scale * iqr_target
                       : cfg.qtf_step_fraction * iqr_target * r.crossing_rate_hz * cfg.t0_s;
    r.step_ratio = r.qtf_step_A / (cfg.t0_s * iqr_target * r.crossing_rate_hz);
    const double scale = r.gain_G * r.gain_g;
    r.q1 = q1 * scale;
    r.q3 = q3 * scale;
    r.startup_s = cfg.startup_ramps * iqr_target * cfg.t0_s / r.qtf_step_A;
    return r;
}

AcdlConfig apply_agc(AcdlConfig cfg, const AgcResult& agc) {
    cfg.gain_G = agc.gain_G;
    cfg.gain_g = agc.gain_g;
    cfg.qtf_step_A = agc.qtf_step_A;
    cfg.startup_s = agc.startup_s;
    cfg.qtf_init_q1 = agc.q1;
    cfg.qtf_init_q3 = agc.q3;
    return cfg;
}

}  // namespace plcsim
