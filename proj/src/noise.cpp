#include "plcsim/noise.hpp"

#include "plcsim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plcsim {

namespace {

// Envelope tails shorter than this many time constants are dropped (exp(-12) ~ 6e-6).
constexpr double kEnvelopeSpan = 12.0;

bool is_nan(double v) { return std::isnan(v); }

}  // namespace

void NoiseConfig::validate() const {
    if (is_nan(eb_n0_db) || eb_n0_db == -INFINITY || is_nan(sir_db) || sir_db == -INFINITY)
        throw std::invalid_argument("NoiseConfig: Eb/N0 and SIR must be finite or +inf");
    if (!(inv_lambda_s > 0) || !(tau_cs_s > 0) || !(tau_as_s > 0) || !(f_ac_hz > 0))
        throw std::invalid_argument("NoiseConfig: times and rates must be positive");
    if (!(cs_as_ratio >= 0) || !std::isfinite(cs_as_ratio)) throw std::invalid_argument("NoiseConfig: bad cs/as ratio");
    if (!(as_amplitude_std >= 0)) throw std::invalid_argument("NoiseConfig: bad amplitude spread");
}

SignalBuffer gen_awgn(std::size_t n, double sample_rate, double power, std::uint64_t seed) {
    if (!(power >= 0)) throw std::invalid_argument("gen_awgn: negative power");
    std::vector<cplx> s(n);
    if (power > 0) {
        GaussianSource g(seed);
        for (auto& v : s) v = g.complex(power);
    }
    return SignalBuffer(std::move(s), sample_rate, Probe::channel);
}

ImpulseTrace gen_cyclostationary(std::size_t n, double sample_rate, const NoiseConfig& cfg, double amplitude,
                                 std::uint64_t seed, double time_offset) {
    cfg.validate();
    const double period = cfg.burst_period();
    const double duration = static_cast<double>(n) / sample_rate;
    if (duration < period * (1 - 1e-12))
        throw std::invalid_argument("gen_cyclostationary: duration shorter than one burst period");
    ImpulseTrace out{SignalBuffer(std::vector<cplx>(n), sample_rate, Probe::channel), {}};
    GaussianSource g(seed);
    const double span = kEnvelopeSpan * cfg.tau_cs_s;
    const auto k_first = std::max<long long>(1, static_cast<long long>(std::floor((time_offset - span) / period)));
    for (long long k = k_first;; ++k) {
        const double onset = static_cast<double>(k) * period - time_offset;  // buffer-relative
        if (onset >= duration) break;
        if (onset + span < 0) continue;
        out.onsets.push_back(onset);
        if (amplitude == 0) continue;
        const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(onset * sample_rate)));
        const auto last = std::min(n, static_cast<std::size_t>(std::ceil((onset + span) * sample_rate)));
        for (std::size_t i = first; i < last; ++i) {
            const double t = static_cast<double>(i) / sample_rate - onset;
            out.noise.samples[i] += amplitude * std::exp(-t / cfg.tau_cs_s) * g.complex();
        }
    }
    return out;
}

ImpulseTrace gen_asynchronous(std::size_t n, double sample_rate, const NoiseConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    ImpulseTrace out{SignalBuffer(std::vector<cplx>(n), sample_rate, Probe::channel), {}};
    const double lambda = cfg.lambda();
    if (lambda == 0) return out;
    GaussianSource g(seed);
    std::exponential_distribution<double> gap(lambda);
    const double duration = static_cast<double>(n) / sample_rate;
    const double span = kEnvelopeSpan * cfg.tau_as_s;
    // start early so the window sees the tails of earlier impulses
    double t = -span + gap(g.engine());
    for (; t < duration; t += gap(g.engine())) {
        out.onsets.push_back(t);
        const double a = cfg.as_amplitude_mean + cfg.as_amplitude_std * g.real();
        const auto first = static_cast<std::size_t>(std::max(0.0, std::ceil(t * sample_rate)));
        const auto last = std::min(n, static_cast<std::size_t>(std::max(0.0, std::ceil((t + span) * sample_rate))));
        const double decay = std::exp(-1 / (sample_rate * cfg.tau_as_s));
        double env = a * std::exp(-(static_cast<double>(first) / sample_rate - t) / cfg.tau_as_s);
        for (std::size_t i = first; i < last; ++i, env *= decay) out.noise.samples[i] += env * g.complex();
    }
    return out;
}

namespace {

double fit_slope(const Biquad& h, double rate) {
    const double f_max = std::min(1e6, 0.45 * rate);
    const int m = 1001;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = 0; i < m; ++i) {
        const double f = f_max * i / (m - 1);
        const double x = f / 1e6;
        const double y = 10 * std::log10(std::norm(h.response(f, rate)));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

PsdShaper::PsdShaper(double sample_rate, double slope) : rate_(sample_rate) {
    if (!(sample_rate > 0) || !(slope < 0)) throw std::invalid_argument("PsdShaper: bad arguments");
    // slope magnitude decreases monotonically as the corner moves up
    double lo = 1e3, hi = std::min(5e6, 0.45 * sample_rate);
    if (fit_slope(Biquad::butterworth_lowpass(hi, rate_), rate_) < slope ||
        fit_slope(Biquad::butterworth_lowpass(lo, rate_), rate_) > slope)
        throw std::invalid_argument("PsdShaper: slope not reachable at this sample rate");
    for (int it = 0; it < 100; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (fit_slope(Biquad::butterworth_lowpass(mid, rate_), rate_) < slope)
            lo = mid;
        else
            hi = mid;
    }
    corner_ = std::sqrt(lo * hi);
    proto_ = Biquad::butterworth_lowpass(corner_, rate_);
}

SignalBuffer PsdShaper::apply(const SignalBuffer& in) const {
    if (std::abs(in.sample_rate - rate_) > 1e-9 * rate_) throw std::invalid_argument("PsdShaper: sample rate mismatch");
    SignalBuffer out = in;
    Biquad f = proto_;
    f.reset();
    f.process(out.samples);
    return out;
}

double PsdShaper::power_gain(double f_hz) const { return std::norm(proto_.response(f_hz, rate_)); }

double PsdShaper::noise_bandwidth() const {
    const int m = 1 << 18;
    const double df = rate_ / 2 / m;
    double acc = 0;
    for (int i = 0; i <= m; ++i) acc += (i == 0 || i == m ? 0.5 : 1.0) * power_gain(i * df);
    return 2 * acc * df;
}

double PsdShaper::fitted_slope_db_per_mhz() const { return fit_slope(proto_, rate_); }

SignalBuffer shape_psd(const SignalBuffer& buf, double slope) { return PsdShaper(buf.sample_rate, slope).apply(buf); }

PowerTargets calibrate(double signal_power, const OfdmConfig& ofdm, const NoiseConfig& cfg, const PsdShaper& shaper) {
    cfg.validate();
    if (!(signal_power > 0) || !std::isfinite(signal_power)) throw std::invalid_argument("calibrate: bad signal power");
    PowerTargets t;
    const double eb = signal_power * ofdm.symbol_duration() / static_cast<double>(ofdm.bits_per_symbol());
    t.n0 = eb / db_to_linear(cfg.eb_n0_db);
    if (cfg.shape_thermal) {
        double in_band = 0;
        for (std::size_t k = ofdm.carrier_lo; k <= ofdm.carrier_hi; ++k)
            in_band += shaper.power_gain(static_cast<double>(k) * ofdm.subcarrier_spacing());
        in_band /= static_cast<double>(ofdm.num_carriers());
        t.thermal = t.n0 * shaper.noise_bandwidth() / in_band;
    } else {
        t.thermal = t.n0 * ofdm.analog_rate();
    }
    const double impulsive = signal_power / db_to_linear(cfg.sir_db);
    t.cyclostationary = impulsive * cfg.cs_as_ratio / (1 + cfg.cs_as_ratio);
    t.asynchronous = impulsive / (1 + cfg.cs_as_ratio);
    return t;
}

SignalBuffer NoiseRealization::total() const {
    SignalBuffer out = awgn;
    for (std::size_t i = 0; i < out.size(); ++i) out.samples[i] += cyclostationary.samples[i] + asynchronous.samples[i];
    return out;
}

void normalize_power(SignalBuffer& buf, double target) {
    if (buf.empty()) return;
    const double p = measure_power(buf);
    if (p == 0) return;
    const double s = std::sqrt(target / p);
    for (auto& v : buf.samples) v *= s;
}

NoiseRealization generate_noise(std::size_t n, const OfdmConfig& ofdm, const NoiseConfig& cfg,
                                const PowerTargets& targets, const PsdShaper& shaper, std::uint64_t seed,
                                double time_offset) {
    const double rate = ofdm.analog_rate();
    NoiseRealization r;
    auto finish = [&](SignalBuffer b, bool shape, double target) {
        if (target == 0) return SignalBuffer(std::vector<cplx>(n), rate, Probe::channel);
        if (shape) b = shaper.apply(b);
        normalize_power(b, target);
        return b;
    };
    r.awgn = finish(gen_awgn(n, rate, targets.thermal > 0 ? 1.0 : 0.0, derive_seed(seed, 1)), cfg.shape_thermal,
                    targets.thermal);
    auto cs = gen_cyclostationary(n, rate, cfg, targets.cyclostationary > 0 ? 1.0 : 0.0, derive_seed(seed, 2), time_offset);
    r.burst_onsets = std::move(cs.onsets);
    r.cyclostationary = finish(std::move(cs.noise), cfg.shape_cyclostationary, targets.cyclostationary);
    if (targets.asynchronous > 0) {
        auto as = gen_asynchronous(n, rate, cfg, derive_seed(seed, 3));
        r.arrival_times = std::move(as.onsets);
        r.asynchronous = finish(std::move(as.noise), cfg.shape_asynchronous, targets.asynchronous);
    } else {
        r.asynchronous = SignalBuffer(std::vector<cplx>(n), rate, Probe::channel);
    }
    return r;
}

}  // namespace plcsim
