#include "plcsim/harness.hpp"

#include "plcsim/fft.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace plcsim {

std::string_view to_string(Chain c) {
    switch (c) {
        case Chain::linear: return "linear";
        case Chain::acdl: return "acdl";
        case Chain::blanking: return "blanking";
        case Chain::clipping: return "clipping";
    }
    return "?";
}

std::string_view to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::eb_n0: return "eb_n0";
        case SweepAxis::sir: return "sir";
        case SweepAxis::beta: return "beta";
        case SweepAxis::threshold: return "threshold";
    }
    return "?";
}

Chain parse_chain(std::string_view s) {
    for (Chain c : {Chain::linear, Chain::acdl, Chain::blanking, Chain::clipping})
        if (s == to_string(c)) return c;
    throw std::invalid_argument("unknown chain '" + std::string(s) + "'");
}

SweepAxis parse_axis(std::string_view s) {
    for (SweepAxis a : {SweepAxis::eb_n0, SweepAxis::sir, SweepAxis::beta, SweepAxis::threshold})
        if (s == to_string(a)) return a;
    throw std::invalid_argument("unknown sweep axis '" + std::string(s) + "'");
}

void HarnessConfig::validate() const {
    ofdm.validate();
    noise.validate();
    acdl.validate();
    if (payload_symbols == 0) throw std::invalid_argument("payload_symbols must be positive");
    if (calibration_symbols < 8) throw std::invalid_argument("calibration_symbols must be at least 8");
    if (search_trials == 0) throw std::invalid_argument("search_trials must be positive");
    if (!std::isnan(threshold) && !(threshold > 0)) throw std::invalid_argument("threshold must be positive");
    log_grid(threshold_grid_lo, threshold_grid_hi, threshold_grid_points);
    if (threads == 0) throw std::invalid_argument("threads must be positive");
}

namespace {

// seed streams within one operating point
enum SeedTag : std::uint64_t {
    kCalBits = 100,
    kCalNoise,
    kCalOffset,
    kAlignBits,
    kTrialBits = 200,
    kTrialNoise,
    kTrialOffset,
    kSearchBits = 300,
    kSearchNoise,
    kSearchOffset,
};

FrequencyBand snr_band(const OfdmConfig& o) {
    const auto b = o.data_band();
    return {b.lo - o.subcarrier_spacing() / 2, b.hi + o.subcarrier_spacing() / 2};
}

// Keeps only the FFT bins inside the signed band.
std::vector<cplx> band_limit(std::span<const cplx> x, double rate, FrequencyBand band) {
    const std::size_t n = x.size();
    auto spec = Fft(n, FftDirection::forward)(x);
    for (std::size_t k = 0; k < n; ++k) {
        const double f = (k < (n + 1) / 2 ? static_cast<double>(k) : static_cast<double>(k) - static_cast<double>(n)) *
                         rate / static_cast<double>(n);
        if (f < band.lo || f > band.hi) spec[k] = {};
    }
    auto out = Fft(n, FftDirection::inverse)(spec);
    for (auto& v : out) v /= static_cast<double>(n);
    return out;
}

// In-band signal and error powers plus a lag-refined cross-correlation,
// accumulated over any number of aligned segments.
class SnrAccumulator {
public:
    SnrAccumulator(FrequencyBand band, std::size_t max_lag) : band_(band), max_lag_(max_lag), xc_(2 * max_lag + 1) {}

    void add(std::span<const cplx> processed, std::span<const cplx> reference, double rate) {
        if (processed.size() != reference.size() || processed.empty())
            throw std::invalid_argument("output SNR: processed and reference lengths differ");
        if (band_.hi > rate / 2) throw std::invalid_argument("output SNR: band above Nyquist");
        const auto p = band_limit(processed, rate, band_);
        const auto r = band_limit(reference, rate, band_);
        const std::size_t n = p.size();
        for (std::size_t i = 0; i < n; ++i) {
            p_ref_ += std::norm(r[i]);
            p_err_ += std::norm(p[i] - r[i]);
        }
        const auto L = static_cast<std::ptrdiff_t>(max_lag_);
        for (std::ptrdiff_t lag = -L; lag <= L; ++lag) {
            cplx acc{};
            for (std::size_t i = max_lag_; i + max_lag_ < n; ++i)
                acc += std::conj(r[i]) * p[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(i) + lag)];
            xc_[static_cast<std::size_t>(lag + L)] += acc;
        }
        effective_ += static_cast<double>(n) * (band_.hi - band_.lo) / rate;
    }

    double snr_db() const {
        if (p_ref_ == 0) throw std::invalid_argument("output SNR: reference has no in-band power");
        if (p_err_ == 0) return 100.0;
        return std::min(100.0, 10 * std::log10(p_ref_ / p_err_));
    }

    // Peak lag of the real part of the cross-correlation (its magnitude is
    // nearly flat over a few lags for a bandpass signal); a nonzero peak only
    // counts when it stands out from lag 0 by more than the estimation noise.
    void check_alignment() const {
        const auto L = static_cast<std::ptrdiff_t>(max_lag_);
        std::size_t best = max_lag_;
        for (std::size_t i = 0; i < xc_.size(); ++i)
            if (xc_[i].real() > xc_[best].real()) best = i;
        if (best == max_lag_) return;
        const double zero = xc_[max_lag_].real();
        const double noise = 4 * std::sqrt(p_ref_ * p_err_ / std::max(1.0, effective_));
        if (xc_[best].real() - zero > noise + 1e-12 * std::abs(zero))
            throw std::runtime_error("output SNR: reference misaligned, cross-correlation peak at lag " +
                                     std::to_string(static_cast<std::ptrdiff_t>(best) - L));
    }

private:
    FrequencyBand band_;
    std::size_t max_lag_;
    std::vector<cplx> xc_;
    double p_ref_ = 0;
    double p_err_ = 0;
    double effective_ = 0;  // independent samples in the band
};

}  // namespace

double measure_output_snr(const SignalBuffer& processed, const SignalBuffer& reference, FrequencyBand band,
                          std::size_t max_lag) {
    if (processed.sample_rate != reference.sample_rate) throw std::invalid_argument("output SNR: rate mismatch");
    SnrAccumulator acc(band, max_lag);
    acc.add(processed.samples, reference.samples, processed.sample_rate);
    acc.check_alignment();
    return acc.snr_db();
}

DemodAlignment calibrate_receiver(const OfdmConfig& ofdm, const AcdlConfig& acdl, std::uint64_t seed) {
    constexpr std::size_t kSymbols = 12;
    const auto bits = BitFrame::random(kSymbols * ofdm.bits_per_symbol(), seed);
    const auto sent = map_bits(bits.bits, ofdm.modulation);
    const auto tx = ofdm_modulate(place_on_carriers(sent, ofdm), ofdm);
    const auto adc = linear_chain_process(tx, acdl, ofdm, ChainMode::bypass).output;
    const auto taps = matched_filter_taps(ofdm);
    const std::size_t K = ofdm.num_carriers();
    const SymbolRange inner{2, kSymbols - 4};

    DemodAlignment best;
    double best_evm = std::numeric_limits<double>::infinity();
    const auto L = static_cast<std::ptrdiff_t>(ofdm.adc_per_chip());
    for (std::ptrdiff_t d = -L; d <= 4 * L; ++d) {
        DemodAlignment a;
        a.delay = d;
        const auto r = demodulate(adc, ofdm, taps, a, inner);
        std::vector<cplx> gain(K);
        for (std::size_t s = 0; s < inner.count; ++s)
            for (std::size_t c = 0; c < K; ++c)
                gain[c] += r.decisions[s * K + c] / sent[(inner.first + s) * K + c];
        for (auto& g : gain) g /= static_cast<double>(inner.count);
        double evm = 0;
        for (std::size_t s = 0; s < inner.count; ++s)
            for (std::size_t c = 0; c < K; ++c)
                evm += std::norm(r.decisions[s * K + c] / gain[c] - sent[(inner.first + s) * K + c]);
        if (evm < best_evm) {
            best_evm = evm;
            a.carrier_gain = std::move(gain);
            best = std::move(a);
        }
    }
    return best;
}

namespace {

struct TrialData {
    std::vector<std::uint8_t> payload_bits;
    SignalBuffer clean;
    SignalBuffer rx;
};

// Everything fixed for one operating point: gains, noise calibration,
// receiver alignment and the per-trial symbol layout.
class PointSetup {
public:
    PointSetup(const HarnessConfig& cfg, std::uint64_t seed)
        : cfg_(cfg), seed_(seed), shaper_(cfg.ofdm.analog_rate(), cfg.noise.psd_slope_db_per_mhz) {
        cfg_.validate();
        const auto& o = cfg_.ofdm;
        const auto cal_bits = BitFrame::random(cfg_.calibration_symbols * o.bits_per_symbol(), derive_seed(seed, kCalBits));
        const auto cal_tx = ofdm_modulate(place_on_carriers(map_bits(cal_bits.bits, o.modulation), o), o);
        signal_power_ = measure_power(cal_tx);
        targets_ = calibrate(signal_power_, o, cfg_.noise, shaper_);
        const auto cal_rx = add_noise(cal_tx, derive_seed(seed, kCalNoise), derive_seed(seed, kCalOffset));

        agc_ = agc_tune(cal_rx, cfg_.acdl, o);
        tuned_ = apply_agc(cfg_.acdl, agc_);
        const auto cal_adc = linear_chain_process(cal_rx, tuned_, o, ChainMode::bypass).output;
        rx_rms_ = std::sqrt(measure_power(cal_adc));

        align_ = calibrate_receiver(o, tuned_, derive_seed(seed, kAlignBits));
        mf_standard_ = matched_filter_taps(o);
        mf_acdl_ = o.use_modified_mf ? modified_matched_filter_taps(o, tuned_.tau_s, cfg_.mf_derivative) : mf_standard_;
        preamble_ = static_cast<std::size_t>(std::ceil(tuned_.startup_s / o.symbol_duration())) + 1;
    }

    const HarnessConfig& cfg() const { return cfg_; }
    const AcdlConfig& tuned() const { return tuned_; }
    double rx_rms() const { return rx_rms_; }
    std::size_t preamble() const { return preamble_; }
    std::size_t total_symbols() const { return preamble_ + cfg_.payload_symbols + cfg_.guard_symbols; }
    SymbolRange payload() const { return {preamble_, cfg_.payload_symbols}; }

    SignalBuffer add_noise(const SignalBuffer& clean, std::uint64_t noise_seed, std::uint64_t offset_seed) const {
        GaussianSource u(offset_seed);
        const double offset = u.uniform() * cfg_.noise.burst_period();
        const auto noise = generate_noise(clean.size(), cfg_.ofdm, cfg_.noise, targets_, shaper_, noise_seed, offset);
        SignalBuffer rx = clean;
        rx.origin = Probe::channel;
        for (const auto* c : {&noise.awgn, &noise.cyclostationary, &noise.asynchronous})
            for (std::size_t i = 0; i < rx.size(); ++i) rx.samples[i] += c->samples[i];
        return rx;
    }

    TrialData trial(std::uint64_t tag, std::size_t index) const {
        const auto& o = cfg_.ofdm;
        const std::size_t bps = o.bits_per_symbol();
        const auto bits = BitFrame::random(total_symbols() * bps, derive_seed(seed_, tag, index));
        TrialData t;
        t.clean = ofdm_modulate(place_on_carriers(map_bits(bits.bits, o.modulation), o), o);
        t.rx = add_noise(t.clean, derive_seed(seed_, tag + 1, index), derive_seed(seed_, tag + 2, index));
        const auto first = bits.bits.begin() + static_cast<std::ptrdiff_t>(preamble_ * bps);
        t.payload_bits.assign(first, first + static_cast<std::ptrdiff_t>(cfg_.payload_symbols * bps));
        return t;
    }

    BerCount score(const SignalBuffer& adc, std::span<const double> taps, std::span<const std::uint8_t> sent) const {
        return count_ber(sent, demodulate(adc, cfg_.ofdm, taps, align_, payload()).bits);
    }

    std::span<const double> taps(Chain c) const { return c == Chain::acdl ? mf_acdl_ : mf_standard_; }

    std::span<const cplx> payload_samples(const SignalBuffer& adc) const {
        const std::size_t per = cfg_.ofdm.adc_per_symbol();
        return std::span<const cplx>(adc.samples).subspan(preamble_ * per, cfg_.payload_symbols * per);
    }

private:
    HarnessConfig cfg_;
    std::uint64_t seed_;
    PsdShaper shaper_;
    double signal_power_ = 0;
    PowerTargets targets_;
    AgcResult agc_;
    AcdlConfig tuned_;
    double rx_rms_ = 0;
    DemodAlignment align_;
    std::vector<double> mf_standard_;
    std::vector<double> mf_acdl_;
    std::size_t preamble_ = 1;
};

Nonlinearity nonlinearity_of(Chain c) {
    return c == Chain::blanking ? Nonlinearity::blanking : c == Chain::clipping ? Nonlinearity::clipping
                                                                                 : Nonlinearity::none;
}

bool is_baseline(Chain c) { return c == Chain::blanking || c == Chain::clipping; }

struct ChainOutcome {
    BerCount ber;
    SignalBuffer processed;  // ADC-rate output fed to the matched filter
    SignalBuffer reference;  // clean signal through the same chain in linear mode
};

// Runs the requested chains on one trial; thresholds are absolute amplitudes.
std::vector<std::optional<ChainOutcome>> evaluate_trial(const PointSetup& p, const TrialData& t,
                                                        std::span<const Chain> chains, std::span<const unsigned char> active,
                                                        std::span<const double> thresholds) {
    const auto& o = p.cfg().ofdm;
    std::optional<SignalBuffer> bypass, bypass_ref;
    std::vector<std::optional<ChainOutcome>> out(chains.size());
    for (std::size_t i = 0; i < chains.size(); ++i) {
        if (!active[i]) continue;
        ChainOutcome r;
        if (chains[i] == Chain::acdl) {
            r.processed = acdl_process(t.rx, p.tuned(), o).output;
            r.reference = linear_chain_process(t.clean, p.tuned(), o, ChainMode::lowpass).output;
        } else {
            if (!bypass) {
                bypass = linear_chain_process(t.rx, p.tuned(), o, ChainMode::bypass).output;
                bypass_ref = linear_chain_process(t.clean, p.tuned(), o, ChainMode::bypass).output;
            }
            r.processed = is_baseline(chains[i]) ? apply_nonlinearity(*bypass, nonlinearity_of(chains[i]), thresholds[i])
                                                 : *bypass;
            r.reference = *bypass_ref;
        }
        r.ber = p.score(r.processed, p.taps(chains[i]), t.payload_bits);
        out[i] = std::move(r);
    }
    return out;
}

// Exhaustive threshold search on dedicated trials, shared by both baselines.
std::vector<ThresholdSearchResult> search_thresholds(const PointSetup& p, std::span<const Chain> baselines) {
    const auto& c = p.cfg();
    ThresholdSearchSpec spec;
    spec.grid = log_grid(c.threshold_grid_lo, c.threshold_grid_hi, c.threshold_grid_points);
    spec.trials_per_point = c.search_trials;

    std::vector<SignalBuffer> adc(c.search_trials);
    std::vector<std::vector<std::uint8_t>> sent(c.search_trials);
    for (std::size_t t = 0; t < c.search_trials; ++t) {
        auto data = p.trial(kSearchBits, t);
        adc[t] = linear_chain_process(data.rx, p.tuned(), c.ofdm, ChainMode::bypass).output;
        sent[t] = std::move(data.payload_bits);
    }
    std::vector<ThresholdSearchResult> results;
    for (Chain b : baselines) {
        results.push_back(optimize_threshold(spec, [&](std::size_t t, std::span<const double> grid, std::span<GridPoint> pts) {
            for (std::size_t g = 0; g < grid.size(); ++g) {
                const auto proc = apply_nonlinearity(adc[t], nonlinearity_of(b), grid[g] * p.rx_rms());
                const auto ber = p.score(proc, p.taps(b), sent[t]);
                pts[g].errors = ber.errors;
                pts[g].bits = ber.total;
            }
        }));
    }
    return results;
}

std::string point_context(const HarnessConfig& c) {
    std::ostringstream s;
    s << "Eb/N0=" << c.noise.eb_n0_db << " dB, SIR=" << c.noise.sir_db << " dB, beta=" << c.acdl.beta;
    return s.str();
}

}  // namespace

std::vector<RunResult> run_chains(const HarnessConfig& cfg, std::span<const Chain> chains, const Budget& budget,
                                  std::uint64_t seed) {
    if (chains.empty()) throw std::invalid_argument("run_chains: no chains requested");
    if (budget.bits_min == 0 && budget.stop_at_errors == 0 && budget.max_trials == 0)
        throw std::invalid_argument("run_chains: budget has no stopping condition");
    const auto start = std::chrono::steady_clock::now();
    try {
        const PointSetup setup(cfg, seed);
        const std::size_t n = chains.size();

        std::vector<double> thresholds(n, std::numeric_limits<double>::quiet_NaN());
        std::vector<double> multipliers(n, std::numeric_limits<double>::quiet_NaN());
        std::vector<bool> floors(n, false);
        std::vector<Chain> to_search;
        for (std::size_t i = 0; i < n; ++i)
            if (is_baseline(chains[i]) && std::isnan(cfg.threshold) &&
                std::find(to_search.begin(), to_search.end(), chains[i]) == to_search.end())
                to_search.push_back(chains[i]);
        const auto searched = to_search.empty() ? std::vector<ThresholdSearchResult>{} : search_thresholds(setup, to_search);
        for (std::size_t i = 0; i < n; ++i) {
            if (!is_baseline(chains[i])) continue;
            if (std::isnan(cfg.threshold)) {
                const auto k = static_cast<std::size_t>(std::find(to_search.begin(), to_search.end(), chains[i]) - to_search.begin());
                multipliers[i] = searched[k].threshold;
                floors[i] = searched[k].floor_reached;
            } else {
                multipliers[i] = cfg.threshold;
            }
            thresholds[i] = multipliers[i] * setup.rx_rms();
        }

        struct Acc {
            BerCount ber;
            std::size_t trials = 0;
            std::optional<SnrAccumulator> snr;
        };
        std::vector<Acc> acc(n);
        for (auto& a : acc) a.snr.emplace(snr_band(cfg.ofdm), 2);
        auto done = [&](std::size_t i) {
            const auto& a = acc[i];
            return (budget.bits_min && a.ber.total >= budget.bits_min) ||
                   (budget.stop_at_errors && a.ber.errors >= budget.stop_at_errors) ||
                   (budget.max_trials && a.trials >= budget.max_trials);
        };
        auto all_done = [&] {
            for (std::size_t i = 0; i < n; ++i)
                if (!done(i)) return false;
            return true;
        };

        const double adc_rate = cfg.ofdm.fs_adc_hz;
        std::size_t next = 0;
        while (!all_done()) {
            std::vector<unsigned char> active(n);
            for (std::size_t i = 0; i < n; ++i) active[i] = !done(i);
            const std::size_t batch = std::max<std::size_t>(1, cfg.threads);
            std::vector<std::vector<std::optional<ChainOutcome>>> outcomes(batch);
            std::exception_ptr failure;
            std::mutex failure_lock;
            auto work = [&](std::size_t b) {
                try {
                    const auto data = setup.trial(kTrialBits, next + b);
                    outcomes[b] = evaluate_trial(setup, data, chains, active, thresholds);
                } catch (...) {
                    std::lock_guard lock(failure_lock);
                    if (!failure) failure = std::current_exception();
                }
            };
            if (batch == 1) {
                work(0);
            } else {
                std::vector<std::jthread> pool;
                for (std::size_t b = 0; b < batch; ++b) pool.emplace_back(work, b);
            }
            if (failure) std::rethrow_exception(failure);
            for (std::size_t b = 0; b < batch; ++b) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (done(i) || !outcomes[b][i]) continue;
                    auto& a = acc[i];
                    const auto& r = *outcomes[b][i];
                    a.ber.errors += r.ber.errors;
                    a.ber.total += r.ber.total;
                    ++a.trials;
                    a.snr->add(setup.payload_samples(r.processed), setup.payload_samples(r.reference), adc_rate);
                }
            }
            next += batch;
        }

        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::vector<RunResult> results;
        for (std::size_t i = 0; i < n; ++i) {
            acc[i].snr->check_alignment();
            RunResult r;
            r.chain = chains[i];
            r.eb_n0_db = cfg.noise.eb_n0_db;
            r.sir_db = cfg.noise.sir_db;
            r.beta = cfg.acdl.beta;
            r.threshold = multipliers[i];
            r.errors = acc[i].ber.errors;
            r.bits = acc[i].ber.total;
            r.ber = acc[i].ber.ber();
            r.ci = binomial_ci(r.errors, r.bits);
            r.output_snr_db = acc[i].snr->snr_db();
            r.seed = seed;
            r.trials = acc[i].trials;
            r.search_floor = floors[i];
            r.wall_time_s = wall;
            results.push_back(r);
        }
        return results;
    } catch (const std::exception& e) {
        throw std::runtime_error(point_context(cfg) + ": " + e.what());
    }
}

RunResult run_point(const HarnessConfig& cfg, Chain chain, const Budget& budget, std::uint64_t seed) {
    const Chain one[] = {chain};
    return run_chains(cfg, one, budget, seed).front();
}

void SweepSpec::validate() const {
    if (values.empty()) throw std::invalid_argument("sweep: no axis values");
    if (chains.empty()) throw std::invalid_argument("sweep: no chains");
    for (double v : values)
        if (std::isnan(v)) throw std::invalid_argument("sweep: NaN axis value");
    if (budget.bits_min == 0 && budget.stop_at_errors == 0 && budget.max_trials == 0)
        throw std::invalid_argument("sweep: budget has no stopping condition");
}

std::uint64_t point_seed(std::uint64_t base_seed, std::size_t point_index) {
    return derive_seed(base_seed, 0x5eed, point_index);
}

HarnessConfig at_axis_value(HarnessConfig cfg, SweepAxis axis, double value) {
    switch (axis) {
        case SweepAxis::eb_n0: cfg.noise.eb_n0_db = value; break;
        case SweepAxis::sir: cfg.noise.sir_db = value; break;
        case SweepAxis::beta: cfg.acdl.beta = value; break;
        case SweepAxis::threshold: cfg.threshold = value; break;
    }
    return cfg;
}

SweepOutcome run_sweep(const HarnessConfig& cfg, const SweepSpec& spec) {
    spec.validate();
    SweepOutcome out;
    for (std::size_t i = 0; i < spec.values.size(); ++i) {
        const auto point_cfg = at_axis_value(cfg, spec.axis, spec.values[i]);
        try {
            auto rs = run_chains(point_cfg, spec.chains, spec.budget, point_seed(spec.base_seed, i));
            for (auto& r : rs) {
                r.axis = spec.axis;
                r.axis_value = spec.values[i];
                out.results.push_back(r);
            }
        } catch (const std::exception& e) {
            out.errors.push_back(std::string(to_string(spec.axis)) + "=" + std::to_string(spec.values[i]) + ": " + e.what());
        }
    }
    std::stable_sort(out.results.begin(), out.results.end(), [](const RunResult& a, const RunResult& b) {
        if (a.axis_value != b.axis_value) return a.axis_value < b.axis_value;
        return static_cast<int>(a.chain) < static_cast<int>(b.chain);
    });
    return out;
}

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

constexpr const char* kCsvHeader =
    "axis_value,ber,ber_ci_lo,ber_ci_hi,snr_db,bits,seed,chain,axis,errors,trials,eb_n0_db,sir_db,beta,threshold";

nlohmann::json json_number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(fmt(v)); }

double json_double(const nlohmann::json& j) {
    if (j.is_string()) return std::stod(j.get<std::string>());
    return j.get<double>();
}

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

void emit_results(std::span<const RunResult> results, const std::filesystem::path& path, ResultFormat format,
                  std::string_view config_snapshot) {
    if (results.empty()) throw std::invalid_argument("emit_results: no results");
    std::ostringstream os;
    if (format == ResultFormat::csv) {
        os << kCsvHeader << '\n';
        for (const auto& r : results)
            os << fmt(r.axis_value) << ',' << fmt(r.ber) << ',' << fmt(r.ci.lo) << ',' << fmt(r.ci.hi) << ','
               << fmt(r.output_snr_db) << ',' << r.bits << ',' << r.seed << ',' << to_string(r.chain) << ','
               << to_string(r.axis) << ',' << r.errors << ',' << r.trials << ',' << fmt(r.eb_n0_db) << ','
               << fmt(r.sir_db) << ',' << fmt(r.beta) << ',' << fmt(r.threshold) << '\n';
    } else {
        nlohmann::ordered_json j;
        auto& arr = j["results"] = nlohmann::ordered_json::array();
        for (const auto& r : results) {
            nlohmann::ordered_json e;
            e["axis_value"] = json_number(r.axis_value);
            e["ber"] = json_number(r.ber);
            e["ber_ci_lo"] = json_number(r.ci.lo);
            e["ber_ci_hi"] = json_number(r.ci.hi);
            e["snr_db"] = json_number(r.output_snr_db);
            e["bits"] = r.bits;
            e["seed"] = r.seed;
            e["chain"] = to_string(r.chain);
            e["axis"] = to_string(r.axis);
            e["errors"] = r.errors;
            e["trials"] = r.trials;
            e["eb_n0_db"] = json_number(r.eb_n0_db);
            e["sir_db"] = json_number(r.sir_db);
            e["beta"] = json_number(r.beta);
            e["threshold"] = json_number(r.threshold);
            arr.push_back(std::move(e));
        }
        auto& cfg = j["config"] = nlohmann::ordered_json::object();
        std::istringstream lines{std::string(config_snapshot)};
        for (std::string line; std::getline(lines, line);) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            auto trim = [](std::string s) {
                s.erase(0, s.find_first_not_of(" \t"));
                s.erase(s.find_last_not_of(" \t\r") + 1);
                return s;
            };
            cfg[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
        char hash[17];
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(fnv1a(config_snapshot)));
        j["config_hash"] = hash;
        os << j.dump(2) << '\n';
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("emit_results: cannot write " + path.string());
    f << os.str();
    if (!f) throw std::runtime_error("emit_results: write failed for " + path.string());
}

std::vector<RunResult> parse_results(const std::filesystem::path& path, ResultFormat format) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("parse_results: cannot open " + path.string());
    std::vector<RunResult> out;
    if (format == ResultFormat::csv) {
        std::string line;
        if (!std::getline(f, line) || line != kCsvHeader) throw std::runtime_error("parse_results: unexpected header");
        while (std::getline(f, line)) {
            if (line.empty()) continue;
            std::vector<std::string> c;
            std::istringstream ls(line);
            for (std::string cell; std::getline(ls, cell, ',');) c.push_back(cell);
            if (c.size() != 15) throw std::runtime_error("parse_results: bad row '" + line + "'");
            RunResult r;
            r.axis_value = std::stod(c[0]);
            r.ber = std::stod(c[1]);
            r.ci = {std::stod(c[2]), std::stod(c[3])};
            r.output_snr_db = std::stod(c[4]);
            r.bits = std::stoull(c[5]);
            r.seed = std::stoull(c[6]);
            r.chain = parse_chain(c[7]);
            r.axis = parse_axis(c[8]);
            r.errors = std::stoull(c[9]);
            r.trials = std::stoull(c[10]);
            r.eb_n0_db = std::stod(c[11]);
            r.sir_db = std::stod(c[12]);
            r.beta = std::stod(c[13]);
            r.threshold = std::stod(c[14]);
            out.push_back(r);
        }
    } else {
        const auto j = nlohmann::json::parse(f);
        for (const auto& e : j.at("results")) {
            RunResult r;
            r.axis_value = json_double(e.at("axis_value"));
            r.ber = json_double(e.at("ber"));
            r.ci = {json_double(e.at("ber_ci_lo")), json_double(e.at("ber_ci_hi"))};
            r.output_snr_db = json_double(e.at("snr_db"));
            r.bits = e.at("bits").get<std::uint64_t>();
            r.seed = e.at("seed").get<std::uint64_t>();
            r.chain = parse_chain(e.at("chain").get<std::string>());
            r.axis = parse_axis(e.at("axis").get<std::string>());
            r.errors = e.at("errors").get<std::uint64_t>();
            r.trials = e.at("trials").get<std::size_t>();
            r.eb_n0_db = json_double(e.at("eb_n0_db"));
            r.sir_db = json_double(e.at("sir_db"));
            r.beta = json_double(e.at("beta"));
            r.threshold = json_double(e.at("threshold"));
            out.push_back(r);
        }
    }
    return out;
}

void dump_probes(const HarnessConfig& cfg, std::uint64_t seed, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    const PointSetup setup(cfg, seed);
    const auto t = setup.trial(kTrialBits, 0);
    const auto& o = cfg.ofdm;
    auto acdl = acdl_process(t.rx, setup.tuned(), o, true);
    auto lin = linear_chain_process(t.rx, setup.tuned(), o, ChainMode::bypass, true);
    auto ref = linear_chain_process(t.clean, setup.tuned(), o, ChainMode::lowpass, true);
    auto lin_ref = linear_chain_process(t.clean, setup.tuned(), o, ChainMode::bypass, true);

    auto write = [&](const std::string& name, const SignalBuffer& buf) {
        // one payload symbol of trace; PSD and density over the whole payload
        const double T = o.symbol_duration();
        const auto per_symbol = static_cast<std::size_t>(std::llround(T * buf.sample_rate));
        const std::size_t first = setup.preamble() * per_symbol;
        const std::size_t len = std::min(buf.size() - first, cfg.payload_symbols * per_symbol);
        SignalBuffer payload(std::vector<cplx>(buf.samples.begin() + static_cast<std::ptrdiff_t>(first),
                                               buf.samples.begin() + static_cast<std::ptrdiff_t>(first + len)),
                             buf.sample_rate, buf.origin);
        SignalBuffer trace(std::vector<cplx>(payload.samples.begin(), payload.samples.begin() + static_cast<std::ptrdiff_t>(std::min(len, per_symbol))),
                           buf.sample_rate, buf.origin);
        write_trace_csv(dir / ("trace_" + name + ".csv"), trace);
        write_psd_csv(dir / ("psd_" + name + ".csv"), estimate_psd(payload, std::min<std::size_t>(per_symbol, payload.size())));
        const auto pdf = amplitude_histogram(payload, 200);
        std::ofstream f(dir / ("pdf_" + name + ".csv"));
        if (!f) throw std::runtime_error("dump_probes: cannot write into " + dir.string());
        f << "amplitude,density_re,density_im\n";
        for (std::size_t i = 0; i < pdf.real.size(); ++i)
            f << fmt(pdf.bin_center(i)) << ',' << fmt(pdf.real[i]) << ',' << fmt(pdf.imag[i]) << '\n';
    };
    write("tx", t.clean);
    write("channel", t.rx);
    for (const auto& [p, buf] : acdl.probes) write(std::string(to_string(p)), buf);
    for (const auto& [p, buf] : lin.probes) write(std::string(to_string(p)), buf);
    for (const auto& [p, buf] : ref.probes) write("reference_" + std::string(to_string(p)), buf);
    for (const auto& [p, buf] : lin_ref.probes) write("reference_" + std::string(to_string(p)), buf);
}

}  // namespace plcsim
