#include "plcsim/ofdm.hpp"

#include "plcsim/fft.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace plcsim {

using std::numbers::pi;

std::size_t bits_per_carrier(Modulation m) { return m == Modulation::bpsk ? 1 : 2; }

void OfdmConfig::validate() const {
    if (fft_size < 2) throw std::invalid_argument("OfdmConfig: fft_size too small");
    if (carrier_lo > carrier_hi || carrier_hi >= fft_size)
        throw std::invalid_argument("OfdmConfig: data carriers must lie in [0, fft_size)");
    if (!(fs_hz > 0) || !(fs_adc_hz > 0) || oversample_factor == 0)
        throw std::invalid_argument("OfdmConfig: rates must be positive");
    if (!(rolloff > 0 && rolloff <= 1)) throw std::invalid_argument("OfdmConfig: rolloff must be in (0, 1]");
    if (mf_span_symbols < 2 || mf_span_symbols % 2) throw std::invalid_argument("OfdmConfig: span must be even");
    (void)adc_per_chip();
    if (std::abs(fs_adc_hz - 8 * signal_bandwidth()) > 1e-9 * fs_adc_hz)
        throw std::invalid_argument("OfdmConfig: matched-filter rate must equal 8 B_x");
}

std::size_t OfdmConfig::adc_per_chip() const {
    const double r = fs_adc_hz / fs_hz;
    const double rr = std::round(r);
    if (rr < 1 || std::abs(r - rr) > 1e-9 * rr) throw std::invalid_argument("OfdmConfig: ADC rate must be an integer multiple of fs");
    return static_cast<std::size_t>(rr);
}

FrequencyBand OfdmConfig::data_band() const {
    return {static_cast<double>(carrier_lo) * subcarrier_spacing(), static_cast<double>(carrier_hi) * subcarrier_spacing()};
}

BitFrame BitFrame::random(std::size_t n, std::uint64_t seed) {
    BitFrame f;
    f.seed = seed;
    f.bits.resize(n);
    std::mt19937_64 rng(seed);
    std::uint64_t word = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (i % 64 == 0) word = rng();
        f.bits[i] = static_cast<std::uint8_t>((word >> (i % 64)) & 1u);
    }
    return f;
}

std::vector<cplx> map_bits(std::span<const std::uint8_t> bits, Modulation m) {
    const std::size_t bps = bits_per_carrier(m);
    if (bits.size() % bps) throw std::invalid_argument("map_bits: length not a multiple of bits per symbol");
    std::vector<cplx> out(bits.size() / bps);
    if (m == Modulation::bpsk) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = bits[i] ? -1.0 : 1.0;
    } else {
        const double a = 1 / std::numbers::sqrt2;
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = {bits[2 * i] ? -a : a, bits[2 * i + 1] ? -a : a};
    }
    return out;
}

std::vector<std::uint8_t> hard_decisions(std::span<const cplx> symbols, Modulation m) {
    std::vector<std::uint8_t> bits;
    bits.reserve(symbols.size() * bits_per_carrier(m));
    for (const auto& s : symbols) {
        bits.push_back(s.real() < 0);
        if (m == Modulation::qpsk) bits.push_back(s.imag() < 0);
    }
    return bits;
}

SymbolGrid place_on_carriers(std::span<const cplx> symbols, const OfdmConfig& cfg) {
    const std::size_t nc = cfg.num_carriers();
    if (symbols.size() % nc) throw std::invalid_argument("place_on_carriers: symbol count not a multiple of data carriers");
    SymbolGrid grid{cfg.fft_size, std::vector<cplx>(symbols.size() / nc * cfg.fft_size)};
    for (std::size_t s = 0; s < symbols.size() / nc; ++s)
        for (std::size_t c = 0; c < nc; ++c) grid.bins[s * cfg.fft_size + cfg.carrier_lo + c] = symbols[s * nc + c];
    return grid;
}

std::vector<cplx> ofdm_chips(const SymbolGrid& grid, const OfdmConfig& cfg) {
    cfg.validate();
    if (grid.fft_size != cfg.fft_size || grid.bins.size() % cfg.fft_size)
        throw std::invalid_argument("ofdm_chips: grid does not match fft_size");
    const std::size_t N = cfg.fft_size;
    for (std::size_t s = 0; s < grid.num_symbols(); ++s)
        for (std::size_t k = 0; k < N; ++k)
            if ((k < cfg.carrier_lo || k > cfg.carrier_hi) && grid.bins[s * N + k] != cplx{})
                throw std::invalid_argument("ofdm_chips: symbol placed on a non-data carrier");

    Fft ifft(N, FftDirection::inverse);
    const double scale = 1 / std::sqrt(static_cast<double>(N));
    std::vector<cplx> chips;
    chips.reserve(grid.num_symbols() * cfg.chips_per_symbol());
    std::vector<cplx> td(N);
    for (std::size_t s = 0; s < grid.num_symbols(); ++s) {
        ifft.execute(grid.symbol(s), td);
        for (auto& v : td) v *= scale;
        chips.insert(chips.end(), td.end() - static_cast<std::ptrdiff_t>(cfg.cyclic_prefix), td.end());
        chips.insert(chips.end(), td.begin(), td.end());
    }
    return chips;
}

double rrc_pulse(double t, double beta) {
    const double eps = 1e-9;
    if (std::abs(t) < eps) return 1 - beta + 4 * beta / pi;
    if (std::abs(std::abs(t) - 1 / (4 * beta)) < eps)
        return beta / std::numbers::sqrt2 *
               ((1 + 2 / pi) * std::sin(pi / (4 * beta)) + (1 - 2 / pi) * std::cos(pi / (4 * beta)));
    const double x = 4 * beta * t;
    return (std::sin(pi * t * (1 - beta)) + x * std::cos(pi * t * (1 + beta))) / (pi * t * (1 - x * x));
}

SignalBuffer ofdm_modulate(const SymbolGrid& grid, const OfdmConfig& cfg) {
    const auto chips = ofdm_chips(grid, cfg);
    const std::size_t R = cfg.analog_per_chip();
    const std::size_t half_span = cfg.mf_span_symbols / 2;
    const std::size_t half_taps = half_span * R;
    std::vector<double> pulse(2 * half_taps + 1);
    for (std::size_t i = 0; i < pulse.size(); ++i)
        pulse[i] = rrc_pulse((static_cast<double>(i) - static_cast<double>(half_taps)) / static_cast<double>(R), cfg.rolloff);

    const std::size_t n_out = chips.size() * R;
    std::vector<cplx> out(n_out);
    const auto M = static_cast<std::ptrdiff_t>(chips.size());
    for (std::size_t n = 0; n < n_out; ++n) {
        const auto m_centre = static_cast<std::ptrdiff_t>(n / R);
        const auto frac = static_cast<std::ptrdiff_t>(n % R);
        cplx acc{};
        const auto h = static_cast<std::ptrdiff_t>(half_span);
        for (std::ptrdiff_t m = m_centre - h; m <= m_centre + h + 1; ++m) {
            if (m < 0 || m >= M) continue;
            // offset of sample n from chip m in analog samples
            const std::ptrdiff_t off = (m_centre - m) * static_cast<std::ptrdiff_t>(R) + frac;
            const std::ptrdiff_t idx = off + static_cast<std::ptrdiff_t>(half_taps);
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(pulse.size())) continue;
            acc += chips[static_cast<std::size_t>(m)] * pulse[static_cast<std::size_t>(idx)];
        }
        out[n] = acc;
    }
    return SignalBuffer(std::move(out), cfg.analog_rate(), Probe::tx);
}

namespace {

std::vector<double> sampled_pulse(const OfdmConfig& cfg, auto&& fn) {
    const std::size_t L = cfg.adc_per_chip();
    const std::size_t half = cfg.mf_span_symbols / 2 * L;
    std::vector<double> h(2 * half + 1);
    for (std::size_t i = 0; i < h.size(); ++i)
        h[i] = fn((static_cast<double>(i) - static_cast<double>(half)) / static_cast<double>(L));
    return h;
}

double unit_energy_scale(const std::vector<double>& h) {
    double e = 0;
    for (double v : h) e += v * v;
    return 1 / std::sqrt(e);
}

}  // namespace

std::vector<double> matched_filter_taps(const OfdmConfig& cfg) {
    cfg.validate();
    auto h = sampled_pulse(cfg, [&](double t) { return rrc_pulse(t, cfg.rolloff); });
    const double s = unit_energy_scale(h);
    for (auto& v : h) v *= s;
    return h;
}

std::vector<double> modified_matched_filter_taps(const OfdmConfig& cfg, double tau, DerivativeScheme scheme) {
    if (!(tau >= 0)) throw std::invalid_argument("modified_matched_filter_taps: tau must be non-negative");
    auto h = matched_filter_taps(cfg);
    if (tau == 0) return h;
    std::vector<double> dh(h.size(), 0.0);
    const double rate = cfg.mf_sampling_rate();
    if (scheme == DerivativeScheme::central_difference) {
        for (std::size_t k = 0; k < h.size(); ++k) {
            const double next = k + 1 < h.size() ? h[k + 1] : 0.0;
            const double prev = k > 0 ? h[k - 1] : 0.0;
            dh[k] = (next - prev) * rate / 2;
        }
    } else {
        // d/dt of the continuous pulse in chip units, fourth-order central difference
        auto raw = matched_filter_taps(cfg);
        const double s = raw[raw.size() / 2] / rrc_pulse(0, cfg.rolloff);
        const double d = 1e-4;
        auto deriv = sampled_pulse(cfg, [&](double t) {
            auto f = [&](double u) { return rrc_pulse(u, cfg.rolloff); };
            return (8 * (f(t + d) - f(t - d)) - (f(t + 2 * d) - f(t - 2 * d))) / (12 * d);
        });
        for (std::size_t k = 0; k < h.size(); ++k) dh[k] = s * deriv[k] * cfg.fs_hz;
    }
    for (std::size_t k = 0; k < h.size(); ++k) h[k] += tau * dh[k];
    return h;
}

DemodResult demodulate(const SignalBuffer& adc, const OfdmConfig& cfg, std::span<const double> taps,
                       const DemodAlignment& align, SymbolRange range) {
    cfg.validate();
    if (std::abs(adc.sample_rate - cfg.fs_adc_hz) > 1e-9 * cfg.fs_adc_hz)
        throw std::invalid_argument("demodulate: buffer is not at the ADC rate");
    const std::size_t per_symbol = cfg.adc_per_symbol();
    if (adc.empty() || adc.size() % per_symbol)
        throw std::invalid_argument("demodulate: buffer length is not a whole number of symbols");
    if (!align.carrier_gain.empty() && align.carrier_gain.size() != cfg.num_carriers())
        throw std::invalid_argument("demodulate: carrier gain table size mismatch");

    const std::size_t total_sym = adc.size() / per_symbol;
    if (range.first >= total_sym || range.first + range.count > total_sym)
        throw std::invalid_argument("demodulate: symbol range outside the buffer");
    const std::size_t n_sym = range.count ? range.count : total_sym - range.first;
    const std::size_t L = cfg.adc_per_chip();
    const std::size_t N = cfg.fft_size;
    const auto half = static_cast<std::ptrdiff_t>(taps.size() / 2);
    double dc_gain = 0;
    for (double v : taps) dc_gain += v;

    const auto n_adc = static_cast<std::ptrdiff_t>(adc.size());
    Fft fft(N, FftDirection::forward);
    std::vector<cplx> chips(N), spec(N);
    const double scale = 1 / (std::sqrt(static_cast<double>(N)) * dc_gain);

    DemodResult out;
    out.decisions.reserve(n_sym * cfg.num_carriers());
    for (std::size_t s = range.first; s < range.first + n_sym; ++s) {
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t chip = s * cfg.chips_per_symbol() + cfg.cyclic_prefix + i;
            const std::ptrdiff_t centre = static_cast<std::ptrdiff_t>(chip * L) + align.delay;
            cplx acc{};
            const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(-half, centre - (n_adc - 1));
            const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(half, centre);
            for (std::ptrdiff_t j = lo; j <= hi; ++j)
                acc += taps[static_cast<std::size_t>(j + half)] * adc.samples[static_cast<std::size_t>(centre - j)];
            chips[i] = acc;
        }
        fft.execute(chips, spec);
        for (std::size_t c = 0; c < cfg.num_carriers(); ++c) {
            cplx d = spec[cfg.carrier_lo + c] * scale;
            if (!align.carrier_gain.empty()) d /= align.carrier_gain[c];
            out.decisions.push_back(d);
        }
    }
    out.bits = hard_decisions(out.decisions, cfg.modulation);
    return out;
}

DemodResult demodulate(const SignalBuffer& adc, const OfdmConfig& cfg, MfKind kind, double tau,
                       const DemodAlignment& align, SymbolRange range) {
    const auto taps = kind == MfKind::standard ? matched_filter_taps(cfg) : modified_matched_filter_taps(cfg, tau);
    return demodulate(adc, cfg, taps, align, range);
}

BerCount count_ber(std::span<const std::uint8_t> sent, std::span<const std::uint8_t> received) {
    if (sent.size() != received.size()) throw std::invalid_argument("count_ber: length mismatch");
    BerCount c;
    c.total = sent.size();
    for (std::size_t i = 0; i < sent.size(); ++i) c.errors += (sent[i] != received[i]);
    return c;
}

}  // namespace plcsim
