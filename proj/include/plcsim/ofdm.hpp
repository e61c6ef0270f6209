// OFDM transmitter and receiver: bit mapping, IDFT symbol construction,
// root-raised-cosine pulse shaping, (modified) matched filtering, BER.
#pragma once

#include "plcsim/signal.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace plcsim {

enum class Modulation { bpsk, qpsk };

std::size_t bits_per_carrier(Modulation m);

struct OfdmConfig {
    std::size_t fft_size = 512;
    std::size_t carrier_lo = 86;   // first data carrier
    std::size_t carrier_hi = 182;  // last data carrier, inclusive
    Modulation modulation = Modulation::bpsk;
    double fs_hz = 250e3;                // OFDM (chip) sample rate
    double fs_adc_hz = 1e6;              // ADC and matched-filter rate, 8 B_x
    std::size_t oversample_factor = 32;  // analog emulation rate / ADC rate
    double rolloff = 0.25;
    std::size_t mf_span_symbols = 16;    // pulse span in chip periods
    std::size_t cyclic_prefix = 0;       // chips
    bool use_modified_mf = true;

    void validate() const;

    std::size_t num_carriers() const { return carrier_hi - carrier_lo + 1; }
    std::size_t bits_per_symbol() const { return num_carriers() * bits_per_carrier(modulation); }
    std::size_t chips_per_symbol() const { return fft_size + cyclic_prefix; }
    double symbol_duration() const { return static_cast<double>(fft_size) / fs_hz; }
    double subcarrier_spacing() const { return fs_hz / static_cast<double>(fft_size); }
    // Nyquist bandwidth of the chip stream; the RRC pulse has symbol rate 2 B_x.
    double signal_bandwidth() const { return fs_hz / 2; }
    double mf_bandwidth() const { return (1 + rolloff) * signal_bandwidth(); }
    double mf_sampling_rate() const { return fs_adc_hz; }
    double analog_rate() const { return fs_adc_hz * static_cast<double>(oversample_factor); }
    std::size_t adc_per_chip() const;
    std::size_t analog_per_chip() const { return adc_per_chip() * oversample_factor; }
    std::size_t adc_per_symbol() const { return chips_per_symbol() * adc_per_chip(); }
    std::size_t analog_per_symbol() const { return chips_per_symbol() * analog_per_chip(); }
    // Occupied band of the data carriers, Hz (positive frequencies).
    FrequencyBand data_band() const;
};

struct BitFrame {
    std::vector<std::uint8_t> bits;
    std::uint64_t seed = 0;

    static BitFrame random(std::size_t n, std::uint64_t seed);
};

// BPSK: 0 -> +1, 1 -> -1.  QPSK: (b0, b1) -> ((1-2 b0) + j (1-2 b1)) / sqrt 2.
std::vector<cplx> map_bits(std::span<const std::uint8_t> bits, Modulation m);
std::vector<std::uint8_t> hard_decisions(std::span<const cplx> symbols, Modulation m);

// Frequency-domain content of consecutive OFDM symbols, fft_size bins each.
struct SymbolGrid {
    std::size_t fft_size = 0;
    std::vector<cplx> bins;

    std::size_t num_symbols() const { return fft_size ? bins.size() / fft_size : 0; }
    std::span<const cplx> symbol(std::size_t i) const { return {bins.data() + i * fft_size, fft_size}; }
};

// Lays mapped symbols onto the data carriers, symbol after symbol.
SymbolGrid place_on_carriers(std::span<const cplx> symbols, const OfdmConfig& cfg);

// Chip-rate sequence: 1/sqrt(N)-scaled IDFT per symbol, serialized with optional CP.
std::vector<cplx> ofdm_chips(const SymbolGrid& grid, const OfdmConfig& cfg);

// Pulse-shaped complex baseband at the analog emulation rate. Chip m sits at
// analog sample m * analog_per_chip; the pulse is zero-phase.
SignalBuffer ofdm_modulate(const SymbolGrid& grid, const OfdmConfig& cfg);

// Root-raised-cosine pulse for unit symbol period; its spectrum is 1 on the passband.
double rrc_pulse(double t, double rolloff);

std::vector<double> matched_filter_taps(const OfdmConfig& cfg);

enum class DerivativeScheme {
    continuous,         // derivative of the continuous-time pulse, then sampled
    central_difference  // (h[k+1] - h[k-1]) * rate / 2 on the taps
};

// h_mod[k] = h[k] + tau * dh/dt[k]. tau == 0 returns h.
std::vector<double> modified_matched_filter_taps(const OfdmConfig& cfg, double tau,
                                                 DerivativeScheme scheme = DerivativeScheme::continuous);

enum class MfKind { standard, modified };

// Receiver-side knowledge of the deterministic analog chain: an integer
// delay in ADC samples and one complex gain per data carrier (empty = unity).
struct DemodAlignment {
    std::ptrdiff_t delay = 0;
    std::vector<cplx> carrier_gain;
};

// Symbols [first, first + count) of the buffer; count 0 means to the end.
struct SymbolRange {
    std::size_t first = 0;
    std::size_t count = 0;
};

struct DemodResult {
    std::vector<cplx> decisions;  // equalized data-carrier statistics, symbol-major
    std::vector<std::uint8_t> bits;
};

DemodResult demodulate(const SignalBuffer& adc, const OfdmConfig& cfg, std::span<const double> mf_taps,
                       const DemodAlignment& align = {}, SymbolRange range = {});
DemodResult demodulate(const SignalBuffer& adc, const OfdmConfig& cfg, MfKind kind, double tau,
                       const DemodAlignment& align = {}, SymbolRange range = {});

struct BerCount {
    std::uint64_t errors = 0;
    std::uint64_t total = 0;
    double ber() const { return total ? static_cast<double>(errors) / static_cast<double>(total) : 0.0; }
};

BerCount count_ber(std::span<const std::uint8_t> sent, std::span<const std::uint8_t> received);
inline BerCount count_ber(const BitFrame& sent, std::span<const std::uint8_t> received) {
    return count_ber(std::span<const std::uint8_t>(sent.bits), received);
}

}  // namespace plcsim
