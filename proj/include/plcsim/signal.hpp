// Complex-baseband signal container and measurement utilities.
#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

namespace plcsim {

using cplx = std::complex<double>;

// Where in the processing chain a trace was taken. I..V are the ACDL
// probe points, a..c the matching points of the linear reference chain.
enum class Probe { none, tx, channel, I, II, III, IV, V, a, b, c };

std::string_view to_string(Probe p);

struct SignalBuffer {
    std::vector<cplx> samples;
    double sample_rate = 0;  // Hz
    Probe origin = Probe::none;

    SignalBuffer() = default;
    SignalBuffer(std::vector<cplx> s, double rate, Probe p = Probe::none);

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

// Closed frequency interval in Hz.
struct FrequencyBand {
    double lo = 0;
    double hi = 0;
};

// Mean squared magnitude. With a band, only spectral content with
// |f| in [lo, hi] is counted (both signs of frequency).
double measure_power(const SignalBuffer& buf, std::optional<FrequencyBand> band = std::nullopt);

// Power of the content at signed frequencies f in [lo, hi]; lo may be negative.
double signed_band_power(const SignalBuffer& buf, FrequencyBand band);

struct SpectrumEstimate {
    std::vector<double> frequencies;  // Hz, strictly increasing, -fs/2 .. fs/2
    std::vector<double> psd_db;       // 10 log10(power / Hz)
    double resolution_bw = 0;         // Hz, equivalent noise bandwidth of the window
    double bin_width = 0;             // Hz

    // Power obtained by integrating the estimate, optionally over |f| in band.
    double integrated_power(std::optional<FrequencyBand> band = std::nullopt) const;
};

// Welch estimate: Hann-windowed segments with 50% overlap.
SpectrumEstimate estimate_psd(const SignalBuffer& buf, std::size_t segment_len);

// Integer-ratio rate conversion with a zero-phase Kaiser-windowed sinc
// filter. Ends are extended by repeating the edge sample.
SignalBuffer resample(const SignalBuffer& buf, double target_rate);

struct AmplitudeDensity {
    double lo = 0;
    double bin_width = 0;
    std::vector<double> real;  // density per unit amplitude, integrates to 1
    std::vector<double> imag;

    double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width; }
};

AmplitudeDensity amplitude_histogram(const SignalBuffer& buf, std::size_t bins);

// CSV dumps: (t_seconds, re, im) and (f_hz, psd_db).
void write_trace_csv(const std::filesystem::path& path, const SignalBuffer& buf);
void write_psd_csv(const std::filesystem::path& path, const SpectrumEstimate& psd);

}  // namespace plcsim
