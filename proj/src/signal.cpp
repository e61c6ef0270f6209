#include "plcsim/signal.hpp"

#include "plcsim/fft.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace plcsim {

using std::numbers::pi;

std::string_view to_string(Probe p) {
    switch (p) {
        case Probe::none: return "none";
        case Probe::tx: return "tx";
        case Probe::channel: return "channel";
        case Probe::I: return "I";
        case Probe::II: return "II";
        case Probe::III: return "III";
        case Probe::IV: return "IV";
        case Probe::V: return "V";
        case Probe::a: return "a";
        case Probe::b: return "b";
        case Probe::c: return "c";
    }
    return "?";
}

SignalBuffer::SignalBuffer(std::vector<cplx> s, double rate, Probe p)
    : samples(std::move(s)), sample_rate(rate), origin(p) {
    if (!(rate > 0)) throw std::invalid_argument("SignalBuffer: sample_rate must be positive");
}

namespace {

void require_nonempty(const SignalBuffer& buf, const char* what) {
    if (buf.empty()) throw std::invalid_argument(std::string(what) + ": empty buffer");
    if (!(buf.sample_rate > 0)) throw std::invalid_argument(std::string(what) + ": bad sample rate");
}

double bin_frequency(std::size_t k, std::size_t n, double rate) {
    const auto kk = static_cast<double>(k);
    const auto nn = static_cast<double>(n);
    return (2 * k < n ? kk : kk - nn) * rate / nn;
}

}  // namespace

double signed_band_power(const SignalBuffer& buf, FrequencyBand band) {
    require_nonempty(buf, "signed_band_power");
    const std::size_t n = buf.size();
    const auto spectrum = Fft(n, FftDirection::forward)(buf.samples);
    double acc = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = bin_frequency(k, n, buf.sample_rate);
        if (f >= band.lo && f <= band.hi) acc += std::norm(spectrum[k]);
    }
    return acc / (static_cast<double>(n) * static_cast<double>(n));
}

double measure_power(const SignalBuffer& buf, std::optional<FrequencyBand> band) {
    require_nonempty(buf, "measure_power");
    if (!band) {
        double acc = 0;
        for (const auto& s : buf.samples) acc += std::norm(s);
        return acc / static_cast<double>(buf.size());
    }
    const double nyq = buf.sample_rate / 2;
    if (band->lo < 0 || band->hi > nyq || band->lo > band->hi)
        throw std::invalid_argument("measure_power: band outside [0, Nyquist]");
    const std::size_t n = buf.size();
    const auto spectrum = Fft(n, FftDirection::forward)(buf.samples);
    double acc = 0;
    for (std::size_t k = 0; k < n; ++k) {
        const double f = std::abs(bin_frequency(k, n, buf.sample_rate));
        if (f >= band->lo && f <= band->hi) acc += std::norm(spectrum[k]);
    }
    return acc / (static_cast<double>(n) * static_cast<double>(n));
}

double SpectrumEstimate::integrated_power(std::optional<FrequencyBand> band) const {
    double acc = 0;
    for (std::size_t i = 0; i < frequencies.size(); ++i) {
        if (band && (std::abs(frequencies[i]) < band->lo || std::abs(frequencies[i]) > band->hi))
            continue;
        acc += std::pow(10.0, psd_db[i] / 10) * bin_width;
    }
    return acc;
}

SpectrumEstimate estimate_psd(const SignalBuffer& buf, std::size_t segment_len) {
    require_nonempty(buf, "estimate_psd");
    if (segment_len < 2 || segment_len > buf.size())
        throw std::invalid_argument("estimate_psd: segment length must be in [2, buffer length]");
    const std::size_t L = segment_len;
    const std::size_t hop = std::max<std::size_t>(1, L / 2);

    std::vector<double> w(L);
    for (std::size_t i = 0; i < L; ++i) w[i] = 0.5 * (1 - std::cos(2 * pi * static_cast<double>(i) / static_cast<double>(L)));
    const double sum_w = std::accumulate(w.begin(), w.end(), 0.0);
    const double sum_w2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);

    Fft fft(L, FftDirection::forward);
    std::vector<double> acc(L, 0.0);
    std::vector<cplx> seg(L), spec(L);
    std::size_t nseg = 0;
    for (std::size_t start = 0; start + L <= buf.size(); start += hop, ++nseg) {
        for (std::size_t i = 0; i < L; ++i) seg[i] = buf.samples[start + i] * w[i];
        fft.execute(seg, spec);
        for (std::size_t k = 0; k < L; ++k) acc[k] += std::norm(spec[k]);
    }

    SpectrumEstimate out;
    out.bin_width = buf.sample_rate / static_cast<double>(L);
    out.resolution_bw = buf.sample_rate * sum_w2 / (sum_w * sum_w);
    out.frequencies.resize(L);
    out.psd_db.resize(L);
    const double scale = 1.0 / (static_cast<double>(nseg) * buf.sample_rate * sum_w2);
    // fftshift so frequencies increase from -fs/2
    const std::size_t half = (L + 1) / 2;
    for (std::size_t i = 0; i < L; ++i) {
        const std::size_t k = (i + half) % L;
        out.frequencies[i] = bin_frequency(k, L, buf.sample_rate);
        out.psd_db[i] = 10 * std::log10(std::max(acc[k] * scale, 1e-300));
    }
    return out;
}

namespace {

// Odd-length Kaiser-windowed sinc, cutoff in cycles/sample.
std::vector<double> kaiser_lowpass(double cutoff, double transition, double atten_db) {
    const double beta = atten_db > 50 ? 0.1102 * (atten_db - 8.7)
                                      : 0.5842 * std::pow(atten_db - 21, 0.4) + 0.07886 * (atten_db - 21);
    auto half = static_cast<std::size_t>(std::ceil((atten_db - 8) / (2.285 * 2 * pi * transition) / 2));
    const std::size_t n = 2 * half + 1;
    std::vector<double> h(n);
    const double i0b = std::cyl_bessel_i(0.0, beta);
    for (std::size_t i = 0; i < n; ++i) {
        const double m = static_cast<double>(i) - static_cast<double>(half);
        const double x = 2 * pi * cutoff * m;
        const double sinc = m == 0 ? 2 * cutoff : std::sin(x) / (pi * m);
        const double r = m / static_cast<double>(half);
        h[i] = sinc * std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1 - r * r))) / i0b;
    }
    return h;
}

std::size_t integer_ratio(double big, double small) {
    const double r = big / small;
    const double rr = std::round(r);
    if (rr < 1 || std::abs(r - rr) > 1e-9 * rr) throw std::invalid_argument("resample: non-integer rate ratio");
    return static_cast<std::size_t>(rr);
}

}  // namespace

SignalBuffer resample(const SignalBuffer& buf, double target_rate) {
    require_nonempty(buf, "resample");
    if (!(target_rate > 0)) throw std::invalid_argument("resample: target rate must be positive");
    const bool down = target_rate <= buf.sample_rate;
    const std::size_t R = down ? integer_ratio(buf.sample_rate, target_rate)
                               : integer_ratio(target_rate, buf.sample_rate);
    if (R == 1) return SignalBuffer(buf.samples, target_rate, buf.origin);

    const double ratio = static_cast<double>(R);
    auto h = kaiser_lowpass(0.35 / ratio, 0.3 / ratio, 70.0);
    const auto half = static_cast<std::ptrdiff_t>(h.size() / 2);
    const auto n = static_cast<std::ptrdiff_t>(buf.size());
    auto at = [&](std::ptrdiff_t i) { return buf.samples[static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(i, 0, n - 1))]; };

    std::vector<cplx> out;
    if (down) {
        const double total = std::accumulate(h.begin(), h.end(), 0.0);
        for (auto& v : h) v /= total;
        const std::size_t nout = (buf.size() + R - 1) / R;
        out.resize(nout);
        for (std::size_t m = 0; m < nout; ++m) {
            const auto centre = static_cast<std::ptrdiff_t>(m * R);
            cplx acc{};
            for (std::ptrdiff_t j = -half; j <= half; ++j) acc += h[static_cast<std::size_t>(j + half)] * at(centre - j);
            out[m] = acc;
        }
    } else {
        const auto L = static_cast<std::ptrdiff_t>(R);
        // per-phase normalization keeps DC exact in every output phase
        std::vector<double> phase_sum(R, 0.0);
        for (std::ptrdiff_t j = -half; j <= half; ++j)
            phase_sum[static_cast<std::size_t>(((j % L) + L) % L)] += h[static_cast<std::size_t>(j + half)];
        out.resize(buf.size() * R);
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out.size()); ++i) {
            const std::ptrdiff_t ph = i % L;
            cplx acc{};
            // taps j with (i - j) divisible by L
            std::ptrdiff_t j0 = -half + ((ph - (-half)) % L + L) % L;
            for (std::ptrdiff_t j = j0; j <= half; j += L) acc += h[static_cast<std::size_t>(j + half)] * at((i - j) / L);
            out[static_cast<std::size_t>(i)] = acc / phase_sum[static_cast<std::size_t>(ph)];
        }
    }
    return SignalBuffer(std::move(out), target_rate, buf.origin);
}

AmplitudeDensity amplitude_histogram(const SignalBuffer& buf, std::size_t bins) {
    require_nonempty(buf, "amplitude_histogram");
    if (bins < 2) throw std::invalid_argument("amplitude_histogram: need at least 2 bins");
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& s : buf.samples) {
        lo = std::min({lo, s.real(), s.imag()});
        hi = std::max({hi, s.real(), s.imag()});
    }
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    AmplitudeDensity d;
    d.lo = lo;
    d.bin_width = (hi - lo) / static_cast<double>(bins);
    d.real.assign(bins, 0.0);
    d.imag.assign(bins, 0.0);
    auto index = [&](double v) {
        auto i = static_cast<std::size_t>((v - lo) / d.bin_width);
        return std::min(i, bins - 1);
    };
    for (const auto& s : buf.samples) {
        d.real[index(s.real())] += 1;
        d.imag[index(s.imag())] += 1;
    }
    const double norm = 1.0 / (static_cast<double>(buf.size()) * d.bin_width);
    for (std::size_t i = 0; i < bins; ++i) {
        d.real[i] *= norm;
        d.imag[i] *= norm;
    }
    return d;
}

void write_trace_csv(const std::filesystem::path& path, const SignalBuffer& buf) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "t_seconds,re,im\n";
    os.precision(12);
    for (std::size_t i = 0; i < buf.size(); ++i)
        os << static_cast<double>(i) / buf.sample_rate << ',' << buf.samples[i].real() << ',' << buf.samples[i].imag() << '\n';
}

void write_psd_csv(const std::filesystem::path& path, const SpectrumEstimate& psd) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << "f_hz,psd_db\n";
    os.precision(10);
    for (std::size_t i = 0; i < psd.frequencies.size(); ++i) os << psd.frequencies[i] << ',' << psd.psd_db[i] << '\n';
}

}  // namespace plcsim
