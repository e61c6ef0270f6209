#include "plcsim/filters.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace plcsim {

using std::numbers::pi;

OnePoleLowpass::OnePoleLowpass(double corner_hz, double sample_rate) : rate_(sample_rate) {
    if (!(sample_rate > 0)) throw std::invalid_argument("OnePoleLowpass: sample rate must be positive");
    if (!(corner_hz > 0)) throw std::invalid_argument("OnePoleLowpass: corner must be positive");
    bypass_ = !std::isfinite(corner_hz) || corner_hz >= sample_rate / 2;
    a_ = bypass_ ? 1.0 : 1.0 - std::exp(-2 * pi * corner_hz / sample_rate);
}

cplx OnePoleLowpass::response(double f_hz) const {
    if (bypass_) return 1.0;
    const cplx zinv = std::polar(1.0, -2 * pi * f_hz / rate_);
    return a_ / (1.0 - (1.0 - a_) * zinv);
}

Biquad Biquad::butterworth_lowpass(double corner_hz, double sample_rate) {
    if (!(corner_hz > 0) || !(corner_hz < sample_rate / 2))
        throw std::invalid_argument("butterworth_lowpass: corner outside (0, Nyquist)");
    const double k = std::tan(pi * corner_hz / sample_rate);
    const double q = 1.0 / std::numbers::sqrt2;
    const double norm = 1.0 / (1.0 + k / q + k * k);
    const double b0 = k * k * norm;
    return Biquad(b0, 2 * b0, b0, 2 * (k * k - 1) * norm, (1 - k / q + k * k) * norm);
}

cplx Biquad::response(double f_hz, double sample_rate) const {
    const cplx z1 = std::polar(1.0, -2 * pi * f_hz / sample_rate);
    const cplx z2 = z1 * z1;
    return (b0_ + b1_ * z1 + b2_ * z2) / (1.0 + a1_ * z1 + a2_ * z2);
}

}  // namespace plcsim
