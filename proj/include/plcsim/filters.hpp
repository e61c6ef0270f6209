// Recursive analog-filter emulations used at the oversampled rate.
#pragma once

#include <complex>
#include <span>

namespace plcsim {

using cplx = std::complex<double>;

// First-order lowpass, impulse-invariant discretization of 1/(1 + s/wc).
// Unit DC gain. A corner at or above the Nyquist rate is treated as bypass.
class OnePoleLowpass {
public:
    OnePoleLowpass() = default;
    OnePoleLowpass(double corner_hz, double sample_rate);

    cplx step(cplx x) {
        if (bypass_) return x;
        state_ += a_ * (x - state_);
        return state_;
    }
    void process(std::span<cplx> xs) {
        for (auto& x : xs) x = step(x);
    }
    void reset(cplx s = {}) { state_ = s; }
    bool bypass() const { return bypass_; }

    // Exact response of the discrete recursion at frequency f.
    cplx response(double f_hz) const;

private:
    double a_ = 1.0;
    double rate_ = 1.0;
    bool bypass_ = true;
    cplx state_{};
};

// Direct-form-II-transposed biquad with real coefficients, complex data.
class Biquad {
public:
    Biquad() = default;
    Biquad(double b0, double b1, double b2, double a1, double a2)
        : b0_(b0), b1_(b1), b2_(b2), a1_(a1), a2_(a2) {}

    // 2nd-order Butterworth lowpass via bilinear transform, prewarped at the corner.
    static Biquad butterworth_lowpass(double corner_hz, double sample_rate);

    cplx step(cplx x) {
        cplx y = b0_ * x + z1_;
        z1_ = b1_ * x - a1_ * y + z2_;
        z2_ = b2_ * x - a2_ * y;
        return y;
    }
    void process(std::span<cplx> xs) {
        for (auto& x : xs) x = step(x);
    }
    void reset() { z1_ = z2_ = {}; }

    cplx response(double f_hz, double sample_rate) const;

private:
    double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
    cplx z1_{}, z2_{};
};

}  // namespace plcsim
