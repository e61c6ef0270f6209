// Thin RAII wrapper over FFTW complex-to-complex transforms.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace plcsim {

using cplx = std::complex<double>;

enum class FftDirection { forward, inverse };

// Unnormalized DFT of length n. Plans are created once per (n, direction)
// and shared; execute() is safe to call from several threads.
class Fft {
public:
    Fft(std::size_t n, FftDirection dir);

    std::size_t size() const { return n_; }

    void execute(std::span<const cplx> in, std::span<cplx> out) const;
    std::vector<cplx> operator()(std::span<const cplx> in) const;

private:
    std::size_t n_;
    void* plan_;  // fftw_plan, owned by the process-wide cache
};

}  // namespace plcsim
