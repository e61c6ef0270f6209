#include "plcsim/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace plcsim {

namespace {

// FFTW's planner is not thread-safe; plans live until process exit.
struct PlanCache {
    std::mutex mutex;
    std::map<std::pair<std::size_t, int>, fftw_plan> plans;

    ~PlanCache() {
        for (auto& [key, plan] : plans) fftw_destroy_plan(plan);
    }

    fftw_plan get(std::size_t n, int sign) {
        std::lock_guard lock(mutex);
        auto key = std::make_pair(n, sign);
        if (auto it = plans.find(key); it != plans.end()) return it->second;
        std::vector<fftw_complex> a(n), b(n);
        fftw_plan p = fftw_plan_dft_1d(static_cast<int>(n), a.data(), b.data(), sign,
                                       FFTW_ESTIMATE | FFTW_UNALIGNED);
        if (!p) throw std::runtime_error("fftw plan creation failed");
        plans.emplace(key, p);
        return p;
    }
};

PlanCache& cache() {
    static PlanCache c;
    return c;
}

}  // namespace

Fft::Fft(std::size_t n, FftDirection dir) : n_(n) {
    if (n == 0) throw std::invalid_argument("Fft: zero length");
    plan_ = cache().get(n, dir == FftDirection::forward ? FFTW_FORWARD : FFTW_BACKWARD);
}

void Fft::execute(std::span<const cplx> in, std::span<cplx> out) const {
    if (in.size() != n_ || out.size() != n_) throw std::invalid_argument("Fft: size mismatch");
    // new-array execute: FFTW never writes to the input for out-of-place c2c plans
    auto* src = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data()));
    auto* dst = reinterpret_cast<fftw_complex*>(out.data());
    if (src == dst) {
        std::vector<cplx> tmp(in.begin(), in.end());
        fftw_execute_dft(static_cast<fftw_plan>(plan_), reinterpret_cast<fftw_complex*>(tmp.data()),
                         dst);
        return;
    }
    fftw_execute_dft(static_cast<fftw_plan>(plan_), src, dst);
}

std::vector<cplx> Fft::operator()(std::span<const cplx> in) const {
    std::vector<cplx> out(n_);
    execute(in, out);
    return out;
}

}  // namespace plcsim
