#include "plcsim/stats.hpp"

#include <boost/math/distributions/beta.hpp>

#include <cmath>
#include <stdexcept>

namespace plcsim {

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double bpsk_awgn_ber(double eb_n0_db) { return q_function(std::sqrt(2 * db_to_linear(eb_n0_db))); }

Interval binomial_ci(std::uint64_t errors, std::uint64_t trials, double confidence) {
    if (trials == 0) throw std::invalid_argument("binomial_ci: zero trials");
    if (errors > trials) throw std::invalid_argument("binomial_ci: errors exceed trials");
    const double alpha = 1 - confidence;
    const auto k = static_cast<double>(errors);
    const auto n = static_cast<double>(trials);
    Interval ci;
    ci.lo = errors == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1, alpha / 2);
    ci.hi = errors == trials ? 1.0 : boost::math::ibeta_inv(k + 1, n - k, 1 - alpha / 2);
    return ci;
}

double db_to_linear(double db) { return std::pow(10.0, db / 10); }

double linear_to_db(double lin) { return 10 * std::log10(lin); }

}  // namespace plcsim

namespace plcsim {

namespace {
std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    return splitmix(splitmix(splitmix(base) ^ a) ^ (b * 0x632be59bd9b4e019ULL));
}

}  // namespace plcsim
