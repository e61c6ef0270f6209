#pragma once

#include <cstdint>

namespace plcsim {

// Gaussian tail probability Q(x) = P(N(0,1) > x).
double q_function(double x);

// Closed-form BPSK bit error rate over AWGN: Q(sqrt(2 Eb/N0)).
double bpsk_awgn_ber(double eb_n0_db);

struct Interval {
    double lo = 0;
    double hi = 1;
    bool contains(double v) const { return v >= lo && v <= hi; }
    bool overlaps(const Interval& o) const { return lo <= o.hi && o.lo <= hi; }
};

// Clopper-Pearson exact binomial confidence interval.
Interval binomial_ci(std::uint64_t errors, std::uint64_t trials, double confidence = 0.95);

double db_to_linear(double db);
double linear_to_db(double lin);

}  // namespace plcsim

namespace plcsim {

// SplitMix64-based derivation of independent stream seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

}  // namespace plcsim
