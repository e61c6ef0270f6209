// Memoryless blanking and clipping applied to the ADC-rate received signal,
// plus an exhaustive threshold search.
#pragma once

#include "plcsim/signal.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace plcsim {

// 0 if |r| > T, else r. Throws for T <= 0 (T = +inf is the identity).
cplx blank(cplx r, double threshold);
// r if |r| <= T, else T r / |r|.
cplx clip_baseline(cplx r, double threshold);

SignalBuffer blank(const SignalBuffer& buf, double threshold);
SignalBuffer clip_baseline(const SignalBuffer& buf, double threshold);

enum class Nonlinearity { none, blanking, clipping };

SignalBuffer apply_nonlinearity(const SignalBuffer& buf, Nonlinearity kind, double threshold);

// 40 log-spaced points from 0.5x to 20x the received RMS by default.
std::vector<double> log_grid(double lo, double hi, std::size_t points);

enum class SearchMetric { ber };

struct ThresholdSearchSpec {
    std::vector<double> grid;         // strictly increasing, positive
    SearchMetric metric = SearchMetric::ber;
    std::size_t trials_per_point = 8;

    void validate() const;
};

struct GridPoint {
    double threshold = 0;
    std::uint64_t errors = 0;
    std::uint64_t bits = 0;
    double ber() const { return bits ? static_cast<double>(errors) / static_cast<double>(bits) : 0.0; }
};

struct ThresholdSearchResult {
    double threshold = 0;
    double ber = 0;
    std::vector<GridPoint> curve;
    bool floor_reached = false;  // some grid point observed zero errors
};

// Evaluates one trial for every threshold of the grid on the same noise
// realization; fills errors/bits per grid entry (same length as grid).
using TrialEvaluator = std::function<void(std::size_t trial, std::span<const double> grid, std::span<GridPoint> out)>;

// Exhaustive search with common random numbers across grid points; ties go
// to the smallest threshold.
ThresholdSearchResult optimize_threshold(const ThresholdSearchSpec& spec, const TrialEvaluator& evaluate);

}  // namespace plcsim
