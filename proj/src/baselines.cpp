#include "plcsim/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace plcsim {

namespace {
void check_threshold(double t) {
    if (!(t > 0)) throw std::invalid_argument("threshold must be positive");
}
}  // namespace

cplx blank(cplx r, double threshold) {
    check_threshold(threshold);
    return std::abs(r) > threshold ? cplx{} : r;
}

cplx clip_baseline(cplx r, double threshold) {
    check_threshold(threshold);
    const double m = std::abs(r);
    // the rescaled sample can land a rounding error above T; leave it be so
    // that clipping twice equals clipping once
    return m > threshold * (1 + 1e-12) ? r * (threshold / m) : r;
}

SignalBuffer blank(const SignalBuffer& buf, double threshold) {
    check_threshold(threshold);
    SignalBuffer out = buf;
    for (auto& v : out.samples)
        if (std::abs(v) > threshold) v = {};
    return out;
}

SignalBuffer clip_baseline(const SignalBuffer& buf, double threshold) {
    check_threshold(threshold);
    SignalBuffer out = buf;
    for (auto& v : out.samples) v = clip_baseline(v, threshold);
    return out;
}

SignalBuffer apply_nonlinearity(const SignalBuffer& buf, Nonlinearity kind, double threshold) {
    switch (kind) {
        case Nonlinearity::none: return buf;
        case Nonlinearity::blanking: return blank(buf, threshold);
        case Nonlinearity::clipping: return clip_baseline(buf, threshold);
    }
    throw std::invalid_argument("unknown nonlinearity");
}

std::vector<double> log_grid(double lo, double hi, std::size_t points) {
    if (!(lo > 0) || !(hi > lo) || points < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi, points >= 2");
    std::vector<double> g(points);
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (std::size_t i = 0; i < points; ++i) g[i] = lo * std::exp(step * static_cast<double>(i));
    g.back() = hi;
    return g;
}

void ThresholdSearchSpec::validate() const {
    if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
    if (!(grid.front() > 0)) throw std::invalid_argument("threshold grid must be positive");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw std::invalid_argument("threshold grid must be strictly increasing");
    if (trials_per_point == 0) throw std::invalid_argument("trials_per_point must be positive");
}

ThresholdSearchResult optimize_threshold(const ThresholdSearchSpec& spec, const TrialEvaluator& evaluate) {
    spec.validate();
    ThresholdSearchResult r;
    r.curve.resize(spec.grid.size());
    for (std::size_t i = 0; i < spec.grid.size(); ++i) r.curve[i].threshold = spec.grid[i];
    std::vector<GridPoint> trial(spec.grid.size());
    for (std::size_t t = 0; t < spec.trials_per_point; ++t) {
        for (auto& p : trial) p = {};
        evaluate(t, spec.grid, trial);
        for (std::size_t i = 0; i < trial.size(); ++i) {
            r.curve[i].errors += trial[i].errors;
            r.curve[i].bits += trial[i].bits;
        }
    }
    std::size_t best = 0;
    for (std::size_t i = 0; i < r.curve.size(); ++i) {
        if (r.curve[i].bits == 0) throw std::runtime_error("optimize_threshold: evaluator reported no bits");
        if (r.curve[i].errors == 0) r.floor_reached = true;
        // exact integer comparison of errors/bits; strict '<' keeps the smallest threshold on ties
        const auto lhs = static_cast<long double>(r.curve[i].errors) * r.curve[best].bits;
        const auto rhs = static_cast<long double>(r.curve[best].errors) * r.curve[i].bits;
        if (lhs < rhs) best = i;
    }
    r.threshold = r.curve[best].threshold;
    r.ber = r.curve[best].ber();
    return r;
}

}  // namespace plcsim
