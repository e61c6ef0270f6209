#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "plcsim/baselines.hpp"
#include "plcsim/noise.hpp"

#include <cmath>
#include <numbers>

using namespace plcsim;
using std::numbers::pi;

TEST_CASE("blanking examples") {
    const double T = 2;
    const cplx half = std::polar(T / 2, 0.3);
    CHECK(blank(half, T) == half);
    CHECK(blank(std::polar(2 * T, 1.0), T) == cplx{});
    CHECK(blank(cplx{1e300, 0}, INFINITY) == cplx{1e300, 0});
    CHECK_THROWS_AS(blank(half, 0), std::invalid_argument);
    CHECK_THROWS_AS(blank(half, -1), std::invalid_argument);
    CHECK_THROWS_AS(blank(half, NAN), std::invalid_argument);
}

TEST_CASE("clipping examples") {
    const double T = 1.5;
    const cplx in = std::polar(3 * T, pi / 4);
    const cplx out = clip_baseline(in, T);
    CHECK(std::abs(out - std::polar(T, pi / 4)) < 1e-12);
    CHECK(clip_baseline(cplx{0.3, -0.4}, T) == cplx{0.3, -0.4});
    CHECK(clip_baseline(cplx{}, T) == cplx{});
    CHECK_THROWS_AS(clip_baseline(in, 0), std::invalid_argument);
}

TEST_CASE("buffer-level properties") {
    auto buf = gen_awgn(50'000, 1e6, 1.0, 3);
    for (std::size_t i = 0; i < buf.size(); i += 97) buf.samples[i] *= 30;  // outliers
    for (double T : {0.3, 1.0, 2.5, 10.0}) {
        for (auto kind : {Nonlinearity::blanking, Nonlinearity::clipping}) {
            const auto once = apply_nonlinearity(buf, kind, T);
            CHECK(once.sample_rate == buf.sample_rate);
            CHECK(apply_nonlinearity(once, kind, T).samples == once.samples);  // idempotent
            CHECK(measure_power(once) <= measure_power(buf));
            for (std::size_t i = 0; i < buf.size(); ++i) {
                const cplx o = once.samples[i], r = buf.samples[i];
                CHECK(std::abs(o) <= T * (1 + 2e-12));
                if (o != cplx{}) CHECK(std::abs(std::arg(o) - std::arg(r)) < 1e-12);  // phase kept
            }
        }
    }
    CHECK(apply_nonlinearity(buf, Nonlinearity::none, 0.1).samples == buf.samples);
    CHECK(blank(buf, INFINITY).samples == buf.samples);
    CHECK(clip_baseline(buf, INFINITY).samples == buf.samples);
}

TEST_CASE("logarithmic grid") {
    const auto g = log_grid(0.5, 20, 40);
    REQUIRE(g.size() == 40);
    CHECK(g.front() == doctest::Approx(0.5));
    CHECK(g.back() == doctest::Approx(20));
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == doctest::Approx(std::pow(40.0, 1.0 / 39)));
    CHECK_THROWS_AS(log_grid(2, 1, 5), std::invalid_argument);
    CHECK_THROWS_AS(log_grid(0, 1, 5), std::invalid_argument);
}

TEST_CASE("threshold search") {
    ThresholdSearchSpec spec;
    spec.grid = {1, 2, 3, 4, 5};
    spec.trials_per_point = 4;

    SUBCASE("argmin with the full curve") {
        std::size_t calls = 0;
        const std::vector<std::uint64_t> errs{40, 12, 5, 9, 30};
        const auto r = optimize_threshold(spec, [&](std::size_t, std::span<const double> grid, std::span<GridPoint> out) {
            ++calls;
            for (std::size_t i = 0; i < grid.size(); ++i) {
                out[i].errors += errs[i];
                out[i].bits += 1000;
            }
        });
        CHECK(calls == 4);
        CHECK(r.threshold == 3);
        CHECK(r.ber == doctest::Approx(5.0 / 1000));
        REQUIRE(r.curve.size() == 5);
        CHECK(r.curve[0].errors == 160);
        CHECK(r.curve[4].bits == 4000);
        CHECK_FALSE(r.floor_reached);
    }
    SUBCASE("ties go to the smallest threshold") {
        const auto r = optimize_threshold(spec, [&](std::size_t, std::span<const double> grid, std::span<GridPoint> out) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                out[i].errors += i < 2 ? 7 : 0;
                out[i].bits += 100;
            }
        });
        CHECK(r.threshold == 3);
        CHECK(r.ber == 0);
        CHECK(r.floor_reached);
    }
    SUBCASE("deterministic for a deterministic evaluator") {
        auto eval = [](std::size_t trial, std::span<const double> grid, std::span<GridPoint> out) {
            for (std::size_t i = 0; i < grid.size(); ++i) {
                out[i].errors += (trial * 31 + i * 17) % 11;
                out[i].bits += 50;
            }
        };
        const auto a = optimize_threshold(spec, eval), b = optimize_threshold(spec, eval);
        CHECK(a.threshold == b.threshold);
        for (std::size_t i = 0; i < a.curve.size(); ++i) CHECK(a.curve[i].errors == b.curve[i].errors);
    }
    SUBCASE("grid validation") {
        auto bad = spec;
        bad.grid = {};
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad.grid = {1, 1, 2};
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad.grid = {-1, 2};
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
        bad = spec;
        bad.trials_per_point = 0;
        CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    }
}
