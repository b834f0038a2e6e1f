#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

#include "fso/comms.hpp"
#include "fso/controller.hpp"
#include "fso/error.hpp"

using namespace fso;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<cplx> random_inputs(std::size_t n, std::uint64_t seed) {
    RandomStream rs(seed, "controller-test");
    std::vector<cplx> v(n);
    for (auto& x : v) x = std::polar(rs.uniform(0.2, 1.0), rs.uniform(0.0, 2.0 * kPi));
    return v;
}

double sum_power(std::span<const cplx> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return s;
}

}  // namespace

TEST_CASE("Nelder-Mead on a 1-D quadratic") {
    NelderMead nm({0.0}, 0.5);
    // Dense scan oracle for the maximum.
    auto f = [](std::span<const double> x) { return -(x[0] - 1.0) * (x[0] - 1.0); };
    double scan_best = -1e9, scan_x = 0.0;
    for (int i = 0; i <= 4000; ++i) {
        const double x = -2.0 + 4.0 * i / 4000.0;
        const double v = f(std::span<const double>(&x, 1));
        if (v > scan_best) scan_best = v, scan_x = x;
    }
    double last = -1e300;
    while (nm.evaluations() < 60) {
        nelder_mead_step(f, nm);
        CHECK(nm.best_value() >= last);
        last = nm.best_value();
    }
    CHECK(nm.evaluations() <= 62);
    CHECK(std::abs(nm.best_point()[0] - scan_x) < 1e-3);
}

TEST_CASE("Nelder-Mead on a flat objective") {
    NelderMead nm({0.3, -0.2}, 1.0);
    auto f = [](std::span<const double>) { return 2.0; };
    nelder_mead_step(f, nm);
    const double d0 = nm.diameter();
    for (int i = 0; i < 30; ++i) nelder_mead_step(f, nm);
    CHECK(nm.best_value() == 2.0);
    CHECK(nm.diameter() < d0);
}

TEST_CASE("Nelder-Mead faults") {
    NelderMead nm({0.0}, 0.5);
    CHECK_THROWS_AS(nm.tell(NAN), ControllerFault);
    CHECK_THROWS_AS(nelder_mead_step([](std::span<const double>) { return INFINITY; }, nm), ControllerFault);
    CHECK_THROWS_AS(NelderMead({}, 0.5), ParameterError);
    CHECK_THROWS_AS(NelderMead({0.0}, 0.0), ParameterError);
}

TEST_CASE("config validation") {
    ControllerConfig c;
    CHECK_NOTHROW(c.validate());
    c.loop_rate_hz = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.wrap_transient_s = -1;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.wrap_residual = 2;
    CHECK_THROWS_AS(c.validate(), ParameterError);
    c = {};
    c.record_stride = 0;
    CHECK_THROWS_AS(c.validate(), ParameterError);
}

TEST_CASE("2-input static convergence on 100 seeds") {
    const auto t = CombinerTopology::balanced_tree(2).lossless();
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const auto in = random_inputs(2, seed);
        ControllerConfig cfg;
        const auto tr = run_closed_loop([&](double, std::span<cplx> x) { std::copy(in.begin(), in.end(), x.begin()); },
                                        200, t, cfg, seed);
        CHECK(tr.best_power >= 0.999 * sum_power(in));
    }
}

TEST_CASE("static frame holds the optimum") {
    const auto t = CombinerTopology::balanced_tree(6).lossless();
    const auto in = random_inputs(6, 11);
    ControllerConfig cfg;
    cfg.evals_per_frame = 4000;
    const auto tr = run_closed_loop({in}, 100.0, t, cfg, 3);
    CHECK(tr.frame_power[0] >= 0.999 * sum_power(in));
    // Determinism.
    const auto again = run_closed_loop({in}, 100.0, t, cfg, 3);
    REQUIRE(again.samples.size() == tr.samples.size());
    for (std::size_t i = 0; i < tr.samples.size(); ++i) CHECK(again.samples[i].power == tr.samples[i].power);
    // Timestamps step at the loop rate.
    for (std::size_t i = 1; i < tr.samples.size(); ++i)
        CHECK(tr.samples[i].time_s - tr.samples[i - 1].time_s == doctest::Approx(1.0 / 400e3));
}

TEST_CASE("wrap events") {
    const auto t = CombinerTopology::balanced_tree(2).lossless();
    ControllerConfig cfg;
    const std::size_t n = 10000;
    const double duration = n / cfg.loop_rate_hz;
    SUBCASE("static inputs produce none") {
        const auto in = random_inputs(2, 5);
        const auto tr = run_closed_loop([&](double, std::span<cplx> x) { std::copy(in.begin(), in.end(), x.begin()); },
                                        n, t, cfg, 1);
        CHECK(wrap_event_rate(tr).events == 0);
        CHECK(wrap_event_rate(tr).duty == 0.0);
    }
    SUBCASE("monotonic drift of 10 pi") {
        auto drift = [&](double time, std::span<cplx> x) {
            x[0] = std::sqrt(0.5);
            x[1] = std::sqrt(0.5) * std::polar(1.0, -10.0 * kPi * time / duration);
        };
        const auto tr = run_closed_loop(drift, n, t, cfg, 1);
        const auto ws = wrap_event_rate(tr);
        CHECK(ws.events >= 5);
        CHECK(ws.events_per_s == doctest::Approx(ws.events / duration));
        CHECK(ws.duty == doctest::Approx(ws.events * cfg.wrap_transient_s / duration).epsilon(1e-9));
        CHECK(ber_floor_from_phase_jumps(ws.duty) == doctest::Approx(0.5 * ws.duty));

        // A neutral wrap model leaves the power trace unchanged.
        ControllerConfig neutral = cfg;
        neutral.wrap_transient_s = 0.0;
        neutral.wrap_residual = 1.0;
        ControllerConfig off = cfg;
        off.wrap_model = false;
        const auto a = run_closed_loop(drift, n, t, neutral, 1);
        const auto b = run_closed_loop(drift, n, t, off, 1);
        REQUIRE(a.samples.size() == b.samples.size());
        for (std::size_t i = 0; i < a.samples.size(); ++i)
            CHECK(a.samples[i].power == doctest::Approx(b.samples[i].power).epsilon(1e-9));
        // Passivity without the wrap model.
        for (const auto& s : b.samples) CHECK(s.power <= 1.0 + 1e-12);
    }
}

TEST_CASE("correction bandwidth") {
    const auto t = CombinerTopology::balanced_tree(2);
    ControllerConfig cfg;
    CHECK(correction_bandwidth(0.0, 1.0, t, cfg) >= 0.999);
    double prev = 1.0;
    for (double f : {300.0, 1000.0, 3000.0, 10000.0, 30000.0}) {
        const double e = correction_bandwidth(f, 1.0, t, cfg);
        CHECK(e <= prev);
        prev = e;
    }
    CHECK(open_loop_efficiency(1.0) == doctest::Approx(0.5 * (1.0 + std::cyl_bessel_j(0.0, 1.0))));
    const double knee = correction_knee_hz(1.0, t, cfg);
    CHECK(knee >= 1500.0);
    CHECK(knee <= 6000.0);
    CHECK_THROWS_AS(correction_bandwidth(100.0, 1.0, CombinerTopology::balanced_tree(3), cfg), ParameterError);
}

TEST_CASE("closed loop input checks") {
    const auto t = CombinerTopology::balanced_tree(2);
    ControllerConfig cfg;
    CHECK_THROWS_AS(run_closed_loop(std::vector<std::vector<cplx>>{}, 10.0, t, cfg, 1), ParameterError);
    CHECK_THROWS_AS(run_closed_loop({{1.0}}, 10.0, t, cfg, 1), DimensionError);
    cfg.loop_rate_hz = 5.0;
    CHECK_THROWS_AS(run_closed_loop({{1.0, 1.0}}, 10.0, t, cfg, 1), ParameterError);
}
