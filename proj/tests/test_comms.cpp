#include "doctest.h"

#include <cmath>
#include <vector>

#include "fso/comms.hpp"
#include "fso/error.hpp"
#include "fso/rng.hpp"

using namespace fso;

TEST_CASE("instantaneous BER") {
    ReceiverModel m;
    CHECK(ber_instant(m.sensitivity_dbm, m) == doctest::Approx(1e-9).epsilon(0.05));
    CHECK(ber_instant(-1e9, m) == doctest::Approx(0.5));
    CHECK(ber_instant(-INFINITY, m) == 0.5);
    CHECK(ber_instant(m.sensitivity_dbm + 1, m) < ber_instant(m.sensitivity_dbm, m));
    m.floor_duty = 2e-7 * 2;
    CHECK(ber_instant(m.sensitivity_dbm + 30, m) == doctest::Approx(2e-7).epsilon(0.05));
    CHECK(std::abs(ber_instant(m.sensitivity_dbm + 30, m) - 1e-7 * 2) < 1e-8);
    m.floor_duty = 1.0;
    CHECK(ber_instant(0.0, m) == 0.5);
    const auto d = ReceiverModel::dpsk_from_ook(-39.0);
    CHECK(d.format == Modulation::DPSK);
    CHECK(d.sensitivity_dbm == -42.0);
    CHECK(modulation_from_string("dpsk") == Modulation::DPSK);
    CHECK(to_string(Modulation::OOK) == "ook");
    CHECK_THROWS_AS(modulation_from_string("qam"), ParameterError);
    ReceiverModel bad;
    bad.floor_duty = 1.5;
    CHECK_THROWS_AS(bad.validate(), ParameterError);
    CHECK_THROWS_AS(ber_instant(NAN, ReceiverModel{}), ParameterError);
}

TEST_CASE("phase-jump floor") {
    CHECK(ber_floor_from_phase_jumps(0.0) == 0.0);
    CHECK(ber_floor_from_phase_jumps(4e-7) == doctest::Approx(2e-7));
    ReceiverModel m;
    m.floor_duty = 3e-6;
    CHECK(ber_instant(m.sensitivity_dbm + 30, m) == doctest::Approx(ber_floor_from_phase_jumps(3e-6)).epsilon(0.05));
    CHECK_THROWS_AS(ber_floor_from_phase_jumps(-1.0), ParameterError);
}

TEST_CASE("cumulated BER") {
    ReceiverModel m;
    PowerTrace t;
    t.time_s = {0, 1, 2};
    t.rop_dbm = {-38, -38, -38};
    CHECK(cumulated_ber(t, m) == doctest::Approx(ber_instant(-38, m)).epsilon(1e-14));
    // Two frames at 1e-3 and 1e-9: find the ROPs on the model.
    auto rop_for = [&](double target) {
        double lo = -80, hi = 0;
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (ber_instant(mid, m) > target ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    };
    PowerTrace two;
    two.time_s = {0, 1};
    two.rop_dbm = {rop_for(1e-3), rop_for(1e-9)};
    CHECK(cumulated_ber(two, m) == doctest::Approx(5.0000005e-4).epsilon(1e-9));
    CHECK_THROWS_AS(cumulated_ber(PowerTrace{}, m), ParameterError);
}

TEST_CASE("Monte Carlo bit-stream oracle") {
    ReceiverModel m;
    RandomStream rs(42, "trace");
    PowerTrace t;
    for (int i = 0; i < 20; ++i) {
        t.time_s.push_back(i);
        t.rop_dbm.push_back(m.sensitivity_dbm - 6.0 + 4.0 * rs.uniform());
    }
    const std::size_t bits = 1000000;
    RandomStream bit_rng(7, "bits");
    double errors = 0.0, var = 0.0;
    for (double p : t.rop_dbm) {
        const double b = ber_instant(p, m);
        for (std::size_t k = 0; k < bits; ++k) errors += bit_rng.uniform() < b ? 1.0 : 0.0;
        var += bits * b * (1.0 - b);
    }
    const double n = static_cast<double>(bits) * t.size();
    CHECK(std::abs(errors / n - cumulated_ber(t, m)) <= 3.0 * std::sqrt(var) / n);
}

TEST_CASE("frame rate invariance") {
    ReceiverModel m;
    RandomStream rs(3, "trace");
    PowerTrace t;
    for (int i = 0; i < 50; ++i) {
        t.time_s.push_back(i);
        t.rop_dbm.push_back(m.sensitivity_dbm - 8.0 + 10.0 * rs.uniform());
    }
    const std::vector<double> rates{1500.0, 3.0, 1.0};
    const auto c = frame_rate_invariance_check(t, m, rates);
    CHECK(c.invariant);
    CHECK(c.max_rel_deviation <= 1e-12);
    for (double v : c.cumulated) CHECK(v == doctest::Approx(cumulated_ber(t, m)).epsilon(1e-12));
    PowerTrace one;
    one.time_s = {0};
    one.rop_dbm = {-40};
    CHECK(frame_rate_invariance_check(one, m, rates).invariant);
    // Rates above the loop bandwidth are flagged and excluded.
    const auto f = frame_rate_invariance_check(t, m, rates, 100.0);
    CHECK(f.excluded[0]);
    CHECK_FALSE(f.excluded[1]);
    CHECK(f.invariant);
}

TEST_CASE("power trace from efficiency") {
    const std::vector<double> e{1.0, 0.5, 0.25, 0.25};
    const auto t = power_trace_from_efficiency(e, -30.0, 3.0);
    double mean_lin = 0.0;
    for (double p : t.rop_dbm) mean_lin += std::pow(10.0, p / 10.0);
    CHECK(10 * std::log10(mean_lin / 4) == doctest::Approx(-30.0));
    CHECK(t.frame_period_s == doctest::Approx(1.0 / 3.0));
    CHECK(t.time_s[3] == doctest::Approx(1.0));
    const auto f = power_trace_from_efficiency(e, -30.0, 3.0, PowerNormalization::FirstFrame);
    CHECK(f.rop_dbm[0] == -30.0);
    CHECK(f.rop_dbm[2] == doctest::Approx(-30.0 + 10 * std::log10(0.25)));
    CHECK_THROWS_AS(power_trace_from_efficiency(std::vector<double>{0.0, 0.0}, -30, 3), UndefinedEfficiencyError);
    CHECK_THROWS_AS(power_trace_from_efficiency(std::vector<double>{}, -30, 3), ParameterError);
}

TEST_CASE("sync loss") {
    ReceiverModel m;
    PowerTrace t;
    t.frame_period_s = 0.5;
    for (int i = 0; i < 120; ++i) {
        t.time_s.push_back(0.5 * i);
        t.rop_dbm.push_back(-30.0);
    }
    CHECK(sync_loss_stats(t, m).seconds_per_minute == 0.0);
    // Three non-adjacent bad frames at 2 Hz, no reacquisition time.
    for (int i : {10, 40, 90}) t.rop_dbm[static_cast<std::size_t>(i)] = -80.0;
    auto s = sync_loss_stats(t, m, 1e-3, 0.0);
    CHECK(s.bad_frames == 3);
    CHECK(s.outages == 3);
    CHECK(s.seconds_per_minute == doctest::Approx(3 * 0.5 * 60.0 / 60.0));
    // Reacquisition extends every outage.
    s = sync_loss_stats(t, m, 1e-3, 0.1);
    CHECK(s.outage_s == doctest::Approx(3 * 0.6));
    // Adjacent bad frames merge.
    t.rop_dbm[11] = -80.0;
    s = sync_loss_stats(t, m, 1e-3, 0.1);
    CHECK(s.outages == 3);
    CHECK(s.outage_s == doctest::Approx(1.1 + 2 * 0.6));
}

TEST_CASE("penalty and curves") {
    ReceiverModel m;
    const auto sweep = rop_sweep(-50, -20, 0.25);
    CHECK(sweep.size() == 121);
    CHECK(sweep.back() == doctest::Approx(-20.0));
    CHECK_THROWS_AS(rop_sweep(0, -1, 1), ParameterError);
    const auto ref = btb_curve(m, sweep);
    CHECK(power_penalty(ref, ref, 1e-4) == 0.0);
    ReceiverModel shifted = m;
    shifted.sensitivity_dbm += 2.0;
    CHECK(power_penalty(btb_curve(shifted, sweep), ref, 1e-4) == doctest::Approx(2.0).epsilon(0.025));
    // A flat efficiency sequence reproduces the reference.
    const std::vector<double> flat(10, 0.3);
    const auto c = ber_curve(flat, m, sweep, 3.0);
    for (std::size_t i = 0; i < sweep.size(); ++i) CHECK(c.ber[i] == doctest::Approx(ref.ber[i]).epsilon(1e-9));
    // Fading costs power.
    const std::vector<double> fading{1.0, 0.01, 1.0, 1.0};
    CHECK(power_penalty(ber_curve(fading, m, sweep, 3.0), ref, 1e-4) > 0.0);
    // A floor above the target is not comparable.
    ReceiverModel floored = m;
    floored.floor_duty = 1e-3;
    try {
        power_penalty(btb_curve(floored, sweep), ref, 1e-4);
        FAIL("expected NotComparableError");
    } catch (const NotComparableError& e) {
        CHECK(e.side() == "curve");
    }
    try {
        power_penalty(ref, btb_curve(floored, sweep), 1e-4);
        FAIL("expected NotComparableError");
    } catch (const NotComparableError& e) {
        CHECK(e.side() == "reference");
    }
}
