#include "doctest.h"

#include <cmath>
#include <numbers>

#include "fso/error.hpp"
#include "fso/log.hpp"
#include "fso/modes.hpp"
#include "fso/turbulence.hpp"

using namespace fso;

namespace {

constexpr double kLambda = 1.55e-6;

double direct_psd(double k, double r0, double L0, double l0) {
    const double k0 = 2 * std::numbers::pi / L0, km = 5.92 / l0;
    return 0.023 * std::pow(2 * std::numbers::pi, 5.0 / 3.0) * std::pow(r0, -5.0 / 3.0) *
           std::pow(k * k + k0 * k0, -11.0 / 6.0) * std::exp(-k * k / (km * km));
}

double ensemble_sf(const ScreenGeometry& g, double r0, std::size_t lag, int n, std::uint64_t seed0,
                   const ScreenOptions& o) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i)
        sum += structure_function(synth_phase_screen(g, r0, 1e9, 1e-4, seed0 + static_cast<std::uint64_t>(i), o), lag);
    return sum / n;
}

}  // namespace

TEST_CASE("von Karman PSD") {
    const double r0 = 0.077, L0 = 25.0, l0 = 0.005;
    CHECK(von_karman_psd(10.0, r0, L0, l0) == doctest::Approx(direct_psd(10.0, r0, L0, l0)).epsilon(1e-12));
    const double k0 = 2 * std::numbers::pi / L0;
    CHECK(von_karman_psd(0.0, r0, L0, l0) ==
          doctest::Approx(0.023 * std::pow(2 * std::numbers::pi, 5.0 / 3.0) * std::pow(r0, -5.0 / 3.0) *
                          std::pow(k0, -11.0 / 3.0)).epsilon(1e-12));
    CHECK(von_karman_psd(20.0, r0, 1e9, 1e-9) / von_karman_psd(10.0, r0, 1e9, 1e-9) ==
          doctest::Approx(std::pow(2.0, -11.0 / 3.0)).epsilon(1e-9));
    CHECK_THROWS_AS(von_karman_psd(-1.0, r0, L0, l0), ParameterError);
    CHECK_THROWS_AS(von_karman_psd(1.0, 0.0, L0, l0), ParameterError);
}

TEST_CASE("profile construction") {
    const auto p = make_layered_profile({0, 2000, 5000, 10000, 20000}, {1, 1, 1, 1, 1}, 0.3, 25, 0.005, 47, 30);
    REQUIRE(p.layers.size() == 5);
    CHECK(p.layers.front().altitude_m == 20000.0);
    CHECK(p.layers.back().altitude_m == 0.0);
    double inv = 0.0, wsum = 0.0;
    for (std::size_t i = 0; i < p.layers.size(); ++i) {
        inv += std::pow(p.layer_r0(i), -5.0 / 3.0);
        wsum += p.layers[i].cn2_weight;
    }
    CHECK(wsum == doctest::Approx(1.0));
    CHECK(inv == doctest::Approx(std::pow(0.3, -5.0 / 3.0)).epsilon(1e-12));
    CHECK(p.slant_distance(0) == doctest::Approx(40000.0).epsilon(1e-9));
    CHECK(scale_r0_to_wavelength(0.077, 500e-9, 1.55e-6) == doctest::Approx(0.077 * std::pow(3.1, 1.2)));
    CHECK(geo_slant_range_m(90.0) == doctest::Approx(35786e3).epsilon(1e-3));
    CHECK(geo_slant_range_m(30.0) > geo_slant_range_m(60.0));
    CHECK_THROWS_AS(make_layered_profile({0}, {1}, -1.0, 25, 0.005, 47, 30), ParameterError);
    CHECK_THROWS_AS(make_layered_profile({0}, {1}, 0.1, 0.001, 0.005, 47, 30), ParameterError);
}

TEST_CASE("screens are deterministic per seed and zero-mean") {
    const ScreenGeometry g{128, 128, 1.0 / 128};
    const auto a = synth_phase_screen(g, 0.1, 25, 0.005, 42);
    const auto b = synth_phase_screen(g, 0.1, 25, 0.005, 42);
    const auto c = synth_phase_screen(g, 0.1, 25, 0.005, 43);
    bool differs = false;
    double mean = 0.0;
    for (std::size_t i = 0; i < a.phase().size(); ++i) {
        CHECK(a.phase()[i] == b.phase()[i]);
        differs |= a.phase()[i] != c.phase()[i];
        CHECK(std::isfinite(a.phase()[i]));
        mean += a.phase()[i];
    }
    CHECK(differs);
    CHECK(std::abs(mean / static_cast<double>(a.phase().size())) < 1e-9);
}

TEST_CASE("coarse sampling of r0 warns") {
    int warnings = 0;
    const auto old = set_warning_handler([&](const std::string&) { ++warnings; });
    synth_phase_screen({64, 64, 0.05}, 0.1, 25, 0.005, 1);
    set_warning_handler(old);
    CHECK(warnings == 1);
}

TEST_CASE("ensemble structure function follows the Kolmogorov law") {
    const ScreenGeometry g{128, 128, 1.0 / 128};
    ScreenOptions o;
    o.subharmonic_levels = 8;
    o.explicit_rings = 3;
    const double r0 = 0.1;
    for (std::size_t lag : {4, 8, 16, 32}) {
        const double r = static_cast<double>(lag) * g.spacing_m;
        const double expect = 6.88 * std::pow(r / r0, 5.0 / 3.0);
        CHECK(ensemble_sf(g, r0, lag, 600, 1000, o) == doctest::Approx(expect).epsilon(0.1));
    }
    const double d1 = ensemble_sf(g, r0, 8, 150, 5000, o);
    const double d2 = ensemble_sf(g, r0 / 2, 8, 150, 5000, o);
    CHECK(d2 / d1 == doctest::Approx(std::pow(2.0, 5.0 / 3.0)).epsilon(1e-9));
}

TEST_CASE("frozen flow") {
    const ScreenGeometry g{64, 64, 0.01};
    const auto s = synth_phase_screen(g, 0.1, 25, 0.005, 9);
    const auto one = evolve_frozen_flow(s, {1.0, 0.0}, 0.01);
    for (std::size_t r = 0; r < 64; ++r)
        for (std::size_t c = 0; c < 64; ++c) CHECK(one.at(r, (c + 1) % 64) == s.at(r, c));
    const auto still = evolve_frozen_flow(s, {3.0, 2.0}, 0.0);
    for (std::size_t i = 0; i < s.phase().size(); ++i) CHECK(still.phase()[i] == s.phase()[i]);
    const auto half = evolve_frozen_flow(evolve_frozen_flow(s, {0.37, 0.21}, 0.005), {0.37, 0.21}, 0.005);
    const auto full = evolve_frozen_flow(s, {0.37, 0.21}, 0.01);
    for (std::size_t i = 0; i < s.phase().size(); ++i) CHECK(std::abs(half.phase()[i] - full.phase()[i]) < 1e-9);
}

TEST_CASE("transmitter and far zone") {
    const GridGeometry g{128, 1.0};
    const auto tx = truncated_gaussian(g, kLambda, 0.178, 0.4, 1.0);
    CHECK(total_power(tx) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(tx.at(64, 64 + 30)) == 0.0);  // 0.23 m off axis, outside the 0.2 m radius
    const auto far = fraunhofer_field(tx, 4e7);
    CHECK(total_power(far) > 0.0);
}

TEST_CASE("time series") {
    const GridGeometry g{64, 1.0};
    const auto tx = truncated_gaussian(g, kLambda, 0.178, 0.4, 1.0);
    ChannelOptions o;
    o.n_frames = 4;
    o.seed = 3;
    o.screens.subharmonic_levels = 1;
    int warnings = 0;
    const auto old = set_warning_handler([&](const std::string&) { ++warnings; });

    SUBCASE("no turbulence gives identical frames") {
        const auto p = make_layered_profile({0, 5000}, {0.5, 0.5}, INFINITY, 25, 0.005, 47, 30);
        const auto series = build_time_series(p, tx, 3, 1500.0, 3, o);
        for (std::size_t i = 0; i < series[0].samples().size(); ++i) {
            CHECK(series[1].samples()[i] == series[0].samples()[i]);
            CHECK(series[2].samples()[i] == series[0].samples()[i]);
        }
        CHECK(total_power(series[2]) == total_power(series[0]));
    }
    SUBCASE("prefix determinism and aperture clipping") {
        const auto p = make_layered_profile({0, 5000}, {0.5, 0.5}, 0.3, 25, 0.005, 47, 30);
        const auto one = build_time_series(p, tx, 1, 1500.0, 3, o);
        const auto many = build_time_series(p, tx, 4, 1500.0, 3, o);
        for (std::size_t i = 0; i < one[0].samples().size(); ++i) CHECK(one[0].samples()[i] == many[0].samples()[i]);
        const auto& f = many[3];
        for (std::size_t r = 0; r < 64; ++r)
            for (std::size_t c = 0; c < 64; ++c) {
                const double x = g.coord(c), y = g.coord(r);
                if (x * x + y * y > 0.0625) CHECK(f.at(r, c) == cplx(0.0));
            }
        const TurbulentChannel ch(p, tx, o);
        const auto again = ch.frame(2);
        for (std::size_t i = 0; i < again.samples().size(); ++i) CHECK(again.samples()[i] == many[2].samples()[i]);
        CHECK(layer_seed(3, 0) != layer_seed(3, 1));
        CHECK(layer_seed(3, 0) != layer_seed(4, 0));
    }
    set_warning_handler(old);
}

TEST_CASE("frames decorrelate with separation") {
    const GridGeometry g{128, 1.0};
    const auto tx = truncated_gaussian(g, kLambda, 0.178, 0.4, 1.0);
    const auto p = make_layered_profile({0, 2000, 5000, 10000, 20000}, {.2, .2, .2, .2, .2}, 0.2995, 25, 0.005, 47, 30);
    ChannelOptions o;
    o.n_frames = 64;
    double c_near = 0.0, c_far = 0.0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        o.seed = seed;
        const TurbulentChannel ch(p, tx, o);
        const auto f0 = ch.frame(0);
        const auto near = ch.frame(2);
        const auto far = ch.frame(40);
        const double p0 = total_power(f0);
        c_near += std::abs(inner_product(f0, near)) / std::sqrt(p0 * total_power(near));
        c_far += std::abs(inner_product(f0, far)) / std::sqrt(p0 * total_power(far));
    }
    CHECK(c_near > c_far);
}
