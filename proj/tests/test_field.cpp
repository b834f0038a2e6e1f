#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>

#include "fso/error.hpp"
#include "fso/field.hpp"
#include "fso/log.hpp"
#include "fso/modes.hpp"
#include "fso/rng.hpp"

using namespace fso;

namespace {

constexpr double kLambda = 1.55e-6;

ComplexFieldGrid gaussian(const GridGeometry& g, double w) {
    return ComplexFieldGrid::sample(g, kLambda, [w](double x, double y) { return cplx(std::exp(-(x * x + y * y) / (w * w))); });
}

// 1/e^2 intensity radius from the second moment: <x^2> = w^2 / 4.
double second_moment_radius(const ComplexFieldGrid& f) {
    double sx = 0.0, p = 0.0;
    for (std::size_t r = 0; r < f.n(); ++r)
        for (std::size_t c = 0; c < f.n(); ++c) {
            const double i = std::norm(f.at(r, c));
            const double x = f.geometry().coord(c);
            sx += i * x * x;
            p += i;
        }
    return 2.0 * std::sqrt(sx / p);
}

PhaseScreen random_screen(const GridGeometry& g, std::uint64_t seed) {
    RandomStream rs(seed, "test-screen");
    std::vector<double> phi(g.n * g.n);
    for (auto& v : phi) v = rs.uniform(-10.0, 10.0);
    return PhaseScreen(g.n, g.n, g.spacing_m(), 0.1, seed, phi);
}

struct QuietWarnings {
    QuietWarnings() { old = set_warning_handler([this](const std::string&) { ++count; }); }
    ~QuietWarnings() { set_warning_handler(old); }
    WarningHandler old;
    int count = 0;
};

}  // namespace

TEST_CASE("grid geometry validation") {
    CHECK_THROWS_AS(validate_geometry({0, 1.0}), DimensionError);
    CHECK_THROWS_AS(validate_geometry({100, 1.0}), DimensionError);
    CHECK_THROWS_AS(validate_geometry({32, 1.0}), DimensionError);
    CHECK_THROWS_AS(validate_geometry({64, 0.0}), ParameterError);
    CHECK_NOTHROW(validate_geometry({64, 1.0}));
    GridGeometry g{512, 1.0};
    CHECK(g.spacing_m() == doctest::Approx(1.0 / 512));
    CHECK(g.coord(256) == 0.0);
}

TEST_CASE("plane wave keeps its amplitude map under propagation") {
    const GridGeometry g{128, 0.5};
    const auto f = ComplexFieldGrid::sample(g, kLambda, [](double, double) { return cplx(1.0, 0.5); });
    const auto out = angular_spectrum_propagate(f, 250.0);
    const cplx ratio = out.at(0, 0) / f.at(0, 0);
    CHECK(std::abs(ratio) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < f.samples().size(); ++i)
        CHECK(std::abs(out.samples()[i] - ratio * f.samples()[i]) < 1e-12);
}

TEST_CASE("propagation over zero distance is the identity") {
    const GridGeometry g{64, 0.2};
    const auto f = gaussian(g, 0.02);
    const auto out = angular_spectrum_propagate(f, 0.0);
    for (std::size_t i = 0; i < f.samples().size(); ++i) CHECK(out.samples()[i] == f.samples()[i]);
}

TEST_CASE("Gaussian beam follows w(z) and the on-axis law") {
    const GridGeometry g{256, 0.3};
    const double w0 = 0.01;
    const double zr = std::numbers::pi * w0 * w0 / kLambda;
    const auto f = gaussian(g, w0);
    const double i0 = std::norm(f.at(128, 128));
    CHECK(second_moment_radius(angular_spectrum_propagate(f, zr)) == doctest::Approx(w0 * std::sqrt(2.0)).epsilon(0.01));
    for (double frac : {0.25, 0.5, 1.0, 1.5, 2.0}) {
        const double z = frac * zr;
        const auto out = angular_spectrum_propagate(f, z);
        const double expect_w = w0 * std::sqrt(1.0 + frac * frac);
        CHECK(second_moment_radius(out) == doctest::Approx(expect_w).epsilon(0.01));
        CHECK(std::norm(out.at(128, 128)) == doctest::Approx(i0 / (1.0 + frac * frac)).epsilon(0.01));
    }
}

TEST_CASE("propagation conserves power and composes") {
    const GridGeometry g{128, 0.5};
    QuietWarnings quiet;
    auto f = gaussian(g, 0.05);
    f = apply_phase_screen(f, random_screen(g, 3));
    const double p0 = total_power(f);
    const auto a = angular_spectrum_propagate(angular_spectrum_propagate(f, 300.0), 500.0);
    const auto b = angular_spectrum_propagate(f, 800.0);
    CHECK(std::abs(total_power(b) - p0) / p0 < 1e-6);
    double err = 0.0, norm = 0.0;
    for (std::size_t i = 0; i < a.samples().size(); ++i) {
        err += std::norm(a.samples()[i] - b.samples()[i]);
        norm += std::norm(b.samples()[i]);
    }
    CHECK(std::sqrt(err / norm) < 1e-6);
}

TEST_CASE("propagation errors and sampling warning") {
    const GridGeometry g{64, 0.1};
    auto f = gaussian(g, 0.01);
    CHECK_THROWS_AS(angular_spectrum_propagate(f, -1.0), ParameterError);
    f.at(3, 3) = cplx(std::nan(""), 0.0);
    CHECK_THROWS_AS(angular_spectrum_propagate(f, 1.0), InvalidFieldError);
    QuietWarnings quiet;
    const auto ok = gaussian(g, 0.01);
    CHECK(sampling_bound_satisfied(g, kLambda, 100.0));
    CHECK_FALSE(sampling_bound_satisfied(g, kLambda, 1e5));
    angular_spectrum_propagate(ok, 1e5);
    CHECK(quiet.count == 1);
}

TEST_CASE("edge absorber breaks exact power conservation only when enabled") {
    const GridGeometry g{64, 0.1};
    const auto f = ComplexFieldGrid::sample(g, kLambda, [](double, double) { return cplx(1.0); });
    PropagationOptions o;
    o.edge_absorber = true;
    CHECK(total_power(angular_spectrum_propagate(f, 10.0, o)) < 0.9 * total_power(f));
}

TEST_CASE("phase screens change phase only") {
    const GridGeometry g{64, 0.2};
    const auto f = gaussian(g, 0.03);
    const auto zero = PhaseScreen(64, 64, g.spacing_m(), 0.1, 0, std::vector<double>(64 * 64, 0.0));
    const auto pi = PhaseScreen(64, 64, g.spacing_m(), 0.1, 0, std::vector<double>(64 * 64, std::numbers::pi));
    const auto a = apply_phase_screen(f, zero);
    const auto b = apply_phase_screen(f, pi);
    const auto c = apply_phase_screen(f, random_screen(g, 11));
    for (std::size_t i = 0; i < f.samples().size(); ++i) {
        CHECK(a.samples()[i] == f.samples()[i]);
        CHECK(std::abs(b.samples()[i] + f.samples()[i]) < 1e-15);
        CHECK(std::abs(std::abs(c.samples()[i]) - std::abs(f.samples()[i])) < 1e-15);
    }
    CHECK(total_power(b) == doctest::Approx(total_power(f)).epsilon(1e-14));
    const PhaseScreen wrong(32, 32, g.spacing_m(), 0.1, 0, std::vector<double>(32 * 32, 0.0));
    CHECK_THROWS_AS(apply_phase_screen(f, wrong), DimensionError);
    const PhaseScreen wrong_dx(64, 64, 2 * g.spacing_m(), 0.1, 0, std::vector<double>(64 * 64, 0.0));
    CHECK_THROWS_AS(apply_phase_screen(f, wrong_dx), DimensionError);
}

TEST_CASE("circular aperture") {
    const GridGeometry g{256, 1.0};
    const auto u = ComplexFieldGrid::sample(g, kLambda, [](double, double) { return cplx(1.0); });
    const auto disc = apply_aperture(u, 1.0);
    // One ring of cells along the rim bounds the quantization error.
    const double cell_fraction = 4.0 * std::numbers::pi * 0.5 * g.spacing_m() / 1.0;
    CHECK(std::abs(total_power(disc) / total_power(u) - std::numbers::pi / 4) < cell_fraction);
    const auto again = apply_aperture(disc, 1.0);
    for (std::size_t i = 0; i < disc.samples().size(); ++i) CHECK(again.samples()[i] == disc.samples()[i]);
    const auto narrow = gaussian(g, 0.05);
    CHECK(1.0 - total_power(apply_aperture(narrow, 0.5)) / total_power(narrow) < 1e-6);
    CHECK_THROWS_AS(apply_aperture(u, 0.0), ParameterError);
    CHECK_THROWS_AS(apply_aperture(u, 2.0), ParameterError);
}

TEST_CASE("total power") {
    const GridGeometry g{128, 1.0};
    CHECK(total_power(ComplexFieldGrid(g, kLambda)) == 0.0);
    CHECK(total_power(hg_mode_field(0, 0, 0.1, g, kLambda)) == doctest::Approx(1.0).epsilon(1e-6));
    const auto f = gaussian(g, 0.1);
    CHECK(total_power(cplx(2.0) * f) == doctest::Approx(4.0 * total_power(f)).epsilon(1e-14));
}

TEST_CASE("binary and CSV snapshots") {
    const GridGeometry g{64, 0.3};
    auto f = apply_phase_screen(gaussian(g, 0.05), random_screen(g, 5));
    std::stringstream bin;
    write_field_binary(f, bin);
    const auto bytes = bin.str();
    CHECK(bytes.size() == 24 + 64 * 64 * 16);
    CHECK(static_cast<unsigned char>(bytes[0]) == 64);
    const auto back = read_field_binary(bin);
    CHECK(back.geometry() == g);
    CHECK(back.wavelength_m() == kLambda);
    for (std::size_t i = 0; i < f.samples().size(); ++i) CHECK(back.samples()[i] == f.samples()[i]);
    std::stringstream truncated(bytes.substr(0, 100));
    CHECK_THROWS_AS(read_field_binary(truncated), InvalidFieldError);
    std::stringstream csv;
    write_field_csv(f, csv);
    std::string header, first;
    std::getline(csv, header);
    std::getline(csv, first);
    CHECK(header == "row,col,re,im");
    CHECK(first.rfind("0,0,", 0) == 0);
}
