#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fso/fft.hpp"
#include "fso/phase_screen.hpp"

namespace fso {

/// Square sampling grid. Sample (row, col) sits at
/// x = (col - n/2) * dx, y = (row - n/2) * dx, so the optical axis falls
/// exactly on sample (n/2, n/2).
struct GridGeometry {
    std::size_t n = 512;
    double extent_m = 1.0;

    double spacing_m() const noexcept { return extent_m / static_cast<double>(n); }
    double coord(std::size_t i) const noexcept {
        return (static_cast<double>(i) - static_cast<double>(n / 2)) * spacing_m();
    }
    bool operator==(const GridGeometry&) const = default;
};

/// Validates n (power of two, >= 64) and extent (> 0). Throws DimensionError
/// or ParameterError.
void validate_geometry(const GridGeometry& g);

/// Sampled complex optical field. Samples carry sqrt(W)/m so that
/// sum |u|^2 dx^2 is a power in watts.
class ComplexFieldGrid {
public:
    ComplexFieldGrid(GridGeometry geometry, double wavelength_m);
    ComplexFieldGrid(GridGeometry geometry, double wavelength_m, std::vector<cplx> samples);

    /// Samples f(x, y) at every grid point.
    static ComplexFieldGrid sample(GridGeometry geometry, double wavelength_m,
                                   const std::function<cplx(double, double)>& f);

    const GridGeometry& geometry() const noexcept { return geometry_; }
    std::size_t n() const noexcept { return geometry_.n; }
    double extent_m() const noexcept { return geometry_.extent_m; }
    double spacing_m() const noexcept { return geometry_.spacing_m(); }
    double wavelength_m() const noexcept { return wavelength_m_; }

    std::span<const cplx> samples() const noexcept { return samples_; }
    std::span<cplx> samples() noexcept { return samples_; }
    cplx at(std::size_t row, std::size_t col) const { return samples_[row * n() + col]; }
    cplx& at(std::size_t row, std::size_t col) { return samples_[row * n() + col]; }

    /// Throws InvalidFieldError on any NaN/Inf sample.
    void require_finite() const;

private:
    GridGeometry geometry_;
    double wavelength_m_;
    std::vector<cplx> samples_;
};

ComplexFieldGrid operator*(cplx a, const ComplexFieldGrid& f);
ComplexFieldGrid operator+(const ComplexFieldGrid& a, const ComplexFieldGrid& b);

struct PropagationOptions {
    /// Emit a warning when dx^2 < lambda * d / n.
    bool check_sampling = true;
    /// Raised-cosine taper on the outer fraction of the grid before propagating.
    /// Breaks exact power conservation.
    bool edge_absorber = false;
    double absorber_fraction = 0.1;
};

/// True when dx^2 >= lambda * distance / n.
bool sampling_bound_satisfied(const GridGeometry& g, double wavelength_m, double distance_m);

/// Band-limited angular-spectrum transfer function for one (geometry,
/// wavelength, distance), precomputed so that repeated propagations over the
/// same gap cost two FFTs and a multiply.
///
/// The on-axis carrier exp(i 2 pi d / lambda) is factored out, so results are
/// defined up to that global phase.
class Propagator {
public:
    Propagator(const GridGeometry& g, double wavelength_m, double distance_m);

    /// Propagates in place. The buffer must be a field on the same geometry.
    void apply(std::span<cplx> samples) const;
    double distance_m() const noexcept { return distance_m_; }

private:
    GridGeometry geometry_;
    double wavelength_m_;
    double distance_m_;
    Fft2d fft_;
    std::vector<cplx> transfer_;
};

ComplexFieldGrid angular_spectrum_propagate(const ComplexFieldGrid& field, double distance_m,
                                            const PropagationOptions& options = {});

/// Multiplies by exp(i phi). The screen must be n x n with the field spacing.
ComplexFieldGrid apply_phase_screen(const ComplexFieldGrid& field, const PhaseScreen& screen);

/// Zeroes samples outside the centered disc of the given diameter.
ComplexFieldGrid apply_aperture(const ComplexFieldGrid& field, double diameter_m);

/// Sum |u|^2 dx^2 in watts.
double total_power(const ComplexFieldGrid& field);

/// <a, b> = sum conj(a) b dx^2.
cplx inner_product(const ComplexFieldGrid& a, const ComplexFieldGrid& b);

// Snapshot formats. Binary block, little-endian:
//   int64 n | float64 extent_m | float64 wavelength_m | n*n*(float64 re, float64 im)
// samples row-major. CSV: header "row,col,re,im", one line per sample.
void write_field_binary(const ComplexFieldGrid& field, std::ostream& out);
ComplexFieldGrid read_field_binary(std::istream& in);
void write_field_csv(const ComplexFieldGrid& field, std::ostream& out);

}  // namespace fso
