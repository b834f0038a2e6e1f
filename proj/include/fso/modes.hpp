#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fso/field.hpp"

namespace fso {

/// HG_mn with m counting nodes along x (columns) and n along y (rows).
struct ModeIndex {
    int m = 0;
    int n = 0;
    int group() const noexcept { return m + n; }
    std::string name() const;
    bool operator==(const ModeIndex&) const = default;
};

/// Group-ordered index list up to max_group:
/// 00, 01, 10, 02, 11, 20, 03, 12, 21, 30, 04, 13, 22, 31, 40 for max_group 4.
std::vector<ModeIndex> hg_index_set(int max_group = 4);

/// Number of modes with m + n <= max_group, (g+1)(g+2)/2.
std::size_t modes_up_to_group(int max_group);

/// Unit-power sampled HG_mn, H_m(sqrt2 x/w) H_n(sqrt2 y/w) exp(-(x^2+y^2)/w^2)
/// with physicists' Hermite polynomials. Normalized by grid quadrature.
/// Throws SamplingError when the waist is under two cells or the mode's
/// 1/e^2 radius w sqrt(m+n+1) exceeds half the grid.
ComplexFieldGrid hg_mode_field(int m, int n, double waist_m, const GridGeometry& g,
                               double wavelength_m);

/// w such that w * sqrt(max_group + 1) = diameter / 2.
double fit_basis_waist(double aperture_diameter_m, int max_group);

class ModeBasis {
public:
    ModeBasis(const GridGeometry& g, double wavelength_m, double waist_m,
              std::vector<ModeIndex> indices = hg_index_set());

    std::size_t size() const noexcept { return indices_.size(); }
    const std::vector<ModeIndex>& indices() const noexcept { return indices_; }
    double waist_m() const noexcept { return waist_m_; }
    const GridGeometry& geometry() const noexcept { return geometry_; }
    double wavelength_m() const noexcept { return wavelength_m_; }
    const ComplexFieldGrid& mode(std::size_t k) const { return modes_.at(k); }

    /// Grid-quadrature Gram matrix, row-major size() x size().
    std::vector<cplx> gram() const;

private:
    GridGeometry geometry_;
    double wavelength_m_;
    double waist_m_;
    std::vector<ModeIndex> indices_;
    std::vector<ComplexFieldGrid> modes_;
};

struct ModeCoefficients {
    std::vector<cplx> coeffs;
    double residual_power = 0.0;
    double total_power = 0.0;

    double mode_power(std::size_t k) const { return std::norm(coeffs.at(k)); }
    /// Sum of |c_k|^2 over the first n modes.
    double captured_power(std::size_t n) const;
};

ModeCoefficients decompose(const ComplexFieldGrid& field, const ModeBasis& basis);

/// Unit-power centered Gaussian exp(-r^2/w^2).
ComplexFieldGrid gaussian_mode(const GridGeometry& g, double wavelength_m, double waist_m);

/// |<gaussian(w), field>|^2 / P(field). Throws UndefinedEfficiencyError on a
/// zero-power field.
double smf_coupling_efficiency(const ComplexFieldGrid& field, double smf_waist_m);

/// Complex overlap <gaussian(w), field> (sqrt(W)).
cplx smf_overlap(const ComplexFieldGrid& field, double smf_waist_m);

struct SmfOptimum {
    double waist_m = 0.0;
    double efficiency = 0.0;
};

/// Maximizes smf_coupling_efficiency over the waist: log-spaced scan over
/// [2 dx, extent/2] followed by golden-section refinement.
SmfOptimum optimize_smf_waist(const ComplexFieldGrid& aperture_field);

struct ModeStatistics {
    std::vector<ModeIndex> indices;
    /// Time-averaged |c_k|^2 / P per mode.
    std::vector<double> mean_relative_power;
    double mean_residual = 0.0;
    /// Mean relative power per group m + n (summed over the group's modes).
    std::vector<double> group_power;
    /// Mean per-mode relative power of each group.
    std::vector<double> group_mode_mean;
    std::size_t frames = 0;
};

ModeStatistics mode_statistics(const std::vector<ModeCoefficients>& series,
                               const std::vector<ModeIndex>& indices);

}  // namespace fso
