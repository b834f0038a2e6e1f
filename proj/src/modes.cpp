#include "fso/modes.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fso/error.hpp"

namespace fso {

namespace {

double hermite(int n, double x) {
    if (n == 0) return 1.0;
    double h0 = 1.0;
    double h1 = 2.0 * x;
    for (int k = 1; k < n; ++k) {
        const double h2 = 2.0 * x * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

// Separable real mode profile along one axis.
std::vector<double> axis_profile(int order, double waist_m, const GridGeometry& g) {
    std::vector<double> p(g.n);
    for (std::size_t i = 0; i < g.n; ++i) {
        const double x = g.coord(i);
        p[i] = hermite(order, std::numbers::sqrt2 * x / waist_m) * std::exp(-x * x / (waist_m * waist_m));
    }
    return p;
}

ComplexFieldGrid separable(const std::vector<double>& px, const std::vector<double>& py,
                           const GridGeometry& g, double wavelength_m) {
    std::vector<cplx> s(g.n * g.n);
    double sum = 0.0;
    for (std::size_t r = 0; r < g.n; ++r)
        for (std::size_t c = 0; c < g.n; ++c) {
            const double v = py[r] * px[c];
            s[r * g.n + c] = v;
            sum += v * v;
        }
    const double dx = g.spacing_m();
    const double norm = 1.0 / std::sqrt(sum * dx * dx);
    for (auto& v : s) v *= norm;
    return ComplexFieldGrid(g, wavelength_m, std::move(s));
}

}  // namespace

std::string ModeIndex::name() const { return "HG" + std::to_string(m) + std::to_string(n); }

std::vector<ModeIndex> hg_index_set(int max_group) {
    if (max_group < 0) throw ParameterError("max_group must be >= 0");
    std::vector<ModeIndex> out;
    for (int g = 0; g <= max_group; ++g)
        for (int m = 0; m <= g; ++m) out.push_back({m, g - m});
    return out;
}

std::size_t modes_up_to_group(int max_group) {
    if (max_group < 0) return 0;
    const auto g = static_cast<std::size_t>(max_group);
    return (g + 1) * (g + 2) / 2;
}

ComplexFieldGrid hg_mode_field(int m, int n, double waist_m, const GridGeometry& g,
                               double wavelength_m) {
    validate_geometry(g);
    if (m < 0 || n < 0) throw ParameterError("mode orders must be >= 0");
    if (!(waist_m >= 2.0 * g.spacing_m()))
        throw SamplingError("mode waist is below two grid cells");
    if (waist_m * std::sqrt(m + n + 1.0) > 0.5 * g.extent_m)
        throw SamplingError("mode radius exceeds the grid half-width");
    return separable(axis_profile(m, waist_m, g), axis_profile(n, waist_m, g), g, wavelength_m);
}

double fit_basis_waist(double aperture_diameter_m, int max_group) {
    if (!(aperture_diameter_m > 0.0)) throw ParameterError("aperture diameter must be positive");
    if (max_group < 0) throw ParameterError("max_group must be >= 0");
    return 0.5 * aperture_diameter_m / std::sqrt(max_group + 1.0);
}

ModeBasis::ModeBasis(const GridGeometry& g, double wavelength_m, double waist_m,
                     std::vector<ModeIndex> indices)
    : geometry_(g), wavelength_m_(wavelength_m), waist_m_(waist_m), indices_(std::move(indices)) {
    modes_.reserve(indices_.size());
    for (const auto& idx : indices_)
        modes_.push_back(hg_mode_field(idx.m, idx.n, waist_m, g, wavelength_m));
}

std::vector<cplx> ModeBasis::gram() const {
    const std::size_t k = size();
    std::vector<cplx> out(k * k);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) out[i * k + j] = inner_product(modes_[i], modes_[j]);
    return out;
}

double ModeCoefficients::captured_power(std::size_t n) const {
    if (n > coeffs.size()) throw ParameterError("mode count exceeds basis size");
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += std::norm(coeffs[k]);
    return s;
}

ModeCoefficients decompose(const ComplexFieldGrid& field, const ModeBasis& basis) {
    if (!(field.geometry() == basis.geometry()))
        throw DimensionError("field and basis geometries differ");
    ModeCoefficients out;
    out.total_power = total_power(field);
    out.coeffs.reserve(basis.size());
    double captured = 0.0;
    for (std::size_t k = 0; k < basis.size(); ++k) {
        const cplx c = inner_product(basis.mode(k), field);
        out.coeffs.push_back(c);
        captured += std::norm(c);
    }
    out.residual_power = out.total_power - captured;
    return out;
}

ComplexFieldGrid gaussian_mode(const GridGeometry& g, double wavelength_m, double waist_m) {
    if (!(waist_m > 0.0)) throw ParameterError("waist must be positive");
    const auto p = axis_profile(0, waist_m, g);
    return separable(p, p, g, wavelength_m);
}

cplx smf_overlap(const ComplexFieldGrid& field, double smf_waist_m) {
    if (!(smf_waist_m > 0.0)) throw ParameterError("waist must be positive");
    const auto& g = field.geometry();
    const auto p = axis_profile(0, smf_waist_m, g);
    double norm = 0.0;
    for (double v : p) norm += v * v;
    const double dx = g.spacing_m();
    // Unit power: (sum p^2)^2 dx^2 = 1 for the separable product.
    const double scale = 1.0 / (norm * dx);
    cplx acc{};
    for (std::size_t r = 0; r < g.n; ++r) {
        cplx row{};
        for (std::size_t c = 0; c < g.n; ++c) row += p[c] * field.at(r, c);
        acc += p[r] * row;
    }
    return acc * scale * dx * dx;
}

double smf_coupling_efficiency(const ComplexFieldGrid& field, double smf_waist_m) {
    const double p = total_power(field);
    if (!(p > 0.0)) throw UndefinedEfficiencyError("coupling efficiency of a zero-power field");
    return std::norm(smf_overlap(field, smf_waist_m)) / p;
}

SmfOptimum optimize_smf_waist(const ComplexFieldGrid& aperture_field) {
    const double p = total_power(aperture_field);
    if (!(p > 0.0)) throw UndefinedEfficiencyError("cannot optimize coupling of a zero-power field");
    const auto& g = aperture_field.geometry();
    const double lo = 2.0 * g.spacing_m();
    const double hi = 0.5 * g.extent_m;
    auto eff = [&](double logw) { return smf_coupling_efficiency(aperture_field, std::exp(logw)); };
    const int scan = 48;
    const double a0 = std::log(lo), b0 = std::log(hi);
    int best = 0;
    double best_val = -1.0;
    for (int i = 0; i <= scan; ++i) {
        const double v = eff(a0 + (b0 - a0) * i / scan);
        if (v > best_val) {
            best_val = v;
            best = i;
        }
    }
    double a = a0 + (b0 - a0) * std::max(best - 1, 0) / scan;
    double b = a0 + (b0 - a0) * std::min(best + 1, scan) / scan;
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = eff(x1), f2 = eff(x2);
    while (b - a > 1e-7) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = eff(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = eff(x1);
        }
    }
    const double w = std::exp(0.5 * (a + b));
    return {w, eff(std::log(w))};
}

ModeStatistics mode_statistics(const std::vector<ModeCoefficients>& series,
                               const std::vector<ModeIndex>& indices) {
    if (series.empty()) throw ParameterError("empty coefficient series");
    ModeStatistics st;
    st.indices = indices;
    st.frames = series.size();
    const std::size_t k = indices.size();
    st.mean_relative_power.assign(k, 0.0);
    for (const auto& c : series) {
        if (c.coeffs.size() != k) throw DimensionError("coefficient count does not match indices");
        if (!(c.total_power > 0.0)) throw UndefinedEfficiencyError("frame with zero power");
        for (std::size_t i = 0; i < k; ++i) st.mean_relative_power[i] += std::norm(c.coeffs[i]) / c.total_power;
        st.mean_residual += c.residual_power / c.total_power;
    }
    const double nf = static_cast<double>(series.size());
    for (auto& v : st.mean_relative_power) v /= nf;
    st.mean_residual /= nf;
    int max_group = 0;
    for (const auto& idx : indices) max_group = std::max(max_group, idx.group());
    st.group_power.assign(static_cast<std::size_t>(max_group) + 1, 0.0);
    std::vector<int> counts(st.group_power.size(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        const auto gi = static_cast<std::size_t>(indices[i].group());
        st.group_power[gi] += st.mean_relative_power[i];
        ++counts[gi];
    }
    st.group_mode_mean.resize(st.group_power.size());
    for (std::size_t gi = 0; gi < st.group_power.size(); ++gi)
        st.group_mode_mean[gi] = counts[gi] ? st.group_power[gi] / counts[gi] : 0.0;
    return st;
}

}  // namespace fso
