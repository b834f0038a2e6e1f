#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "fso/comms.hpp"

namespace fso {

inline constexpr double kSpeedOfLight = 299792458.0;

struct SpectralLine {
    double frequency_hz = 0.0;
    double weight = 1.0;
};

/// Source spectrum: discrete lines or a rectangular band. Weights are
/// normalized to sum to one on construction.
class OpticalSpectrum {
public:
    static OpticalSpectrum lines(std::vector<SpectralLine> lines);
    static OpticalSpectrum rectangular_band(double center_hz, double width_hz);
    /// Band given in wavelength units.
    static OpticalSpectrum rectangular_band_nm(double center_nm, double width_nm);
    /// n equal lines spaced by spacing_hz around center_hz.
    static OpticalSpectrum comb(double center_hz, double spacing_hz, std::size_t n);

    bool is_band() const noexcept { return band_; }
    const std::vector<SpectralLine>& line_list() const noexcept { return lines_; }
    double band_width_hz() const noexcept { return width_hz_; }
    /// Power-weighted mean frequency; the combiner phase is locked here.
    double reference_hz() const noexcept { return reference_hz_; }

    /// Normalized autocorrelation about the reference frequency:
    /// sum_k w_k exp(-i 2 pi (nu_k - nu_ref) tau), or sinc(W tau) for a band.
    std::complex<double> coherence(double delay_s) const;

private:
    bool band_ = false;
    std::vector<SpectralLine> lines_;
    double width_hz_ = 0.0;
    double reference_hz_ = 0.0;
};

/// Two equal-power paths with delay mismatch tau, combiner phase locked at the
/// reference: (1 + Re gamma(tau)) / 2. The carrier term 2 pi nu_ref tau is
/// absorbed by the controller.
double two_path_efficiency(const OpticalSpectrum& spectrum, double delay_s);

/// Same two paths with the common phase free to take any value:
/// (1 + |gamma(tau)|) / 2.
double two_path_efficiency_free_phase(const OpticalSpectrum& spectrum, double delay_s);

/// Efficiency seen by one line after demultiplexing: cos^2(pi (nu - nu_ref) tau).
double line_efficiency(const OpticalSpectrum& spectrum, double frequency_hz, double delay_s);

double delay_from_path_m(double path_m);
double path_from_delay_m(double delay_s);

struct VodlScan {
    std::vector<double> delay_s;
    std::vector<double> efficiency;
    double argmax_delay_s = 0.0;
    /// Full width where the curve stays above half its peak, in path length.
    /// +inf when the curve never drops that far.
    double width_m = 0.0;

    std::vector<double> path_mm() const;
};

/// Scans the VODL delay over [lo, hi] in steps; the curve is
/// two_path_efficiency(delay - true_mismatch). Throws ScanRangeError when the
/// peak sits on the scan boundary of a non-flat curve.
VodlScan vodl_scan(const OpticalSpectrum& spectrum, double true_mismatch_s, double lo_s, double hi_s,
                   double step_s);

struct WdmLineReport {
    double frequency_hz = 0.0;
    double line_efficiency = 1.0;
    BerCurve curve;
    /// Penalty against the single-wavelength curve at the target BER.
    double penalty_db = 0.0;
};

struct WdmLinkReport {
    double delay_s = 0.0;
    double target_ber = 1e-4;
    BerCurve single;
    std::vector<WdmLineReport> lines;
};

/// Each line carries the same per-line setpoint (half the power of a single
/// laser of twice the power) scaled by its delay efficiency; the
/// demultiplexed line goes through the same cumulated-BER model as the
/// single-wavelength run over the same efficiency series.
WdmLinkReport wdm_link_run(std::span<const double> efficiency, const OpticalSpectrum& spectrum,
                           double delay_s, const ReceiverModel& model,
                           std::span<const double> setpoints_dbm, double frame_rate_hz,
                           double target_ber);

}  // namespace fso
