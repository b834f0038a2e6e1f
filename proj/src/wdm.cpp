#include "fso/wdm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "fso/error.hpp"

namespace fso {

namespace {
constexpr double kPi = std::numbers::pi;

double sinc(double x) {
    if (std::abs(x) < 1e-8) return 1.0 - (kPi * x) * (kPi * x) / 6.0;
    return std::sin(kPi * x) / (kPi * x);
}
}  // namespace

OpticalSpectrum OpticalSpectrum::lines(std::vector<SpectralLine> lines) {
    if (lines.empty()) throw ParameterError("spectrum needs at least one line");
    double total = 0.0;
    for (const auto& l : lines) {
        if (!(l.frequency_hz > 0.0) || !std::isfinite(l.frequency_hz)) throw ParameterError("line frequency must be positive");
        if (!(l.weight >= 0.0) || !std::isfinite(l.weight)) throw ParameterError("line weight must be >= 0");
        total += l.weight;
    }
    if (!(total > 0.0)) throw ParameterError("line weights sum to zero");
    OpticalSpectrum s;
    double ref = 0.0;
    for (auto& l : lines) {
        l.weight /= total;
        ref += l.weight * l.frequency_hz;
    }
    s.lines_ = std::move(lines);
    s.reference_hz_ = ref;
    return s;
}

OpticalSpectrum OpticalSpectrum::rectangular_band(double center_hz, double width_hz) {
    if (!(center_hz > 0.0) || !std::isfinite(center_hz)) throw ParameterError("band center must be positive");
    if (!(width_hz >= 0.0) || !(width_hz < 2.0 * center_hz)) throw ParameterError("band width must be in [0, 2 center)");
    OpticalSpectrum s;
    s.band_ = true;
    s.width_hz_ = width_hz;
    s.reference_hz_ = center_hz;
    s.lines_ = {{center_hz, 1.0}};
    return s;
}

OpticalSpectrum OpticalSpectrum::rectangular_band_nm(double center_nm, double width_nm) {
    if (!(center_nm > 0.0)) throw ParameterError("band center must be positive");
    if (!(width_nm >= 0.0 && width_nm < 2.0 * center_nm)) throw ParameterError("band width must be in [0, 2 center)");
    const double hi = kSpeedOfLight / ((center_nm - 0.5 * width_nm) * 1e-9);
    const double lo = kSpeedOfLight / ((center_nm + 0.5 * width_nm) * 1e-9);
    return rectangular_band(0.5 * (hi + lo), hi - lo);
}

OpticalSpectrum OpticalSpectrum::comb(double center_hz, double spacing_hz, std::size_t n) {
    if (n == 0) throw ParameterError("comb needs at least one line");
    std::vector<SpectralLine> l;
    for (std::size_t k = 0; k < n; ++k)
        l.push_back({center_hz + spacing_hz * (static_cast<double>(k) - 0.5 * static_cast<double>(n - 1)), 1.0});
    return lines(std::move(l));
}

std::complex<double> OpticalSpectrum::coherence(double delay_s) const {
    if (!std::isfinite(delay_s)) throw ParameterError("delay must be finite");
    if (band_) return sinc(width_hz_ * delay_s);
    std::complex<double> g = 0.0;
    for (const auto& l : lines_)
        g += l.weight * std::polar(1.0, -2.0 * kPi * (l.frequency_hz - reference_hz_) * delay_s);
    return g;
}

double two_path_efficiency(const OpticalSpectrum& spectrum, double delay_s) {
    return std::clamp(0.5 * (1.0 + spectrum.coherence(delay_s).real()), 0.0, 1.0);
}

double two_path_efficiency_free_phase(const OpticalSpectrum& spectrum, double delay_s) {
    return std::clamp(0.5 * (1.0 + std::abs(spectrum.coherence(delay_s))), 0.0, 1.0);
}

double line_efficiency(const OpticalSpectrum& spectrum, double frequency_hz, double delay_s) {
    const double c = std::cos(kPi * (frequency_hz - spectrum.reference_hz()) * delay_s);
    return c * c;
}

double delay_from_path_m(double path_m) { return path_m / kSpeedOfLight; }
double path_from_delay_m(double delay_s) { return delay_s * kSpeedOfLight; }

std::vector<double> VodlScan::path_mm() const {
    std::vector<double> out;
    for (double d : delay_s) out.push_back(path_from_delay_m(d) * 1e3);
    return out;
}

VodlScan vodl_scan(const OpticalSpectrum& spectrum, double true_mismatch_s, double lo_s, double hi_s,
                   double step_s) {
    if (!(step_s > 0.0) || !(hi_s > lo_s)) throw ParameterError("invalid delay scan");
    VodlScan s;
    const auto n = static_cast<std::size_t>(std::floor((hi_s - lo_s) / step_s + 1e-9)) + 1;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = lo_s + step_s * static_cast<double>(i);
        s.delay_s.push_back(d);
        s.efficiency.push_back(two_path_efficiency(spectrum, d - true_mismatch_s));
    }
    const auto [mn, mx] = std::minmax_element(s.efficiency.begin(), s.efficiency.end());
    const bool flat = *mx - *mn < 1e-9;
    // Argmax nearest the scan centre among ties.
    std::size_t k = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (s.efficiency[i] > s.efficiency[k] + 1e-12) k = i;
    s.argmax_delay_s = s.delay_s[k];
    if (flat) {
        s.width_m = std::numeric_limits<double>::infinity();
        return s;
    }
    if (k == 0 || k + 1 == n) throw ScanRangeError("delay scan does not bracket the power peak");
    const double half = 0.5 * s.efficiency[k];
    auto edge = [&](int dir) {
        long i = static_cast<long>(k);
        while (true) {
            const long j = i + dir;
            if (j < 0 || j >= static_cast<long>(n)) return std::numeric_limits<double>::quiet_NaN();
            if (s.efficiency[static_cast<std::size_t>(j)] < half) {
                const double a = s.efficiency[static_cast<std::size_t>(i)];
                const double b = s.efficiency[static_cast<std::size_t>(j)];
                const double u = (a - half) / (a - b);
                return s.delay_s[static_cast<std::size_t>(i)] + u * (s.delay_s[static_cast<std::size_t>(j)] - s.delay_s[static_cast<std::size_t>(i)]);
            }
            i = j;
        }
    };
    const double l = edge(-1), r = edge(+1);
    s.width_m = (std::isnan(l) || std::isnan(r)) ? std::numeric_limits<double>::infinity()
                                                 : path_from_delay_m(r - l);
    return s;
}

WdmLinkReport wdm_link_run(std::span<const double> efficiency, const OpticalSpectrum& spectrum,
                           double delay_s, const ReceiverModel& model,
                           std::span<const double> setpoints_dbm, double frame_rate_hz,
                           double target_ber) {
    if (spectrum.is_band()) throw ParameterError("link run needs a line spectrum");
    WdmLinkReport r;
    r.delay_s = delay_s;
    r.target_ber = target_ber;
    r.single = ber_curve(efficiency, model, setpoints_dbm, frame_rate_hz);
    for (const auto& l : spectrum.line_list()) {
        WdmLineReport lr;
        lr.frequency_hz = l.frequency_hz;
        lr.line_efficiency = line_efficiency(spectrum, l.frequency_hz, delay_s);
        const double shift_db = lr.line_efficiency > 0.0 ? 10.0 * std::log10(lr.line_efficiency)
                                                         : -std::numeric_limits<double>::infinity();
        std::vector<double> sp;
        for (double s : setpoints_dbm) sp.push_back(s + shift_db);
        lr.curve = ber_curve(efficiency, model, sp, frame_rate_hz);
        lr.curve.rop_dbm.assign(setpoints_dbm.begin(), setpoints_dbm.end());
        lr.penalty_db = power_penalty(lr.curve, r.single, target_ber);
        r.lines.push_back(std::move(lr));
    }
    return r;
}

}  // namespace fso
