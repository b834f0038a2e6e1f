#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace fso {

enum class Modulation { OOK, DPSK };

std::string to_string(Modulation m);
Modulation modulation_from_string(const std::string& s);

/// Gaussian-Q receiver anchored at the ROP giving BER 1e-9.
struct ReceiverModel {
    Modulation format = Modulation::OOK;
    double bit_rate_bps = 1e10;
    double sensitivity_dbm = -39.0;
    /// Fraction of time spent in combiner wrap transients.
    double floor_duty = 0.0;
    /// Q at the sensitivity (BER 1e-9).
    double q_at_sensitivity = 6.0;

    void validate() const;
    /// DPSK receiver derived from an OOK sensitivity (balanced detection gain).
    static ReceiverModel dpsk_from_ook(double ook_sensitivity_dbm, double advantage_db = 3.0);
};

/// BER = f + (1 - f) erfc(Q / sqrt2) / 2 with Q = Q9 10^((rop - sens)/20),
/// f = duty / 2, clamped to 0.5.
double ber_instant(double rop_dbm, const ReceiverModel& model);

/// Errors at coin-flip rate during transients.
double ber_floor_from_phase_jumps(double duty);

/// Received power per frame at the demodulator input.
struct PowerTrace {
    std::vector<double> time_s;
    std::vector<double> rop_dbm;
    /// Duration each frame is held.
    double frame_period_s = 1.0;

    std::size_t size() const noexcept { return rop_dbm.size(); }
    double duration_s() const noexcept { return frame_period_s * static_cast<double>(rop_dbm.size()); }
    void validate() const;
};

enum class PowerNormalization { WindowMean, FirstFrame };

/// P(i) = setpoint * eta(i) / ref, ref = mean(eta) or eta(0).
PowerTrace power_trace_from_efficiency(std::span<const double> efficiency, double setpoint_dbm,
                                       double frame_rate_hz,
                                       PowerNormalization norm = PowerNormalization::WindowMean);

/// (1/N) sum BER(P(i)).
double cumulated_ber(const PowerTrace& trace, const ReceiverModel& model);

struct FrameRateCheck {
    bool invariant = true;
    double max_rel_deviation = 0.0;
    std::vector<double> rates_hz;
    std::vector<double> cumulated;
    /// Rates above the correction bandwidth, excluded from the comparison.
    std::vector<bool> excluded;
};

/// Replays the same P(i) sequence at each rate: BER_cum(F) = (F/N) sum BER / F.
FrameRateCheck frame_rate_invariance_check(const PowerTrace& trace, const ReceiverModel& model,
                                           std::span<const double> rates_hz,
                                           double correction_bandwidth_hz = std::numeric_limits<double>::infinity());

struct SyncLossStats {
    double seconds_per_minute = 0.0;
    double outage_s = 0.0;
    double duration_s = 0.0;
    std::size_t bad_frames = 0;
    std::size_t outages = 0;
};

/// Frames above the BER threshold open an outage lasting the frame plus the
/// reacquisition time; overlapping outages merge.
SyncLossStats sync_loss_stats(const PowerTrace& trace, const ReceiverModel& model,
                              double ber_threshold = 1e-3, double reacquire_s = 0.1);

struct BerCurve {
    std::vector<double> rop_dbm;
    std::vector<double> ber;
};

/// Inclusive sweep lo:hi:step.
std::vector<double> rop_sweep(double lo_dbm, double hi_dbm, double step_db);

/// Cumulated BER of an efficiency sequence at each setpoint.
BerCurve ber_curve(std::span<const double> efficiency, const ReceiverModel& model,
                   std::span<const double> setpoints_dbm, double frame_rate_hz,
                   PowerNormalization norm = PowerNormalization::WindowMean);

/// Flat-power reference curve.
BerCurve btb_curve(const ReceiverModel& model, std::span<const double> setpoints_dbm);

/// ROP where the curve first falls through target_ber, interpolating
/// log10(BER) linearly in dBm. Throws NotComparableError("curve") if none.
double rop_at_ber(const BerCurve& curve, double target_ber);

/// rop_at_ber(curve) - rop_at_ber(reference). Throws NotComparableError
/// naming the side that never crosses.
double power_penalty(const BerCurve& curve, const BerCurve& reference, double target_ber);

}  // namespace fso
