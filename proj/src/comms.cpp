#include "fso/comms.hpp"

#include <algorithm>
#include <cmath>

#include "fso/error.hpp"

namespace fso {

std::string to_string(Modulation m) { return m == Modulation::OOK ? "ook" : "dpsk"; }

Modulation modulation_from_string(const std::string& s) {
    if (s == "ook" || s == "OOK") return Modulation::OOK;
    if (s == "dpsk" || s == "DPSK") return Modulation::DPSK;
    throw ParameterError("unknown modulation format: " + s);
}

void ReceiverModel::validate() const {
    if (!std::isfinite(sensitivity_dbm)) throw ParameterError("sensitivity must be finite");
    if (!(floor_duty >= 0.0 && floor_duty <= 1.0)) throw ParameterError("floor_duty must be in [0, 1]");
    if (!(bit_rate_bps > 0.0)) throw ParameterError("bit rate must be positive");
    if (!(q_at_sensitivity > 0.0)) throw ParameterError("Q at sensitivity must be positive");
}

ReceiverModel ReceiverModel::dpsk_from_ook(double ook_sensitivity_dbm, double advantage_db) {
    ReceiverModel m;
    m.format = Modulation::DPSK;
    m.sensitivity_dbm = ook_sensitivity_dbm - advantage_db;
    return m;
}

double ber_instant(double rop_dbm, const ReceiverModel& model) {
    const double f = ber_floor_from_phase_jumps(model.floor_duty);
    if (std::isnan(rop_dbm)) throw ParameterError("ROP is NaN");
    double ber;
    if (rop_dbm == -std::numeric_limits<double>::infinity()) {
        ber = 0.5;
    } else {
        const double q = model.q_at_sensitivity * std::pow(10.0, (rop_dbm - model.sensitivity_dbm) / 20.0);
        ber = f + (1.0 - f) * 0.5 * std::erfc(q / std::sqrt(2.0));
    }
    return std::min(ber, 0.5);
}

double ber_floor_from_phase_jumps(double duty) {
    if (!(duty >= 0.0 && duty <= 1.0)) throw ParameterError("duty must be in [0, 1]");
    return 0.5 * duty;
}

void PowerTrace::validate() const {
    if (time_s.size() != rop_dbm.size()) throw DimensionError("time and power lengths differ");
    if (!(frame_period_s > 0.0)) throw ParameterError("frame period must be positive");
    for (std::size_t i = 0; i < rop_dbm.size(); ++i) {
        if (std::isnan(rop_dbm[i]) || rop_dbm[i] == std::numeric_limits<double>::infinity())
            throw ParameterError("ROP must not be NaN or +inf");
        if (i && !(time_s[i] > time_s[i - 1])) throw ParameterError("trace times must increase");
    }
}

PowerTrace power_trace_from_efficiency(std::span<const double> efficiency, double setpoint_dbm,
                                       double frame_rate_hz, PowerNormalization norm) {
    if (efficiency.empty()) throw ParameterError("empty efficiency sequence");
    if (!(frame_rate_hz > 0.0)) throw ParameterError("frame rate must be positive");
    double ref = efficiency[0];
    if (norm == PowerNormalization::WindowMean) {
        ref = 0.0;
        for (double e : efficiency) ref += e;
        ref /= static_cast<double>(efficiency.size());
    }
    if (!(ref > 0.0)) throw UndefinedEfficiencyError("reference efficiency is zero");
    PowerTrace t;
    t.frame_period_s = 1.0 / frame_rate_hz;
    for (std::size_t i = 0; i < efficiency.size(); ++i) {
        if (!(efficiency[i] >= 0.0)) throw ParameterError("efficiency must be >= 0");
        t.time_s.push_back(static_cast<double>(i) / frame_rate_hz);
        t.rop_dbm.push_back(setpoint_dbm + 10.0 * std::log10(efficiency[i] / ref));
    }
    return t;
}

double cumulated_ber(const PowerTrace& trace, const ReceiverModel& model) {
    if (trace.size() == 0) throw ParameterError("empty power trace");
    double s = 0.0;
    for (double p : trace.rop_dbm) s += ber_instant(p, model);
    return s / static_cast<double>(trace.size());
}

FrameRateCheck frame_rate_invariance_check(const PowerTrace& trace, const ReceiverModel& model,
                                           std::span<const double> rates_hz,
                                           double correction_bandwidth_hz) {
    if (trace.size() == 0) throw ParameterError("empty power trace");
    FrameRateCheck out;
    const double n = static_cast<double>(trace.size());
    double ref = std::numeric_limits<double>::quiet_NaN();
    for (double rate : rates_hz) {
        if (!(rate > 0.0)) throw ParameterError("frame rate must be positive");
        // Errors per frame at this rate are BER * bit_rate / rate; the total
        // over the replay divided by the bits sent gives the cumulated BER.
        const double bits_per_frame = model.bit_rate_bps / rate;
        double errors = 0.0;
        for (double p : trace.rop_dbm) errors += ber_instant(p, model) * bits_per_frame;
        const double cum = errors / (bits_per_frame * n);
        const bool excluded = rate > correction_bandwidth_hz;
        out.rates_hz.push_back(rate);
        out.cumulated.push_back(cum);
        out.excluded.push_back(excluded);
        if (excluded) continue;
        if (std::isnan(ref)) {
            ref = cum;
        } else {
            const double dev = ref > 0.0 ? std::abs(cum - ref) / ref : std::abs(cum - ref);
            out.max_rel_deviation = std::max(out.max_rel_deviation, dev);
        }
    }
    out.invariant = out.max_rel_deviation <= 1e-12;
    return out;
}

SyncLossStats sync_loss_stats(const PowerTrace& trace, const ReceiverModel& model,
                              double ber_threshold, double reacquire_s) {
    trace.validate();
    if (trace.size() == 0) throw ParameterError("empty power trace");
    if (!(reacquire_s >= 0.0)) throw ParameterError("reacquire time must be >= 0");
    SyncLossStats s;
    s.duration_s = trace.duration_s();
    const double end_of_trace = trace.time_s.front() + s.duration_s;
    double open_start = 0.0, open_end = -1.0;
    bool open = false;
    auto close = [&] {
        if (open) {
            s.outage_s += std::min(open_end, end_of_trace) - open_start;
            ++s.outages;
        }
    };
    for (std::size_t i = 0; i < trace.size(); ++i) {
        if (ber_instant(trace.rop_dbm[i], model) <= ber_threshold) continue;
        ++s.bad_frames;
        const double t0 = trace.time_s[i];
        const double t1 = t0 + trace.frame_period_s + reacquire_s;
        if (open && t0 <= open_end) {
            open_end = std::max(open_end, t1);
        } else {
            close();
            open = true;
            open_start = t0;
            open_end = t1;
        }
    }
    close();
    s.seconds_per_minute = s.outage_s * 60.0 / s.duration_s;
    return s;
}

std::vector<double> rop_sweep(double lo_dbm, double hi_dbm, double step_db) {
    if (!(step_db > 0.0) || !(hi_dbm >= lo_dbm)) throw ParameterError("invalid ROP sweep");
    std::vector<double> out;
    const auto n = static_cast<std::size_t>(std::floor((hi_dbm - lo_dbm) / step_db + 1e-9));
    for (std::size_t i = 0; i <= n; ++i) out.push_back(lo_dbm + step_db * static_cast<double>(i));
    return out;
}

BerCurve ber_curve(std::span<const double> efficiency, const ReceiverModel& model,
                   std::span<const double> setpoints_dbm, double frame_rate_hz,
                   PowerNormalization norm) {
    BerCurve c;
    for (double sp : setpoints_dbm) {
        c.rop_dbm.push_back(sp);
        c.ber.push_back(cumulated_ber(power_trace_from_efficiency(efficiency, sp, frame_rate_hz, norm), model));
    }
    return c;
}

BerCurve btb_curve(const ReceiverModel& model, std::span<const double> setpoints_dbm) {
    BerCurve c;
    for (double sp : setpoints_dbm) {
        c.rop_dbm.push_back(sp);
        c.ber.push_back(ber_instant(sp, model));
    }
    return c;
}

double rop_at_ber(const BerCurve& curve, double target_ber) {
    if (curve.rop_dbm.size() != curve.ber.size()) throw DimensionError("curve lengths differ");
    if (!(target_ber > 0.0 && target_ber < 0.5)) throw ParameterError("target BER must be in (0, 0.5)");
    const double lt = std::log10(target_ber);
    for (std::size_t i = 0; i + 1 < curve.ber.size(); ++i) {
        const double b0 = curve.ber[i], b1 = curve.ber[i + 1];
        if (b0 >= target_ber && b1 < target_ber) {
            const double l0 = std::log10(b0), l1 = std::log10(std::max(b1, 1e-300));
            const double u = (l0 - lt) / (l0 - l1);
            return curve.rop_dbm[i] + u * (curve.rop_dbm[i + 1] - curve.rop_dbm[i]);
        }
    }
    throw NotComparableError("curve", "BER curve never falls through the target");
}

double power_penalty(const BerCurve& curve, const BerCurve& reference, double target_ber) {
    double ref;
    try {
        ref = rop_at_ber(reference, target_ber);
    } catch (const NotComparableError&) {
        throw NotComparableError("reference", "reference curve never falls through the target");
    }
    return rop_at_ber(curve, target_ber) - ref;
}

}  // namespace fso
