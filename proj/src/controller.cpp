#include "fso/controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "fso/error.hpp"

namespace fso {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

NelderMead::NelderMead(std::vector<double> x0, double step, NelderMeadCoefficients c) : coef_(c) {
    reset(std::move(x0), step);
}

void NelderMead::reset(std::vector<double> x0, double step) {
    const std::size_t n = x0.size();
    reset(std::move(x0), std::vector<double>(n, step));
}

void NelderMead::reset(std::vector<double> x0, const std::vector<double>& steps) {
    if (x0.empty()) throw ParameterError("Nelder-Mead needs at least one dimension");
    if (steps.size() != x0.size()) throw DimensionError("simplex step count mismatch");
    for (double s : steps)
        if (!(s > 0.0)) throw ParameterError("simplex step must be positive");
    dim_ = x0.size();
    x_.assign(dim_ + 1, x0);
    for (std::size_t i = 0; i < dim_; ++i) x_[i + 1][i] += steps[i];
    f_.assign(dim_ + 1, -std::numeric_limits<double>::infinity());
    phase_ = Phase::Init;
    in_iteration_ = false;
    init_index_ = 0;
    pending_ = x_[0];
}

std::size_t NelderMead::best_index() const {
    std::size_t b = 0;
    for (std::size_t i = 1; i < f_.size(); ++i)
        if (f_[i] > f_[b]) b = i;
    return b;
}

const std::vector<double>& NelderMead::best_point() const { return x_[best_index()]; }
double NelderMead::best_value() const { return f_[best_index()]; }

void NelderMead::set_best_value(double value) {
    if (!std::isfinite(value)) throw ControllerFault("non-finite objective value");
    f_[best_index()] = value;
    if (at_iteration_start()) {
        begin_iteration();
        in_iteration_ = false;
    }
}

double NelderMead::diameter() const {
    const auto& b = best_point();
    double d = 0.0;
    for (const auto& v : x_)
        for (std::size_t i = 0; i < dim_; ++i) d = std::max(d, std::abs(v[i] - b[i]));
    return d;
}

void NelderMead::begin_iteration() {
    order_.resize(dim_ + 1);
    std::iota(order_.begin(), order_.end(), 0);
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return f_[a] > f_[b]; });
    centroid_.assign(dim_, 0.0);
    for (std::size_t k = 0; k < dim_; ++k)
        for (std::size_t i = 0; i < dim_; ++i) centroid_[i] += x_[order_[k]][i];
    for (auto& v : centroid_) v /= static_cast<double>(dim_);
    const auto& xw = x_[order_.back()];
    xr_.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        xr_[i] = centroid_[i] + coef_.reflection * (centroid_[i] - xw[i]);
    pending_ = xr_;
    phase_ = Phase::Reflect;
    in_iteration_ = true;
}

void NelderMead::finish_iteration() {
    ++iterations_;
    phase_ = Phase::Reflect;
    in_iteration_ = false;
    // Pending point of the next iteration; computed lazily from the fresh simplex.
    begin_iteration();
    in_iteration_ = false;
}

void NelderMead::start_shrink() {
    const auto& xb = x_[order_.front()];
    for (std::size_t k = 1; k <= dim_; ++k) {
        auto& v = x_[order_[k]];
        for (std::size_t i = 0; i < dim_; ++i) v[i] = xb[i] + coef_.shrink * (v[i] - xb[i]);
    }
    phase_ = Phase::Shrink;
    shrink_index_ = 1;
    pending_ = x_[order_[1]];
}

void NelderMead::tell(double value) {
    if (!std::isfinite(value)) throw ControllerFault("non-finite objective value");
    ++evaluations_;
    switch (phase_) {
        case Phase::Init:
            f_[init_index_] = value;
            if (++init_index_ <= dim_) {
                pending_ = x_[init_index_];
            } else {
                begin_iteration();
                in_iteration_ = false;
            }
            return;
        case Phase::Reflect: {
            in_iteration_ = true;
            fr_ = value;
            const double fb = f_[order_.front()];
            const double fsw = f_[order_[dim_ - 1]];
            const double fw = f_[order_.back()];
            if (fr_ <= fb && fr_ > fsw) {
                x_[order_.back()] = xr_;
                f_[order_.back()] = fr_;
                finish_iteration();
            } else if (fr_ > fb) {
                pending_.resize(dim_);
                for (std::size_t i = 0; i < dim_; ++i)
                    pending_[i] = centroid_[i] + coef_.expansion * (xr_[i] - centroid_[i]);
                phase_ = Phase::Expand;
            } else if (fr_ > fw) {
                for (std::size_t i = 0; i < dim_; ++i)
                    pending_[i] = centroid_[i] + coef_.contraction * (xr_[i] - centroid_[i]);
                phase_ = Phase::ContractOut;
            } else {
                const auto& xw = x_[order_.back()];
                for (std::size_t i = 0; i < dim_; ++i)
                    pending_[i] = centroid_[i] + coef_.contraction * (xw[i] - centroid_[i]);
                phase_ = Phase::ContractIn;
            }
            return;
        }
        case Phase::Expand:
            if (value > fr_) {
                x_[order_.back()] = pending_;
                f_[order_.back()] = value;
            } else {
                x_[order_.back()] = xr_;
                f_[order_.back()] = fr_;
            }
            finish_iteration();
            return;
        case Phase::ContractOut:
            if (value >= fr_) {
                x_[order_.back()] = pending_;
                f_[order_.back()] = value;
                finish_iteration();
            } else {
                start_shrink();
            }
            return;
        case Phase::ContractIn:
            if (value > f_[order_.back()]) {
                x_[order_.back()] = pending_;
                f_[order_.back()] = value;
                finish_iteration();
            } else {
                start_shrink();
            }
            return;
        case Phase::Shrink:
            f_[order_[shrink_index_]] = value;
            if (++shrink_index_ <= dim_) {
                pending_ = x_[order_[shrink_index_]];
            } else {
                finish_iteration();
            }
            return;
    }
}

std::size_t nelder_mead_step(const std::function<double(std::span<const double>)>& objective,
                             NelderMead& nm) {
    std::size_t calls = 0;
    do {
        const auto x = nm.ask();
        const double v = objective(x);
        if (!std::isfinite(v)) throw ControllerFault("non-finite objective value");
        nm.tell(v);
        ++calls;
    } while (!nm.at_iteration_start());
    return calls;
}

void ControllerConfig::validate() const {
    if (!(loop_rate_hz > 0.0)) throw ParameterError("loop_rate_hz must be positive");
    if (!(simplex_init_rad > 0.0)) throw ParameterError("simplex_init_rad must be positive");
    if (!(tracking_simplex_rad > 0.0)) throw ParameterError("tracking_simplex_rad must be positive");
    if (!(collapse_rad > 0.0)) throw ParameterError("collapse_rad must be positive");
    if (!(restart_threshold_db > 0.0)) throw ParameterError("restart_threshold_db must be positive");
    if (!(rise_restart_db > 0.0)) throw ParameterError("rise_restart_db must be positive");
    if (!(wrap_hysteresis_rad >= 0.0)) throw ParameterError("wrap_hysteresis_rad must be >= 0");
    if (!(wrap_transient_s >= 0.0)) throw ParameterError("wrap_transient_s must be >= 0");
    if (!(wrap_residual >= 0.0 && wrap_residual <= 1.0)) throw ParameterError("wrap_residual must be in [0, 1]");
    if (!(detector_noise_rel >= 0.0)) throw ParameterError("detector_noise_rel must be >= 0");
    if (record_stride == 0) throw ParameterError("record_stride must be >= 1");
}

PhaseController::PhaseController(const CombinerTopology& topology, ControllerConfig config,
                                 std::uint64_t seed)
    : topology_(topology), config_(config), noise_(seed, "detector-noise"), offsets_(topology.n_actuators(), 0) {
    config_.validate();
    const std::size_t na = topology.n_actuators();
    applied_.assign(na, std::numbers::pi);
    if (na == 0) return;
    std::vector<std::vector<std::size_t>> groups;
    if (config_.monitor_feedback) {
        const std::size_t per = topology.variable_ratio() ? 2 : 1;
        for (std::size_t e = 0; e < topology.n_elements(); ++e) {
            std::vector<std::size_t> g;
            for (std::size_t k = 0; k < per; ++k) g.push_back(per * e + k);
            groups.push_back(g);
        }
    } else {
        std::vector<std::size_t> g(na);
        std::iota(g.begin(), g.end(), 0);
        groups.push_back(g);
    }
    for (auto& g : groups) {
        Track t{g, NelderMead(std::vector<double>(g.size(), std::numbers::pi), 1.0), false, false, 0.0, {}};
        t.nm.reset(std::vector<double>(g.size(), std::numbers::pi), start_steps(t, config_.simplex_init_rad));
        tracks_.push_back(std::move(t));
    }
}

std::vector<double> PhaseController::start_steps(const Track& t, double scale) const {
    return std::vector<double>(t.axes.size(), scale);
}

std::vector<double> PhaseController::apply_range(const std::vector<double>& x, bool& wrapped) {
    std::vector<double> c(x.size());
    const double h = config_.wrap_hysteresis_rad;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = x[i] - kTwoPi * static_cast<double>(offsets_[i]);
        if (config_.wrap_model) {
            while (v >= kTwoPi + h) {
                ++offsets_[i];
                v -= kTwoPi;
                wrapped = true;
            }
            while (v < -h) {
                --offsets_[i];
                v += kTwoPi;
                wrapped = true;
            }
        }
        c[i] = v;
    }
    return c;
}

void PhaseController::reopen(Track& t) {
    const auto& best = t.nm.best_point();
    const double lo = std::min(2.0 * config_.collapse_rad, config_.tracking_simplex_rad);
    if (t.reopen_step > 0.0 && t.point_at_reopen.size() == best.size()) {
        double moved = 0.0;
        for (std::size_t i = 0; i < best.size(); ++i) moved = std::max(moved, std::abs(best[i] - t.point_at_reopen[i]));
        t.reopen_step = std::clamp(2.0 * moved, lo, config_.tracking_simplex_rad);
    } else {
        t.reopen_step = config_.tracking_simplex_rad;
    }
    t.point_at_reopen = best;
    t.nm.reset(best, start_steps(t, t.reopen_step));
    ++reopens_;
}

std::vector<double> PhaseController::commands() const { return applied_; }

PhaseController::Step PhaseController::evaluate(std::span<const cplx> inputs) {
    Step st;
    if (tracks_.empty()) {
        st.power = combine(inputs, topology_, state_from_actuators(topology_, {})).output_power();
        st.measured = st.power;
        return st;
    }
    // Unwrapped target point assembled from every track.
    std::vector<double> x(topology_.n_actuators());
    for (auto& t : tracks_) {
        if (t.nm.at_iteration_start() && !t.remeasured) {
            if (t.nm.diameter() < config_.collapse_rad)
                reopen(t);
            else if (config_.remeasure_best)
                t.remeasuring = true;
        }
        const auto& p = t.remeasuring ? t.nm.best_point() : t.nm.ask();
        for (std::size_t k = 0; k < t.axes.size(); ++k) x[t.axes[k]] = p[k];
    }
    applied_ = apply_range(x, st.wrap);
    const auto res = combine(inputs, topology_, state_from_actuators(topology_, applied_));
    st.power = res.output_power();
    auto read = [&](double p) {
        if (config_.detector_noise_rel <= 0.0) return p;
        return std::max(0.0, p * (1.0 + config_.detector_noise_rel * noise_.normal()));
    };
    const double drop = std::pow(10.0, -config_.restart_threshold_db / 10.0);
    const double rise = std::pow(10.0, config_.rise_restart_db / 10.0);
    for (std::size_t i = 0; i < tracks_.size(); ++i) {
        auto& t = tracks_[i];
        const double v = config_.monitor_feedback ? read(res.monitor_powers[i]) : read(st.power);
        if (i == tracks_.size() - 1) st.measured = v;
        if (t.remeasuring) {
            t.remeasuring = false;
            t.remeasured = true;
            if (v < t.nm.best_value() * drop || v > t.nm.best_value() * rise) {
                t.nm.reset(t.nm.best_point(), start_steps(t, config_.simplex_init_rad));
                t.remeasured = false;
                t.reopen_step = 0.0;
                ++restarts_;
            } else {
                t.nm.set_best_value(v);
            }
        } else {
            t.nm.tell(v);
            t.remeasured = false;
        }
    }
    return st;
}

namespace {

LoopTrace run_loop(const std::function<void(std::size_t, double, std::span<cplx>)>& inputs,
                   std::size_t n_evaluations, double loop_rate_hz, double frame_rate_hz,
                   std::size_t n_frames, const CombinerTopology& topology,
                   const ControllerConfig& config, std::uint64_t seed) {
    config.validate();
    PhaseController ctl(topology, config, seed);
    LoopTrace tr;
    tr.loop_rate_hz = loop_rate_hz;
    tr.frame_rate_hz = frame_rate_hz;
    tr.record_stride = config.record_stride;
    tr.evaluations = n_evaluations;
    tr.duration_s = static_cast<double>(n_evaluations) / loop_rate_hz;
    tr.frame_power.assign(n_frames, 0.0);
    tr.frame_input_power.assign(n_frames, 0.0);
    tr.frame_commands.assign(n_frames, {});
    std::vector<std::size_t> frame_count(n_frames, 0);
    std::vector<cplx> in(topology.n_inputs());
    double transient_end = -1.0;
    double covered_until = 0.0;
    for (std::size_t j = 0; j < n_evaluations; ++j) {
        const double t = static_cast<double>(j) / loop_rate_hz;
        const std::size_t frame =
            n_frames ? std::min(static_cast<std::size_t>(std::floor(static_cast<double>(j) * frame_rate_hz / loop_rate_hz)), n_frames - 1) : 0;
        inputs(frame, t, in);
        const auto st = ctl.evaluate(in);
        if (st.wrap) {
            tr.wrap_times_s.push_back(t);
            const double end = std::min(t + config.wrap_transient_s, tr.duration_s);
            const double start = std::max(t, covered_until);
            if (end > start) tr.transient_time_s += end - start;
            covered_until = std::max(covered_until, end);
            transient_end = std::max(transient_end, t + config.wrap_transient_s);
        }
        double p = st.power;
        if (st.power > tr.best_power) {
            tr.best_power = st.power;
            tr.best_evaluation = j;
        }
        if (t < transient_end) p *= config.wrap_residual;
        if (j % config.record_stride == 0) tr.samples.push_back({t, p, st.wrap});
        if (n_frames) {
            // Settled second half of the frame.
            const double frame_start = static_cast<double>(frame) / frame_rate_hz;
            if ((t - frame_start) * frame_rate_hz >= 0.5) {
                tr.frame_power[frame] += p;
                ++frame_count[frame];
            }
            double pin = 0.0;
            for (const auto& v : in) pin += std::norm(v);
            tr.frame_input_power[frame] = pin;
            tr.frame_commands[frame] = ctl.commands();
        }
    }
    for (std::size_t f = 0; f < n_frames; ++f)
        if (frame_count[f]) tr.frame_power[f] /= static_cast<double>(frame_count[f]);
    tr.restarts = ctl.restarts();
    tr.reopens = ctl.reopens();
    return tr;
}

}  // namespace

LoopTrace run_closed_loop(const std::vector<std::vector<cplx>>& frames, double frame_rate_hz,
                          const CombinerTopology& topology, const ControllerConfig& config,
                          std::uint64_t seed) {
    if (frames.empty()) throw ParameterError("empty input series");
    if (!(frame_rate_hz > 0.0)) throw ParameterError("frame rate must be positive");
    for (const auto& f : frames)
        if (f.size() != topology.n_inputs()) throw DimensionError("frame input count does not match topology");
    const double loop_rate = config.evals_per_frame
                                 ? static_cast<double>(config.evals_per_frame) * frame_rate_hz
                                 : config.loop_rate_hz;
    if (loop_rate < frame_rate_hz) throw ParameterError("loop rate must be >= frame rate");
    const auto n_eval = static_cast<std::size_t>(
        std::llround(std::ceil(static_cast<double>(frames.size()) * loop_rate / frame_rate_hz - 1e-9)));
    ControllerConfig cfg = config;
    cfg.loop_rate_hz = loop_rate;
    return run_loop([&](std::size_t frame, double, std::span<cplx> in) {
                        std::copy(frames[frame].begin(), frames[frame].end(), in.begin());
                    },
                    n_eval, loop_rate, frame_rate_hz, frames.size(), topology, cfg, seed);
}

LoopTrace run_closed_loop(const std::function<void(double, std::span<cplx>)>& inputs,
                          std::size_t n_evaluations, const CombinerTopology& topology,
                          const ControllerConfig& config, std::uint64_t seed) {
    return run_loop([&](std::size_t, double t, std::span<cplx> in) { inputs(t, in); },
                    n_evaluations, config.loop_rate_hz, 0.0, 0, topology, config, seed);
}

double correction_bandwidth(double disturbance_freq_hz, double amplitude_rad,
                            const CombinerTopology& topology, const ControllerConfig& config,
                            std::uint64_t seed) {
    if (topology.n_inputs() != 2) throw ParameterError("correction bandwidth uses a 2-input combiner");
    if (!(disturbance_freq_hz >= 0.0)) throw ParameterError("frequency must be >= 0");
    const double rate = config.loop_rate_hz;
    const double settle_s = 2000.0 / rate;
    const double avg_s = disturbance_freq_hz > 0.0 ? std::max(100.0 / disturbance_freq_hz, 20000.0 / rate)
                                                   : 20000.0 / rate;
    const auto n_settle = static_cast<std::size_t>(std::ceil(settle_s * rate));
    const auto n_total = n_settle + static_cast<std::size_t>(std::ceil(avg_s * rate));
    const double a = std::sqrt(0.5);
    ControllerConfig cfg = config;
    cfg.wrap_model = false;
    cfg.record_stride = 1;
    const auto tr = run_closed_loop(
        [&](double t, std::span<cplx> in) {
            in[0] = a;
            in[1] = a * std::polar(1.0, amplitude_rad * std::sin(kTwoPi * disturbance_freq_hz * t));
        },
        n_total, topology.lossless(), cfg, seed);
    double sum = 0.0;
    for (std::size_t j = n_settle; j < tr.samples.size(); ++j) sum += tr.samples[j].power;
    return sum / static_cast<double>(tr.samples.size() - n_settle);
}

double open_loop_efficiency(double amplitude_rad) {
    return 0.5 * (1.0 + std::abs(std::cyl_bessel_j(0.0, amplitude_rad)));
}

double correction_knee_hz(double amplitude_rad, const CombinerTopology& topology,
                          const ControllerConfig& config, double level, double f_lo, double f_hi,
                          int points_per_decade) {
    if (!(f_lo > 0.0 && f_hi > f_lo) || points_per_decade < 1) throw ParameterError("invalid knee sweep");
    const double open = open_loop_efficiency(amplitude_rad);
    if (!(open < 1.0)) throw ParameterError("disturbance amplitude too small to measure");
    const int n = static_cast<int>(std::ceil(std::log10(f_hi / f_lo) * points_per_decade));
    double prev_f = 0.0, prev_c = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double f = f_lo * std::pow(10.0, static_cast<double>(i) / points_per_decade);
        const double c = (correction_bandwidth(f, amplitude_rad, topology, config) - open) / (1.0 - open);
        if (c < level) {
            if (i == 0) return f;
            const double u = (prev_c - level) / (prev_c - c);
            return std::exp(std::log(prev_f) + u * (std::log(f) - std::log(prev_f)));
        }
        prev_f = f;
        prev_c = c;
    }
    return std::numeric_limits<double>::infinity();
}

WrapStats wrap_event_rate(const LoopTrace& trace) {
    if (trace.evaluations == 0) throw ParameterError("empty loop trace");
    WrapStats s;
    s.events = trace.wrap_times_s.size();
    s.events_per_s = static_cast<double>(s.events) / trace.duration_s;
    s.duty = trace.transient_time_s / trace.duration_s;
    return s;
}

}  // namespace fso
