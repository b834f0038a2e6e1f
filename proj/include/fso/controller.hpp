#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

#include "fso/combiner.hpp"
#include "fso/rng.hpp"

namespace fso {

struct NelderMeadCoefficients {
    double reflection = 1.0;
    double expansion = 2.0;
    double contraction = 0.5;
    double shrink = 0.5;
};

/// Ask/tell Nelder-Mead maximizer. ask() returns the next point to measure
/// and tell() consumes its value; one simplex iteration spans one or more
/// ask/tell pairs.
class NelderMead {
public:
    NelderMead(std::vector<double> x0, double step, NelderMeadCoefficients c = {});

    const std::vector<double>& ask() const noexcept { return pending_; }
    /// Throws ControllerFault on a non-finite value.
    void tell(double value);

    /// Re-initializes the simplex at x0 with axis steps of `step`.
    void reset(std::vector<double> x0, double step);
    /// Per-axis steps.
    void reset(std::vector<double> x0, const std::vector<double>& steps);

    std::size_t dimension() const noexcept { return dim_; }
    /// True when the next ask() starts a new iteration (simplex fully measured).
    bool at_iteration_start() const noexcept { return phase_ == Phase::Reflect && !in_iteration_; }
    const std::vector<double>& best_point() const;
    double best_value() const;
    /// Replaces the stored value of the best vertex (for re-measurement).
    void set_best_value(double value);
    /// Largest infinity-norm distance from the best vertex.
    double diameter() const;
    std::size_t iterations() const noexcept { return iterations_; }
    std::size_t evaluations() const noexcept { return evaluations_; }

private:
    enum class Phase { Init, Reflect, Expand, ContractOut, ContractIn, Shrink };

    void begin_iteration();
    void finish_iteration();
    void start_shrink();
    std::size_t best_index() const;

    std::size_t dim_ = 0;
    NelderMeadCoefficients coef_;
    std::vector<std::vector<double>> x_;
    std::vector<double> f_;
    Phase phase_ = Phase::Init;
    bool in_iteration_ = false;
    std::size_t init_index_ = 0;
    std::vector<std::size_t> order_;  // vertex indices, best first
    std::vector<double> centroid_;
    std::vector<double> xr_;
    double fr_ = 0.0;
    std::size_t shrink_index_ = 0;
    std::vector<double> pending_;
    std::size_t iterations_ = 0;
    std::size_t evaluations_ = 0;
};

/// Runs evaluations until one Nelder-Mead iteration (or the initial simplex)
/// completes. Returns the number of objective calls.
std::size_t nelder_mead_step(const std::function<double(std::span<const double>)>& objective,
                             NelderMead& nm);

struct ControllerConfig {
    /// Objective evaluations per second.
    double loop_rate_hz = 500e3;
    /// If nonzero, overrides loop_rate_hz as evals_per_frame * frame rate.
    std::size_t evals_per_frame = 0;
    /// Axis step of a fresh simplex (start and restarts).
    double simplex_init_rad = 1.5;
    /// Largest axis step used when a collapsed simplex is re-opened. The step
    /// follows the drift of the best point: twice its displacement since the
    /// previous re-open, clamped to [2 collapse_rad, tracking_simplex_rad].
    double tracking_simplex_rad = 0.2;
    /// Simplex diameter below which it counts as collapsed.
    double collapse_rad = 1e-2;
    /// Restart when the re-measured best power drops by more than this (dB).
    double restart_threshold_db = 3.0;
    /// Restart when the re-measured best power rises by more than this (dB);
    /// the stored simplex values are stale then. Infinite disables.
    double rise_restart_db = 0.3;
    /// Re-measure the best vertex before every iteration.
    bool remeasure_best = true;
    /// Actuator range is [-h, 2 pi + h); leaving it wraps by 2 pi.
    double wrap_hysteresis_rad = std::numbers::pi;
    bool wrap_model = true;
    double wrap_transient_s = 2e-7;
    /// Output power factor during a wrap transient.
    double wrap_residual = 0.25;
    /// Relative RMS noise of the power reading.
    double detector_noise_rel = 0.0;
    /// Decimation of the per-evaluation record.
    std::size_t record_stride = 1;
    /// Optimize each element on its own monitor power (parallel 2-D searches)
    /// instead of the single output power.
    bool monitor_feedback = false;

    /// Throws ParameterError on an invalid field.
    void validate() const;
};

struct LoopSample {
    double time_s = 0.0;
    /// Output power including lumped losses and any wrap transient.
    double power = 0.0;
    bool wrap = false;
};

struct LoopTrace {
    double loop_rate_hz = 0.0;
    double frame_rate_hz = 0.0;
    std::size_t record_stride = 1;
    double duration_s = 0.0;
    std::size_t evaluations = 0;
    std::vector<LoopSample> samples;
    /// Per frame: mean output power over the settled second half.
    std::vector<double> frame_power;
    /// Per frame: power entering the combiner.
    std::vector<double> frame_input_power;
    /// Per frame: actuator commands at the end of the frame.
    std::vector<std::vector<double>> frame_commands;
    std::vector<double> wrap_times_s;
    /// Union of wrap transient intervals inside the run.
    double transient_time_s = 0.0;
    std::size_t restarts = 0;
    std::size_t reopens = 0;
    /// Highest output power seen (before transients) and the evaluation it came at.
    double best_power = 0.0;
    std::size_t best_evaluation = 0;
};

/// Closed-loop controller: Nelder-Mead on the actuator vector with restarts,
/// simplex re-opening and wrap handling.
class PhaseController {
public:
    PhaseController(const CombinerTopology& topology, ControllerConfig config, std::uint64_t seed);

    struct Step {
        double measured = 0.0;  // reading seen by the optimizer
        double power = 0.0;     // true output power
        bool wrap = false;
    };
    /// One objective evaluation on the given inputs.
    Step evaluate(std::span<const cplx> inputs);
    /// Actuator commands currently applied (wrapped).
    std::vector<double> commands() const;
    std::size_t restarts() const noexcept { return restarts_; }
    std::size_t reopens() const noexcept { return reopens_; }

private:
    // One Nelder-Mead search over a subset of actuators.
    struct Track {
        std::vector<std::size_t> axes;
        NelderMead nm;
        bool remeasuring = false;
        bool remeasured = false;
        double reopen_step = 0.0;
        std::vector<double> point_at_reopen;
    };

    std::vector<double> apply_range(const std::vector<double>& x, bool& wrapped);
    void reopen(Track& t);
    std::vector<double> start_steps(const Track& t, double scale) const;

    const CombinerTopology& topology_;
    ControllerConfig config_;
    RandomStream noise_;
    std::vector<Track> tracks_;
    std::vector<long> offsets_;
    std::vector<double> applied_;
    std::size_t restarts_ = 0;
    std::size_t reopens_ = 0;
};

/// Runs the controller over a frame series with zero-order hold. frames[i]
/// holds the combiner inputs of frame i, applied for 1 / frame_rate_hz.
LoopTrace run_closed_loop(const std::vector<std::vector<cplx>>& frames, double frame_rate_hz,
                          const CombinerTopology& topology, const ControllerConfig& config,
                          std::uint64_t seed);

/// Runs the controller for n_evaluations on inputs given as a function of time.
LoopTrace run_closed_loop(const std::function<void(double, std::span<cplx>)>& inputs,
                          std::size_t n_evaluations, const CombinerTopology& topology,
                          const ControllerConfig& config, std::uint64_t seed);

/// Mean combining efficiency of a 2-input combiner whose second input carries
/// a phase amplitude_rad * sin(2 pi f t), averaged over >= 100 periods after
/// settling.
double correction_bandwidth(double disturbance_freq_hz, double amplitude_rad,
                            const CombinerTopology& topology, const ControllerConfig& config,
                            std::uint64_t seed = 1);

/// Mean efficiency of the best fixed command against the same disturbance,
/// (1 + |J0(amplitude)|) / 2.
double open_loop_efficiency(double amplitude_rad);

/// Frequency at which the corrected fraction
/// (correction_bandwidth - open) / (1 - open) first falls to `level` over a
/// log sweep, log-interpolated. Returns +inf when it never falls below.
double correction_knee_hz(double amplitude_rad, const CombinerTopology& topology,
                          const ControllerConfig& config, double level = 0.5,
                          double f_lo = 100.0, double f_hi = 1e5, int points_per_decade = 8);

struct WrapStats {
    std::size_t events = 0;
    double events_per_s = 0.0;
    double duty = 0.0;
};

WrapStats wrap_event_rate(const LoopTrace& trace);

}  // namespace fso
