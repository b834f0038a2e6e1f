#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fso/fft.hpp"
#include "fso/modes.hpp"

namespace fso {

/// One 2 -> 1 combining element. A child reference >= 0 is another element;
/// a negative reference -1 - k is input port k.
struct CombinerElement {
    int left = 0;
    int right = 0;
};

class CombinerTopology {
public:
    /// Balanced binary tree: the inputs are split ceil/floor at every level,
    /// so 15 inputs give 14 elements over 4 stages.
    static CombinerTopology balanced_tree(std::size_t n_inputs, double pic_insertion_loss_db = 7.0,
                                          double demux_insertion_loss_db = 1.0,
                                          bool variable_ratio = true);

    std::size_t n_inputs() const noexcept { return n_inputs_; }
    std::size_t n_elements() const noexcept { return elements_.size(); }
    /// Children precede parents; the last element is the output.
    const std::vector<CombinerElement>& elements() const noexcept { return elements_; }
    std::size_t depth() const noexcept { return depth_; }
    double pic_insertion_loss_db() const noexcept { return pic_loss_db_; }
    double demux_insertion_loss_db() const noexcept { return demux_loss_db_; }
    double total_loss_db() const noexcept { return pic_loss_db_ + demux_loss_db_; }
    /// Power transmission factor of the lumped losses.
    double loss_factor() const noexcept;
    /// Elements carry an internal split-ratio actuator in addition to the phase.
    bool variable_ratio() const noexcept { return variable_ratio_; }
    /// Phase actuators: one per element, two with variable ratios.
    std::size_t n_actuators() const noexcept {
        return variable_ratio_ ? 2 * elements_.size() : elements_.size();
    }
    /// Same wiring without losses.
    CombinerTopology lossless() const;

private:
    std::size_t n_inputs_ = 0;
    std::vector<CombinerElement> elements_;
    std::size_t depth_ = 0;
    double pic_loss_db_ = 0.0;
    double demux_loss_db_ = 0.0;
    bool variable_ratio_ = true;
};

struct CombinerState {
    /// Interferometric phase per element (radians).
    std::vector<double> phase_commands;
    /// Power fraction taken from the left input, per element.
    std::vector<double> split_ratios;
    /// Common phase added to each element output (empty means zero).
    std::vector<double> common_phases;
};

/// Maps an actuator vector to an element state. Layout: theta_e at 2e and the
/// split actuator psi_e at 2e+1. The element transfer is
///   out = exp(i phi) (cos(phi) a + sin(phi) exp(i theta) b),  phi = (psi - pi/2) / 2,
/// so psi = pi is the balanced split, the amplitudes change sign smoothly
/// through full transmission and psi -> psi + 2 pi leaves the element unchanged. Fixed-ratio topologies use theta_e at e and
/// rho = 1/2.
CombinerState state_from_actuators(const CombinerTopology& topology, std::span<const double> x);

/// Actuators reproducing state s with psi in [pi/2, 3 pi/2]. Phase commands
/// absorb the changed element common phases, so the output and every monitor
/// power match; the output differs by a global phase.
std::vector<double> actuators_from_state(const CombinerTopology& topology, const CombinerState& s);

struct CombineResult {
    cplx output;
    /// |out|^2 of each element before the lumped losses.
    std::vector<double> monitor_powers;
    double output_power() const { return std::norm(output); }
};

/// Each element forms exp(i chi) (sqrt(rho) a + sqrt(1 - rho) b exp(i theta)).
CombineResult combine(std::span<const cplx> inputs, const CombinerTopology& topology,
                      const CombinerState& state);

/// State that routes all input power to the output (per-stage alignment).
/// For fixed-ratio topologies only the phases are aligned.
CombinerState optimal_state(std::span<const cplx> inputs, const CombinerTopology& topology);

/// Sum of |c_k|^2 over the first n_modes coefficients.
double ideal_combined_power(const ModeCoefficients& coeffs, std::size_t n_modes);

/// Per-frame ideal combined power over aperture power; the lossy variant also
/// applies the topology's lumped losses.
std::vector<double> mm_coupling_efficiency_series(const std::vector<ModeCoefficients>& series,
                                                  std::size_t n_modes, bool lossless,
                                                  const CombinerTopology& topology);

struct EfficiencySummary {
    /// Time average of the per-frame loss in dB.
    double mean_db = 0.0;
    /// 10 log10 of the mean efficiency (mean collected fraction).
    double mean_fraction_db = 0.0;
    double max_db = 0.0;
    double min_db = 0.0;
    double variation_db() const { return max_db - min_db; }
    double mean = 0.0;
};

EfficiencySummary summarize_efficiency(std::span<const double> efficiency);

double to_db(double ratio);

}  // namespace fso
