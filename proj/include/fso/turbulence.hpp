#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "fso/field.hpp"
#include "fso/phase_screen.hpp"

namespace fso {

struct AtmosphereLayer {
    double altitude_m = 0.0;
    double cn2_weight = 0.0;
    /// Slant distance from this layer to the next one below it (or to the
    /// receiver for the lowest layer).
    double distance_to_next_m = 0.0;
};

/// Layered slant path. Layers are ordered from the top of the atmosphere down
/// to the ground, i.e. in propagation order for a downlink.
struct AtmosphereProfile {
    std::vector<AtmosphereLayer> layers;
    /// Fried parameter at the field wavelength along the line of sight.
    /// +infinity disables turbulence.
    double total_r0_m = 0.0;
    double outer_scale_m = 25.0;
    double inner_scale_m = 0.005;
    double wind_speed_mps = 47.0;
    double elevation_deg = 30.0;

    /// Throws ParameterError when an invariant fails.
    void validate() const;
    /// r0 of layer i, r0_i = r0 * w_i^(-3/5) (infinite for zero weight).
    double layer_r0(std::size_t i) const;
    /// Slant distance from the receiver to layer i.
    double slant_distance(std::size_t i) const;
};

/// Builds a profile from layer altitudes and Cn2 weights (any order); slant
/// distances follow from the elevation. Weights are normalized.
AtmosphereProfile make_layered_profile(std::vector<double> altitudes_m, std::vector<double> weights,
                                       double total_r0_m, double outer_scale_m,
                                       double inner_scale_m, double wind_speed_mps,
                                       double elevation_deg);

/// Fried parameter scales as lambda^(6/5).
double scale_r0_to_wavelength(double r0_m, double reference_wavelength_m, double wavelength_m);

/// Slant range from a ground station to a geostationary satellite seen at the
/// given elevation (spherical Earth).
double geo_slant_range_m(double elevation_deg);

/// Von Karman phase power spectral density per (rad/m)^2:
///   0.023 (2 pi)^(5/3) r0^(-5/3) (k^2 + k0^2)^(-11/6) exp(-k^2/km^2),
/// k0 = 2 pi / L0, km = 5.92 / l0. The (2 pi)^(5/3) factor converts the usual
/// 0.023 coefficient (frequencies in cycles/m) to angular wavenumbers; with it
/// the Kolmogorov limit has D(r) = 6.88 (r/r0)^(5/3).
double von_karman_psd(double kappa, double r0_m, double outer_scale_m, double inner_scale_m);

struct ScreenGeometry {
    std::size_t rows = 512;
    std::size_t cols = 512;
    double spacing_m = 1.0 / 512.0;
};

struct ScreenOptions {
    /// Subharmonic levels added below the DFT fundamental (0 disables). Each
    /// level adds the 8 cells of a 3x3 split of the previous central cell;
    /// the 8 DFT bins around DC are replaced by explicit components as well.
    int subharmonic_levels = 3;
    /// Rings of DFT bins around DC (Chebyshev radius) replaced by jittered
    /// explicit components when subharmonics are enabled.
    int explicit_rings = 1;
};

/// DFT phase screen with von Karman statistics. Explicit low-frequency
/// components are placed at a uniformly jittered frequency inside their
/// spectral cell, which makes their ensemble contribution to the structure
/// function exact. The grid mean is removed. Deterministic per seed.
PhaseScreen synth_phase_screen(const ScreenGeometry& geometry, double r0_m, double outer_scale_m,
                               double inner_scale_m, std::uint64_t seed,
                               const ScreenOptions& options = {});

struct WindVector {
    double vx_mps = 0.0;
    double vy_mps = 0.0;
};

/// Frozen-flow translation by wind * dt (cyclic). Integer-cell displacements
/// are exact rolls; fractional ones use a Fourier phase ramp applied to the
/// untranslated origin, so consecutive steps compose to one step.
PhaseScreen evolve_frozen_flow(const PhaseScreen& screen, WindVector wind, double dt_s);

/// Phase structure function along rows and columns averaged, using all
/// non-wrapping pairs at separation `lag` cells.
double structure_function(const PhaseScreen& screen, std::size_t lag);

/// Far-zone (Fraunhofer) field of a transmit-plane field observed on the same
/// grid at the given range. Used to collapse the vacuum part of the path.
ComplexFieldGrid fraunhofer_field(const ComplexFieldGrid& tx, double range_m);

/// Collimated Gaussian truncated by a circular aperture, scaled to the given power.
ComplexFieldGrid truncated_gaussian(const GridGeometry& g, double wavelength_m, double waist_m,
                                    double aperture_diameter_m, double power_w);

struct ChannelOptions {
    double frame_rate_hz = 1500.0;
    /// Frames the strips are sized for; later frames wrap around the strips.
    std::size_t n_frames = 1000;
    std::uint64_t seed = 1;
    double rx_aperture_m = 0.5;
    ScreenOptions screens{};
    /// Upper bound on strip length as a multiple of the grid size.
    std::size_t max_strip_factor = 64;
};

/// Turbulent downlink: one along-wind strip screen per layer, frozen-flow
/// advected, alternated with angular-spectrum propagation, clipped by the
/// receive aperture. Frames are pure functions of (profile, tx, options, index).
class TurbulentChannel {
public:
    TurbulentChannel(AtmosphereProfile profile, const ComplexFieldGrid& tx, ChannelOptions options);

    /// Receiver-plane, post-aperture field of frame i.
    ComplexFieldGrid frame(std::size_t i) const;

    /// Field entering the top layer (far zone of the transmitter).
    const ComplexFieldGrid& top_field() const noexcept { return top_; }
    const AtmosphereProfile& profile() const noexcept { return profile_; }
    const ChannelOptions& options() const noexcept { return options_; }
    std::size_t strip_cols() const noexcept { return strip_cols_; }
    /// True when every layer gap satisfies the angular-spectrum sampling bound.
    bool sampling_bound_satisfied() const noexcept { return sampling_ok_; }
    /// Layer phase window applied at frame i (row-major n x n).
    std::vector<double> layer_window(std::size_t layer, std::size_t i) const;

private:
    AtmosphereProfile profile_;
    ChannelOptions options_;
    ComplexFieldGrid top_;
    std::vector<PhaseScreen> strips_;  // empty screen for turbulence-free layers
    std::vector<std::unique_ptr<Propagator>> gaps_;
    std::size_t strip_cols_ = 0;
    bool sampling_ok_ = true;
};

/// Per-layer screen seed derived from the scenario seed.
std::uint64_t layer_seed(std::uint64_t seed, std::size_t layer);

/// Collects n_frames receiver-plane fields. Holds every frame in memory; use
/// TurbulentChannel directly for long series.
std::vector<ComplexFieldGrid> build_time_series(const AtmosphereProfile& profile,
                                                const ComplexFieldGrid& tx, std::size_t n_frames,
                                                double frame_rate_hz, std::uint64_t seed,
                                                const ChannelOptions& base = {});

}  // namespace fso
