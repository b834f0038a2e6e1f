#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "fso/comms.hpp"
#include "fso/controller.hpp"
#include "fso/field.hpp"
#include "fso/turbulence.hpp"

namespace fso {

inline constexpr const char* kToolVersion = "fsolink 0.1.0";

struct LayerConfig {
    double altitude_m = 0.0;
    double weight = 0.0;
};

struct AtmosphereConfig {
    /// Fried parameter along the line of sight at r0_wavelength_m.
    double r0_m = 0.077;
    double r0_wavelength_m = 500e-9;
    /// Reported only; r0 sets the strength.
    double cn2_m23 = 8.7e-14;
    double outer_scale_m = 25.0;
    double inner_scale_m = 0.005;
    double wind_speed_mps = 47.0;
    double elevation_deg = 30.0;
    std::vector<LayerConfig> layers{{0.0, 0.2}, {2000.0, 0.2}, {5000.0, 0.2}, {10000.0, 0.2}, {20000.0, 0.2}};
    int subharmonic_levels = 3;
    int explicit_rings = 1;
    /// false gives a turbulence-free channel.
    bool enabled = true;
};

struct TransmitterConfig {
    double waist_m = 0.178;
    double aperture_m = 0.4;
    double power_w = 1.0;
};

struct ReceiverConfig {
    double aperture_m = 0.5;
    int max_group = 4;
    /// 0 selects the aperture fit w sqrt(max_group + 1) = D / 2.
    double basis_waist_m = 0.0;
    /// 0 selects the waist optimized on the uniformly lit aperture.
    double smf_waist_m = 0.0;
};

struct CombinerConfig {
    std::vector<std::size_t> mode_counts{3, 6, 10, 15};
    double pic_loss_db = 7.0;
    double demux_loss_db = 1.0;
    bool variable_ratio = true;
    bool lossless = false;
};

struct LoopConfig {
    bool enabled = true;
    /// Replay at 3 Hz with 20000 evaluations per frame.
    ControllerConfig controller = [] {
        ControllerConfig c;
        c.evals_per_frame = 20000;
        return c;
    }();
    /// Decimation of the exported evaluation trace.
    std::size_t trace_stride = 2000;
};

struct CommsConfig {
    /// OOK ROP at BER 1e-9. Required.
    double sensitivity_dbm = 0.0;
    double bit_rate_bps = 1e10;
    double dpsk_advantage_db = 3.0;
    double q_at_sensitivity = 6.0;
    std::vector<std::string> formats{"ook", "dpsk"};
    double rop_lo_dbm = -52.0;
    double rop_hi_dbm = -20.0;
    double rop_step_db = 0.5;
    std::vector<double> target_bers{1e-4, 1e-5};
    double sync_ber_threshold = 1e-3;
    double sync_reacquire_s = 0.1;
    /// Mean ROP at which interruptions are counted.
    double sync_rop_dbm = -36.0;
    /// Floor levels are read this far above each format's sensitivity, where
    /// the flat-power curve is negligible.
    double floor_offset_db = 10.0;
    /// "auto" or "START:END" (frame range, END exclusive).
    std::string window = "auto";
    std::size_t window_frames = 150;
};

struct WdmConfig {
    double center_wavelength_m = 1.55e-6;
    double spacing_hz = 100e9;
    std::size_t n_lines = 2;
    /// Path mismatch of the link run.
    double link_delay_m = 0.0;
    double scan_lo_m = -4e-3;
    double scan_hi_m = 4e-3;
    double scan_step_m = 1e-5;
    double band_center_nm = 1560.0;
    std::vector<double> band_widths_nm{4.0, 8.0, 16.0};
    double target_ber = 1e-4;
};

struct ExportConfig {
    /// Frames written as binary field snapshots.
    std::vector<std::size_t> field_frames{0};
    std::size_t histogram_bins = 40;
};

struct Scenario {
    std::string label = "run";
    std::uint64_t seed = 0;
    std::size_t n_frames = 1000;
    /// Sampling rate of the simulated turbulence.
    double frame_rate_hz = 1500.0;
    /// Rate at which frames are replayed to the combiner and the receiver.
    double replay_rate_hz = 3.0;
    std::string output_dir = "run";
    GridGeometry grid{512, 1.0};
    double wavelength_m = 1.55e-6;
    TransmitterConfig transmitter;
    AtmosphereConfig atmosphere;
    ReceiverConfig receiver;
    CombinerConfig combiner;
    LoopConfig loop;
    CommsConfig comms;
    WdmConfig wdm;
    ExportConfig exports;

    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Parses a YAML (or JSON) document. Unknown keys, wrong types and missing
/// required fields (seed, comms.sensitivity_dbm) throw ConfigError with the
/// field path.
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Every field, defaults included.
nlohmann::json to_json(const Scenario& s);
Scenario scenario_from_json(const nlohmann::json& j);

/// FNV-1a of the canonical resolved JSON, 16 hex digits.
std::string scenario_hash(const Scenario& s);

// Derived objects.
AtmosphereProfile build_profile(const Scenario& s);
double field_r0_m(const Scenario& s);
ChannelOptions channel_options(const Scenario& s);
ComplexFieldGrid build_transmitter(const Scenario& s);
double basis_waist(const Scenario& s);
/// Configured waist or the optimum on the uniformly lit receive aperture.
double smf_waist(const Scenario& s);
ReceiverModel receiver_model(const Scenario& s, Modulation format);

}  // namespace fso
