#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "fso/scenario.hpp"

namespace fso {

// Run directory layout (every CSV starts with "# scenario_hash: <hash>", every
// JSON carries a "scenario_hash" member):
//
//   scenario.json             resolved scenario, tool_version, scenario_hash
//   modes.csv                 frame,time_s,HG00..HG40,residual   (|c|^2 in W)
//   projections.csv           frame,time_s,aperture_power_w,smf_re,smf_im,<mode>_re,<mode>_im...
//   mode_statistics.json      time-averaged relative mode powers, group powers
//   fields/index.json         frame,time_s,file,seed state of the snapshots
//   fields/frame_NNNNNN.bin   little-endian field blocks
//   coupling/smf.csv, mm<n>.csv      frame,time_s,efficiency,efficiency_db
//   coupling/histogram.csv    bin_lo_db,bin_hi_db,<receiver counts>
//   coupling/summary.json     Table 3 columns per receiver
//   loop/mm<n>.csv            frame,time_s,efficiency,efficiency_db,ideal_efficiency,wraps,transient_s
//   loop/trace_mm<n>.csv      time_s,power,efficiency_db,wrap_flag (decimated)
//   loop/summary.json
//   ber/<window>/<format>_<receiver>.csv   rop_dbm,ber_cum
//   ber/ber_report.json
//   wdm/scan_*.csv            delay_mm,efficiency
//   wdm/report.json
//   report.md

struct RunOverrides {
    std::optional<std::vector<std::size_t>> modes;
    bool lossless = false;
    /// "auto" or "START:END".
    std::optional<std::string> window;
    std::optional<std::vector<double>> rop_sweep;  // lo, hi, step
};

/// Parses "LO:HI:STEP"; throws ConfigError.
std::vector<double> parse_rop_sweep(const std::string& text);
/// Parses "3,6,10,15"; throws ConfigError.
std::vector<std::size_t> parse_mode_list(const std::string& text);

struct FrameWindow {
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;  // exclusive
    double smf_variation_db = 0.0;
};

/// Sliding windows of `length` frames ranked by SMF max-min (dB). Returns the
/// least varying window ("best") and the most varying one ("worst"); ties go
/// to the earliest start.
std::vector<FrameWindow> auto_windows(const std::vector<double>& smf_efficiency, std::size_t length);

/// Scenario stored in a run directory (MissingArtifactError if absent).
Scenario load_run_scenario(const std::filesystem::path& dir);

/// Writes scenario.json when absent; otherwise requires the stored hash to match.
void bind_run_directory(const Scenario& s, const std::filesystem::path& dir);

void cmd_synth(const Scenario& s, const std::filesystem::path& dir);
void cmd_couple(const Scenario& s, const std::filesystem::path& dir, const RunOverrides& o = {});
void cmd_ber(const Scenario& s, const std::filesystem::path& dir, const RunOverrides& o = {});
void cmd_wdm(const Scenario& s, const std::filesystem::path& dir);
/// Writes report.md and returns its text. Throws MissingArtifactError on an
/// empty directory or on artifacts carrying different scenario hashes.
std::string cmd_report(const std::filesystem::path& dir);

// Artifact readers shared with the report and the tests.

struct CsvTable {
    std::string scenario_hash;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    /// Values of one column; throws MissingArtifactError if absent.
    std::vector<double> column(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace fso
