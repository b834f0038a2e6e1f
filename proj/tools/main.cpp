#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "fso/error.hpp"
#include "fso/pipeline.hpp"
#include "fso/scenario.hpp"

namespace {

struct Args {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> frames;
    std::string modes;
    bool lossless = false;
    std::string window;
    std::string rop_sweep;
};

// Config file if given, else the run directory's resolved scenario; then the
// command-line overrides that change the scenario itself.
fso::Scenario resolve(const Args& a) {
    fso::Scenario s;
    if (!a.config.empty()) {
        s = fso::load_scenario(a.config);
    } else if (!a.out.empty()) {
        s = fso::load_run_scenario(a.out);
    } else {
        throw fso::ConfigError("--config", "either --config or --out with an existing run is required");
    }
    if (a.seed) s.seed = *a.seed;
    if (a.frames) s.n_frames = *a.frames;
    s.validate();
    return s;
}

std::filesystem::path run_dir(const Args& a, const fso::Scenario& s) {
    return a.out.empty() ? std::filesystem::path(s.output_dir) : std::filesystem::path(a.out);
}

fso::RunOverrides overrides(const Args& a) {
    fso::RunOverrides o;
    if (!a.modes.empty()) o.modes = fso::parse_mode_list(a.modes);
    o.lossless = a.lossless;
    if (!a.window.empty()) {
        if (a.window != "auto" && a.window.find(':') == std::string::npos)
            throw fso::ConfigError("--window", "expected 'auto' or 'START:END'");
        o.window = a.window;
    }
    if (!a.rop_sweep.empty()) o.rop_sweep = fso::parse_rop_sweep(a.rop_sweep);
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ground-station receiver simulator for turbulent optical downlinks"};
    app.set_version_flag("--version", fso::kToolVersion);
    app.require_subcommand(1);
    Args a;

    auto common = [&](CLI::App* c, bool scenario_flags) {
        c->add_option("--config", a.config, "Scenario file (YAML or JSON)");
        c->add_option("--out", a.out, "Run directory");
        if (scenario_flags) {
            c->add_option("--seed", a.seed, "Override the scenario seed");
            c->add_option("--frames", a.frames, "Override the number of frames");
        }
    };
    auto* synth = app.add_subcommand("synth", "Synthesize the turbulent field series and project it on the modes");
    common(synth, true);
    auto* couple = app.add_subcommand("couple", "Coupling efficiency traces, histograms and closed-loop combining");
    common(couple, true);
    couple->add_option("--modes", a.modes, "Comma-separated mode counts, e.g. 3,6,10,15");
    couple->add_flag("--lossless", a.lossless, "Ignore combiner and demultiplexer losses");
    auto* ber = app.add_subcommand("ber", "Cumulated BER curves, penalties and synchronization loss");
    common(ber, true);
    ber->add_option("--window", a.window, "auto or START:END (frames, END exclusive)");
    ber->add_option("--rop-sweep", a.rop_sweep, "LO:HI:STEP in dBm");
    auto* wdm = app.add_subcommand("wdm", "Delay scans and two-wavelength link runs");
    common(wdm, true);
    auto* report = app.add_subcommand("report", "Markdown summary of a run directory");
    report->add_option("--out", a.out, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (report->parsed()) {
            fso::cmd_report(a.out);
            std::cout << (std::filesystem::path(a.out) / "report.md").string() << "\n";
            return 0;
        }
        const auto s = resolve(a);
        const auto dir = run_dir(a, s);
        const auto o = overrides(a);
        if (synth->parsed()) fso::cmd_synth(s, dir);
        if (couple->parsed()) fso::cmd_couple(s, dir, o);
        if (ber->parsed()) fso::cmd_ber(s, dir, o);
        if (wdm->parsed()) fso::cmd_wdm(s, dir);
        std::cout << dir.string() << " (scenario " << fso::scenario_hash(s) << ")\n";
        return 0;
    } catch (const fso::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const fso::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
