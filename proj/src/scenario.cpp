#include "fso/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "fso/error.hpp"
#include "fso/modes.hpp"
#include "fso/rng.hpp"

namespace fso {

namespace {

// Typed access to one YAML mapping; remembers which keys were read so that
// anything left over is reported as unknown.
class Section {
public:
    Section(YAML::Node node, std::string path) : node_(std::move(node)), path_(std::move(path)) {
        if (node_ && !node_.IsNull() && !node_.IsMap()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected a mapping");
    }

    bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

    template <class T>
    void get(const std::string& key, T& out) {
        used_.insert(key);
        if (!has(key)) return;
        out = convert<T>(node_[key], at(key));
    }

    template <class T>
    void require(const std::string& key, T& out) {
        if (!has(key)) throw ConfigError(at(key), "required field is missing");
        get(key, out);
    }

    Section child(const std::string& key) {
        used_.insert(key);
        return Section(has(key) ? node_[key] : YAML::Node(), at(key));
    }

    YAML::Node raw(const std::string& key) {
        used_.insert(key);
        return has(key) ? node_[key] : YAML::Node();
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        if (!node_ || !node_.IsMap()) return;
        for (const auto& kv : node_) {
            const auto k = kv.first.as<std::string>();
            if (!used_.count(k)) throw ConfigError(at(k), "unknown field");
        }
    }

private:
    template <class T>
    static T scalar(const YAML::Node& n, const std::string& path, const char* what) {
        if (!n.IsScalar()) throw ConfigError(path, std::string("expected ") + what);
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            throw ConfigError(path, std::string("expected ") + what + ", got '" + n.Scalar() + "'");
        }
    }

    template <class T>
    static T convert(const YAML::Node& n, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            return scalar<bool>(n, path, "a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            return scalar<std::string>(n, path, "a string");
        } else if constexpr (std::is_floating_point_v<T>) {
            const double v = scalar<double>(n, path, "a number");
            if (std::isnan(v)) throw ConfigError(path, "NaN is not allowed");
            return v;
        } else if constexpr (std::is_integral_v<T> && std::is_unsigned_v<T>) {
            const auto s = scalar<std::string>(n, path, "a non-negative integer");
            if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
                throw ConfigError(path, "expected a non-negative integer, got '" + s + "'");
            return scalar<T>(n, path, "a non-negative integer");
        } else if constexpr (std::is_integral_v<T>) {
            return scalar<T>(n, path, "an integer");
        } else {
            // std::vector<U>
            using U = typename T::value_type;
            if (!n.IsSequence()) throw ConfigError(path, "expected a list");
            T out;
            for (std::size_t i = 0; i < n.size(); ++i)
                out.push_back(convert<U>(n[i], path + "[" + std::to_string(i) + "]"));
            return out;
        }
    }

    YAML::Node node_;
    std::string path_;
    std::set<std::string> used_;
};

void read_controller(Section s, ControllerConfig& c) {
    s.get("loop_rate_hz", c.loop_rate_hz);
    s.get("evals_per_frame", c.evals_per_frame);
    s.get("simplex_init_rad", c.simplex_init_rad);
    s.get("tracking_simplex_rad", c.tracking_simplex_rad);
    s.get("collapse_rad", c.collapse_rad);
    s.get("restart_threshold_db", c.restart_threshold_db);
    s.get("rise_restart_db", c.rise_restart_db);
    s.get("remeasure_best", c.remeasure_best);
    s.get("wrap_hysteresis_rad", c.wrap_hysteresis_rad);
    s.get("wrap_model", c.wrap_model);
    s.get("wrap_transient_s", c.wrap_transient_s);
    s.get("wrap_residual", c.wrap_residual);
    s.get("detector_noise_rel", c.detector_noise_rel);
    s.get("monitor_feedback", c.monitor_feedback);
    s.finish();
}

template <class F>
void check(bool ok, const std::string& path, F&& what) {
    if (!ok) throw ConfigError(path, what);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError("<root>", std::string("unparsable document: ") + e.what());
    }
    if (!root || root.IsNull()) throw ConfigError("<root>", "empty document");
    Scenario s;
    Section r(root, "");
    r.get("label", s.label);
    r.require("seed", s.seed);
    r.get("n_frames", s.n_frames);
    r.get("frame_rate_hz", s.frame_rate_hz);
    r.get("replay_rate_hz", s.replay_rate_hz);
    r.get("output_dir", s.output_dir);
    r.get("wavelength_m", s.wavelength_m);
    {
        auto g = r.child("grid");
        g.get("n", s.grid.n);
        g.get("extent_m", s.grid.extent_m);
        g.finish();
    }
    {
        auto t = r.child("transmitter");
        t.get("waist_m", s.transmitter.waist_m);
        t.get("aperture_m", s.transmitter.aperture_m);
        t.get("power_w", s.transmitter.power_w);
        t.finish();
    }
    {
        auto a = r.child("atmosphere");
        auto& c = s.atmosphere;
        a.get("enabled", c.enabled);
        a.get("r0_m", c.r0_m);
        a.get("r0_wavelength_m", c.r0_wavelength_m);
        a.get("cn2_m23", c.cn2_m23);
        a.get("outer_scale_m", c.outer_scale_m);
        a.get("inner_scale_m", c.inner_scale_m);
        a.get("wind_speed_mps", c.wind_speed_mps);
        a.get("elevation_deg", c.elevation_deg);
        a.get("subharmonic_levels", c.subharmonic_levels);
        a.get("explicit_rings", c.explicit_rings);
        const bool has_layers = a.has("layers");
        const auto layers = a.raw("layers");
        if (has_layers) {
            const std::string lp = a.at("layers");
            if (!layers.IsSequence()) throw ConfigError(lp, "expected a list of layers");
            c.layers.clear();
            for (std::size_t i = 0; i < layers.size(); ++i) {
                Section l(layers[i], lp + "[" + std::to_string(i) + "]");
                LayerConfig lc;
                l.require("altitude_m", lc.altitude_m);
                l.require("weight", lc.weight);
                l.finish();
                c.layers.push_back(lc);
            }
        }
        a.finish();
    }
    {
        auto x = r.child("receiver");
        x.get("aperture_m", s.receiver.aperture_m);
        x.get("max_group", s.receiver.max_group);
        x.get("basis_waist_m", s.receiver.basis_waist_m);
        x.get("smf_waist_m", s.receiver.smf_waist_m);
        x.finish();
    }
    {
        auto c = r.child("combiner");
        c.get("mode_counts", s.combiner.mode_counts);
        c.get("pic_loss_db", s.combiner.pic_loss_db);
        c.get("demux_loss_db", s.combiner.demux_loss_db);
        c.get("variable_ratio", s.combiner.variable_ratio);
        c.get("lossless", s.combiner.lossless);
        c.finish();
    }
    {
        auto l = r.child("loop");
        l.get("enabled", s.loop.enabled);
        l.get("trace_stride", s.loop.trace_stride);
        read_controller(l.child("controller"), s.loop.controller);
        l.finish();
    }
    {
        auto c = r.child("comms");
        auto& m = s.comms;
        c.require("sensitivity_dbm", m.sensitivity_dbm);
        c.get("bit_rate_bps", m.bit_rate_bps);
        c.get("dpsk_advantage_db", m.dpsk_advantage_db);
        c.get("q_at_sensitivity", m.q_at_sensitivity);
        c.get("formats", m.formats);
        c.get("rop_lo_dbm", m.rop_lo_dbm);
        c.get("rop_hi_dbm", m.rop_hi_dbm);
        c.get("rop_step_db", m.rop_step_db);
        c.get("target_bers", m.target_bers);
        c.get("sync_ber_threshold", m.sync_ber_threshold);
        c.get("sync_reacquire_s", m.sync_reacquire_s);
        c.get("sync_rop_dbm", m.sync_rop_dbm);
        c.get("floor_offset_db", m.floor_offset_db);
        c.get("window", m.window);
        c.get("window_frames", m.window_frames);
        c.finish();
    }
    {
        auto w = r.child("wdm");
        auto& m = s.wdm;
        w.get("center_wavelength_m", m.center_wavelength_m);
        w.get("spacing_hz", m.spacing_hz);
        w.get("n_lines", m.n_lines);
        w.get("link_delay_m", m.link_delay_m);
        w.get("scan_lo_m", m.scan_lo_m);
        w.get("scan_hi_m", m.scan_hi_m);
        w.get("scan_step_m", m.scan_step_m);
        w.get("band_center_nm", m.band_center_nm);
        w.get("band_widths_nm", m.band_widths_nm);
        w.get("target_ber", m.target_ber);
        w.finish();
    }
    {
        auto e = r.child("export");
        e.get("field_frames", s.exports.field_frames);
        e.get("histogram_bins", s.exports.histogram_bins);
        e.finish();
    }
    // Echoed by resolved scenario files; ignored on input.
    std::string ignored;
    r.get("tool_version", ignored);
    r.get("scenario_hash", ignored);
    r.finish();
    s.validate();
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path, "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void Scenario::validate() const {
    const auto pos = [](double v) { return v > 0.0 && std::isfinite(v); };
    check(!label.empty(), "label", "must not be empty");
    check(n_frames >= 1, "n_frames", "must be >= 1");
    check(pos(frame_rate_hz), "frame_rate_hz", "must be positive");
    check(pos(replay_rate_hz), "replay_rate_hz", "must be positive");
    check(pos(wavelength_m), "wavelength_m", "must be positive");
    check(grid.n >= 64 && (grid.n & (grid.n - 1)) == 0, "grid.n", "must be a power of two >= 64");
    check(pos(grid.extent_m), "grid.extent_m", "must be positive");
    check(pos(transmitter.waist_m), "transmitter.waist_m", "must be positive");
    check(pos(transmitter.aperture_m), "transmitter.aperture_m", "must be positive");
    check(pos(transmitter.power_w), "transmitter.power_w", "must be positive");
    const auto& a = atmosphere;
    check(a.r0_m > 0.0, "atmosphere.r0_m", "must be positive (.inf disables turbulence)");
    check(pos(a.r0_wavelength_m), "atmosphere.r0_wavelength_m", "must be positive");
    check(pos(a.inner_scale_m), "atmosphere.inner_scale_m", "must be positive");
    check(a.outer_scale_m > a.inner_scale_m, "atmosphere.outer_scale_m", "must exceed the inner scale");
    check(a.wind_speed_mps >= 0.0 && std::isfinite(a.wind_speed_mps), "atmosphere.wind_speed_mps", "must be >= 0");
    check(a.elevation_deg > 0.0 && a.elevation_deg <= 90.0, "atmosphere.elevation_deg", "must be in (0, 90]");
    check(a.subharmonic_levels >= 0 && a.subharmonic_levels <= 12, "atmosphere.subharmonic_levels", "must be in [0, 12]");
    check(a.explicit_rings >= 1 && a.explicit_rings <= 16, "atmosphere.explicit_rings", "must be in [1, 16]");
    check(!a.layers.empty(), "atmosphere.layers", "needs at least one layer");
    double wsum = 0.0;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
        const auto p = "atmosphere.layers[" + std::to_string(i) + "]";
        check(a.layers[i].altitude_m >= 0.0, p + ".altitude_m", "must be >= 0");
        check(a.layers[i].weight >= 0.0, p + ".weight", "must be >= 0");
        wsum += a.layers[i].weight;
    }
    check(std::abs(wsum - 1.0) < 1e-9, "atmosphere.layers", "weights must sum to 1");
    check(pos(receiver.aperture_m) && receiver.aperture_m <= grid.extent_m, "receiver.aperture_m",
          "must be positive and fit the grid");
    check(receiver.max_group >= 0 && receiver.max_group <= 8, "receiver.max_group", "must be in [0, 8]");
    check(receiver.basis_waist_m >= 0.0, "receiver.basis_waist_m", "must be >= 0 (0 = aperture fit)");
    check(receiver.smf_waist_m >= 0.0, "receiver.smf_waist_m", "must be >= 0 (0 = optimized)");
    const std::size_t nmodes = modes_up_to_group(receiver.max_group);
    check(!combiner.mode_counts.empty(), "combiner.mode_counts", "must not be empty");
    for (std::size_t i = 0; i < combiner.mode_counts.size(); ++i) {
        const auto n = combiner.mode_counts[i];
        check(n >= 1 && n <= nmodes, "combiner.mode_counts[" + std::to_string(i) + "]",
              "must be in [1, " + std::to_string(nmodes) + "]");
        if (i) check(n > combiner.mode_counts[i - 1], "combiner.mode_counts", "must be strictly increasing");
    }
    check(combiner.pic_loss_db >= 0.0, "combiner.pic_loss_db", "must be >= 0");
    check(combiner.demux_loss_db >= 0.0, "combiner.demux_loss_db", "must be >= 0");
    try {
        loop.controller.validate();
    } catch (const ParameterError& e) {
        throw ConfigError("loop.controller", e.what());
    }
    check(loop.controller.evals_per_frame > 0 || loop.controller.loop_rate_hz >= replay_rate_hz,
          "loop.controller.loop_rate_hz", "must be >= replay_rate_hz");
    check(loop.trace_stride >= 1, "loop.trace_stride", "must be >= 1");
    const auto& c = comms;
    check(std::isfinite(c.sensitivity_dbm), "comms.sensitivity_dbm", "must be finite");
    check(pos(c.bit_rate_bps), "comms.bit_rate_bps", "must be positive");
    check(c.dpsk_advantage_db >= 0.0, "comms.dpsk_advantage_db", "must be >= 0");
    check(pos(c.q_at_sensitivity), "comms.q_at_sensitivity", "must be positive");
    check(!c.formats.empty(), "comms.formats", "must not be empty");
    for (std::size_t i = 0; i < c.formats.size(); ++i)
        check(c.formats[i] == "ook" || c.formats[i] == "dpsk", "comms.formats[" + std::to_string(i) + "]",
              "must be 'ook' or 'dpsk'");
    check(pos(c.rop_step_db) && c.rop_hi_dbm > c.rop_lo_dbm, "comms.rop_step_db", "sweep must be lo < hi with step > 0");
    check(!c.target_bers.empty(), "comms.target_bers", "must not be empty");
    for (std::size_t i = 0; i < c.target_bers.size(); ++i)
        check(c.target_bers[i] > 0.0 && c.target_bers[i] < 0.5, "comms.target_bers[" + std::to_string(i) + "]",
              "must be in (0, 0.5)");
    check(c.sync_ber_threshold > 0.0 && c.sync_ber_threshold < 0.5, "comms.sync_ber_threshold", "must be in (0, 0.5)");
    check(c.sync_reacquire_s >= 0.0, "comms.sync_reacquire_s", "must be >= 0");
    check(std::isfinite(c.sync_rop_dbm), "comms.sync_rop_dbm", "must be finite");
    check(c.floor_offset_db > 0.0 && std::isfinite(c.floor_offset_db), "comms.floor_offset_db", "must be positive");
    check(c.window_frames >= 1, "comms.window_frames", "must be >= 1");
    if (c.window != "auto") {
        const auto colon = c.window.find(':');
        check(colon != std::string::npos, "comms.window", "must be 'auto' or 'START:END'");
    }
    const auto& w = wdm;
    check(pos(w.center_wavelength_m), "wdm.center_wavelength_m", "must be positive");
    check(w.spacing_hz >= 0.0, "wdm.spacing_hz", "must be >= 0");
    check(w.n_lines >= 1, "wdm.n_lines", "must be >= 1");
    check(std::isfinite(w.link_delay_m), "wdm.link_delay_m", "must be finite");
    check(pos(w.scan_step_m) && w.scan_hi_m > w.scan_lo_m, "wdm.scan_step_m", "scan must be lo < hi with step > 0");
    check(pos(w.band_center_nm), "wdm.band_center_nm", "must be positive");
    for (std::size_t i = 0; i < w.band_widths_nm.size(); ++i)
        check(w.band_widths_nm[i] >= 0.0, "wdm.band_widths_nm[" + std::to_string(i) + "]", "must be >= 0");
    check(w.target_ber > 0.0 && w.target_ber < 0.5, "wdm.target_ber", "must be in (0, 0.5)");
    check(exports.histogram_bins >= 1, "export.histogram_bins", "must be >= 1");
}

namespace {
// JSON has no infinity; YAML's spelling survives a round trip through the parser.
nlohmann::json num(double v) {
    if (std::isfinite(v)) return v;
    return v > 0 ? ".inf" : "-.inf";
}
}  // namespace

nlohmann::json to_json(const Scenario& s) {
    using nlohmann::json;
    json layers = json::array();
    for (const auto& l : s.atmosphere.layers) layers.push_back({{"altitude_m", l.altitude_m}, {"weight", l.weight}});
    const auto& c = s.loop.controller;
    json j;
    j["label"] = s.label;
    j["seed"] = s.seed;
    j["n_frames"] = s.n_frames;
    j["frame_rate_hz"] = s.frame_rate_hz;
    j["replay_rate_hz"] = s.replay_rate_hz;
    j["output_dir"] = s.output_dir;
    j["wavelength_m"] = s.wavelength_m;
    j["grid"] = {{"n", s.grid.n}, {"extent_m", s.grid.extent_m}};
    j["transmitter"] = {{"waist_m", s.transmitter.waist_m},
                        {"aperture_m", s.transmitter.aperture_m},
                        {"power_w", s.transmitter.power_w}};
    const auto& a = s.atmosphere;
    j["atmosphere"] = {{"enabled", a.enabled},
                       {"r0_m", num(a.r0_m)},
                       {"r0_wavelength_m", a.r0_wavelength_m},
                       {"cn2_m23", a.cn2_m23},
                       {"outer_scale_m", num(a.outer_scale_m)},
                       {"inner_scale_m", a.inner_scale_m},
                       {"wind_speed_mps", a.wind_speed_mps},
                       {"elevation_deg", a.elevation_deg},
                       {"subharmonic_levels", a.subharmonic_levels},
                       {"explicit_rings", a.explicit_rings},
                       {"layers", layers}};
    j["receiver"] = {{"aperture_m", s.receiver.aperture_m},
                     {"max_group", s.receiver.max_group},
                     {"basis_waist_m", s.receiver.basis_waist_m},
                     {"smf_waist_m", s.receiver.smf_waist_m}};
    j["combiner"] = {{"mode_counts", s.combiner.mode_counts},
                     {"pic_loss_db", s.combiner.pic_loss_db},
                     {"demux_loss_db", s.combiner.demux_loss_db},
                     {"variable_ratio", s.combiner.variable_ratio},
                     {"lossless", s.combiner.lossless}};
    j["loop"] = {{"enabled", s.loop.enabled},
                 {"trace_stride", s.loop.trace_stride},
                 {"controller",
                  {{"loop_rate_hz", c.loop_rate_hz},
                   {"evals_per_frame", c.evals_per_frame},
                   {"simplex_init_rad", c.simplex_init_rad},
                   {"tracking_simplex_rad", c.tracking_simplex_rad},
                   {"collapse_rad", c.collapse_rad},
                   {"restart_threshold_db", num(c.restart_threshold_db)},
                   {"rise_restart_db", num(c.rise_restart_db)},
                   {"remeasure_best", c.remeasure_best},
                   {"wrap_hysteresis_rad", c.wrap_hysteresis_rad},
                   {"wrap_model", c.wrap_model},
                   {"wrap_transient_s", c.wrap_transient_s},
                   {"wrap_residual", c.wrap_residual},
                   {"detector_noise_rel", c.detector_noise_rel},
                   {"monitor_feedback", c.monitor_feedback}}}};
    const auto& m = s.comms;
    j["comms"] = {{"sensitivity_dbm", m.sensitivity_dbm},
                  {"bit_rate_bps", m.bit_rate_bps},
                  {"dpsk_advantage_db", m.dpsk_advantage_db},
                  {"q_at_sensitivity", m.q_at_sensitivity},
                  {"formats", m.formats},
                  {"rop_lo_dbm", m.rop_lo_dbm},
                  {"rop_hi_dbm", m.rop_hi_dbm},
                  {"rop_step_db", m.rop_step_db},
                  {"target_bers", m.target_bers},
                  {"sync_ber_threshold", m.sync_ber_threshold},
                  {"sync_reacquire_s", m.sync_reacquire_s},
                  {"sync_rop_dbm", m.sync_rop_dbm},
                  {"floor_offset_db", m.floor_offset_db},
                  {"window", m.window},
                  {"window_frames", m.window_frames}};
    const auto& w = s.wdm;
    j["wdm"] = {{"center_wavelength_m", w.center_wavelength_m},
                {"spacing_hz", w.spacing_hz},
                {"n_lines", w.n_lines},
                {"link_delay_m", w.link_delay_m},
                {"scan_lo_m", w.scan_lo_m},
                {"scan_hi_m", w.scan_hi_m},
                {"scan_step_m", w.scan_step_m},
                {"band_center_nm", w.band_center_nm},
                {"band_widths_nm", w.band_widths_nm},
                {"target_ber", w.target_ber}};
    j["export"] = {{"field_frames", s.exports.field_frames}, {"histogram_bins", s.exports.histogram_bins}};
    return j;
}

Scenario scenario_from_json(const nlohmann::json& j) { return parse_scenario(j.dump()); }

std::string scenario_hash(const Scenario& s) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json(s).dump())));
    return buf;
}

double field_r0_m(const Scenario& s) {
    if (!s.atmosphere.enabled || std::isinf(s.atmosphere.r0_m)) return std::numeric_limits<double>::infinity();
    return scale_r0_to_wavelength(s.atmosphere.r0_m, s.atmosphere.r0_wavelength_m, s.wavelength_m);
}

AtmosphereProfile build_profile(const Scenario& s) {
    std::vector<double> alt, w;
    for (const auto& l : s.atmosphere.layers) {
        alt.push_back(l.altitude_m);
        w.push_back(l.weight);
    }
    const auto& a = s.atmosphere;
    return make_layered_profile(alt, w, field_r0_m(s), a.outer_scale_m, a.inner_scale_m, a.wind_speed_mps,
                                a.elevation_deg);
}

ChannelOptions channel_options(const Scenario& s) {
    ChannelOptions o;
    o.frame_rate_hz = s.frame_rate_hz;
    o.n_frames = s.n_frames;
    o.seed = s.seed;
    o.rx_aperture_m = s.receiver.aperture_m;
    o.screens.subharmonic_levels = s.atmosphere.subharmonic_levels;
    o.screens.explicit_rings = s.atmosphere.explicit_rings;
    return o;
}

ComplexFieldGrid build_transmitter(const Scenario& s) {
    return truncated_gaussian(s.grid, s.wavelength_m, s.transmitter.waist_m, s.transmitter.aperture_m,
                              s.transmitter.power_w);
}

double basis_waist(const Scenario& s) {
    return s.receiver.basis_waist_m > 0.0 ? s.receiver.basis_waist_m
                                          : fit_basis_waist(s.receiver.aperture_m, s.receiver.max_group);
}

double smf_waist(const Scenario& s) {
    if (s.receiver.smf_waist_m > 0.0) return s.receiver.smf_waist_m;
    const double r = 0.5 * s.receiver.aperture_m;
    const auto disc = ComplexFieldGrid::sample(s.grid, s.wavelength_m, [r](double x, double y) {
        return x * x + y * y <= r * r ? cplx(1.0) : cplx(0.0);
    });
    return optimize_smf_waist(disc).waist_m;
}

ReceiverModel receiver_model(const Scenario& s, Modulation format) {
    ReceiverModel m;
    m.bit_rate_bps = s.comms.bit_rate_bps;
    m.q_at_sensitivity = s.comms.q_at_sensitivity;
    m.format = format;
    m.sensitivity_dbm = format == Modulation::DPSK ? s.comms.sensitivity_dbm - s.comms.dpsk_advantage_db
                                                   : s.comms.sensitivity_dbm;
    return m;
}

}  // namespace fso
