#include "fso/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fso/combiner.hpp"
#include "fso/comms.hpp"
#include "fso/controller.hpp"
#include "fso/error.hpp"
#include "fso/log.hpp"
#include "fso/modes.hpp"
#include "fso/rng.hpp"
#include "fso/turbulence.hpp"
#include "fso/wdm.hpp"

namespace fso {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fixed(double v, int digits) {
    if (!std::isfinite(v)) return v > 0 ? "inf" : (v < 0 ? "-inf" : "n/a");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

// JSON has no infinity.
json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class CsvWriter {
public:
    CsvWriter(const std::string& hash, const std::vector<std::string>& columns) {
        text_ << "# scenario_hash: " << hash << "\n";
        for (std::size_t i = 0; i < columns.size(); ++i) text_ << (i ? "," : "") << columns[i];
        text_ << "\n";
    }
    void row(const std::vector<double>& values) {
        for (std::size_t i = 0; i < values.size(); ++i) text_ << (i ? "," : "") << num(values[i]);
        text_ << "\n";
    }
    void save(const fs::path& path) const { write_text(path, text_.str()); }

private:
    std::ostringstream text_;
};

void require_hash(const std::string& found, const std::string& expected, const fs::path& what) {
    if (found != expected)
        throw MissingArtifactError(what.string() + " belongs to scenario " + found + ", expected " + expected);
}

CsvTable read_checked(const fs::path& path, const std::string& hash) {
    auto t = read_csv(path);
    require_hash(t.scenario_hash, hash, path);
    return t;
}

void require_run(const Scenario& s, const fs::path& dir) {
    if (!fs::exists(dir / "scenario.json"))
        throw MissingArtifactError((dir / "scenario.json").string() + " (run synth first)");
    bind_run_directory(s, dir);
}

json summary_json(const EfficiencySummary& e) {
    return {{"mean", e.mean},
            {"mean_db", jnum(e.mean_db)},
            {"mean_fraction_db", jnum(e.mean_fraction_db)},
            {"max_db", jnum(e.max_db)},
            {"min_db", jnum(e.min_db)},
            {"variation_db", jnum(e.variation_db())}};
}

void write_efficiency_csv(const fs::path& path, const std::string& hash, const std::vector<double>& eff,
                          double frame_rate_hz) {
    CsvWriter w(hash, {"frame", "time_s", "efficiency", "efficiency_db"});
    for (std::size_t i = 0; i < eff.size(); ++i)
        w.row({static_cast<double>(i), static_cast<double>(i) / frame_rate_hz, eff[i], to_db(eff[i])});
    w.save(path);
}

struct Projections {
    std::vector<ModeCoefficients> coeffs;
    std::vector<double> smf_efficiency;
};

Projections read_projections(const fs::path& dir, const std::string& hash, std::size_t n_modes) {
    const auto t = read_checked(dir / "projections.csv", hash);
    if (t.columns.size() != 5 + 2 * n_modes)
        throw MissingArtifactError("projections.csv has an unexpected column layout");
    Projections p;
    for (const auto& r : t.rows) {
        ModeCoefficients c;
        c.total_power = r[2];
        double captured = 0.0;
        for (std::size_t k = 0; k < n_modes; ++k) {
            c.coeffs.emplace_back(r[5 + 2 * k], r[6 + 2 * k]);
            captured += std::norm(c.coeffs.back());
        }
        c.residual_power = std::max(0.0, c.total_power - captured);
        if (!(c.total_power > 0.0)) throw UndefinedEfficiencyError("frame with zero aperture power");
        p.smf_efficiency.push_back(std::norm(cplx(r[3], r[4])) / c.total_power);
        p.coeffs.push_back(std::move(c));
    }
    return p;
}

std::string receiver_name(std::size_t n_modes) { return "mm" + std::to_string(n_modes); }

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double parse_double(const std::string& text, const std::string& path) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw ConfigError(path, "expected a number, got '" + text + "'");
    }
}

std::size_t parse_count(const std::string& text, const std::string& path) {
    if (text.empty() || text.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError(path, "expected a non-negative integer, got '" + text + "'");
    return static_cast<std::size_t>(std::stoull(text));
}

FrameWindow parse_window(const std::string& text, std::size_t n_frames, const std::string& path) {
    const auto parts = split(text, ':');
    if (parts.size() != 2) throw ConfigError(path, "expected 'auto' or 'START:END'");
    FrameWindow w;
    w.name = "custom";
    w.begin = parse_count(parts[0], path);
    w.end = parse_count(parts[1], path);
    if (w.begin >= w.end || w.end > n_frames)
        throw ConfigError(path, "window must satisfy START < END <= " + std::to_string(n_frames));
    return w;
}

double variation_db(const std::vector<double>& eff, std::size_t begin, std::size_t end) {
    const auto [mn, mx] = std::minmax_element(eff.begin() + static_cast<long>(begin), eff.begin() + static_cast<long>(end));
    return to_db(*mx) - to_db(*mn);
}

}  // namespace

// ---------------------------------------------------------------------------
// Readers

std::vector<double> CsvTable::column(const std::string& name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) throw MissingArtifactError("column '" + name + "'");
    const auto k = static_cast<std::size_t>(it - columns.begin());
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(k));
    return out;
}

CsvTable read_csv(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError(path.string());
    CsvTable t;
    std::string line;
    const std::string tag = "# scenario_hash: ";
    if (!std::getline(in, line) || line.rfind(tag, 0) != 0)
        throw MissingArtifactError(path.string() + " carries no scenario hash");
    t.scenario_hash = line.substr(tag.size());
    if (!std::getline(in, line)) throw MissingArtifactError(path.string() + " has no header");
    t.columns = split(line, ',');
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        const char* p = line.c_str();
        while (*p) {
            char* end = nullptr;
            r.push_back(std::strtod(p, &end));
            if (end == p) throw MissingArtifactError(path.string() + " has a malformed row");
            p = *end == ',' ? end + 1 : end;
        }
        if (r.size() != t.columns.size()) throw MissingArtifactError(path.string() + " has a ragged row");
        t.rows.push_back(std::move(r));
    }
    return t;
}

json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifactError(path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw MissingArtifactError(path.string() + " is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Argument helpers

std::vector<double> parse_rop_sweep(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() != 3) throw ConfigError("--rop-sweep", "expected LO:HI:STEP in dBm");
    std::vector<double> v;
    for (const auto& p : parts) v.push_back(parse_double(p, "--rop-sweep"));
    if (!(v[1] > v[0]) || !(v[2] > 0.0)) throw ConfigError("--rop-sweep", "needs LO < HI and STEP > 0");
    return v;
}

std::vector<std::size_t> parse_mode_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (const auto& p : split(text, ',')) out.push_back(parse_count(p, "--modes"));
    if (out.empty()) throw ConfigError("--modes", "empty list");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (out[i] == 0) throw ConfigError("--modes", "mode counts must be >= 1");
        if (i && out[i] <= out[i - 1]) throw ConfigError("--modes", "must be strictly increasing");
    }
    return out;
}

std::vector<FrameWindow> auto_windows(const std::vector<double>& smf_efficiency, std::size_t length) {
    const std::size_t n = smf_efficiency.size();
    if (n == 0) throw ParameterError("empty SMF trace");
    length = std::clamp<std::size_t>(length, 1, n);
    FrameWindow best{"best", 0, length, INFINITY};
    FrameWindow worst{"worst", 0, length, -INFINITY};
    for (std::size_t b = 0; b + length <= n; ++b) {
        const double v = variation_db(smf_efficiency, b, b + length);
        if (v < best.smf_variation_db) best = {"best", b, b + length, v};
        if (v > worst.smf_variation_db) worst = {"worst", b, b + length, v};
    }
    return {best, worst};
}

// ---------------------------------------------------------------------------
// Run directory binding

Scenario load_run_scenario(const fs::path& dir) {
    const auto path = dir / "scenario.json";
    if (!fs::exists(path)) throw MissingArtifactError(path.string());
    const auto j = read_json(path);
    Scenario s;
    try {
        s = scenario_from_json(j);
    } catch (const ConfigError& e) {
        throw MissingArtifactError(path.string() + " is not a valid scenario: " + e.what());
    }
    if (j.value("scenario_hash", std::string()) != scenario_hash(s))
        throw MissingArtifactError(path.string() + " hash does not match its contents");
    return s;
}

void bind_run_directory(const Scenario& s, const fs::path& dir) {
    const auto path = dir / "scenario.json";
    const auto hash = scenario_hash(s);
    if (fs::exists(path)) {
        const auto stored = read_json(path).value("scenario_hash", std::string());
        if (stored != hash)
            throw MissingArtifactError(dir.string() + " holds scenario " + stored +
                                       "; the requested scenario resolves to " + hash);
        return;
    }
    json j = to_json(s);
    j["tool_version"] = kToolVersion;
    j["scenario_hash"] = hash;
    write_json(path, j);
}

// ---------------------------------------------------------------------------
// synth

void cmd_synth(const Scenario& s, const fs::path& dir) {
    s.validate();
    bind_run_directory(s, dir);
    const auto hash = scenario_hash(s);
    const auto profile = build_profile(s);
    const auto tx = build_transmitter(s);
    TurbulentChannel channel(profile, tx, channel_options(s));
    const ModeBasis basis(s.grid, s.wavelength_m, basis_waist(s), hg_index_set(s.receiver.max_group));
    const double w_smf = smf_waist(s);

    std::vector<std::string> mode_cols{"frame", "time_s"};
    std::vector<std::string> proj_cols{"frame", "time_s", "aperture_power_w", "smf_re", "smf_im"};
    for (const auto& m : basis.indices()) {
        mode_cols.push_back(m.name());
        proj_cols.push_back(m.name() + "_re");
        proj_cols.push_back(m.name() + "_im");
    }
    mode_cols.emplace_back("residual");
    CsvWriter modes(hash, mode_cols);
    CsvWriter proj(hash, proj_cols);

    json index = json::array();
    std::vector<ModeCoefficients> series;
    series.reserve(s.n_frames);
    for (std::size_t i = 0; i < s.n_frames; ++i) {
        const double t = static_cast<double>(i) / s.frame_rate_hz;
        const auto field = channel.frame(i);
        auto c = decompose(field, basis);
        const cplx o = smf_overlap(field, w_smf);
        std::vector<double> mrow{static_cast<double>(i), t};
        std::vector<double> prow{static_cast<double>(i), t, c.total_power, o.real(), o.imag()};
        for (const auto& v : c.coeffs) {
            mrow.push_back(std::norm(v));
            prow.push_back(v.real());
            prow.push_back(v.imag());
        }
        mrow.push_back(c.residual_power);
        modes.row(mrow);
        proj.row(prow);
        if (std::find(s.exports.field_frames.begin(), s.exports.field_frames.end(), i) != s.exports.field_frames.end()) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%06zu.bin", i);
            fs::create_directories(dir / "fields");
            std::ofstream out(dir / "fields" / name, std::ios::binary | std::ios::trunc);
            write_field_binary(field, out);
            json layer_seeds = json::array();
            for (std::size_t l = 0; l < profile.layers.size(); ++l) layer_seeds.push_back(layer_seed(s.seed, l));
            index.push_back({{"frame", i},
                             {"time_s", t},
                             {"file", name},
                             {"seed_state", {{"seed", s.seed}, {"frame_index", i}, {"layer_seeds", layer_seeds}}}});
        }
        series.push_back(std::move(c));
    }
    for (const auto f : s.exports.field_frames)
        if (f >= s.n_frames) warn("export.field_frames entry " + std::to_string(f) + " is beyond the last frame");
    modes.save(dir / "modes.csv");
    proj.save(dir / "projections.csv");

    const json geometry = {{"n", s.grid.n},
                           {"extent_m", s.grid.extent_m},
                           {"spacing_m", s.grid.spacing_m()},
                           {"wavelength_m", s.wavelength_m}};
    write_json(dir / "fields" / "index.json",
               {{"scenario_hash", hash},
                {"format", "int64 n | float64 extent_m | float64 wavelength_m | n*n*(float64 re, float64 im), "
                           "little-endian, row-major"},
                {"grid", geometry},
                {"frames", index}});

    const auto stats = mode_statistics(series, basis.indices());
    json modes_j = json::array();
    for (std::size_t k = 0; k < stats.indices.size(); ++k)
        modes_j.push_back({{"mode", stats.indices[k].name()},
                           {"group", stats.indices[k].group()},
                           {"mean_relative_power", stats.mean_relative_power[k]}});
    double first3 = 0.0, all = 0.0;
    for (std::size_t k = 0; k < stats.mean_relative_power.size(); ++k) {
        if (k < 3) first3 += stats.mean_relative_power[k];
        all += stats.mean_relative_power[k];
    }
    write_json(dir / "mode_statistics.json",
               {{"scenario_hash", hash},
                {"frames", stats.frames},
                {"normalization", "time average of |c_k|^2 / aperture power"},
                {"modes", modes_j},
                {"group_power", stats.group_power},
                {"group_mode_mean", stats.group_mode_mean},
                {"mean_residual", stats.mean_residual},
                {"capture_hg00", stats.mean_relative_power.empty() ? 0.0 : stats.mean_relative_power[0]},
                {"capture_first3", first3},
                {"capture_all", all},
                {"metadata",
                 {{"grid", geometry},
                  {"field_r0_m", jnum(field_r0_m(s))},
                  {"basis_waist_m", basis.waist_m()},
                  {"smf_waist_m", w_smf},
                  {"strip_cols", channel.strip_cols()},
                  {"sampling_bound_satisfied", channel.sampling_bound_satisfied()},
                  {"outer_scale_m", jnum(s.atmosphere.outer_scale_m)},
                  {"inner_scale_m", s.atmosphere.inner_scale_m},
                  {"cn2_m23_reported_only", s.atmosphere.cn2_m23}}}});
}

// ---------------------------------------------------------------------------
// couple

void cmd_couple(const Scenario& s, const fs::path& dir, const RunOverrides& o) {
    require_run(s, dir);
    const auto hash = scenario_hash(s);
    const std::size_t n_basis = modes_up_to_group(s.receiver.max_group);
    const auto proj = read_projections(dir, hash, n_basis);
    const auto counts = o.modes.value_or(s.combiner.mode_counts);
    for (const auto n : counts)
        if (n < 1 || n > n_basis)
            throw ConfigError(o.modes ? "--modes" : "combiner.mode_counts",
                              "mode count " + std::to_string(n) + " outside [1, " + std::to_string(n_basis) + "]");
    const bool lossless = o.lossless || s.combiner.lossless;
    const double rate = s.frame_rate_hz;

    std::vector<std::string> names{"smf"};
    std::vector<std::vector<double>> effs{proj.smf_efficiency};
    write_efficiency_csv(dir / "coupling" / "smf.csv", hash, proj.smf_efficiency, rate);
    std::vector<CombinerTopology> topologies;
    for (const auto n : counts) {
        auto topo = CombinerTopology::balanced_tree(n, s.combiner.pic_loss_db, s.combiner.demux_loss_db,
                                                    s.combiner.variable_ratio);
        if (lossless) topo = topo.lossless();
        auto eff = mm_coupling_efficiency_series(proj.coeffs, n, false, topo);
        write_efficiency_csv(dir / "coupling" / (receiver_name(n) + ".csv"), hash, eff, rate);
        names.push_back(receiver_name(n));
        effs.push_back(std::move(eff));
        topologies.push_back(std::move(topo));
    }

    // Shared dB bins so the receivers' histograms line up.
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& e : effs)
        for (double v : e) {
            lo = std::min(lo, to_db(v));
            hi = std::max(hi, to_db(v));
        }
    if (!std::isfinite(lo)) throw NumericalContractError("zero coupling efficiency in a frame");
    if (hi - lo < 1e-9) hi = lo + 1.0;
    const std::size_t bins = s.exports.histogram_bins;
    std::vector<std::string> hcols{"bin_lo_db", "bin_hi_db"};
    hcols.insert(hcols.end(), names.begin(), names.end());
    std::vector<std::vector<double>> counts_per(names.size(), std::vector<double>(bins, 0.0));
    for (std::size_t r = 0; r < effs.size(); ++r)
        for (double v : effs[r]) {
            auto b = static_cast<std::size_t>(std::floor((to_db(v) - lo) / (hi - lo) * static_cast<double>(bins)));
            counts_per[r][std::min(b, bins - 1)] += 1.0;
        }
    CsvWriter hist(hash, hcols);
    for (std::size_t b = 0; b < bins; ++b) {
        std::vector<double> row{lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins),
                                lo + (hi - lo) * static_cast<double>(b + 1) / static_cast<double>(bins)};
        for (const auto& c : counts_per) row.push_back(c[b]);
        hist.row(row);
    }
    hist.save(dir / "coupling" / "histogram.csv");

    json receivers = json::array();
    for (std::size_t r = 0; r < names.size(); ++r) {
        json e = summary_json(summarize_efficiency(effs[r]));
        e["receiver"] = names[r];
        e["n_modes"] = r == 0 ? 1 : counts[r - 1];
        e["file"] = "coupling/" + names[r] + ".csv";
        receivers.push_back(e);
    }
    write_json(dir / "coupling" / "summary.json",
               {{"scenario_hash", hash},
                {"frames", proj.coeffs.size()},
                {"lossless", lossless},
                {"combiner_loss_db", lossless ? 0.0 : s.combiner.pic_loss_db + s.combiner.demux_loss_db},
                {"normalization", "fiber output power over post-aperture power"},
                {"mean_definition", "time average of the per-frame loss in dB; mean_fraction_db is 10 log10 of the mean efficiency"},
                {"overrides", {{"modes", o.modes ? json(*o.modes) : json(nullptr)}, {"lossless", o.lossless}}},
                {"histogram", {{"file", "coupling/histogram.csv"}, {"bins", bins}}},
                {"receivers", receivers}});

    if (!s.loop.enabled) return;

    json loop_receivers = json::array();
    for (std::size_t r = 0; r < counts.size(); ++r) {
        const std::size_t n = counts[r];
        if (n < 2) continue;  // nothing to phase
        const auto& topo = topologies[r];
        std::vector<std::vector<cplx>> frames;
        frames.reserve(proj.coeffs.size());
        for (const auto& c : proj.coeffs) {
            const double scale = 1.0 / std::sqrt(c.total_power);
            std::vector<cplx> in(c.coeffs.begin(), c.coeffs.begin() + static_cast<long>(n));
            for (auto& v : in) v *= scale;
            frames.push_back(std::move(in));
        }
        ControllerConfig cfg = s.loop.controller;
        cfg.record_stride = s.loop.trace_stride;
        const auto seed = RandomStream(s.seed, "controller", n).next_u64();
        const auto trace = run_closed_loop(frames, s.replay_rate_hz, topo, cfg, seed);

        const std::size_t nf = frames.size();
        std::vector<double> wraps(nf, 0.0);
        for (double t : trace.wrap_times_s)
            wraps[std::min(static_cast<std::size_t>(std::floor(t * s.replay_rate_hz)), nf - 1)] += 1.0;
        const double per_wrap = cfg.wrap_model ? cfg.wrap_transient_s : 0.0;
        const auto& ideal = effs[r + 1];
        CsvWriter w(hash, {"frame", "time_s", "efficiency", "efficiency_db", "ideal_efficiency", "wraps", "transient_s"});
        double ratio = 0.0;
        for (std::size_t i = 0; i < nf; ++i) {
            const double e = trace.frame_power[i];
            w.row({static_cast<double>(i), static_cast<double>(i) / s.replay_rate_hz, e, to_db(e), ideal[i], wraps[i],
                   wraps[i] * per_wrap});
            ratio += e / ideal[i];
        }
        w.save(dir / "loop" / (receiver_name(n) + ".csv"));
        CsvWriter tw(hash, {"time_s", "power", "efficiency_db", "wrap_flag"});
        for (const auto& smp : trace.samples) tw.row({smp.time_s, smp.power, to_db(smp.power), smp.wrap ? 1.0 : 0.0});
        tw.save(dir / "loop" / ("trace_" + receiver_name(n) + ".csv"));

        const auto ws = wrap_event_rate(trace);
        loop_receivers.push_back({{"receiver", receiver_name(n)},
                                  {"n_modes", n},
                                  {"controlled", summary_json(summarize_efficiency(trace.frame_power))},
                                  {"ideal", summary_json(summarize_efficiency(ideal))},
                                  {"mean_ratio_to_ideal", ratio / static_cast<double>(nf)},
                                  {"evaluations", trace.evaluations},
                                  {"loop_rate_hz", trace.loop_rate_hz},
                                  {"duration_s", trace.duration_s},
                                  {"wraps", ws.events},
                                  {"wrap_rate_per_s", ws.events_per_s},
                                  {"wrap_duty", ws.duty},
                                  {"restarts", trace.restarts},
                                  {"reopens", trace.reopens},
                                  {"file", "loop/" + receiver_name(n) + ".csv"},
                                  {"trace_file", "loop/trace_" + receiver_name(n) + ".csv"}});
    }
    const auto smf_sum = summarize_efficiency(proj.smf_efficiency);
    write_json(dir / "loop" / "summary.json",
               {{"scenario_hash", hash},
                {"replay_rate_hz", s.replay_rate_hz},
                {"lossless", lossless},
                {"objective", s.loop.controller.monitor_feedback ? "element monitor powers" : "combined output power"},
                {"frame_efficiency", "mean output power over the second half of each frame"},
                {"smf", summary_json(smf_sum)},
                {"receivers", loop_receivers}});
}

// ---------------------------------------------------------------------------
// ber

void cmd_ber(const Scenario& s, const fs::path& dir, const RunOverrides& o) {
    require_run(s, dir);
    const auto hash = scenario_hash(s);
    const auto smf = read_checked(dir / "coupling" / "smf.csv", hash).column("efficiency");
    const auto coupling = read_json(dir / "coupling" / "summary.json");
    require_hash(coupling.value("scenario_hash", std::string()), hash, dir / "coupling" / "summary.json");
    const std::size_t nf = smf.size();

    struct Receiver {
        std::string name;
        std::size_t n_modes = 1;
        std::string source;
        std::vector<double> eff;
        std::vector<double> transient_s;
    };
    std::vector<Receiver> receivers;
    receivers.push_back({"smf", 1, "coupling/smf.csv", smf, {}});
    for (const auto& r : coupling.at("receivers")) {
        const auto name = r.at("receiver").get<std::string>();
        if (name == "smf") continue;
        Receiver rx{name, r.at("n_modes").get<std::size_t>(), {}, {}, {}};
        const auto loop_file = dir / "loop" / (name + ".csv");
        if (fs::exists(loop_file)) {
            const auto t = read_checked(loop_file, hash);
            rx.eff = t.column("efficiency");
            rx.transient_s = t.column("transient_s");
            rx.source = "loop/" + name + ".csv";
        } else {
            rx.eff = read_checked(dir / "coupling" / (name + ".csv"), hash).column("efficiency");
            rx.source = "coupling/" + name + ".csv";
        }
        if (rx.eff.size() != nf) throw MissingArtifactError(rx.source + " frame count differs from coupling/smf.csv");
        receivers.push_back(std::move(rx));
    }

    const auto window_spec = o.window.value_or(s.comms.window);
    std::vector<FrameWindow> windows;
    if (window_spec == "auto") {
        windows = auto_windows(smf, s.comms.window_frames);
    } else {
        auto w = parse_window(window_spec, nf, o.window ? "--window" : "comms.window");
        w.smf_variation_db = variation_db(smf, w.begin, w.end);
        windows.push_back(w);
    }
    const auto sweep = o.rop_sweep.value_or(std::vector<double>{s.comms.rop_lo_dbm, s.comms.rop_hi_dbm, s.comms.rop_step_db});
    const auto setpoints = rop_sweep(sweep[0], sweep[1], sweep[2]);
    const double rate = s.replay_rate_hz;
    auto floor_rop = [&](const ReceiverModel& m) { return m.sensitivity_dbm + s.comms.floor_offset_db; };
    auto floor_ber = [&](const std::vector<double>& eff, const ReceiverModel& m) {
        return cumulated_ber(power_trace_from_efficiency(eff, floor_rop(m), rate), m);
    };

    json windows_j = json::array();
    for (const auto& w : windows)
        windows_j.push_back({{"name", w.name},
                             {"begin", w.begin},
                             {"end", w.end},
                             {"smf_variation_db", w.smf_variation_db},
                             {"duration_s", static_cast<double>(w.end - w.begin) / rate}});
    json models = json::object();
    json results = json::array();
    for (const auto& fmt_name : s.comms.formats) {
        const auto fmt = modulation_from_string(fmt_name);
        const auto base = receiver_model(s, fmt);
        models[fmt_name] = {{"format", fmt_name},
                            {"bit_rate_bps", base.bit_rate_bps},
                            {"sensitivity_dbm", base.sensitivity_dbm},
                            {"q_at_sensitivity", base.q_at_sensitivity},
                            {"floor_rop_dbm", floor_rop(base)}};
        for (const auto& w : windows) {
            const auto wdir = fs::path("ber") / w.name;
            const auto btb = btb_curve(base, setpoints);
            auto save_curve = [&](const std::string& rx, const BerCurve& c) {
                CsvWriter cw(hash, {"rop_dbm", "ber_cum"});
                for (std::size_t i = 0; i < c.rop_dbm.size(); ++i) cw.row({c.rop_dbm[i], c.ber[i]});
                const auto rel = wdir / (fmt_name + "_" + rx + ".csv");
                cw.save(dir / rel);
                return rel.generic_string();
            };
            results.push_back({{"window", w.name},
                               {"format", fmt_name},
                               {"receiver", "btb"},
                               {"source", "flat power"},
                               {"file", save_curve("btb", btb)},
                               {"ber_at_max_rop", btb.ber.back()},
                               {"ber_at_floor_rop", ber_instant(floor_rop(base), base)}});
            const double window_s = static_cast<double>(w.end - w.begin) / rate;
            for (const auto& rx : receivers) {
                std::vector<double> eff(rx.eff.begin() + static_cast<long>(w.begin), rx.eff.begin() + static_cast<long>(w.end));
                auto model = base;
                if (!rx.transient_s.empty()) {
                    double t = 0.0;
                    for (std::size_t i = w.begin; i < w.end; ++i) t += rx.transient_s[i];
                    model.floor_duty = std::min(1.0, t / window_s);
                }
                const auto curve = ber_curve(eff, model, setpoints, rate);
                json pen = json::array();
                for (const double target : s.comms.target_bers) {
                    json p = {{"target_ber", target}};
                    try {
                        p["penalty_db"] = power_penalty(curve, btb, target);
                        p["not_comparable"] = nullptr;
                    } catch (const NotComparableError& e) {
                        p["penalty_db"] = nullptr;
                        p["not_comparable"] = e.side();
                    }
                    pen.push_back(p);
                }
                const auto sync = sync_loss_stats(power_trace_from_efficiency(eff, s.comms.sync_rop_dbm, rate), model,
                                                  s.comms.sync_ber_threshold, s.comms.sync_reacquire_s);
                results.push_back({{"window", w.name},
                                   {"format", fmt_name},
                                   {"receiver", rx.name},
                                   {"n_modes", rx.n_modes},
                                   {"source", rx.source},
                                   {"file", save_curve(rx.name, curve)},
                                   {"floor_duty", model.floor_duty},
                                   {"model_floor", ber_floor_from_phase_jumps(model.floor_duty)},
                                   {"ber_at_max_rop", curve.ber.back()},
                                   {"ber_at_floor_rop", floor_ber(eff, model)},
                                   {"variation_db", variation_db(rx.eff, w.begin, w.end)},
                                   {"penalties", pen},
                                   {"sync_loss",
                                    {{"seconds_per_minute", sync.seconds_per_minute},
                                     {"outage_s", sync.outage_s},
                                     {"bad_frames", sync.bad_frames},
                                     {"outages", sync.outages}}}});
            }
        }
    }
    write_json(dir / "ber" / "ber_report.json",
               {{"scenario_hash", hash},
                {"tool_version", kToolVersion},
                {"frame_rate_hz", rate},
                {"power_normalization", "per-window mean ROP equals the setpoint"},
                {"window_selection", window_spec == "auto" ? "sliding windows ranked by SMF max-min" : "explicit"},
                {"window_frames", s.comms.window_frames},
                {"windows", windows_j},
                {"rop_sweep_dbm", {{"lo", sweep[0]}, {"hi", sweep[1]}, {"step", sweep[2]}}},
                {"overrides", {{"window", o.window ? json(*o.window) : json(nullptr)},
                               {"rop_sweep", o.rop_sweep ? json(*o.rop_sweep) : json(nullptr)}}},
                {"target_bers", s.comms.target_bers},
                {"sync", {{"rop_dbm", s.comms.sync_rop_dbm},
                          {"ber_threshold", s.comms.sync_ber_threshold},
                          {"reacquire_s", s.comms.sync_reacquire_s}}},
                {"receiver_models", models},
                {"results", results}});
}

// ---------------------------------------------------------------------------
// wdm

void cmd_wdm(const Scenario& s, const fs::path& dir) {
    s.validate();
    bind_run_directory(s, dir);
    const auto hash = scenario_hash(s);
    const auto& c = s.wdm;
    const double f0 = kSpeedOfLight / c.center_wavelength_m;
    const double mismatch = delay_from_path_m(c.link_delay_m);
    const double lo = delay_from_path_m(c.scan_lo_m), hi = delay_from_path_m(c.scan_hi_m),
                 step = delay_from_path_m(c.scan_step_m);

    auto save_scan = [&](const std::string& name, const VodlScan& scan) {
        CsvWriter w(hash, {"delay_mm", "efficiency"});
        const auto mm = scan.path_mm();
        for (std::size_t i = 0; i < mm.size(); ++i) w.row({mm[i], scan.efficiency[i]});
        w.save(dir / "wdm" / ("scan_" + name + ".csv"));
        return json{{"file", "wdm/scan_" + name + ".csv"},
                    {"argmax_path_mm", path_from_delay_m(scan.argmax_delay_s) * 1e3},
                    {"peak_efficiency", *std::max_element(scan.efficiency.begin(), scan.efficiency.end())},
                    {"half_width_mm", jnum(scan.width_m * 1e3)}};
    };

    const auto mono = OpticalSpectrum::lines({{f0, 1.0}});
    json scans = json::object();
    scans["mono"] = save_scan("mono", vodl_scan(mono, mismatch, lo, hi, step));
    const auto lines = c.spacing_hz > 0.0 ? OpticalSpectrum::comb(f0, c.spacing_hz, c.n_lines) : mono;
    json two_line = save_scan("lines", vodl_scan(lines, mismatch, lo, hi, step));
    if (c.spacing_hz > 0.0) {
        const double half = 0.5 / c.spacing_hz, full = 1.0 / c.spacing_hz;
        two_line["half_period"] = {{"path_mm", path_from_delay_m(half) * 1e3},
                                   {"efficiency", two_path_efficiency(lines, half)}};
        two_line["full_period"] = {{"path_mm", path_from_delay_m(full) * 1e3},
                                   {"efficiency", two_path_efficiency(lines, full)}};
    }
    scans["lines"] = two_line;
    json bands = json::array();
    for (const double w : c.band_widths_nm) {
        const auto band = w > 0.0 ? OpticalSpectrum::rectangular_band_nm(c.band_center_nm, w)
                                  : OpticalSpectrum::lines({{kSpeedOfLight / (c.band_center_nm * 1e-9), 1.0}});
        char name[48];
        std::snprintf(name, sizeof name, "band_%gnm", w);
        json b = save_scan(name, vodl_scan(band, mismatch, lo, hi, step));
        b["width_nm"] = w;
        b["center_nm"] = c.band_center_nm;
        bands.push_back(b);
    }

    // Link runs replay the widest combiner's efficiency trace when one exists.
    std::vector<double> eff;
    std::string source = "flat (no coupling artifacts)";
    std::size_t widest = 0;
    for (const auto n : s.combiner.mode_counts) widest = std::max(widest, n);
    const auto name = receiver_name(widest);
    double rate = s.replay_rate_hz;
    if (fs::exists(dir / "loop" / (name + ".csv"))) {
        eff = read_checked(dir / "loop" / (name + ".csv"), hash).column("efficiency");
        source = "loop/" + name + ".csv";
    } else if (fs::exists(dir / "coupling" / (name + ".csv"))) {
        eff = read_checked(dir / "coupling" / (name + ".csv"), hash).column("efficiency");
        source = "coupling/" + name + ".csv";
    } else {
        eff.assign(s.n_frames, 1.0);
    }
    const auto model = receiver_model(s, Modulation::OOK);
    const auto setpoints = rop_sweep(s.comms.rop_lo_dbm, s.comms.rop_hi_dbm, s.comms.rop_step_db);
    json links = json::array();
    auto link = [&](const std::string& label, double delay) {
        const auto rep = wdm_link_run(eff, lines, delay, model, setpoints, rate, c.target_ber);
        auto save = [&](const std::string& file, const BerCurve& curve) {
            CsvWriter w(hash, {"rop_dbm", "ber_cum"});
            for (std::size_t i = 0; i < curve.rop_dbm.size(); ++i) w.row({curve.rop_dbm[i], curve.ber[i]});
            w.save(dir / "wdm" / file);
            return "wdm/" + file;
        };
        json lines_j = json::array();
        for (std::size_t k = 0; k < rep.lines.size(); ++k) {
            const auto& l = rep.lines[k];
            lines_j.push_back({{"frequency_hz", l.frequency_hz},
                               {"line_efficiency", l.line_efficiency},
                               {"penalty_db", jnum(l.penalty_db)},
                               {"file", save("link_" + label + "_line" + std::to_string(k) + ".csv", l.curve)}});
        }
        links.push_back({{"label", label},
                         {"path_mismatch_mm", path_from_delay_m(delay) * 1e3},
                         {"delta_nu_tau", c.spacing_hz * delay},
                         {"single_file", save("link_" + label + "_single.csv", rep.single)},
                         {"lines", lines_j}});
    };
    link("configured", mismatch);
    if (c.spacing_hz > 0.0 && c.n_lines > 1) link("half_period", 0.5 / c.spacing_hz);

    write_json(dir / "wdm" / "report.json",
               {{"scenario_hash", hash},
                {"tool_version", kToolVersion},
                {"center_frequency_hz", f0},
                {"spacing_hz", c.spacing_hz},
                {"n_lines", c.n_lines},
                {"scan_true_mismatch_mm", c.link_delay_m * 1e3},
                {"efficiency_definition", "common phase locked to the reference line, (1 + Re gamma) / 2"},
                {"scans", scans},
                {"bands", bands},
                {"link",
                 {{"efficiency_source", source},
                  {"target_ber", c.target_ber},
                  {"per_line_power", "half of the single-line power; curves plotted against per-line ROP"},
                  {"runs", links}}}});
}

// ---------------------------------------------------------------------------
// report

namespace {

std::string hash_of(const fs::path& p) {
    if (p.extension() == ".csv") {
        std::ifstream in(p, std::ios::binary);
        std::string line;
        std::getline(in, line);
        const std::string tag = "# scenario_hash: ";
        return line.rfind(tag, 0) == 0 ? line.substr(tag.size()) : std::string("<none>");
    }
    const auto j = read_json(p);
    return j.is_object() ? j.value("scenario_hash", std::string("<none>")) : std::string("<none>");
}

}  // namespace

std::string cmd_report(const fs::path& dir) {
    if (!fs::is_directory(dir) || fs::is_empty(dir)) throw MissingArtifactError(dir.string() + " is empty");
    const auto s = load_run_scenario(dir);
    const auto hash = scenario_hash(s);

    std::vector<std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        const auto rel = fs::relative(e.path(), dir).generic_string();
        const auto ext = e.path().extension();
        if (rel == "report.md") continue;
        files.push_back(rel);
        if (ext == ".csv" || ext == ".json") {
            const auto h = hash_of(e.path());
            if (h != hash)
                throw MissingArtifactError(rel + " carries scenario hash " + h + " but the run is " + hash);
        }
    }
    std::sort(files.begin(), files.end());

    std::ostringstream md;
    md << "# Run report: " << s.label << "\n\n";
    md << "- Tool version: " << kToolVersion << "\n";
    md << "- Scenario hash: " << hash << "\n";
    md << "- Seed: " << s.seed << "\n";
    md << "- Frames: " << s.n_frames << " at " << fixed(s.frame_rate_hz, 1) << " Hz (replayed at "
       << fixed(s.replay_rate_hz, 3) << " Hz)\n";
    md << "- Grid: " << s.grid.n << " x " << s.grid.n << ", " << fixed(s.grid.extent_m, 3) << " m\n";
    md << "- Wavelength: " << fixed(s.wavelength_m * 1e9, 1) << " nm\n";
    md << "- r0: " << fixed(s.atmosphere.r0_m * 100, 2) << " cm at " << fixed(s.atmosphere.r0_wavelength_m * 1e9, 0)
       << " nm, " << fixed(field_r0_m(s) * 100, 2) << " cm at the field wavelength\n";
    md << "- Layers: " << s.atmosphere.layers.size() << ", wind " << fixed(s.atmosphere.wind_speed_mps, 1)
       << " m/s, elevation " << fixed(s.atmosphere.elevation_deg, 1) << " deg\n";
    md << "- Receive aperture: " << fixed(s.receiver.aperture_m, 3) << " m\n";

    if (fs::exists(dir / "mode_statistics.json")) {
        const auto st = read_json(dir / "mode_statistics.json");
        md << "\n## Modal statistics\n\n";
        md << "Mean relative power over " << st.at("frames").get<std::size_t>() << " frames.\n\n";
        md << "| Mode | Power (%) |\n|---|---|\n";
        for (const auto& m : st.at("modes"))
            md << "| " << m.at("mode").get<std::string>() << " | "
               << fixed(100 * m.at("mean_relative_power").get<double>(), 2) << " |\n";
        md << "| Other | " << fixed(100 * st.at("mean_residual").get<double>(), 2) << " |\n\n";
        md << "| Group | Total (%) | Per mode (%) |\n|---|---|---|\n";
        const auto gp = st.at("group_power").get<std::vector<double>>();
        const auto gm = st.at("group_mode_mean").get<std::vector<double>>();
        for (std::size_t g = 0; g < gp.size(); ++g)
            md << "| " << g << " | " << fixed(100 * gp[g], 2) << " | " << fixed(100 * gm[g], 2) << " |\n";
        md << "\nHG00 + HG01 + HG10: " << fixed(100 * st.at("capture_first3").get<double>(), 1)
           << " %. All basis modes: " << fixed(100 * st.at("capture_all").get<double>(), 1) << " %.\n";
        const auto& meta = st.at("metadata");
        md << "Basis waist " << fixed(meta.at("basis_waist_m").get<double>() * 1e3, 2) << " mm, SMF waist "
           << fixed(meta.at("smf_waist_m").get<double>() * 1e3, 2) << " mm.\n";
    }

    if (fs::exists(dir / "coupling" / "summary.json")) {
        const auto cs = read_json(dir / "coupling" / "summary.json");
        md << "\n## Coupling efficiency\n\n";
        md << (cs.at("lossless").get<bool>() ? "Lossless combination" : "Including combiner losses")
           << ", normalized to post-aperture power.\n\n";
        md << "| Receiver | Average loss (dB) | Mean fraction (%) | Max (dB) | Min (dB) | Max-min (dB) |\n"
              "|---|---|---|---|---|---|\n";
        for (const auto& r : cs.at("receivers"))
            md << "| " << r.at("receiver").get<std::string>() << " | "
               << (r.at("mean_db").is_null() ? std::string("-inf") : fixed(r.at("mean_db").get<double>(), 2)) << " | "
               << fixed(100.0 * r.at("mean").get<double>(), 1) << " | " << fixed(r.at("max_db").get<double>(), 2) << " | " << fixed(r.at("min_db").get<double>(), 2)
               << " | " << fixed(r.at("variation_db").get<double>(), 2) << " |\n";
    }

    if (fs::exists(dir / "loop" / "summary.json")) {
        const auto ls = read_json(dir / "loop" / "summary.json");
        md << "\n## Closed loop\n\n";
        md << "Objective: " << ls.at("objective").get<std::string>() << ". SMF max-min for comparison: "
           << fixed(ls.at("smf").at("variation_db").get<double>(), 2) << " dB.\n\n";
        md << "| Receiver | Controlled max-min (dB) | Ideal max-min (dB) | Mean / ideal | Wraps per s | Wrap duty | Restarts |\n";
        md << "|---|---|---|---|---|---|---|\n";
        for (const auto& r : ls.at("receivers"))
            md << "| " << r.at("receiver").get<std::string>() << " | "
               << fixed(r.at("controlled").at("variation_db").get<double>(), 2) << " | "
               << fixed(r.at("ideal").at("variation_db").get<double>(), 2) << " | "
               << fixed(r.at("mean_ratio_to_ideal").get<double>(), 4) << " | "
               << fixed(r.at("wrap_rate_per_s").get<double>(), 3) << " | " << sci(r.at("wrap_duty").get<double>())
               << " | " << r.at("restarts").get<std::size_t>() << " |\n";
    }

    if (fs::exists(dir / "ber" / "ber_report.json")) {
        const auto br = read_json(dir / "ber" / "ber_report.json");
        md << "\n## Bit error rate\n\n";
        md << "| Window | Frames | SMF max-min (dB) |\n|---|---|---|\n";
        for (const auto& w : br.at("windows"))
            md << "| " << w.at("name").get<std::string>() << " | " << w.at("begin").get<std::size_t>() << "-"
               << w.at("end").get<std::size_t>() << " | " << fixed(w.at("smf_variation_db").get<double>(), 2) << " |\n";
        const auto targets = br.at("target_bers").get<std::vector<double>>();
        for (const auto& [fmt, model] : br.at("receiver_models").items()) {
            md << "\n### " << fmt << " (sensitivity " << fixed(model.at("sensitivity_dbm").get<double>(), 1)
               << " dBm, floor read at " << fixed(model.at("floor_rop_dbm").get<double>(), 1)
               << " dBm)\n\n| Window | Receiver |";
            for (double t : targets) md << " Penalty at " << sci(t) << " (dB) |";
            md << " BER at floor ROP | BER at max ROP | Model floor | Sync loss (s/min) |\n|---|---|";
            for (std::size_t i = 0; i < targets.size(); ++i) md << "---|";
            md << "---|---|---|---|\n";
            for (const auto& r : br.at("results")) {
                if (r.at("format") != fmt || r.at("receiver") == "btb") continue;
                md << "| " << r.at("window").get<std::string>() << " | " << r.at("receiver").get<std::string>() << " |";
                for (const auto& p : r.at("penalties")) {
                    if (p.at("penalty_db").is_null())
                        md << " no crossing (" << p.at("not_comparable").get<std::string>() << ") |";
                    else
                        md << " " << fixed(p.at("penalty_db").get<double>(), 2) << " |";
                }
                md << " " << sci(r.at("ber_at_floor_rop").get<double>()) << " | " << sci(r.at("ber_at_max_rop").get<double>())
                   << " | " << sci(r.at("model_floor").get<double>())
                   << " | " << fixed(r.at("sync_loss").at("seconds_per_minute").get<double>(), 2) << " |\n";
            }
        }
    }

    if (fs::exists(dir / "wdm" / "report.json")) {
        const auto wr = read_json(dir / "wdm" / "report.json");
        md << "\n## Wavelength multiplexing\n\n";
        const auto& lines = wr.at("scans").at("lines");
        if (lines.contains("half_period"))
            md << "- Two lines " << fixed(wr.at("spacing_hz").get<double>() / 1e9, 0) << " GHz apart: efficiency "
               << fixed(lines.at("half_period").at("efficiency").get<double>(), 6) << " at "
               << fixed(lines.at("half_period").at("path_mm").get<double>(), 3) << " mm, "
               << fixed(lines.at("full_period").at("efficiency").get<double>(), 6) << " at "
               << fixed(lines.at("full_period").at("path_mm").get<double>(), 3) << " mm\n";
        md << "- Monochromatic scan peak " << fixed(wr.at("scans").at("mono").at("peak_efficiency").get<double>(), 6)
           << "\n";
        for (const auto& b : wr.at("bands"))
            md << "- Band " << fixed(b.at("width_nm").get<double>(), 1) << " nm: peak "
               << fixed(b.at("peak_efficiency").get<double>(), 4) << " at "
               << fixed(b.at("argmax_path_mm").get<double>(), 3) << " mm, half width "
               << (b.at("half_width_mm").is_null() ? std::string("unbounded") : fixed(b.at("half_width_mm").get<double>(), 3))
               << " mm\n";
        md << "\nLink penalty per line at BER " << sci(wr.at("link").at("target_ber").get<double>())
           << " (efficiency from " << wr.at("link").at("efficiency_source").get<std::string>() << "):\n\n";
        md << "| Run | Path mismatch (mm) | Line | Line efficiency | Penalty (dB) |\n|---|---|---|---|---|\n";
        for (const auto& r : wr.at("link").at("runs"))
            for (std::size_t k = 0; k < r.at("lines").size(); ++k) {
                const auto& l = r.at("lines")[k];
                md << "| " << r.at("label").get<std::string>() << " | "
                   << fixed(r.at("path_mismatch_mm").get<double>(), 3) << " | " << k << " | "
                   << fixed(l.at("line_efficiency").get<double>(), 4) << " | "
                   << (l.at("penalty_db").is_null() ? std::string("no crossing") : fixed(l.at("penalty_db").get<double>(), 3))
                   << " |\n";
            }
    }

    md << "\n## Artifacts\n\n";
    for (const auto& f : files) md << "- " << f << "\n";
    const auto text = md.str();
    write_text(dir / "report.md", text);
    return text;
}

}  // namespace fso
