#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "fso/error.hpp"
#include "fso/pipeline.hpp"
#include "fso/scenario.hpp"

using namespace fso;
namespace fs = std::filesystem;

namespace {

const std::string kSmall = FSO_TEST_DATA "/small.yaml";

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    return out;
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("fsolink_test_" + name);
    fs::remove_all(d);
    return d;
}

void run_all(const Scenario& s, const fs::path& dir) {
    bind_run_directory(s, dir);
    cmd_synth(s, dir);
    cmd_couple(s, dir);
    cmd_ber(s, dir);
    cmd_wdm(s, dir);
    cmd_report(dir);
}

int run_cli(const std::string& args) {
    const int rc = std::system((std::string(FSOLINK_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string config_path_of(const std::string& key) {
    try {
        parse_scenario(slurp(kSmall) + key);
    } catch (const ConfigError& e) {
        return e.path();
    }
    return "";
}

}  // namespace

TEST_CASE("config errors name the field") {
    CHECK(config_path_of("bogus: 1\n") == "bogus");
    CHECK_THROWS_AS(parse_scenario("label: x\n"), ConfigError);
    try {
        parse_scenario("label: x\n");
    } catch (const ConfigError& e) {
        CHECK(e.path() == "seed");
        CHECK(e.exit_code() == 2);
    }
    auto text = slurp(kSmall);
    auto replace = [&](const std::string& from, const std::string& to) {
        auto t = text;
        t.replace(t.find(from), from.size(), to);
        try {
            parse_scenario(t);
        } catch (const ConfigError& e) {
            return e.path();
        }
        return std::string();
    };
    CHECK(replace("n: 128", "n: 100").rfind("grid.n", 0) == 0);
    CHECK(replace("seed: 1", "seed: abc") == "seed");
    CHECK(replace("{altitude_m: 0, weight: 0.2}", "{altitude_m: 0, weight: 0.3}").rfind("atmosphere.layers", 0) == 0);
    CHECK(replace("evals_per_frame: 2000", "evals_per_frame: 2000\n    collapse_rad: -1").rfind("loop.controller", 0) == 0);
    CHECK(replace("formats: [ook, dpsk]", "formats: [qam]").rfind("comms.formats", 0) == 0);
    CHECK(replace("sensitivity_dbm: -39", "bit_rate_bps: 1e10") == "comms.sensitivity_dbm");
    CHECK_THROWS_AS(load_scenario("/nonexistent/config.yaml"), ConfigError);
}

TEST_CASE("scenario serialization") {
    const auto s = load_scenario(kSmall);
    const auto j = to_json(s);
    const auto back = scenario_from_json(j);
    CHECK(to_json(back) == j);
    CHECK(scenario_hash(back) == scenario_hash(s));
    CHECK(scenario_hash(s).size() == 16);
    auto t = s;
    t.seed = 2;
    CHECK(scenario_hash(t) != scenario_hash(s));
    t = s;
    t.atmosphere.r0_m = std::numeric_limits<double>::infinity();
    CHECK(to_json(scenario_from_json(to_json(t))) == to_json(t));
}

TEST_CASE("option parsers") {
    CHECK(parse_rop_sweep("-50:-20:0.5") == std::vector<double>{-50, -20, 0.5});
    CHECK_THROWS_AS(parse_rop_sweep("-50:-20"), ConfigError);
    CHECK_THROWS_AS(parse_rop_sweep("-20:-50:1"), ConfigError);
    CHECK(parse_mode_list("3,6,15") == std::vector<std::size_t>{3, 6, 15});
    CHECK_THROWS_AS(parse_mode_list("3,x"), ConfigError);
    CHECK_THROWS_AS(parse_mode_list("6,3"), ConfigError);
}

TEST_CASE("auto windows") {
    const std::vector<double> e{1.0, 1.0, 1.0, 0.01, 1.0, 1.0, 0.9, 0.9, 1.0};
    const auto w = auto_windows(e, 3);
    REQUIRE(w.size() == 2);
    CHECK(w[0].name == "best");
    CHECK(w[1].name == "worst");
    CHECK(w[0].begin == 0);
    CHECK(w[0].end == 3);
    CHECK(w[0].smf_variation_db == doctest::Approx(0.0));
    CHECK(w[1].begin == 1);
    CHECK(w[1].smf_variation_db == doctest::Approx(20.0));
    // A window longer than the run covers the whole run.
    const auto all = auto_windows(e, 20);
    CHECK(all[0].begin == 0);
    CHECK(all[0].end == e.size());
    CHECK_THROWS_AS(auto_windows({}, 3), ParameterError);
}

TEST_CASE("pipeline run is deterministic and self-consistent") {
    const auto s = load_scenario(kSmall);
    const auto a = fresh_dir("run_a");
    const auto b = fresh_dir("run_b");
    run_all(s, a);
    run_all(s, b);
    const auto sa = snapshot(a);
    CHECK(sa == snapshot(b));
    for (const char* f : {"scenario.json", "modes.csv", "projections.csv", "mode_statistics.json", "fields/index.json",
                          "coupling/smf.csv", "coupling/mm15.csv", "coupling/histogram.csv", "coupling/summary.json",
                          "loop/mm15.csv", "loop/summary.json", "ber/ber_report.json", "wdm/report.json", "report.md"})
        CHECK_MESSAGE(sa.count(f) == 1, f);

    // Report regeneration is idempotent and carries its sections.
    const auto r1 = cmd_report(a);
    CHECK(r1 == cmd_report(a));
    for (const char* h : {"## Modal statistics", "## Coupling efficiency", "## Closed loop", "## Bit error rate",
                          "## Wavelength multiplexing"})
        CHECK(r1.find(h) != std::string::npos);

    const auto hash = scenario_hash(s);
    const auto smf = read_csv(a / "coupling/smf.csv");
    CHECK(smf.scenario_hash == hash);
    CHECK(smf.rows.size() == s.n_frames);
    CHECK(read_json(a / "coupling/summary.json")["scenario_hash"] == hash);

    // Histogram counts cover every frame.
    const auto hist = read_csv(a / "coupling/histogram.csv");
    double total = 0.0;
    for (double c : hist.column("smf")) total += c;
    CHECK(total == s.n_frames);

    // Relative mode powers plus residual sum to one per frame.
    const auto modes = read_csv(a / "modes.csv");
    const auto proj = read_csv(a / "projections.csv");
    const auto pw = proj.column("aperture_power_w");
    for (std::size_t i = 0; i < modes.rows.size(); ++i) {
        double sum = 0.0;
        for (std::size_t k = 2; k < modes.columns.size(); ++k) sum += modes.rows[i][k];
        CHECK(sum == doctest::Approx(pw[i]).epsilon(1e-9));
    }

    // The same scenario loaded back from the run directory.
    CHECK(scenario_hash(load_run_scenario(a)) == hash);

    // A different scenario cannot reuse the directory.
    auto other = s;
    other.seed = 9;
    CHECK_THROWS_AS(bind_run_directory(other, a), MissingArtifactError);
    fs::remove_all(b);
}

TEST_CASE("report detects mismatched artifacts") {
    const auto s = load_scenario(kSmall);
    const auto d = fresh_dir("mismatch");
    bind_run_directory(s, d);
    cmd_synth(s, d);
    cmd_couple(s, d);
    // Replace one artifact with one from another scenario.
    auto other = s;
    other.seed = 5;
    const auto o = fresh_dir("mismatch_other");
    bind_run_directory(other, o);
    cmd_synth(other, o);
    cmd_couple(other, o);
    fs::copy_file(o / "coupling/smf.csv", d / "coupling/smf.csv", fs::copy_options::overwrite_existing);
    CHECK_THROWS_AS(cmd_report(d), MissingArtifactError);
    CHECK_THROWS_AS(cmd_report(fresh_dir("empty")), MissingArtifactError);
    const auto e = fresh_dir("no_synth");
    bind_run_directory(s, e);
    CHECK_THROWS_AS(cmd_couple(s, e), MissingArtifactError);
    fs::remove_all(o);
    fs::remove_all(e);
}

TEST_CASE("command line exit codes") {
    const auto d = fresh_dir("cli");
    CHECK(run_cli("") == 2);
    CHECK(run_cli("synth --config /nonexistent.yaml --out " + d.string()) == 2);
    CHECK(run_cli("report --out " + d.string()) == 3);
    CHECK(run_cli("couple --out " + d.string()) == 3);
    CHECK(run_cli("synth --config " + kSmall + " --out " + d.string() + " --frames 12") == 0);
    CHECK(run_cli("couple --out " + d.string() + " --modes 3,x") == 2);
    CHECK(run_cli("couple --out " + d.string() + " --lossless") == 0);
    CHECK(run_cli("ber --out " + d.string() + " --window 0:8 --rop-sweep -52:-20:1") == 0);
    CHECK(run_cli("ber --out " + d.string() + " --window 8:4") == 2);
    CHECK(run_cli("wdm --out " + d.string()) == 0);
    CHECK(run_cli("report --out " + d.string()) == 0);
    CHECK(fs::exists(d / "ber/custom/ook_smf.csv"));
    // A seed override changes the scenario and the stored hash refuses it.
    CHECK(run_cli("synth --config " + kSmall + " --out " + d.string() + " --frames 12 --seed 3") == 3);
    fs::remove_all(d);
}
