#include <doctest.h>

#include <cstdlib>
#include <string>
#include <vector>

#include <json.hpp>

#include "gridinertia/estimate.hpp"
#include "gridinertia/io.hpp"
#include "helpers.hpp"

using namespace gridinertia;
using testutil::read_text;
using testutil::TempDir;
using testutil::write_text;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

CmdResult run_cli(const std::vector<std::string>& args, const TempDir& dir) {
  static int counter = 0;
  const std::string out_file = dir.file("stdout_" + std::to_string(counter));
  const std::string err_file = dir.file("stderr_" + std::to_string(counter));
  ++counter;

  std::string cmd = std::string(GRIDINERTIA_CLI_PATH);
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " >" + out_file + " 2>" + err_file;
  const int status = std::system(cmd.c_str());

  CmdResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = read_text(out_file);
  result.err = read_text(err_file);
  return result;
}

double parse_value(const std::string& out, const std::string& key) {
  const auto pos = out.find(key + " = ");
  REQUIRE(pos != std::string::npos);
  return std::stod(out.substr(pos + key.size() + 3));
}

std::string data_path(const std::string& name) {
  return std::string(GRIDINERTIA_DATA_DIR) + "/" + name;
}

// 50 Hz aggregate scenario with a slow droop governor and post-event
// contamination; used by the window-selection demos.
std::string governor_scenario_json() {
  return R"({
    "system": {
      "f_nominal_hz": 50.0, "s_base_mva": 20000.0, "power_factor": 0.9,
      "load_mw": 20000.0,
      "generators": [{"id": "EQ", "h_s": 9.6, "p_mech_mw": 19830.0}]
    },
    "scenario": {
      "event_time_s": 1.0, "loss_mw": 170.0, "pre_event_load_mw": 20000.0,
      "base_convention": "post_event_total"
    },
    "sim": {
      "duration_s": 14.0,
      "governor": {"enabled": true, "droop_r": 0.1, "time_constant_s": 25.0,
                   "activation_delay_s": 0.5},
      "artifacts": {"initial_uptick_hz": 0.06, "backswing_amplitude_hz": 0.03,
                    "backswing_decay_tau_s": 0.3, "backswing_osc_freq_hz": 1.8,
                    "noise_sigma_hz": 0.002, "rng_seed": 1}
    }
  })";
}

}  // namespace

TEST_CASE("cli: version flag") {
  TempDir dir;
  const auto r = run_cli({"--version"}, dir);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("0.1.0") != std::string::npos);
}

TEST_CASE("cli: multimachine simulation writes nine channels and a manifest") {
  TempDir dir;
  const auto out_csv = dir.file("ieee39_mm.csv");
  const auto r = run_cli({"simulate", data_path("ieee39.json"), "-o", out_csv,
                          "--model", "multimachine"},
                         dir);
  CHECK(r.exit_code == 0);

  const auto dataset = load_pmu_csv(out_csv);
  CHECK(dataset.traces.size() == 9);
  for (const auto& t : dataset.traces) CHECK(t.channel_id != "G37");

  const auto manifest_text = read_text(out_csv + ".manifest.json");
  REQUIRE_FALSE(manifest_text.empty());
  const auto manifest = nlohmann::json::parse(manifest_text);
  CHECK(manifest["command"] == "simulate");
  CHECK(manifest["version"] == "0.1.0");
  REQUIRE(manifest.contains("argv"));

  // replaying the recorded argv reproduces the output byte for byte
  const auto first_bytes = read_text(out_csv);
  std::vector<std::string> replay;
  for (const auto& a : manifest["argv"]) replay.push_back(a.get<std::string>());
  const auto r2 = run_cli(replay, dir);
  CHECK(r2.exit_code == 0);
  CHECK(read_text(out_csv) == first_bytes);
}

TEST_CASE("cli: input failures exit 2") {
  TempDir dir;
  CHECK(run_cli({"simulate", "missing.json", "-o", dir.file("x.csv")}, dir)
            .exit_code == 2);
  const auto r = run_cli({"simulate", data_path("ieee39.json"), "-o",
                          dir.file("x.csv"), "--duration", "0.5"},
                         dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("duration") != std::string::npos);
  CHECK(run_cli({"bogus_subcommand"}, dir).exit_code == 2);
}

TEST_CASE("cli: estimate recovers the simulated inertia constant") {
  TempDir dir;
  const auto trace_csv = dir.file("iran.csv");
  REQUIRE(run_cli({"simulate", data_path("iran_event.json"), "-o", trace_csv},
                  dir)
              .exit_code == 0);

  const auto r =
      run_cli({"estimate", trace_csv, data_path("iran_event.json")}, dir);
  REQUIRE(r.exit_code == 0);
  const double h = parse_value(r.out, "h_estimate_s");
  CHECK(std::abs(h - 9.6) / 9.6 < 0.01);
  CHECK(parse_value(r.out, "rocof_hz_per_s") < 0.0);

  // results CSV mirrors the printed values
  const auto results_csv = dir.file("result.csv");
  const auto r2 = run_cli({"estimate", trace_csv, data_path("iran_event.json"),
                           "-o", results_csv},
                          dir);
  CHECK(r2.exit_code == 0);
  const auto text = read_text(results_csv);
  CHECK(text.find("window_start,window_end,rocof,h_estimate") == 0);
  CHECK_FALSE(read_text(results_csv + ".manifest.json").empty());
}

TEST_CASE("cli: contaminated early window misses by 3x or more") {
  TempDir dir;
  const auto trace_csv = dir.file("iran.csv");
  REQUIRE(run_cli({"simulate", data_path("iran_event.json"), "-o", trace_csv},
                  dir)
              .exit_code == 0);

  const auto good =
      run_cli({"estimate", trace_csv, data_path("iran_event.json")}, dir);
  const auto bad = run_cli({"estimate", trace_csv, data_path("iran_event.json"),
                            "--window-start", "0", "--window-end", "0.5"},
                           dir);
  REQUIRE(good.exit_code == 0);
  REQUIRE(bad.exit_code == 0);
  const double err_good =
      std::abs(parse_value(good.out, "h_estimate_s") - 9.6) / 9.6;
  const double err_bad =
      std::abs(parse_value(bad.out, "h_estimate_s") - 9.6) / 9.6;
  CHECK(err_bad >= 3.0 * err_good);
}

TEST_CASE("cli: window outside the trace exits 2") {
  TempDir dir;
  const auto trace_csv = dir.file("iran.csv");
  REQUIRE(run_cli({"simulate", data_path("iran_event.json"), "-o", trace_csv},
                  dir)
              .exit_code == 0);
  const auto r = run_cli({"estimate", trace_csv, data_path("iran_event.json"),
                          "--window-start", "20", "--window-end", "30"},
                         dir);
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("WindowOutOfRange") != std::string::npos);
}

TEST_CASE("cli: a flat trace is a numerical failure, exit 3") {
  TempDir dir;
  const auto trace_csv = dir.file("flat.csv");
  std::string text = "t_s,ch_a\n";
  for (int r = 0; r < 200; ++r)
    text += std::to_string(0.04 * r) + ",50\n";
  write_text(trace_csv, text);

  const auto r =
      run_cli({"estimate", trace_csv, data_path("iran_event.json")}, dir);
  CHECK(r.exit_code == 3);
  CHECK(r.err.find("DegenerateSlope") != std::string::npos);
}

TEST_CASE("cli: emitted plot series equals the estimator's view") {
  TempDir dir;
  const auto trace_csv = dir.file("iran.csv");
  REQUIRE(run_cli({"simulate", data_path("iran_event.json"), "-o", trace_csv},
                  dir)
              .exit_code == 0);
  const auto plot_csv = dir.file("plot.csv");
  REQUIRE(run_cli({"estimate", trace_csv, data_path("iran_event.json"),
                   "--emit-plot", plot_csv},
                  dir)
              .exit_code == 0);

  // recompute the collapsed series in process and write it the same way
  const auto dataset = load_pmu_csv(trace_csv);
  PmuDataset expected;
  expected.traces.push_back(
      coi_frequency(dataset.traces, CoiMethod::plain_average()));
  const auto expected_csv = dir.file("expected_plot.csv");
  write_pmu_csv(expected, expected_csv);
  CHECK(read_text(plot_csv) == read_text(expected_csv));
}

TEST_CASE("cli: truth matches the fleet table") {
  TempDir dir;
  const auto r = run_cli({"truth", data_path("ieee39.json")}, dir);
  REQUIRE(r.exit_code == 0);
  CHECK(parse_value(r.out, "h_truth_s") ==
        doctest::Approx(4.2383778).epsilon(1e-8));

  const auto all =
      run_cli({"truth", data_path("ieee39.json"), "--include-tripped"}, dir);
  REQUIRE(all.exit_code == 0);
  CHECK(parse_value(all.out, "h_truth_s") ==
        doctest::Approx(4.2145831).epsilon(1e-7));

  const auto solo = run_cli({"truth", data_path("iran_event.json")}, dir);
  REQUIRE(solo.exit_code == 0);
  CHECK(parse_value(solo.out, "h_truth_s") == doctest::Approx(9.6));
}

TEST_CASE("cli: sweep on a clean trace reports one estimate everywhere") {
  TempDir dir;
  const auto scenario = dir.file("clean.json");
  write_text(scenario, R"({
    "system": {
      "f_nominal_hz": 50.0, "s_base_mva": 20000.0, "power_factor": 0.9,
      "load_mw": 20000.0,
      "generators": [{"id": "EQ", "h_s": 9.6, "p_mech_mw": 19830.0}]
    },
    "scenario": {
      "event_time_s": 1.0, "loss_mw": 170.0, "pre_event_load_mw": 20000.0,
      "base_convention": "post_event_total"
    },
    "sim": {"duration_s": 14.0}
  })");

  const auto trace_csv = dir.file("clean.csv");
  REQUIRE(run_cli({"simulate", scenario, "-o", trace_csv}, dir).exit_code == 0);
  const auto sweep_csv = dir.file("sweep.csv");
  const auto r = run_cli({"sweep", trace_csv, scenario, "--starts", "1,2",
                          "--ends", "4,6,8", "-o", sweep_csv, "--reference-h",
                          "9.6"},
                         dir);
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("best_window") != std::string::npos);

  const auto rows = read_text(sweep_csv);
  CHECK(rows.find("window_start,window_end,status,h_estimate,relative_error") ==
        0);
  // 6 cells, all ok
  std::size_t ok_count = 0, pos = 0;
  while ((pos = rows.find(",ok,", pos)) != std::string::npos) {
    ++ok_count;
    ++pos;
  }
  CHECK(ok_count == 6);
}

TEST_CASE("cli: sweep prefers the post-transient pre-governor window") {
  TempDir dir;
  const auto scenario = dir.file("gov.json");
  write_text(scenario, governor_scenario_json());

  int good_picks = 0;
  const int seeds = 20;
  for (int seed = 1; seed <= seeds; ++seed) {
    const auto trace_csv = dir.file("t" + std::to_string(seed) + ".csv");
    REQUIRE(run_cli({"simulate", scenario, "-o", trace_csv, "--seed",
                     std::to_string(seed)},
                    dir)
                .exit_code == 0);
    const auto sweep_csv = dir.file("s" + std::to_string(seed) + ".csv");
    const auto r = run_cli({"sweep", trace_csv, scenario, "--starts",
                            "0,0.5,1,2", "--ends", "3,4,6,8", "-o", sweep_csv,
                            "--reference-h", "9.6"},
                           dir);
    REQUIRE(r.exit_code == 0);
    const auto lb = r.out.find("best_window = [");
    REQUIRE(lb != std::string::npos);
    const auto rb = r.out.find("]", lb);
    const auto body = r.out.substr(lb + 15, rb - lb - 15);
    const auto comma = body.find(',');
    const double start = std::stod(body.substr(0, comma));
    const double end = std::stod(body.substr(comma + 1));
    if (start >= 1.0 && end <= 4.0) ++good_picks;
  }
  CHECK(good_picks >= 16);  // at least 80 percent of the seeds
}

TEST_CASE("cli: sweep grid flags are required and validated") {
  TempDir dir;
  const auto trace_csv = dir.file("iran.csv");
  REQUIRE(run_cli({"simulate", data_path("iran_event.json"), "-o", trace_csv},
                  dir)
              .exit_code == 0);
  // missing --ends
  CHECK(run_cli({"sweep", trace_csv, data_path("iran_event.json"), "--starts",
                 "1,2", "-o", dir.file("s.csv")},
                dir)
            .exit_code == 2);
  // empty grid value
  CHECK(run_cli({"sweep", trace_csv, data_path("iran_event.json"), "--starts",
                 "", "--ends", "4", "-o", dir.file("s.csv")},
                dir)
            .exit_code == 2);
}
