// Command-line front end: simulate disturbance scenarios, estimate the
// system inertia constant from PMU frequency CSVs, sweep fit windows, and
// print the rating-weighted ground truth. Every file-writing run leaves a
// <output>.manifest.json sidecar that records the exact invocation.

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "gridinertia/estimate.hpp"
#include "gridinertia/io.hpp"
#include "gridinertia/model.hpp"
#include "gridinertia/simulate.hpp"
#include "gridinertia/version.hpp"

namespace gi = gridinertia;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

std::string sig9(double v) { return fmt::format("{:.9g}", v); }

struct CommonOverrides {
  std::optional<double> window_start;
  std::optional<double> window_end;
  std::string coi = "average";
  std::optional<double> power_factor;
  std::string base;  // "", "pre", or "post"
  std::optional<double> f_nominal;

  void apply(gi::ScenarioBundle& bundle) const {
    if (window_start) bundle.window.offset_start = *window_start;
    if (window_end) bundle.window.offset_end = *window_end;
    if (power_factor) bundle.system.power_factor = *power_factor;
    if (f_nominal) bundle.system.f_nominal = *f_nominal;
    if (base == "pre")
      bundle.scenario.base_convention = gi::BaseConvention::PreEventTotal;
    else if (base == "post")
      bundle.scenario.base_convention = gi::BaseConvention::PostEventTotal;
  }

  gi::CoiMethod coi_method(const gi::SystemSpec& system) const {
    if (coi == "average") return gi::CoiMethod::plain_average();
    std::vector<std::pair<std::string, double>> weights;
    for (const auto& g : system.generators)
      weights.emplace_back(g.id,
                           g.h_const * g.rated_mva(system.power_factor));
    return gi::CoiMethod::inertia_weighted(std::move(weights));
  }
};

json manifest_skeleton(const std::string& command,
                       const std::vector<std::string>& argv) {
  json m;
  m["tool"] = "gridinertia";
  m["version"] = gi::kVersion;
  m["command"] = command;
  m["argv"] = argv;
  return m;
}

void write_manifest(const json& manifest, const std::string& output_path) {
  std::ofstream out(output_path + ".manifest.json", std::ios::binary);
  if (!out)
    throw gi::Error(gi::ErrorCode::IoError,
                    fmt::format("cannot write manifest for '{}'", output_path));
  out << manifest.dump(2) << '\n';
}

struct SimulateArgs {
  std::string scenario_path;
  std::string output_path;
  std::string model = "aggregate";
  std::optional<double> duration;
  std::optional<double> step;
  std::optional<double> output_dt;
  std::optional<std::uint64_t> seed;
};

int run_simulate(const SimulateArgs& args,
                 const std::vector<std::string>& argv) {
  gi::ScenarioBundle bundle = gi::load_scenario(args.scenario_path);
  if (args.duration) bundle.sim.duration = *args.duration;
  if (args.step) bundle.sim.integration_step = *args.step;
  if (args.output_dt) bundle.sim.output_dt = *args.output_dt;
  if (args.seed) bundle.sim.artifacts.rng_seed = *args.seed;

  gi::PmuDataset dataset;
  dataset.source_path = args.output_path;
  bool lost_synchronism = false;
  if (args.model == "aggregate") {
    dataset.traces.push_back(
        gi::simulate_aggregate(bundle.system, bundle.scenario, bundle.sim));
  } else {
    gi::MultiMachineOutput out =
        gi::simulate_multimachine(bundle.system, bundle.scenario, bundle.sim);
    lost_synchronism = out.lost_synchronism;
    dataset.traces = std::move(out.traces);
  }
  if (lost_synchronism) {
    dataset.metadata["lost_synchronism"] = "true";
    fmt::print(stderr, "warning: simulation reports loss of synchronism\n");
  }
  gi::write_pmu_csv(dataset, args.output_path);

  json manifest = manifest_skeleton("simulate", argv);
  manifest["inputs"] = {{"scenario", args.scenario_path}};
  manifest["outputs"] = {args.output_path};
  manifest["parameters"] = {
      {"model", args.model},
      {"integration_step_s", bundle.sim.integration_step},
      {"duration_s", bundle.sim.duration},
      {"output_dt_s", bundle.sim.output_dt},
      {"rng_seed", bundle.sim.artifacts.rng_seed},
      {"channels", dataset.traces.size()},
      {"lost_synchronism", lost_synchronism},
  };
  write_manifest(manifest, args.output_path);

  fmt::print("wrote {} channel(s), {} samples each, to {}\n",
             dataset.traces.size(), dataset.traces.front().samples.size(),
             args.output_path);
  return kExitOk;
}

struct EstimateArgs {
  std::string trace_path;
  std::string scenario_path;
  CommonOverrides common;
  std::string output_path;
  std::string plot_path;
};

int run_estimate(const EstimateArgs& args,
                 const std::vector<std::string>& argv) {
  gi::ScenarioBundle bundle = gi::load_scenario(args.scenario_path);
  args.common.apply(bundle);
  const gi::PmuDataset dataset = gi::load_pmu_csv(args.trace_path);
  const gi::CoiMethod method = args.common.coi_method(bundle.system);

  const gi::EstimateResult result = gi::estimate_from_traces(
      dataset.traces, bundle.scenario, bundle.system, bundle.window, method);

  fmt::print("h_estimate_s = {}\n", sig9(result.h_estimate));
  fmt::print("rocof_hz_per_s = {}\n", sig9(result.rocof));
  fmt::print("r_squared = {}\n", sig9(result.r_squared));
  fmt::print("rmse_hz = {}\n", sig9(result.rmse));
  fmt::print("window_s = [{}, {}]\n", sig9(result.window_start),
             sig9(result.window_end));
  fmt::print("n_samples = {}\n", result.n_samples_used);

  json manifest = manifest_skeleton("estimate", argv);
  manifest["inputs"] = {{"trace", args.trace_path},
                        {"scenario", args.scenario_path}};
  manifest["parameters"] = {
      {"window_start_s", bundle.window.offset_start},
      {"window_end_s", bundle.window.offset_end},
      {"coi", args.common.coi},
      {"power_factor", bundle.system.power_factor},
      {"base_convention", gi::to_string(bundle.scenario.base_convention)},
      {"f_nominal_hz", bundle.system.f_nominal},
  };
  json outputs = json::array();
  if (!args.output_path.empty()) {
    gi::write_results_csv(result, args.output_path);
    outputs.push_back(args.output_path);
  }
  if (!args.plot_path.empty()) {
    // The estimator's view of the trace, exactly: the collapsed channel on
    // the input grid, no resampling.
    gi::PmuDataset plot;
    plot.source_path = args.plot_path;
    plot.traces.push_back(gi::coi_frequency(dataset.traces, method));
    gi::write_pmu_csv(plot, args.plot_path);
    outputs.push_back(args.plot_path);
  }
  if (!outputs.empty()) {
    manifest["outputs"] = outputs;
    write_manifest(manifest, outputs.front().get<std::string>());
  }
  return kExitOk;
}

struct SweepArgs {
  std::string trace_path;
  std::string scenario_path;
  std::vector<double> starts;
  std::vector<double> ends;
  std::string output_path;
  std::optional<double> reference_h;
  CommonOverrides common;
};

int run_sweep(const SweepArgs& args, const std::vector<std::string>& argv) {
  gi::ScenarioBundle bundle = gi::load_scenario(args.scenario_path);
  args.common.apply(bundle);
  const gi::PmuDataset dataset = gi::load_pmu_csv(args.trace_path);
  const gi::CoiMethod method = args.common.coi_method(bundle.system);

  const std::vector<gi::SweepCell> cells =
      gi::sweep_windows(dataset.traces, bundle.scenario, bundle.system,
                        args.starts, args.ends, args.reference_h, method);
  gi::write_results_csv(cells, args.output_path);

  if (args.reference_h) {
    const gi::SweepCell* best = nullptr;
    for (const auto& cell : cells)
      if (cell.relative_error &&
          (!best || *cell.relative_error < *best->relative_error))
        best = &cell;
    if (best)
      fmt::print("best_window = [{}, {}]\nbest_h_estimate_s = {}\n"
                 "best_relative_error = {}\n",
                 sig9(best->window.offset_start),
                 sig9(best->window.offset_end),
                 sig9(best->result->h_estimate),
                 sig9(*best->relative_error));
    else
      fmt::print("best_window = none (no window produced an estimate)\n");
  }
  fmt::print("wrote {} sweep cell(s) to {}\n", cells.size(), args.output_path);

  json manifest = manifest_skeleton("sweep", argv);
  manifest["inputs"] = {{"trace", args.trace_path},
                        {"scenario", args.scenario_path}};
  manifest["outputs"] = {args.output_path};
  json params = {
      {"starts", args.starts},
      {"ends", args.ends},
      {"coi", args.common.coi},
      {"power_factor", bundle.system.power_factor},
      {"base_convention", gi::to_string(bundle.scenario.base_convention)},
      {"f_nominal_hz", bundle.system.f_nominal},
  };
  if (args.reference_h) params["reference_h_s"] = *args.reference_h;
  manifest["parameters"] = std::move(params);
  write_manifest(manifest, args.output_path);
  return kExitOk;
}

struct TruthArgs {
  std::string scenario_path;
  bool include_tripped = false;
  std::optional<double> power_factor;
};

int run_truth(const TruthArgs& args) {
  gi::ScenarioBundle bundle = gi::load_scenario(args.scenario_path);
  if (args.power_factor) bundle.system.power_factor = *args.power_factor;
  std::unordered_set<std::string> excluded;
  if (!args.include_tripped && bundle.scenario.tripped_generator)
    excluded.insert(*bundle.scenario.tripped_generator);
  const double h = gi::ground_truth_inertia(
      bundle.system.generators, excluded, bundle.system.power_factor);
  fmt::print("h_truth_s = {}\n", sig9(h));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Power grid inertia estimation from PMU frequency traces"};
  app.set_version_flag("--version", gi::kVersion);
  app.require_subcommand(1);

  std::vector<std::string> raw_args(argv + 1, argv + argc);

  SimulateArgs sim_args;
  CLI::App* sim = app.add_subcommand(
      "simulate", "Run a scenario and write simulated PMU frequency CSV");
  sim->add_option("scenario", sim_args.scenario_path, "Scenario JSON file")
      ->required();
  sim->add_option("-o,--output", sim_args.output_path, "Output trace CSV")
      ->required();
  sim->add_option("--model", sim_args.model, "Simulation model")
      ->check(CLI::IsMember({"aggregate", "multimachine"}))
      ->capture_default_str();
  sim->add_option("--duration", sim_args.duration, "Override duration, s");
  sim->add_option("--step", sim_args.step, "Override integration step, s");
  sim->add_option("--output-dt", sim_args.output_dt, "Override sample period, s");
  sim->add_option("--seed", sim_args.seed, "Override artifact RNG seed");

  EstimateArgs est_args;
  CLI::App* est = app.add_subcommand(
      "estimate", "Estimate the system inertia constant from a trace CSV");
  est->add_option("trace", est_args.trace_path, "PMU trace CSV")->required();
  est->add_option("scenario", est_args.scenario_path, "Scenario JSON file")
      ->required();
  est->add_option("-o,--output", est_args.output_path, "Results CSV");
  est->add_option("--emit-plot", est_args.plot_path,
                  "Write the fitted system-frequency series as CSV");

  SweepArgs sweep_args;
  CLI::App* sweep = app.add_subcommand(
      "sweep", "Estimate over a grid of fit windows and tabulate the errors");
  sweep->add_option("trace", sweep_args.trace_path, "PMU trace CSV")->required();
  sweep->add_option("scenario", sweep_args.scenario_path, "Scenario JSON file")
      ->required();
  sweep->add_option("--starts", sweep_args.starts,
                    "Window start offsets, s (comma separated)")
      ->required()
      ->delimiter(',');
  sweep->add_option("--ends", sweep_args.ends,
                    "Window end offsets, s (comma separated)")
      ->required()
      ->delimiter(',');
  sweep->add_option("-o,--output", sweep_args.output_path, "Sweep table CSV")
      ->required();
  sweep->add_option("--reference-h", sweep_args.reference_h,
                    "Reference inertia constant for relative errors, s");

  for (auto [cmd, common] : {std::pair{est, &est_args.common},
                             std::pair{sweep, &sweep_args.common}}) {
    cmd->add_option("--window-start", common->window_start,
                    "Window start offset after the event, s (default 1)");
    cmd->add_option("--window-end", common->window_end,
                    "Window end offset after the event, s (default 4)");
    cmd->add_option("--coi", common->coi, "Channel aggregation")
        ->check(CLI::IsMember({"average", "weighted"}))
        ->capture_default_str();
    cmd->add_option("--pf", common->power_factor, "Override power factor");
    cmd->add_option("--base", common->base,
                    "Override imbalance base convention")
        ->check(CLI::IsMember({"pre", "post"}));
    cmd->add_option("--fn", common->f_nominal, "Override nominal frequency, Hz");
  }
  // sweep uses the full-grid flags; a fixed window would be redundant
  sweep->get_option("--window-start")->group("");
  sweep->get_option("--window-end")->group("");

  TruthArgs truth_args;
  CLI::App* truth = app.add_subcommand(
      "truth", "Print the rating-weighted inertia constant of the fleet");
  truth->add_option("scenario", truth_args.scenario_path, "Scenario JSON file")
      ->required();
  truth->add_flag("--include-tripped", truth_args.include_tripped,
                  "Keep the tripped generator in the average");
  truth->add_option("--pf", truth_args.power_factor, "Override power factor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*sim) return run_simulate(sim_args, raw_args);
    if (*est) return run_estimate(est_args, raw_args);
    if (*sweep) return run_sweep(sweep_args, raw_args);
    if (*truth) return run_truth(truth_args);
  } catch (const gi::Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return gi::is_numerical(e.code()) ? kExitNumerical : kExitInput;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kExitInput;
  }
  return kExitInput;
}
