#pragma once

#include <map>
#include <string>
#include <vector>

#include "gridinertia/estimate.hpp"
#include "gridinertia/model.hpp"
#include "gridinertia/simulate.hpp"

namespace gridinertia {

/// A set of frequency channels on one shared sampling grid.
struct PmuDataset {
  std::vector<FrequencyTrace> traces;
  std::string source_path;
  std::map<std::string, std::string> metadata;

  void validate() const;
};

/// Reads a PMU CSV: header `t_s,ch_<id>[,ch_<id>...]`, then one row per
/// sample with the time in seconds followed by one frequency in Hz per
/// channel. The time column must be a uniform grid (1e-9 relative).
PmuDataset load_pmu_csv(const std::string& path);

/// Writes the dataset in the same format. Frequencies carry 9 significant
/// digits; times round-trip exactly.
void write_pmu_csv(const PmuDataset& dataset, const std::string& path);

struct ScenarioBundle {
  SystemSpec system;
  DisturbanceScenario scenario;
  SimConfig sim;
  WindowSpec window;
};

/// Reads a scenario file (JSON with sections `system`, `scenario`, `sim`,
/// `window`). Unknown keys are rejected; optional fields take the type
/// defaults; everything is validated before returning.
ScenarioBundle load_scenario(const std::string& path);

/// Same schema, from an in-memory document. `origin` labels error messages.
ScenarioBundle parse_scenario_json(const std::string& text,
                                   const std::string& origin);

void write_scenario_json(const ScenarioBundle& bundle, const std::string& path);

/// One-row result table: window_start,window_end,rocof,h_estimate,
/// r_squared,rmse,n_samples. Floats carry 9 significant digits.
void write_results_csv(const EstimateResult& result, const std::string& path);

/// Sweep table: window_start,window_end,status,h_estimate,relative_error,
/// one row per cell, ordered by (start, end).
void write_results_csv(const std::vector<SweepCell>& sweep,
                       const std::string& path);

}  // namespace gridinertia
