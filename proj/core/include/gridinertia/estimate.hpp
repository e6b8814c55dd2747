#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "gridinertia/model.hpp"

namespace gridinertia {

/// Post-event fit window, in seconds after the event time. Endpoints are
/// inclusive on the sampling grid.
struct WindowSpec {
  double offset_start = 1.0;
  double offset_end = 4.0;

  void validate() const;
};

/// How multi-channel frequency collapses into one system-frequency series.
struct CoiMethod {
  enum class Kind { PlainAverage, InertiaWeighted };

  Kind kind = Kind::PlainAverage;
  /// channel id -> positive weight; every channel needs one when
  /// InertiaWeighted. Weights are normalized before use.
  std::vector<std::pair<std::string, double>> weights;

  static CoiMethod plain_average() { return {}; }
  static CoiMethod inertia_weighted(
      std::vector<std::pair<std::string, double>> w) {
    return {Kind::InertiaWeighted, std::move(w)};
  }
};

/// Default guard against division by a vanishing frequency slope, Hz/s.
inline constexpr double kDefaultRocofFloor = 1e-6;

/// Sample-wise weighted mean of the input channels on their shared grid.
/// The center-of-inertia frequency when weights are the machines' inertia
/// contributions; the plain mean approximates it from PMU channels.
FrequencyTrace coi_frequency(const std::vector<FrequencyTrace>& traces,
                             const CoiMethod& method);

/// Sub-trace of samples with event+offset_start <= t <= event+offset_end.
FrequencyTrace extract_window(const FrequencyTrace& trace, double event_time,
                              const WindowSpec& window);

struct RocofFit {
  double slope = 0.0;      ///< Hz/s, signed
  double r_squared = 0.0;  ///< in [0, 1]
  double rmse = 0.0;       ///< Hz
};

/// Ordinary least squares of frequency on time over the whole trace.
RocofFit fit_rocof(const FrequencyTrace& trace);

/// System inertia constant from a fitted slope:
/// H = f_n * dp_pu / (2 |rocof|). The magnitude keeps H positive for both
/// loss (falling frequency) and surplus events.
double estimate_system_inertia(double rocof, double dp_pu, double f_nominal,
                               double rocof_floor = kDefaultRocofFloor);

struct GeneratorEstimate {
  double h_estimate = 0.0;
  std::size_t n_pairs_used = 0;
  /// Set when every per-pair estimate collapsed to zero (no imbalance seen).
  bool quality_warning = false;
};

/// Per-generator inertia from adjacent-sample frequency differences inside
/// the window: H_k = f_n * dp_pu[k] / (2 |ROCOF_k|), aggregated by median.
GeneratorEstimate estimate_generator_inertia(
    const FrequencyTrace& freq, const std::vector<double>& dp_pu_series,
    double f_nominal, const WindowSpec& window, double event_time,
    double rocof_floor = kDefaultRocofFloor);

/// Rating-weighted mean of the generators' inertia constants, excluding the
/// given ids. Ratings fall back to p_mech / power_factor when not set.
double ground_truth_inertia(const std::vector<GeneratorSpec>& generators,
                            const std::unordered_set<std::string>& excluded,
                            double power_factor);

/// Full pipeline: collapse channels, cut the window, fit the slope, convert
/// to an inertia constant using the scenario's per-unit imbalance.
EstimateResult estimate_from_traces(const std::vector<FrequencyTrace>& traces,
                                    const DisturbanceScenario& scenario,
                                    const SystemSpec& system,
                                    const WindowSpec& window,
                                    const CoiMethod& method);

struct SweepCell {
  WindowSpec window;
  std::optional<EstimateResult> result;  ///< set on success
  std::optional<ErrorCode> error;        ///< set on failure
  std::optional<double> relative_error;  ///< vs the reference H, when known
};

/// estimate_from_traces over every (start, end) pair with start < end,
/// ordered by (start, end). Per-cell failures land in the cell, not as
/// exceptions.
std::vector<SweepCell> sweep_windows(
    const std::vector<FrequencyTrace>& traces,
    const DisturbanceScenario& scenario, const SystemSpec& system,
    const std::vector<double>& start_grid, const std::vector<double>& end_grid,
    std::optional<double> reference_h,
    const CoiMethod& method = CoiMethod::plain_average());

}  // namespace gridinertia
