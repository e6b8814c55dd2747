#include "gridinertia/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include <fmt/format.h>

#include "trace_grid.hpp"

namespace gridinertia {

namespace {

// Inclusive index range [lo, hi] of samples inside [t_lo, t_hi]; throws
// WindowOutOfRange when the requested span leaves the trace.
std::pair<std::ptrdiff_t, std::ptrdiff_t> window_index_range(
    const FrequencyTrace& trace, double t_lo, double t_hi) {
  const double snap = detail::kGridSnapEps * trace.dt;
  if (t_lo < trace.t_start - snap || t_hi > trace.t_last() + snap) {
    throw Error(ErrorCode::WindowOutOfRange,
                fmt::format("window [{}, {}] s outside trace span [{}, {}] s",
                            t_lo, t_hi, trace.t_start, trace.t_last()));
  }
  auto lo = std::max<std::ptrdiff_t>(detail::index_at_or_after(trace, t_lo), 0);
  auto hi = std::min<std::ptrdiff_t>(
      detail::index_at_or_before(trace, t_hi),
      static_cast<std::ptrdiff_t>(trace.size()) - 1);
  return {lo, hi};
}

double median_of(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

void WindowSpec::validate() const {
  if (!(offset_start >= 0.0) || !(offset_start < offset_end)) {
    throw Error(ErrorCode::ValidationError,
                fmt::format("window offsets must satisfy 0 <= start < end, "
                            "got ({}, {})",
                            offset_start, offset_end));
  }
}

FrequencyTrace coi_frequency(const std::vector<FrequencyTrace>& traces,
                             const CoiMethod& method) {
  if (traces.empty())
    throw Error(ErrorCode::InvalidParameter, "at least one trace required");
  for (const auto& t : traces) t.validate();

  const FrequencyTrace& ref = traces.front();
  std::unordered_set<std::string> ids;
  for (const auto& t : traces) {
    if (!ids.insert(t.channel_id).second)
      throw Error(ErrorCode::InvalidParameter,
                  fmt::format("duplicate channel id '{}'", t.channel_id));
    const bool grid_ok =
        t.samples.size() == ref.samples.size() &&
        std::abs(t.dt - ref.dt) <= 1e-9 * ref.dt &&
        std::abs(t.t_start - ref.t_start) <=
            1e-9 * std::max(1.0, std::abs(ref.t_start));
    if (!grid_ok)
      throw Error(ErrorCode::TraceGridMismatch,
                  fmt::format("channel '{}' grid (t0={}, dt={}, n={}) differs "
                              "from channel '{}' (t0={}, dt={}, n={})",
                              t.channel_id, t.t_start, t.dt, t.samples.size(),
                              ref.channel_id, ref.t_start, ref.dt,
                              ref.samples.size()));
  }

  std::vector<double> weights(traces.size(), 1.0);
  if (method.kind == CoiMethod::Kind::InertiaWeighted) {
    std::unordered_map<std::string, double> by_id;
    for (const auto& [id, w] : method.weights) {
      if (!(w > 0.0))
        throw Error(ErrorCode::ValidationError,
                    fmt::format("weight for channel '{}' must be > 0, got {}",
                                id, w));
      if (!by_id.emplace(id, w).second)
        throw Error(ErrorCode::InvalidParameter,
                    fmt::format("duplicate weight entry for channel '{}'", id));
    }
    for (std::size_t i = 0; i < traces.size(); ++i) {
      auto it = by_id.find(traces[i].channel_id);
      if (it == by_id.end())
        throw Error(ErrorCode::WeightMissing,
                    fmt::format("no weight for channel '{}'",
                                traces[i].channel_id));
      weights[i] = it->second;
    }
  }

  // Normalize up front so any common scale factor cancels exactly.
  double wsum = 0.0;
  for (double w : weights) wsum += w;
  for (double& w : weights) w /= wsum;

  FrequencyTrace out;
  out.channel_id = "coi";
  out.t_start = ref.t_start;
  out.dt = ref.dt;
  out.samples.resize(ref.samples.size());
  for (std::size_t k = 0; k < ref.samples.size(); ++k) {
    double acc = 0.0;
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < traces.size(); ++i) {
      const double f = traces[i].samples[k];
      acc += weights[i] * f;
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
    // The mean lies in [lo, hi]; clamping only removes float overshoot.
    out.samples[k] = std::clamp(acc, lo, hi);
  }
  return out;
}

FrequencyTrace extract_window(const FrequencyTrace& trace, double event_time,
                              const WindowSpec& window) {
  trace.validate();
  window.validate();
  const double t_lo = event_time + window.offset_start;
  const double t_hi = event_time + window.offset_end;
  const auto [lo, hi] = window_index_range(trace, t_lo, t_hi);
  const std::ptrdiff_t count = hi - lo + 1;
  if (count < 2)
    throw Error(ErrorCode::WindowTooSparse,
                fmt::format("{} sample(s) in window [{}, {}] s; need >= 2",
                            std::max<std::ptrdiff_t>(count, 0), t_lo, t_hi));
  FrequencyTrace out;
  out.channel_id = trace.channel_id;
  out.dt = trace.dt;
  out.t_start = trace.time_at(static_cast<std::size_t>(lo));
  out.samples.assign(trace.samples.begin() + lo, trace.samples.begin() + hi + 1);
  return out;
}

RocofFit fit_rocof(const FrequencyTrace& trace) {
  trace.validate();
  const std::size_t n = trace.samples.size();
  if (n < 2)
    throw Error(ErrorCode::WindowTooSparse,
                fmt::format("need >= 2 samples to fit a slope, got {}", n));

  // Centered least squares; times come from index arithmetic, which keeps
  // the sums well conditioned for any t_start.
  const double k_bar = 0.5 * static_cast<double>(n - 1);
  double f_bar = 0.0;
  for (double f : trace.samples) f_bar += f;
  f_bar /= static_cast<double>(n);

  double s_tt = 0.0;
  double s_tf = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dt_k = (static_cast<double>(k) - k_bar) * trace.dt;
    s_tt += dt_k * dt_k;
    s_tf += dt_k * (trace.samples[k] - f_bar);
  }
  const double slope = s_tf / s_tt;

  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double df = trace.samples[k] - f_bar;
    const double resid = df - slope * (static_cast<double>(k) - k_bar) * trace.dt;
    ss_res += resid * resid;
    ss_tot += df * df;
  }

  RocofFit fit;
  fit.slope = slope;
  fit.r_squared =
      ss_tot > 0.0 ? std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0) : 1.0;
  fit.rmse = std::sqrt(ss_res / static_cast<double>(n));
  return fit;
}

double estimate_system_inertia(double rocof, double dp_pu, double f_nominal,
                               double rocof_floor) {
  if (!(f_nominal > 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("f_nominal must be > 0, got {}", f_nominal));
  if (!(dp_pu > 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("dp_pu must be > 0, got {}", dp_pu));
  if (!(rocof_floor >= 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("rocof_floor must be >= 0, got {}", rocof_floor));
  if (!(std::abs(rocof) > rocof_floor))
    throw Error(ErrorCode::DegenerateSlope,
                fmt::format("|rocof| = {} Hz/s is at or below the floor {}",
                            std::abs(rocof), rocof_floor));
  return f_nominal * dp_pu / (2.0 * std::abs(rocof));
}

GeneratorEstimate estimate_generator_inertia(
    const FrequencyTrace& freq, const std::vector<double>& dp_pu_series,
    double f_nominal, const WindowSpec& window, double event_time,
    double rocof_floor) {
  freq.validate();
  window.validate();
  if (!(f_nominal > 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("f_nominal must be > 0, got {}", f_nominal));
  if (dp_pu_series.size() != freq.samples.size())
    throw Error(ErrorCode::TraceGridMismatch,
                fmt::format("dp_pu series has {} values for {} samples",
                            dp_pu_series.size(), freq.samples.size()));

  const double t_lo = event_time + window.offset_start;
  const double t_hi = event_time + window.offset_end;
  const auto [lo, hi] = window_index_range(freq, t_lo, t_hi);
  if (hi - lo + 1 < 2)
    throw Error(ErrorCode::WindowTooSparse,
                fmt::format("window [{}, {}] s holds fewer than 2 samples",
                            t_lo, t_hi));

  std::vector<double> h_values;
  h_values.reserve(static_cast<std::size_t>(hi - lo));
  for (std::ptrdiff_t k = lo; k < hi; ++k) {
    const double rocof_k =
        (freq.samples[k + 1] - freq.samples[k]) / freq.dt;
    if (std::abs(rocof_k) > rocof_floor)
      h_values.push_back(f_nominal * dp_pu_series[k] /
                         (2.0 * std::abs(rocof_k)));
  }
  if (h_values.empty())
    throw Error(ErrorCode::WindowTooSparse,
                "no adjacent sample pair with a usable slope in the window");

  GeneratorEstimate est;
  est.n_pairs_used = h_values.size();
  est.h_estimate = median_of(std::move(h_values));
  est.quality_warning = est.h_estimate == 0.0;
  return est;
}

double ground_truth_inertia(const std::vector<GeneratorSpec>& generators,
                            const std::unordered_set<std::string>& excluded,
                            double power_factor) {
  if (generators.empty())
    throw Error(ErrorCode::InvalidParameter, "no generators given");

  std::vector<double> h;
  std::vector<double> mva;
  for (const auto& g : generators) {
    g.validate();
    if (excluded.contains(g.id)) continue;
    h.push_back(g.h_const);
    mva.push_back(g.rated_mva(power_factor));
  }
  if (h.empty())
    throw Error(ErrorCode::InvalidParameter, "every generator is excluded");

  double total = 0.0;
  for (double m : mva) total += m;
  if (!(total > 0.0))
    throw Error(ErrorCode::InvalidParameter, "total rating is zero");

  double acc = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (std::size_t i = 0; i < h.size(); ++i) {
    acc += (mva[i] / total) * h[i];
    lo = std::min(lo, h[i]);
    hi = std::max(hi, h[i]);
  }
  // The weighted mean lies in [lo, hi]; clamp off float overshoot.
  return std::clamp(acc, lo, hi);
}

EstimateResult estimate_from_traces(const std::vector<FrequencyTrace>& traces,
                                    const DisturbanceScenario& scenario,
                                    const SystemSpec& system,
                                    const WindowSpec& window,
                                    const CoiMethod& method) {
  scenario.validate();
  system.validate();
  window.validate();
  const double dp_pu = per_unit_imbalance(scenario, system.power_factor);
  const FrequencyTrace coi = coi_frequency(traces, method);
  const FrequencyTrace win = extract_window(coi, scenario.event_time, window);
  const RocofFit fit = fit_rocof(win);

  EstimateResult result;
  result.rocof = fit.slope;
  result.h_estimate = estimate_system_inertia(fit.slope, dp_pu, system.f_nominal);
  result.window_start = scenario.event_time + window.offset_start;
  result.window_end = scenario.event_time + window.offset_end;
  result.n_samples_used = win.samples.size();
  result.r_squared = fit.r_squared;
  result.rmse = fit.rmse;
  return result;
}

std::vector<SweepCell> sweep_windows(
    const std::vector<FrequencyTrace>& traces,
    const DisturbanceScenario& scenario, const SystemSpec& system,
    const std::vector<double>& start_grid, const std::vector<double>& end_grid,
    std::optional<double> reference_h, const CoiMethod& method) {
  if (start_grid.empty() || end_grid.empty())
    throw Error(ErrorCode::InvalidParameter, "window grids must be non-empty");
  if (reference_h && !(*reference_h > 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("reference_h must be > 0, got {}", *reference_h));

  std::vector<WindowSpec> windows;
  for (double s : start_grid)
    for (double e : end_grid)
      if (s < e) windows.push_back(WindowSpec{s, e});
  std::stable_sort(windows.begin(), windows.end(),
                   [](const WindowSpec& a, const WindowSpec& b) {
                     return a.offset_start != b.offset_start
                                ? a.offset_start < b.offset_start
                                : a.offset_end < b.offset_end;
                   });

  std::vector<SweepCell> cells;
  cells.reserve(windows.size());
  for (const auto& w : windows) {
    SweepCell cell;
    cell.window = w;
    try {
      const EstimateResult r =
          estimate_from_traces(traces, scenario, system, w, method);
      cell.result = r;
      if (reference_h)
        cell.relative_error =
            std::abs(r.h_estimate - *reference_h) / *reference_h;
    } catch (const Error& e) {
      cell.error = e.code();
    }
    cells.push_back(std::move(cell));
  }
  return cells;
}

}  // namespace gridinertia
