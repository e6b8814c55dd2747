#include "gridinertia/simulate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <fmt/format.h>

#include "gridinertia/estimate.hpp"
#include "trace_grid.hpp"

namespace gridinertia {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Deterministic standard-normal stream (Box-Muller over mt19937_64).
// std::normal_distribution is implementation-defined, which would break
// bit-reproducibility of traces across standard libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = kTwoPi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  // Uniform on (0, 1], keeping log() finite.
  double uniform01() {
    return (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

template <class State>
void axpy(State& y, double a, const State& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

template <class State, class Deriv>
State rk4_step(double t, double h, const State& y, const Deriv& f) {
  const State k1 = f(t, y);
  State y2 = y;
  axpy(y2, 0.5 * h, k1);
  const State k2 = f(t + 0.5 * h, y2);
  State y3 = y;
  axpy(y3, 0.5 * h, k2);
  const State k3 = f(t + 0.5 * h, y3);
  State y4 = y;
  axpy(y4, h, k3);
  const State k4 = f(t + h, y4);
  State out = y;
  const double w = h / 6.0;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

struct StepGrid {
  long n_steps = 0;
  long event_step = 0;                 // first step index at/after the event
  std::vector<long> step_of_sample;    // integration step per output sample
};

StepGrid make_step_grid(double duration, double step, double output_dt,
                        double event_time) {
  StepGrid g;
  g.n_steps = std::lround(std::ceil(duration / step - 1e-9));
  g.event_step = std::lround(std::ceil(event_time / step - 1e-6));
  const long n_out = std::lround(std::floor(duration / output_dt + 1e-9));
  g.step_of_sample.reserve(static_cast<std::size_t>(n_out) + 1);
  for (long j = 0; j <= n_out; ++j) {
    const long idx =
        std::lround(static_cast<double>(j) * output_dt / step);
    g.step_of_sample.push_back(std::min(idx, g.n_steps));
  }
  return g;
}

double rating_weighted_inertia(const SystemSpec& system,
                               const DisturbanceScenario& scenario) {
  std::unordered_set<std::string> excluded;
  if (scenario.tripped_generator) {
    if (!system.find_generator(*scenario.tripped_generator))
      throw Error(ErrorCode::InvalidParameter,
                  fmt::format("tripped generator '{}' is not in the system",
                              *scenario.tripped_generator));
    excluded.insert(*scenario.tripped_generator);
  }
  return ground_truth_inertia(system.generators, excluded,
                              system.power_factor);
}

void require_duration_past_event(const SimConfig& config,
                                 const DisturbanceScenario& scenario) {
  if (!(config.duration > scenario.event_time))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("duration {} s must exceed event_time {} s",
                            config.duration, scenario.event_time));
}

struct Machine {
  std::string id;
  double h_const = 0.0;    // s
  double mva = 0.0;        // MVA
  double p_mech_mw = 0.0;  // MW
  double e = 0.0;          // pu
  double x = 0.0;          // pu on system base
  double delta0 = 0.0;     // rad
};

struct BusState {
  double v = 1.0;
  double theta = 0.0;
};

// Newton on active/reactive balance at the common bus; 2 unknowns (V, theta).
void solve_bus(BusState& bus, const std::vector<Machine>& machines,
               const std::vector<bool>& active,
               const double* deltas, double p_load_pu, double q_load_pu) {
  for (int iter = 0; iter < 50; ++iter) {
    double p = 0.0, q = 0.0;
    double dp_dv = 0.0, dp_dth = 0.0, dq_dv = 0.0, dq_dth = 0.0;
    for (std::size_t i = 0; i < machines.size(); ++i) {
      if (!active[i]) continue;
      const double a = machines[i].e / machines[i].x;
      const double s = std::sin(deltas[i] - bus.theta);
      const double c = std::cos(deltas[i] - bus.theta);
      p += a * bus.v * s;
      q += a * bus.v * c - bus.v * bus.v / machines[i].x;
      dp_dv += a * s;
      dp_dth += -a * bus.v * c;
      dq_dv += a * c - 2.0 * bus.v / machines[i].x;
      dq_dth += a * bus.v * s;
    }
    const double f1 = p - p_load_pu;
    const double f2 = q - q_load_pu;
    if (std::max(std::abs(f1), std::abs(f2)) < 1e-10) return;
    const double det = dp_dv * dq_dth - dp_dth * dq_dv;
    if (!(std::abs(det) > 1e-14)) break;
    bus.v -= (f1 * dq_dth - dp_dth * f2) / det;
    bus.theta -= (dp_dv * f2 - f1 * dq_dv) / det;
    if (!(bus.v > 1e-3) || !std::isfinite(bus.v) ||
        !std::isfinite(bus.theta))
      break;
  }
  throw Error(
      ErrorCode::NetworkSolveDiverged,
      fmt::format("bus solve did not reach 1e-10 in 50 iterations "
                  "(V = {}, theta = {} rad)",
                  bus.v, bus.theta));
}

// Pre-event equilibrium with the bus angle as reference: rotor angles from
// the power-angle relation at the current voltage, voltage from a scalar
// Newton on the reactive balance.
std::vector<double> solve_equilibrium(const std::vector<Machine>& machines,
                                      double s_base, double q_load_pu,
                                      BusState& bus) {
  std::vector<double> deltas(machines.size());
  for (std::size_t i = 0; i < machines.size(); ++i)
    deltas[i] = machines[i].delta0;
  bus.v = 1.0;
  bus.theta = 0.0;

  for (int iter = 0; iter < 200; ++iter) {
    for (std::size_t i = 0; i < machines.size(); ++i) {
      const double p_pu = machines[i].p_mech_mw / s_base;
      const double s = p_pu * machines[i].x / (machines[i].e * bus.v);
      if (!(std::abs(s) <= 1.0))
        throw Error(ErrorCode::NetworkSolveDiverged,
                    fmt::format("no equilibrium: power angle infeasible for "
                                "generator '{}' at V = {} pu",
                                machines[i].id, bus.v));
      deltas[i] = std::asin(s);
    }
    double q = 0.0, dq_dv = 0.0;
    for (std::size_t i = 0; i < machines.size(); ++i) {
      const double a = machines[i].e / machines[i].x;
      const double c = std::cos(deltas[i]);
      q += a * bus.v * c - bus.v * bus.v / machines[i].x;
      dq_dv += a * c - 2.0 * bus.v / machines[i].x;
    }
    const double g = q - q_load_pu;
    if (std::abs(g) < 1e-12 * std::max(1.0, std::abs(q_load_pu)))
      return deltas;
    if (!(std::abs(dq_dv) > 1e-14)) break;
    bus.v -= g / dq_dv;
    if (!(bus.v > 0.05 && bus.v < 3.0)) break;
  }
  throw Error(ErrorCode::NetworkSolveDiverged,
              "pre-event equilibrium solve did not converge");
}

}  // namespace

void GovernorModel::validate() const {
  if (!enabled) return;
  if (!(droop_r > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("governor droop_r must be > 0, got {}", droop_r));
  if (!(time_constant > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("governor time_constant must be > 0, got {}",
                            time_constant));
  if (!(activation_delay >= 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("governor activation_delay must be >= 0, got {}",
                            activation_delay));
}

void ArtifactModel::validate() const {
  if (!(backswing_decay_tau > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("backswing_decay_tau must be > 0, got {}",
                            backswing_decay_tau));
  if (!(noise_sigma >= 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("noise_sigma must be >= 0, got {}", noise_sigma));
  if (!std::isfinite(backswing_amplitude) ||
      !std::isfinite(backswing_osc_freq) || !std::isfinite(initial_uptick_hz))
    throw Error(ErrorCode::ValidationError,
                "artifact amplitudes must be finite");
}

void SimConfig::validate() const {
  if (!(integration_step > 0.0) || !(integration_step <= output_dt))
    throw Error(ErrorCode::ValidationError,
                fmt::format("need 0 < integration_step <= output_dt, got "
                            "step = {} s, output_dt = {} s",
                            integration_step, output_dt));
  if (!(duration > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("duration must be > 0, got {}", duration));
  governor.validate();
  artifacts.validate();
}

FrequencyTrace simulate_aggregate(const SystemSpec& system,
                                  const DisturbanceScenario& scenario,
                                  const SimConfig& config) {
  system.validate();
  scenario.validate();
  config.validate();
  require_duration_past_event(config, scenario);

  const double f_n = system.f_nominal;
  const double h_total = rating_weighted_inertia(system, scenario);
  const double dp = per_unit_imbalance(scenario, system.power_factor);
  const GovernorModel& gov = config.governor;
  const double damping = system.load_damping;
  const double t_event = scenario.event_time;
  const double step = config.integration_step;
  const StepGrid grid =
      make_step_grid(config.duration, step, config.output_dt, t_event);

  // The event switches at a step boundary so the whole RK4 step sees one
  // consistent source term.
  bool post_event = false;
  const auto deriv = [&](double t, const std::array<double, 2>& y) {
    const double f = y[0];
    const double p_gov = gov.enabled ? y[1] : 0.0;
    double dp_net = 0.0;
    if (post_event)
      dp_net = -dp + p_gov + damping * (f_n - f) / f_n;
    std::array<double, 2> d{f_n * dp_net / (2.0 * h_total), 0.0};
    if (gov.enabled) {
      const double target = t >= t_event + gov.activation_delay
                                ? (f_n - f) / (f_n * gov.droop_r)
                                : 0.0;
      d[1] = (target - p_gov) / gov.time_constant;
    }
    return d;
  };

  std::array<double, 2> y{f_n, 0.0};
  std::vector<double> samples;
  samples.reserve(grid.step_of_sample.size());
  std::size_t next_out = 0;
  for (long k = 0; k <= grid.n_steps; ++k) {
    while (next_out < grid.step_of_sample.size() &&
           grid.step_of_sample[next_out] == k) {
      samples.push_back(y[0]);
      ++next_out;
    }
    if (k == grid.n_steps) break;
    post_event = k >= grid.event_step;
    y = rk4_step(static_cast<double>(k) * step, step, y, deriv);
  }

  FrequencyTrace trace;
  trace.channel_id = "coi";
  trace.t_start = 0.0;
  trace.dt = config.output_dt;
  trace.samples = std::move(samples);
  return inject_artifacts(trace, config.artifacts, t_event);
}

MultiMachineOutput simulate_multimachine(const SystemSpec& system,
                                         const DisturbanceScenario& scenario,
                                         const SimConfig& config) {
  system.validate();
  scenario.validate();
  config.validate();
  require_duration_past_event(config, scenario);

  const std::size_t n = system.generators.size();
  std::vector<Machine> machines(n);
  for (std::size_t i = 0; i < n; ++i) {
    const GeneratorSpec& g = system.generators[i];
    machines[i] = Machine{g.id,        g.h_const,
                          g.rated_mva(system.power_factor),
                          g.p_mech,    g.e_internal,
                          g.x_reactance, g.delta0};
  }

  std::optional<std::size_t> tripped;
  if (scenario.tripped_generator) {
    for (std::size_t i = 0; i < n; ++i)
      if (machines[i].id == *scenario.tripped_generator) tripped = i;
    if (!tripped)
      throw Error(ErrorCode::InvalidParameter,
                  fmt::format("tripped generator '{}' is not in the system",
                              *scenario.tripped_generator));
    if (n == 1)
      throw Error(ErrorCode::InvalidParameter,
                  "at least one generator must survive the trip");
  }

  // The star model starts from equilibrium: the constant-power load must be
  // covered by the mechanical setpoints.
  double p_m_sum = 0.0;
  for (const auto& m : machines) p_m_sum += m.p_mech_mw;
  if (std::abs(p_m_sum - system.load_mw) >
      1e-6 * std::max(1.0, system.load_mw))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("pre-event imbalance: mechanical power totals {} "
                            "MW against a {} MW load",
                            p_m_sum, system.load_mw));

  const double f_n = system.f_nominal;
  const double s_base = system.s_base;
  const double damping = system.load_damping;
  const GovernorModel& gov = config.governor;
  const double t_event = scenario.event_time;
  const double step = config.integration_step;
  const double p_load0 = system.load_mw / s_base;
  const double q_load = system.load_mw *
                        std::tan(std::acos(system.power_factor)) / s_base;

  BusState bus;
  const std::vector<double> delta_eq =
      solve_equilibrium(machines, s_base, q_load, bus);

  // State layout: [delta_0..n-1, f_0..n-1, pgov_0..n-1].
  std::vector<double> y(3 * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = delta_eq[i];
    y[n + i] = f_n;
  }

  std::vector<bool> active(n, true);
  const std::vector<double> coi_w = [&] {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i)
      w[i] = machines[i].h_const * machines[i].mva;
    return w;
  }();

  const auto deriv = [&](double t, const std::vector<double>& s) {
    std::vector<double> d(3 * n, 0.0);
    double wsum = 0.0, fw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      wsum += coi_w[i];
      fw += coi_w[i] * s[n + i];
    }
    const double f_coi = fw / wsum;
    const double p_load = p_load0 + damping * (f_coi - f_n) / f_n;
    solve_bus(bus, machines, active, s.data(), p_load, q_load);
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      const Machine& m = machines[i];
      const double p_e_mw =
          m.e / m.x * bus.v * std::sin(s[i] - bus.theta) * s_base;
      const double p_gov_mw = gov.enabled ? s[2 * n + i] * m.mva : 0.0;
      d[i] = kTwoPi * (s[n + i] - f_n);
      d[n + i] = f_n * (m.p_mech_mw + p_gov_mw - p_e_mw) /
                 (2.0 * m.h_const * m.mva);
      if (gov.enabled) {
        const double target = t >= t_event + gov.activation_delay
                                  ? (f_n - s[n + i]) / (f_n * gov.droop_r)
                                  : 0.0;
        d[2 * n + i] = (target - s[2 * n + i]) / gov.time_constant;
      }
    }
    return d;
  };

  const StepGrid grid =
      make_step_grid(config.duration, step, config.output_dt, t_event);

  std::vector<std::vector<double>> channel_samples(n);
  bool lost_synchronism = false;
  std::size_t next_out = 0;
  for (long k = 0; k <= grid.n_steps; ++k) {
    if (tripped && k >= grid.event_step && active[*tripped])
      active[*tripped] = false;

    while (next_out < grid.step_of_sample.size() &&
           grid.step_of_sample[next_out] == k) {
      for (std::size_t i = 0; i < n; ++i)
        if (!tripped || i != *tripped) channel_samples[i].push_back(y[n + i]);
      ++next_out;
    }
    if (k == grid.n_steps) break;

    y = rk4_step(static_cast<double>(k) * step, step, y, deriv);

    double wsum = 0.0, dw = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      wsum += coi_w[i];
      dw += coi_w[i] * y[i];
    }
    const double delta_coi = dw / wsum;
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && std::abs(y[i] - delta_coi) > std::numbers::pi)
        lost_synchronism = true;
  }

  MultiMachineOutput out;
  out.lost_synchronism = lost_synchronism;
  for (std::size_t i = 0; i < n; ++i) {
    if (tripped && i == *tripped) continue;
    FrequencyTrace trace;
    trace.channel_id = machines[i].id;
    trace.t_start = 0.0;
    trace.dt = config.output_dt;
    trace.samples = std::move(channel_samples[i]);
    out.traces.push_back(
        inject_artifacts(trace, config.artifacts, t_event));
  }
  return out;
}

FrequencyTrace inject_artifacts(const FrequencyTrace& trace,
                                const ArtifactModel& artifacts,
                                double event_time) {
  trace.validate();
  artifacts.validate();
  FrequencyTrace out = trace;

  // Contamination lives on [event, event + 1): decaying uptick plus a
  // damped oscillation.
  if (artifacts.initial_uptick_hz != 0.0 ||
      artifacts.backswing_amplitude != 0.0) {
    const auto n = static_cast<std::ptrdiff_t>(out.samples.size());
    const std::ptrdiff_t k_begin =
        std::clamp<std::ptrdiff_t>(detail::index_at_or_after(out, event_time),
                                   0, n);
    const std::ptrdiff_t k_end = std::clamp<std::ptrdiff_t>(
        detail::index_at_or_after(out, event_time + 1.0), 0, n);
    for (std::ptrdiff_t k = k_begin; k < k_end; ++k) {
      const double tau =
          std::max(out.time_at(static_cast<std::size_t>(k)) - event_time, 0.0);
      const double envelope = std::exp(-tau / artifacts.backswing_decay_tau);
      out.samples[static_cast<std::size_t>(k)] +=
          envelope *
          (artifacts.initial_uptick_hz +
           artifacts.backswing_amplitude *
               std::sin(kTwoPi * artifacts.backswing_osc_freq * tau));
    }
  }

  if (artifacts.noise_sigma > 0.0) {
    GaussianSource noise(artifacts.rng_seed ^ fnv1a64(trace.channel_id));
    for (double& f : out.samples) f += artifacts.noise_sigma * noise.next();
  }
  return out;
}

}  // namespace gridinertia
