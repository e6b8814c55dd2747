#pragma once

#include <cstdint>
#include <vector>

#include "gridinertia/model.hpp"

namespace gridinertia {

/// First-order droop governor acting on per-unit frequency deviation:
/// the lagged output tracks (f_n - f) / (f_n * droop_r) once the activation
/// delay after the event has passed.
struct GovernorModel {
  bool enabled = false;
  double droop_r = 0.05;          ///< pu frequency per pu power
  double time_constant = 6.0;     ///< s
  double activation_delay = 0.0;  ///< s after the event

  void validate() const;
};

/// Phenomenological measurement artifacts: a decaying uptick plus a damped
/// oscillation confined to the first second after the event, and Gaussian
/// per-sample noise everywhere. Deterministic per seed and channel.
struct ArtifactModel {
  double backswing_amplitude = 0.0;  ///< Hz
  double backswing_decay_tau = 0.3;  ///< s
  double backswing_osc_freq = 1.5;   ///< Hz
  double initial_uptick_hz = 0.0;    ///< Hz
  double noise_sigma = 0.0;          ///< Hz
  std::uint64_t rng_seed = 42;

  void validate() const;
};

struct SimConfig {
  double integration_step = 0.001;  ///< s
  double duration = 0.0;            ///< s, must exceed the event time
  double output_dt = 0.040;         ///< s
  GovernorModel governor;
  ArtifactModel artifacts;

  void validate() const;
};

/// Single-mass swing model of the whole system: integrates
/// 2 H_T / f_n * df/dt = dP(t) with H_T the rating-weighted inertia of the
/// surviving generators, then resamples at output_dt and applies artifacts.
/// dP is zero before the event; afterwards it is the (negative) per-unit
/// imbalance plus governor and load-damping contributions.
FrequencyTrace simulate_aggregate(const SystemSpec& system,
                                  const DisturbanceScenario& scenario,
                                  const SimConfig& config);

struct MultiMachineOutput {
  std::vector<FrequencyTrace> traces;  ///< one per surviving generator
  /// Some rotor angle drifted more than pi away from the inertia-weighted
  /// mean angle at any step.
  bool lost_synchronism = false;
};

/// Classical multi-machine model on a star network: every generator couples
/// through its reactance to one common bus serving the constant-power load.
/// Each step solves the bus voltage phasor from active/reactive balance and
/// advances rotor angle and frequency per machine with fixed-step RK4. The
/// tripped generator leaves the network at the event time.
MultiMachineOutput simulate_multimachine(const SystemSpec& system,
                                         const DisturbanceScenario& scenario,
                                         const SimConfig& config);

/// Adds the post-event contamination and per-sample noise to a trace.
/// Deterministic: the noise stream is seeded from rng_seed and channel id.
FrequencyTrace inject_artifacts(const FrequencyTrace& trace,
                                const ArtifactModel& artifacts,
                                double event_time);

}  // namespace gridinertia
