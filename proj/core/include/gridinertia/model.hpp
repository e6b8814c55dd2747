#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "gridinertia/error.hpp"

namespace gridinertia {

/// One synchronous machine in the classical model: a constant internal EMF
/// behind a coupling reactance, with inertia given on the machine's own
/// rating.
struct GeneratorSpec {
  std::string id;
  double h_const = 0.0;           ///< inertia constant, s
  std::optional<double> s_rated;  ///< apparent-power rating, MVA
  double p_mech = 0.0;            ///< mechanical power setpoint, MW
  double e_internal = 1.05;       ///< internal voltage magnitude, pu
  double x_reactance = 0.2;       ///< reactance to common bus, pu on system base
  double delta0 = 0.0;            ///< rotor angle seed for the equilibrium solve, rad

  /// Rating in MVA; derived from p_mech at the given power factor when no
  /// explicit rating is set.
  double rated_mva(double power_factor) const;

  void validate() const;
};

/// Which MW total the event imbalance is normalized against.
enum class BaseConvention { PreEventTotal, PostEventTotal };

const char* to_string(BaseConvention convention);

struct DisturbanceScenario {
  double event_time = 0.0;        ///< s
  double loss_mw = 0.0;           ///< generation lost at the event, MW
  double pre_event_load_mw = 0.0; ///< MW
  BaseConvention base_convention = BaseConvention::PreEventTotal;
  std::optional<std::string> tripped_generator;

  void validate() const;
};

struct SystemSpec {
  double f_nominal = 0.0;    ///< Hz
  double s_base = 0.0;       ///< system base power, MVA
  double power_factor = 0.9;
  std::vector<GeneratorSpec> generators;
  double load_mw = 0.0;      ///< total constant-power load, MW
  double load_damping = 0.0; ///< D, pu power per pu frequency

  const GeneratorSpec* find_generator(const std::string& id) const;
  void validate() const;
};

/// Uniformly sampled frequency time series for one channel (one PMU, one
/// generator, or the system mean). Sample k sits at t_start + k*dt.
struct FrequencyTrace {
  std::string channel_id;
  double t_start = 0.0;  ///< s
  double dt = 0.0;       ///< s
  std::vector<double> samples;  ///< Hz

  std::size_t size() const { return samples.size(); }
  double time_at(std::size_t k) const {
    return t_start + static_cast<double>(k) * dt;
  }
  /// Time of the last sample. Requires a non-empty trace.
  double t_last() const;

  void validate() const;
};

struct EstimateResult {
  double rocof = 0.0;         ///< fitted slope, Hz/s, signed
  double h_estimate = 0.0;    ///< s
  double window_start = 0.0;  ///< absolute time, s
  double window_end = 0.0;    ///< absolute time, s
  std::size_t n_samples_used = 0;
  double r_squared = 0.0;
  double rmse = 0.0;          ///< Hz
};

/// Inertia constant in seconds from physical machine data: kinetic energy
/// stored at rated speed, normalized by the apparent-power rating.
///
/// H = (1/2) J w_r^2 / S_r
double inertia_constant_from_physical(double j_moment, double omega_rated,
                                      double s_rated);

/// Per-unit power imbalance of the event: lost MW over the scenario's MVA
/// base. The MW base is the pre-event total or the post-event remainder,
/// per the scenario's convention, converted to MVA with the power factor.
double per_unit_imbalance(const DisturbanceScenario& scenario,
                          double power_factor);

}  // namespace gridinertia
