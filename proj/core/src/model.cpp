#include "gridinertia/model.hpp"

#include <cmath>
#include <unordered_set>

#include <fmt/format.h>

namespace gridinertia {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::DegenerateBase: return "DegenerateBase";
    case ErrorCode::DegenerateSlope: return "DegenerateSlope";
    case ErrorCode::TraceGridMismatch: return "TraceGridMismatch";
    case ErrorCode::WeightMissing: return "WeightMissing";
    case ErrorCode::WindowTooSparse: return "WindowTooSparse";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::NetworkSolveDiverged: return "NetworkSolveDiverged";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::GridError: return "GridError";
    case ErrorCode::ValueError: return "ValueError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateBase:
    case ErrorCode::DegenerateSlope:
    case ErrorCode::NetworkSolveDiverged:
      return true;
    default:
      return false;
  }
}

const char* to_string(BaseConvention convention) {
  return convention == BaseConvention::PreEventTotal ? "pre_event_total"
                                                     : "post_event_total";
}

double GeneratorSpec::rated_mva(double power_factor) const {
  if (s_rated) return *s_rated;
  if (power_factor <= 0.0 || power_factor > 1.0) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("power_factor {} outside (0, 1]", power_factor));
  }
  return p_mech / power_factor;
}

void GeneratorSpec::validate() const {
  if (id.empty())
    throw Error(ErrorCode::ValidationError, "generator id must be non-empty");
  if (!(h_const > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("generator {}: h_const must be > 0, got {}", id, h_const));
  if (s_rated && !(*s_rated > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("generator {}: s_rated must be > 0, got {}", id, *s_rated));
  if (!(p_mech >= 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("generator {}: p_mech must be >= 0, got {}", id, p_mech));
  if (!(e_internal > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("generator {}: e_internal must be > 0, got {}", id, e_internal));
  if (!(x_reactance > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("generator {}: x_reactance must be > 0, got {}", id, x_reactance));
  if (!std::isfinite(delta0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("generator {}: delta0 must be finite", id));
}

void DisturbanceScenario::validate() const {
  if (!std::isfinite(event_time))
    throw Error(ErrorCode::ValidationError, "event_time must be finite");
  if (!(loss_mw >= 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("loss_mw must be >= 0, got {}", loss_mw));
  if (!(pre_event_load_mw > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("pre_event_load_mw must be > 0, got {}", pre_event_load_mw));
  if (base_convention == BaseConvention::PostEventTotal &&
      !(loss_mw < pre_event_load_mw))
    throw Error(ErrorCode::ValidationError,
                fmt::format("post_event_total base requires loss_mw ({}) < "
                            "pre_event_load_mw ({})",
                            loss_mw, pre_event_load_mw));
}

const GeneratorSpec* SystemSpec::find_generator(const std::string& id) const {
  for (const auto& g : generators) {
    if (g.id == id) return &g;
  }
  return nullptr;
}

void SystemSpec::validate() const {
  if (!(f_nominal > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("f_nominal must be > 0, got {}", f_nominal));
  if (!(s_base > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("s_base must be > 0, got {}", s_base));
  if (!(power_factor > 0.0 && power_factor <= 1.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("power_factor must be in (0, 1], got {}", power_factor));
  if (generators.empty())
    throw Error(ErrorCode::ValidationError, "generators must be non-empty");
  if (!(load_mw >= 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("load_mw must be >= 0, got {}", load_mw));
  if (!(load_damping >= 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("load_damping must be >= 0, got {}", load_damping));
  std::unordered_set<std::string> seen;
  for (const auto& g : generators) {
    g.validate();
    if (!seen.insert(g.id).second)
      throw Error(ErrorCode::ValidationError,
                  fmt::format("duplicate generator id '{}'", g.id));
  }
}

double FrequencyTrace::t_last() const {
  if (samples.empty())
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("trace '{}' is empty", channel_id));
  return time_at(samples.size() - 1);
}

void FrequencyTrace::validate() const {
  if (!(dt > 0.0))
    throw Error(ErrorCode::ValidationError,
                fmt::format("trace '{}': dt must be > 0, got {}", channel_id, dt));
  if (samples.empty())
    throw Error(ErrorCode::ValidationError,
                fmt::format("trace '{}': at least one sample required", channel_id));
  if (!std::isfinite(t_start))
    throw Error(ErrorCode::ValidationError,
                fmt::format("trace '{}': t_start must be finite", channel_id));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!std::isfinite(samples[k]))
      throw Error(ErrorCode::ValidationError,
                  fmt::format("trace '{}': sample {} is not finite", channel_id, k));
  }
}

double inertia_constant_from_physical(double j_moment, double omega_rated,
                                      double s_rated) {
  if (!(j_moment >= 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("j_moment must be >= 0, got {}", j_moment));
  if (!(omega_rated > 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("omega_rated must be > 0, got {}", omega_rated));
  if (!(s_rated > 0.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("s_rated must be > 0, got {}", s_rated));
  return 0.5 * j_moment * omega_rated * omega_rated / s_rated;
}

double per_unit_imbalance(const DisturbanceScenario& scenario,
                          double power_factor) {
  if (!(power_factor > 0.0 && power_factor <= 1.0))
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("power_factor must be in (0, 1], got {}", power_factor));
  const double base_mw =
      scenario.base_convention == BaseConvention::PreEventTotal
          ? scenario.pre_event_load_mw
          : scenario.pre_event_load_mw - scenario.loss_mw;
  if (!(base_mw > 0.0))
    throw Error(ErrorCode::DegenerateBase,
                fmt::format("MW base is {} ({} convention)", base_mw,
                            to_string(scenario.base_convention)));
  return scenario.loss_mw / (base_mw / power_factor);
}

}  // namespace gridinertia
