#include "gridinertia/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <unordered_set>

#include <fmt/format.h>
#include <json.hpp>

namespace gridinertia {

namespace {

using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::IoError, fmt::format("cannot open '{}'", path));
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad())
    throw Error(ErrorCode::IoError, fmt::format("failed reading '{}'", path));
  return std::move(buf).str();
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorCode::IoError,
                fmt::format("cannot open '{}' for writing", path));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t pos = 0;
  while (true) {
    const std::size_t comma = line.find(',', pos);
    if (comma == std::string_view::npos) {
      fields.push_back(trim(line.substr(pos)));
      break;
    }
    fields.push_back(trim(line.substr(pos, comma - pos)));
    pos = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view token, const std::string& path,
                    std::size_t line, std::size_t column) {
  double value = 0.0;
  const auto* begin = token.data();
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end)
    throw Error(ErrorCode::ParseError,
                fmt::format("{}:{}: column {}: '{}' is not a number", path,
                            line, column, std::string(token)));
  if (!std::isfinite(value))
    throw Error(ErrorCode::ValueError,
                fmt::format("{}:{}: column {}: non-finite value '{}'", path,
                            line, column, std::string(token)));
  return value;
}

// Shortest representation that parses back to the same double.
std::string format_roundtrip(double v) { return fmt::format("{}", v); }

std::string format_sig9(double v) { return fmt::format("{:.9g}", v); }

// --- scenario JSON helpers ------------------------------------------------

[[noreturn]] void schema_error(const std::string& path, const std::string& why) {
  throw Error(ErrorCode::SchemaError, fmt::format("{}: {}", path, why));
}

void reject_unknown_keys(const json& obj, const std::string& path,
                         std::initializer_list<const char*> allowed) {
  for (const auto& [key, value] : obj.items()) {
    if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
          return key == a;
        }) == allowed.end())
      schema_error(path + "." + key, "unknown key");
  }
}

const json& require_member(const json& obj, const std::string& path,
                           const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "missing required field");
  return *it;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) schema_error(path, "expected a number");
  return v.get<double>();
}

double require_number(const json& obj, const std::string& path, const char* key) {
  return as_number(require_member(obj, path, key), path + "." + key);
}

double number_or(const json& obj, const std::string& path, const char* key,
                 double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, path + "." + key);
}

bool bool_or(const json& obj, const std::string& path, const char* key,
             bool fallback) {
  auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_boolean()) schema_error(path + "." + key, "expected a boolean");
  return it->get<bool>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) schema_error(path, "expected a string");
  return v.get<std::string>();
}

void allow_notes(const json& obj, const std::string& path) {
  auto it = obj.find("notes");
  if (it != obj.end() && !it->is_string())
    schema_error(path + ".notes", "expected a string");
}

GeneratorSpec parse_generator(const json& obj, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"id", "h_s", "p_mech_mw", "s_rated_mva",
                       "e_internal_pu", "x_pu", "delta0_rad", "notes"});
  allow_notes(obj, path);
  GeneratorSpec g;
  g.id = as_string(require_member(obj, path, "id"), path + ".id");
  g.h_const = require_number(obj, path, "h_s");
  g.p_mech = require_number(obj, path, "p_mech_mw");
  if (obj.contains("s_rated_mva"))
    g.s_rated = as_number(obj["s_rated_mva"], path + ".s_rated_mva");
  g.e_internal = number_or(obj, path, "e_internal_pu", 1.05);
  g.x_reactance = number_or(obj, path, "x_pu", 0.2);
  g.delta0 = number_or(obj, path, "delta0_rad", 0.0);
  return g;
}

SystemSpec parse_system(const json& obj, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"f_nominal_hz", "s_base_mva", "power_factor", "load_mw",
                       "load_damping", "generators", "notes"});
  allow_notes(obj, path);
  SystemSpec sys;
  sys.f_nominal = require_number(obj, path, "f_nominal_hz");
  sys.s_base = require_number(obj, path, "s_base_mva");
  sys.power_factor = require_number(obj, path, "power_factor");
  sys.load_mw = require_number(obj, path, "load_mw");
  sys.load_damping = number_or(obj, path, "load_damping", 0.0);
  const json& gens = require_member(obj, path, "generators");
  if (!gens.is_array()) schema_error(path + ".generators", "expected an array");
  for (std::size_t i = 0; i < gens.size(); ++i)
    sys.generators.push_back(
        parse_generator(gens[i], fmt::format("{}.generators[{}]", path, i)));
  return sys;
}

DisturbanceScenario parse_disturbance(const json& obj, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"event_time_s", "loss_mw", "pre_event_load_mw",
                       "base_convention", "tripped_generator", "notes"});
  allow_notes(obj, path);
  DisturbanceScenario sc;
  sc.event_time = require_number(obj, path, "event_time_s");
  sc.loss_mw = require_number(obj, path, "loss_mw");
  sc.pre_event_load_mw = require_number(obj, path, "pre_event_load_mw");
  const std::string conv = as_string(
      require_member(obj, path, "base_convention"), path + ".base_convention");
  if (conv == "pre_event_total")
    sc.base_convention = BaseConvention::PreEventTotal;
  else if (conv == "post_event_total")
    sc.base_convention = BaseConvention::PostEventTotal;
  else
    schema_error(path + ".base_convention",
                 fmt::format("expected 'pre_event_total' or "
                             "'post_event_total', got '{}'",
                             conv));
  if (obj.contains("tripped_generator"))
    sc.tripped_generator =
        as_string(obj["tripped_generator"], path + ".tripped_generator");
  return sc;
}

GovernorModel parse_governor(const json& obj, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"enabled", "droop_r", "time_constant_s",
                       "activation_delay_s", "notes"});
  allow_notes(obj, path);
  GovernorModel gov;
  gov.enabled = bool_or(obj, path, "enabled", false);
  gov.droop_r = number_or(obj, path, "droop_r", gov.droop_r);
  gov.time_constant = number_or(obj, path, "time_constant_s", gov.time_constant);
  gov.activation_delay =
      number_or(obj, path, "activation_delay_s", gov.activation_delay);
  return gov;
}

ArtifactModel parse_artifacts(const json& obj, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"backswing_amplitude_hz", "backswing_decay_tau_s",
                       "backswing_osc_freq_hz", "initial_uptick_hz",
                       "noise_sigma_hz", "rng_seed", "notes"});
  allow_notes(obj, path);
  ArtifactModel art;
  art.backswing_amplitude =
      number_or(obj, path, "backswing_amplitude_hz", art.backswing_amplitude);
  art.backswing_decay_tau =
      number_or(obj, path, "backswing_decay_tau_s", art.backswing_decay_tau);
  art.backswing_osc_freq =
      number_or(obj, path, "backswing_osc_freq_hz", art.backswing_osc_freq);
  art.initial_uptick_hz =
      number_or(obj, path, "initial_uptick_hz", art.initial_uptick_hz);
  art.noise_sigma = number_or(obj, path, "noise_sigma_hz", art.noise_sigma);
  if (obj.contains("rng_seed")) {
    const json& seed = obj["rng_seed"];
    if (!seed.is_number_integer())
      schema_error(path + ".rng_seed", "expected an integer");
    art.rng_seed = seed.get<std::uint64_t>();
  }
  return art;
}

SimConfig parse_sim(const json& obj, const std::string& path,
                    double event_time) {
  SimConfig sim;
  sim.duration = event_time + 12.0;  // default: 12 s of post-event data
  if (obj.is_null()) return sim;
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path,
                      {"integration_step_s", "duration_s", "output_dt_s",
                       "governor", "artifacts", "notes"});
  allow_notes(obj, path);
  sim.integration_step =
      number_or(obj, path, "integration_step_s", sim.integration_step);
  sim.duration = number_or(obj, path, "duration_s", sim.duration);
  sim.output_dt = number_or(obj, path, "output_dt_s", sim.output_dt);
  if (obj.contains("governor"))
    sim.governor = parse_governor(obj["governor"], path + ".governor");
  if (obj.contains("artifacts"))
    sim.artifacts = parse_artifacts(obj["artifacts"], path + ".artifacts");
  return sim;
}

WindowSpec parse_window(const json& obj, const std::string& path) {
  WindowSpec w;
  if (obj.is_null()) return w;
  if (!obj.is_object()) schema_error(path, "expected an object");
  reject_unknown_keys(obj, path, {"offset_start_s", "offset_end_s", "notes"});
  allow_notes(obj, path);
  w.offset_start = number_or(obj, path, "offset_start_s", w.offset_start);
  w.offset_end = number_or(obj, path, "offset_end_s", w.offset_end);
  return w;
}

}  // namespace

void PmuDataset::validate() const {
  if (traces.empty())
    throw Error(ErrorCode::ValidationError, "dataset has no traces");
  std::unordered_set<std::string> ids;
  const FrequencyTrace& ref = traces.front();
  for (const auto& t : traces) {
    t.validate();
    if (!ids.insert(t.channel_id).second)
      throw Error(ErrorCode::ValidationError,
                  fmt::format("duplicate channel id '{}'", t.channel_id));
    if (t.samples.size() != ref.samples.size() ||
        std::abs(t.dt - ref.dt) > 1e-9 * ref.dt ||
        std::abs(t.t_start - ref.t_start) >
            1e-9 * std::max(1.0, std::abs(ref.t_start)))
      throw Error(ErrorCode::ValidationError,
                  fmt::format("channel '{}' is not on the shared grid",
                              t.channel_id));
  }
}

PmuDataset load_pmu_csv(const std::string& path) {
  const std::string text = read_file(path);
  if (text.empty())
    throw Error(ErrorCode::ParseError, fmt::format("{}: empty file", path));

  std::vector<std::string_view> lines;
  {
    std::string_view rest = text;
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      if (nl == std::string_view::npos) {
        lines.push_back(rest);
        break;
      }
      lines.push_back(rest.substr(0, nl));
      rest.remove_prefix(nl + 1);
    }
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
  }
  if (lines.empty())
    throw Error(ErrorCode::ParseError, fmt::format("{}: empty file", path));

  const auto header = split_csv_line(lines[0]);
  if (header.size() < 2 || header[0] != "t_s")
    throw Error(ErrorCode::ParseError,
                fmt::format("{}:1: header must be 't_s,ch_<id>[,ch_<id>...]'",
                            path));
  std::vector<std::string> channels;
  std::unordered_set<std::string> seen;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string_view col = header[c];
    if (col.size() <= 3 || col.substr(0, 3) != "ch_")
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:1: column {} must be named 'ch_<id>', got "
                              "'{}'",
                              path, c + 1, std::string(col)));
    std::string id(col.substr(3));
    if (!seen.insert(id).second)
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:1: duplicate channel id '{}'", path, id));
    channels.push_back(std::move(id));
  }

  const std::size_t n_rows = lines.size() - 1;
  if (n_rows < 2)
    throw Error(ErrorCode::ParseError,
                fmt::format("{}: need at least 2 data rows to establish the "
                            "sampling grid, got {}",
                            path, n_rows));

  std::vector<double> times(n_rows);
  std::vector<std::vector<double>> values(channels.size(),
                                          std::vector<double>(n_rows));
  for (std::size_t r = 0; r < n_rows; ++r) {
    const std::size_t line_no = r + 2;
    const auto fields = split_csv_line(lines[r + 1]);
    if (fields.size() != channels.size() + 1)
      throw Error(ErrorCode::ParseError,
                  fmt::format("{}:{}: expected {} fields, got {}", path,
                              line_no, channels.size() + 1, fields.size()));
    times[r] = parse_double(fields[0], path, line_no, 1);
    for (std::size_t c = 0; c < channels.size(); ++c)
      values[c][r] = parse_double(fields[c + 1], path, line_no, c + 2);
  }

  const double dt_first = times[1] - times[0];
  if (!(dt_first > 0.0))
    throw Error(ErrorCode::GridError,
                fmt::format("{}: time column must be strictly increasing "
                            "(rows 2-3 step {} s)",
                            path, dt_first));
  for (std::size_t r = 1; r + 1 < times.size(); ++r) {
    const double d = times[r + 1] - times[r];
    if (std::abs(d - dt_first) > 1e-9 * dt_first)
      throw Error(ErrorCode::GridError,
                  fmt::format("{}:{}: non-uniform step {} s (expected {} s)",
                              path, r + 3, d, dt_first));
  }
  const double dt = (times.back() - times.front()) /
                    static_cast<double>(n_rows - 1);

  PmuDataset dataset;
  dataset.source_path = path;
  for (std::size_t c = 0; c < channels.size(); ++c) {
    FrequencyTrace trace;
    trace.channel_id = channels[c];
    trace.t_start = times.front();
    trace.dt = dt;
    trace.samples = std::move(values[c]);
    dataset.traces.push_back(std::move(trace));
  }
  dataset.validate();
  return dataset;
}

void write_pmu_csv(const PmuDataset& dataset, const std::string& path) {
  dataset.validate();
  auto out = open_for_write(path);
  std::string header = "t_s";
  for (const auto& t : dataset.traces) header += ",ch_" + t.channel_id;
  out << header << '\n';
  const FrequencyTrace& ref = dataset.traces.front();
  for (std::size_t k = 0; k < ref.samples.size(); ++k) {
    std::string row = format_roundtrip(ref.time_at(k));
    for (const auto& t : dataset.traces) {
      row += ',';
      row += format_sig9(t.samples[k]);
    }
    out << row << '\n';
  }
  if (!out)
    throw Error(ErrorCode::IoError, fmt::format("failed writing '{}'", path));
}

ScenarioBundle parse_scenario_json(const std::string& text,
                                   const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, fmt::format("{}: {}", origin, e.what()));
  }
  if (!doc.is_object())
    schema_error(origin, "top level must be an object");
  reject_unknown_keys(doc, origin, {"system", "scenario", "sim", "window", "notes"});
  allow_notes(doc, origin);

  ScenarioBundle bundle;
  bundle.system =
      parse_system(require_member(doc, origin, "system"), origin + ".system");
  bundle.scenario = parse_disturbance(
      require_member(doc, origin, "scenario"), origin + ".scenario");
  bundle.sim = parse_sim(doc.contains("sim") ? doc["sim"] : json(),
                         origin + ".sim", bundle.scenario.event_time);
  bundle.window = parse_window(doc.contains("window") ? doc["window"] : json(),
                               origin + ".window");

  bundle.system.validate();
  bundle.scenario.validate();
  bundle.sim.validate();
  bundle.window.validate();
  if (bundle.scenario.tripped_generator &&
      !bundle.system.find_generator(*bundle.scenario.tripped_generator))
    throw Error(ErrorCode::ValidationError,
                fmt::format("scenario.tripped_generator '{}' does not match "
                            "any generator id",
                            *bundle.scenario.tripped_generator));
  if (!(bundle.sim.duration > bundle.scenario.event_time))
    throw Error(ErrorCode::ValidationError,
                fmt::format("sim.duration_s ({}) must exceed "
                            "scenario.event_time_s ({})",
                            bundle.sim.duration, bundle.scenario.event_time));
  return bundle;
}

ScenarioBundle load_scenario(const std::string& path) {
  return parse_scenario_json(read_file(path), path);
}

void write_scenario_json(const ScenarioBundle& bundle, const std::string& path) {
  json doc;
  json& sys = doc["system"];
  sys["f_nominal_hz"] = bundle.system.f_nominal;
  sys["s_base_mva"] = bundle.system.s_base;
  sys["power_factor"] = bundle.system.power_factor;
  sys["load_mw"] = bundle.system.load_mw;
  sys["load_damping"] = bundle.system.load_damping;
  sys["generators"] = json::array();
  for (const auto& g : bundle.system.generators) {
    json gen;
    gen["id"] = g.id;
    gen["h_s"] = g.h_const;
    gen["p_mech_mw"] = g.p_mech;
    if (g.s_rated) gen["s_rated_mva"] = *g.s_rated;
    gen["e_internal_pu"] = g.e_internal;
    gen["x_pu"] = g.x_reactance;
    gen["delta0_rad"] = g.delta0;
    sys["generators"].push_back(std::move(gen));
  }
  json& sc = doc["scenario"];
  sc["event_time_s"] = bundle.scenario.event_time;
  sc["loss_mw"] = bundle.scenario.loss_mw;
  sc["pre_event_load_mw"] = bundle.scenario.pre_event_load_mw;
  sc["base_convention"] = to_string(bundle.scenario.base_convention);
  if (bundle.scenario.tripped_generator)
    sc["tripped_generator"] = *bundle.scenario.tripped_generator;
  json& sim = doc["sim"];
  sim["integration_step_s"] = bundle.sim.integration_step;
  sim["duration_s"] = bundle.sim.duration;
  sim["output_dt_s"] = bundle.sim.output_dt;
  json& gov = sim["governor"];
  gov["enabled"] = bundle.sim.governor.enabled;
  gov["droop_r"] = bundle.sim.governor.droop_r;
  gov["time_constant_s"] = bundle.sim.governor.time_constant;
  gov["activation_delay_s"] = bundle.sim.governor.activation_delay;
  json& art = sim["artifacts"];
  art["backswing_amplitude_hz"] = bundle.sim.artifacts.backswing_amplitude;
  art["backswing_decay_tau_s"] = bundle.sim.artifacts.backswing_decay_tau;
  art["backswing_osc_freq_hz"] = bundle.sim.artifacts.backswing_osc_freq;
  art["initial_uptick_hz"] = bundle.sim.artifacts.initial_uptick_hz;
  art["noise_sigma_hz"] = bundle.sim.artifacts.noise_sigma;
  art["rng_seed"] = bundle.sim.artifacts.rng_seed;
  json& win = doc["window"];
  win["offset_start_s"] = bundle.window.offset_start;
  win["offset_end_s"] = bundle.window.offset_end;

  auto out = open_for_write(path);
  out << doc.dump(2) << '\n';
  if (!out)
    throw Error(ErrorCode::IoError, fmt::format("failed writing '{}'", path));
}

void write_results_csv(const EstimateResult& result, const std::string& path) {
  auto out = open_for_write(path);
  out << "window_start,window_end,rocof,h_estimate,r_squared,rmse,n_samples\n";
  out << fmt::format("{},{},{},{},{},{},{}\n", format_sig9(result.window_start),
                     format_sig9(result.window_end), format_sig9(result.rocof),
                     format_sig9(result.h_estimate),
                     format_sig9(result.r_squared), format_sig9(result.rmse),
                     result.n_samples_used);
  if (!out)
    throw Error(ErrorCode::IoError, fmt::format("failed writing '{}'", path));
}

void write_results_csv(const std::vector<SweepCell>& sweep,
                       const std::string& path) {
  auto out = open_for_write(path);
  out << "window_start,window_end,status,h_estimate,relative_error\n";
  for (const auto& cell : sweep) {
    const std::string status = cell.error ? to_string(*cell.error) : "ok";
    const std::string h =
        cell.result ? format_sig9(cell.result->h_estimate) : "";
    const std::string rel =
        cell.relative_error ? format_sig9(*cell.relative_error) : "";
    out << fmt::format("{},{},{},{},{}\n",
                       format_sig9(cell.window.offset_start),
                       format_sig9(cell.window.offset_end), status, h, rel);
  }
  if (!out)
    throw Error(ErrorCode::IoError, fmt::format("failed writing '{}'", path));
}

}  // namespace gridinertia
