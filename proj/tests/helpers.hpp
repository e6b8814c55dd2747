#pragma once

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "gridinertia/model.hpp"

namespace testutil {

inline gridinertia::FrequencyTrace make_trace(std::string id, double t_start,
                                              double dt,
                                              std::vector<double> samples) {
  gridinertia::FrequencyTrace t;
  t.channel_id = std::move(id);
  t.t_start = t_start;
  t.dt = dt;
  t.samples = std::move(samples);
  return t;
}

/// f(t) = f0 + slope * (t - t_start), n samples.
inline gridinertia::FrequencyTrace affine_trace(std::string id, double t_start,
                                                double dt, std::size_t n,
                                                double f0, double slope) {
  std::vector<double> samples(n);
  for (std::size_t k = 0; k < n; ++k)
    samples[k] = f0 + slope * (static_cast<double>(k) * dt);
  return make_trace(std::move(id), t_start, dt, std::move(samples));
}

/// The IEEE 39-bus fleet (inertia constants and dispatched MW), built in
/// code so tests do not depend on the shipped data files.
inline std::vector<gridinertia::GeneratorSpec> ieee39_fleet() {
  struct Row {
    const char* id;
    double h;
    double mw;
  };
  static constexpr Row rows[] = {
      {"G30", 4.2, 270.0},  {"G31", 4.329, 585.0}, {"G32", 4.475, 450.0},
      {"G33", 3.575, 632.0}, {"G34", 4.433, 608.0}, {"G35", 4.35, 1000.0},
      {"G36", 3.771, 560.0}, {"G37", 3.471, 160.0}, {"G38", 3.45, 245.0},
      {"G39", 5.0, 650.0},
  };
  std::vector<gridinertia::GeneratorSpec> fleet;
  for (const Row& r : rows) {
    gridinertia::GeneratorSpec g;
    g.id = r.id;
    g.h_const = r.h;
    g.p_mech = r.mw;
    g.e_internal = 1.05;
    g.x_reactance = 0.2;
    fleet.push_back(std::move(g));
  }
  return fleet;
}

inline gridinertia::SystemSpec ieee39_system() {
  gridinertia::SystemSpec sys;
  sys.f_nominal = 60.0;
  sys.s_base = 1000.0;
  sys.power_factor = 0.9;
  sys.generators = ieee39_fleet();
  sys.load_mw = 5160.0;
  return sys;
}

inline gridinertia::DisturbanceScenario ieee39_trip_g37() {
  gridinertia::DisturbanceScenario sc;
  sc.event_time = 1.0;
  sc.loss_mw = 160.0;
  sc.pre_event_load_mw = 5160.0;
  sc.base_convention = gridinertia::BaseConvention::PreEventTotal;
  sc.tripped_generator = "G37";
  return sc;
}

/// Unique scratch directory, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng(std::random_device{}());
    const auto base = std::filesystem::temp_directory_path();
    for (int attempt = 0; attempt < 64; ++attempt) {
      auto candidate =
          base / ("gridinertia_test_" + std::to_string(rng()));
      std::error_code ec;
      if (std::filesystem::create_directory(candidate, ec)) {
        path_ = std::move(candidate);
        return;
      }
    }
    std::fprintf(stderr, "cannot create temp dir\n");
    std::abort();
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return text;
}

}  // namespace testutil
