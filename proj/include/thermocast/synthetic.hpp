#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermocast/dataset.hpp"

namespace thermocast::data {

// Generator settings for one domain. Thermal rates are per hour.
struct DomainProfile {
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
  std::size_t n_buildings = 10;

  // Outdoor climate.
  double mean_temp_c = 25.0;
  double diurnal_amplitude_c = 5.0;
  double drift_c = 1.0;           // linear change over the simulated period
  double anomaly_std_c = 0.8;     // day-to-day AR(1) anomaly
  double mean_humidity = 60.0;
  double surface_pressure_hpa = 1010.0;
  double rain_probability = 0.05;  // per hour

  // Building physics, drawn uniformly per building.
  double alpha_min = 0.15;
  double alpha_max = 0.25;
  double beta_min = 0.8;  // °C per hour at full sun on an absorptivity-1 roof
  double beta_max = 1.2;
  double gain_per_100_occupants = 0.2;  // °C per hour while occupied
  std::array<double, 3> roof_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // light, medium, dark
  double ceiling_probability = 0.5;
  double occupancy_min = 20.0;
  double occupancy_max = 60.0;
  double area_min = 40.0;
  double area_max = 80.0;

  void validate() const;
  nlohmann::json to_json() const;
  static DomainProfile from_json(const nlohmann::json& j, const DomainProfile& defaults);
};

struct SynthConfig {
  std::uint64_t seed = 42;
  std::size_t days = 60;
  std::string start_date = "2023-06-01";
  std::size_t readings_per_hour = 6;
  double noise_std_c = 0.1;  // per sensor reading
  std::array<double, 3> absorptivity{0.3, 0.6, 0.9};
  double ceiling_factor = 0.6;
  DomainProfile source;
  std::vector<DomainProfile> targets;

  // Three domains: tanzania_synth (source), nigeria_synth and gambia_synth.
  static SynthConfig defaults();
  void validate() const;
  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static SynthConfig from_json(const nlohmann::json& j);
};

// One RC update of indoor temperature over a step of the given length.
double rc_step(double t_in, double t_out, double alpha_eff, double beta, double sin_altitude,
               double absorptivity, double extra_gain = 0.0);

// Deterministic for a fixed cfg.seed.
DatasetBundle generate_synthetic(const SynthConfig& cfg);

}  // namespace thermocast::data
