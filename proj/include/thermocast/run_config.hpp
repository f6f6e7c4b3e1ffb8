#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermocast/dataset.hpp"
#include "thermocast/synthetic.hpp"
#include "thermocast/train.hpp"

namespace thermocast {

struct WeatherApiConfig {
  // Backfill temperature, humidity and dew point from the archive API; CSV
  // values still win where both exist.
  bool enabled = false;
  std::string cache_dir;  // THERMOCAST_CACHE_DIR overrides
};

// Everything a command needs, as one JSON document.
struct RunConfig {
  std::uint64_t seed = 42;  // copied into synth.seed and train.seed
  std::string data_dir;     // bundle directory; empty generates synthetic data
  data::SynthConfig synth = data::SynthConfig::defaults();
  train::TrainConfig train;
  std::vector<std::string> targets;  // empty: every target in the bundle
  std::string variant = "full";
  std::string output_dir = "runs";
  std::size_t workers = 1;
  WeatherApiConfig weather_api;

  // Pushes `seed` into the component configs and validates.
  void resolve();
  nlohmann::json to_json() const;
  // Unknown keys are rejected at every level.
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig load(const std::filesystem::path& path);
};

// Reads or generates the bundle, backfills API weather when enabled, and keeps
// only the selected targets.
data::DatasetBundle load_bundle(const RunConfig& cfg);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace thermocast
