#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermocast/features.hpp"

namespace thermocast::data {

// Raw inputs of one domain. A domain shares a single hourly weather series.
struct DomainData {
  std::string name;
  std::vector<features::SensorRecord> sensors;
  std::vector<features::WeatherRecord> weather;
  std::vector<features::BuildingContext> contexts;

  bool operator==(const DomainData&) const = default;
};

struct DatasetBundle {
  DomainData source;
  std::vector<DomainData> targets;
  // Files, URLs or generator settings the bundle was built from.
  nlohmann::json provenance = nlohmann::json::object();

  const DomainData& target(const std::string& name) const;
  // Every building with sensor data has a context row, in every domain.
  void validate() const;
  bool operator==(const DatasetBundle&) const = default;
};

}  // namespace thermocast::data
