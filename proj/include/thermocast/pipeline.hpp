#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermocast/dataset.hpp"
#include "thermocast/windows.hpp"

namespace thermocast::data {

// Standardizers fit on source training rows only.
struct Scalers {
  features::Scaler weather;  // the five weather columns
  features::Scaler context;  // area, occupancy
  features::Scaler target;   // indoor temperature, used by the loss and scaled metrics

  nlohmann::json to_json() const;
  static Scalers from_json(const nlohmann::json& j);
  bool operator==(const Scalers&) const = default;
};

struct PreparedTarget {
  std::string name;
  windows::DomainSplit split;
};

struct PreparedData {
  Scalers scalers;
  std::string source_name;
  windows::WindowSet source;
  std::vector<PreparedTarget> targets;

  const PreparedTarget& target(const std::string& name) const;
};

// Unscaled hourly frame of one domain.
features::FeatureFrame raw_frame(const DomainData& domain);

// Hourly frames, scalers fit on the source rows up to the last
// training-window anchor (the trailing validation_fraction of source windows
// is held out), then scaled windows and purged chronological target splits.
PreparedData prepare(const DatasetBundle& bundle, double validation_fraction);

// Scaled frame of a domain with previously fit scalers.
features::FeatureFrame scaled_frame(const DomainData& domain, const Scalers& scalers);

}  // namespace thermocast::data
