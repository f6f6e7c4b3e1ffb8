#include "thermocast/pipeline.hpp"

#include <cmath>

#include "thermocast/errors.hpp"

namespace thermocast::data {

nlohmann::json Scalers::to_json() const {
  return {{"weather", weather.to_json()}, {"context", context.to_json()}, {"target", target.to_json()}};
}

Scalers Scalers::from_json(const nlohmann::json& j) {
  try {
    return {features::Scaler::from_json(j.at("weather")), features::Scaler::from_json(j.at("context")),
            features::Scaler::from_json(j.at("target"))};
  } catch (const nlohmann::json::exception& e) {
    throw IngestionError(std::string("scalers: ") + e.what());
  }
}

const PreparedTarget& PreparedData::target(const std::string& name) const {
  for (const auto& t : targets)
    if (t.name == name) return t;
  throw ConfigError("unknown target domain '" + name + "'");
}

features::FeatureFrame raw_frame(const DomainData& domain) {
  const auto hourly = features::aggregate_hourly(domain.sensors);
  return features::build_frame(hourly, domain.weather, domain.contexts);
}

features::FeatureFrame scaled_frame(const DomainData& domain, const Scalers& scalers) {
  return features::apply_scalers(raw_frame(domain), scalers.weather, scalers.context);
}

PreparedData prepare(const DatasetBundle& bundle, double validation_fraction) {
  bundle.validate();
  const features::FeatureFrame source_raw = raw_frame(bundle.source);
  const windows::WindowSet probe = windows::make_windows(source_raw);
  if (probe.empty()) throw IngestionError(bundle.source.name + ": no complete source windows");
  const auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(probe.size())));
  if (n_val >= probe.size()) throw ConfigError("validation fraction leaves no source training windows");
  const TimePoint cutoff = probe.anchors[probe.size() - n_val - 1];

  PreparedData out;
  out.source_name = bundle.source.name;
  out.scalers.weather = features::fit_weather_scaler(source_raw, cutoff);
  out.scalers.target = features::fit_target_scaler(source_raw, cutoff);
  out.scalers.context = features::fit_context_scaler(bundle.source.contexts);

  out.source = windows::make_windows(
      features::apply_scalers(source_raw, out.scalers.weather, out.scalers.context));
  for (const auto& t : bundle.targets) {
    const windows::WindowSet ws = windows::make_windows(scaled_frame(t, out.scalers));
    PreparedTarget pt{t.name, windows::split_target(ws)};
    windows::purge_label_overlap(pt.split);
    out.targets.push_back(std::move(pt));
  }
  return out;
}

}  // namespace thermocast::data
