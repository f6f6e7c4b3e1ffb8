#include "thermocast/run_config.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>

#include "thermocast/csv_io.hpp"
#include "thermocast/errors.hpp"
#include "thermocast/model.hpp"
#include "thermocast/weather_client.hpp"

namespace thermocast {

using nlohmann::json;

void RunConfig::resolve() {
  synth.seed = seed;
  train.seed = seed;
  synth.validate();
  train.validate();
  (void)model::parse_variant(variant);
  if (workers == 0) throw ConfigError("workers must be positive");
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

json RunConfig::to_json() const {
  return {{"seed", seed},
          {"data_dir", data_dir},
          {"synth", synth.to_json()},
          {"train", train.to_json()},
          {"targets", targets},
          {"variant", variant},
          {"output_dir", output_dir},
          {"workers", workers},
          {"weather_api", {{"enabled", weather_api.enabled}, {"cache_dir", weather_api.cache_dir}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  static const std::set<std::string> known{"seed",       "data_dir", "synth",   "train",      "targets",
                                           "variant",    "output_dir", "workers", "weather_api"};
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown run config key '" + key + "'");
  }
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.data_dir = j.value("data_dir", c.data_dir);
    c.targets = j.value("targets", c.targets);
    c.variant = j.value("variant", c.variant);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.workers = j.value("workers", c.workers);
    if (j.contains("weather_api")) {
      const json& w = j.at("weather_api");
      for (const auto& [key, _] : w.items()) {
        if (key != "enabled" && key != "cache_dir") throw ConfigError("unknown weather_api key '" + key + "'");
      }
      c.weather_api.enabled = w.value("enabled", false);
      c.weather_api.cache_dir = w.value("cache_dir", std::string());
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config: ") + e.what());
  }
  if (j.contains("synth")) c.synth = data::SynthConfig::from_json(j.at("synth"));
  if (j.contains("train")) c.train = train::TrainConfig::from_json(j.at("train"));
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

namespace {

void backfill_weather(data::DomainData& d, const WeatherApiConfig& api) {
  if (d.contexts.empty() || d.sensors.empty()) return;
  double lat = 0.0, lon = 0.0;
  for (const auto& c : d.contexts) {
    lat += c.latitude;
    lon += c.longitude;
  }
  lat /= static_cast<double>(d.contexts.size());
  lon /= static_cast<double>(d.contexts.size());
  const auto [first, last] = std::minmax_element(d.sensors.begin(), d.sensors.end(),
                                                 [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });
  data::WeatherClient client(std::make_shared<data::HttplibTransport>(),
                             data::cache_dir_from_env(api.cache_dir.empty() ? ".thermocast-cache" : api.cache_dir));
  const auto fetched =
      client.fetch({lat, lon, format_date(first->timestamp), format_date(last->timestamp)});
  std::size_t conflicts = 0;
  d.weather = data::merge_weather(fetched, d.weather, &conflicts);
  if (conflicts > 0) std::clog << d.name << ": " << conflicts << " API values overridden by CSV weather\n";
}

}  // namespace

data::DatasetBundle load_bundle(const RunConfig& cfg) {
  data::DatasetBundle bundle =
      cfg.data_dir.empty() ? data::generate_synthetic(cfg.synth) : data::read_bundle(cfg.data_dir);
  if (!cfg.targets.empty()) {
    std::vector<data::DomainData> kept;
    for (const auto& name : cfg.targets) kept.push_back(bundle.target(name));
    bundle.targets = std::move(kept);
  }
  if (cfg.weather_api.enabled) {
    backfill_weather(bundle.source, cfg.weather_api);
    for (auto& t : bundle.targets) backfill_weather(t, cfg.weather_api);
    bundle.provenance["weather_api"] = std::string(data::kArchiveHost) + "/v1/archive";
  }
  return bundle;
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace thermocast
