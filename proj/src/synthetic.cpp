#include "thermocast/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <set>

#include "thermocast/errors.hpp"
#include "thermocast/solar.hpp"
#include "thermocast/util.hpp"

namespace thermocast::data {

namespace {

using nlohmann::json;

template <class T>
void read_key(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown " + where + " key '" + key + "'");
  }
}

// Magnus formula.
double dew_point(double temp_c, double rel_humidity) {
  constexpr double b = 17.62, c = 243.12;
  const double g = std::log(rel_humidity / 100.0) + b * temp_c / (c + temp_c);
  return c * g / (b - g);
}

double local_solar_hour(TimePoint t, double longitude) {
  const double utc = static_cast<double>((t.time_since_epoch().count() % 86400 + 86400) % 86400) / 3600.0;
  return std::fmod(utc + longitude / 15.0 + 48.0, 24.0);
}

struct Building {
  features::BuildingContext ctx;
  double alpha = 0.0;
  double beta = 0.0;
};

DomainData simulate_domain(const SynthConfig& cfg, const DomainProfile& p) {
  using std::chrono::hours;
  using std::chrono::minutes;
  const TimePoint start = parse_date(cfg.start_date);
  const std::size_t n_hours = cfg.days * 24;
  std::mt19937_64 rng(derive_seed(cfg.seed, "synth/" + p.name + "/weather"));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  DomainData d;
  d.name = p.name;

  // Daily anomalies, AR(1) with unit lag-one correlation 0.7.
  std::vector<double> anomaly(cfg.days + 1);
  anomaly[0] = p.anomaly_std_c * normal(rng);
  for (std::size_t k = 1; k < anomaly.size(); ++k) {
    anomaly[k] = 0.7 * anomaly[k - 1] + std::sqrt(1.0 - 0.49) * p.anomaly_std_c * normal(rng);
  }

  std::vector<double> t_out(n_hours + 1);
  for (std::size_t h = 0; h <= n_hours; ++h) {
    const TimePoint t = start + hours{static_cast<long>(h)};
    const double lsh = local_solar_hour(t, p.longitude);
    const double day_pos = static_cast<double>(h) / 24.0;
    const auto day = static_cast<std::size_t>(day_pos);
    const double frac = day_pos - static_cast<double>(day);
    const double anom = anomaly[std::min(day, cfg.days - 1)] * (1.0 - frac) +
                        anomaly[std::min(day + 1, cfg.days)] * frac;
    t_out[h] = p.mean_temp_c + p.drift_c * (static_cast<double>(h) / static_cast<double>(n_hours) - 0.5) +
               p.diurnal_amplitude_c * std::cos(2.0 * std::numbers::pi * (lsh - 15.0) / 24.0) + anom +
               0.2 * normal(rng);
  }

  for (std::size_t h = 0; h < n_hours; ++h) {
    const TimePoint t = start + hours{static_cast<long>(h)};
    const double lsh = local_solar_hour(t, p.longitude);
    const bool rain = unit(rng) < p.rain_probability;
    const double precip = rain ? -2.0 * std::log(1.0 - unit(rng)) : 0.0;
    const double rh = std::clamp(p.mean_humidity - 2.5 * (t_out[h] - p.mean_temp_c) + 3.0 * normal(rng) +
                                     (rain ? 15.0 : 0.0),
                                 5.0, 100.0);
    features::WeatherRecord w;
    w.timestamp = t;
    w.air_temp_c = t_out[h];
    w.rel_humidity = rh;
    w.dew_point_c = dew_point(t_out[h], rh);
    w.surface_pressure_hpa = p.surface_pressure_hpa +
                             1.2 * std::cos(2.0 * std::numbers::pi * (lsh - 10.0) / 12.0) + 0.3 * normal(rng);
    w.total_precip_mm = precip;
    d.weather.push_back(w);
  }

  // Sun and outdoor temperature on the sensor sub-step grid, shared by all buildings.
  const std::size_t rph = cfg.readings_per_hour;
  const long step_min = 60 / static_cast<long>(rph);
  const std::size_t n_steps = n_hours * rph;
  std::vector<double> sin_alt(n_steps), out_sub(n_steps), lsh_sub(n_steps);
  std::vector<TimePoint> stamps(n_steps);
  for (std::size_t s = 0; s < n_steps; ++s) {
    const std::size_t h = s / rph;
    const double frac = static_cast<double>(s % rph) / static_cast<double>(rph);
    stamps[s] = start + hours{static_cast<long>(h)} + minutes{static_cast<long>(s % rph) * step_min + 1};
    out_sub[s] = t_out[h] * (1.0 - frac) + t_out[h + 1] * frac;
    const features::SolarPosition sun = features::solar_position(stamps[s], p.latitude, p.longitude);
    sin_alt[s] = std::sin(sun.altitude_deg * std::numbers::pi / 180.0);
    lsh_sub[s] = local_solar_hour(stamps[s], p.longitude);
  }

  for (std::size_t b = 0; b < p.n_buildings; ++b) {
    char id[16];
    std::snprintf(id, sizeof id, "b%02zu", b + 1);
    std::mt19937_64 brng(derive_seed(cfg.seed, "synth/" + p.name + "/" + id));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Building bld;
    bld.ctx.building_id = p.name + "_" + id;
    bld.ctx.latitude = p.latitude + 0.1 * (u(brng) - 0.5);
    bld.ctx.longitude = p.longitude + 0.1 * (u(brng) - 0.5);
    bld.ctx.area_m2 = p.area_min + (p.area_max - p.area_min) * u(brng);
    bld.ctx.occupancy = std::round(p.occupancy_min + (p.occupancy_max - p.occupancy_min) * u(brng));
    const double r = u(brng);
    bld.ctx.roof_color = r < p.roof_mix[0]                  ? features::RoofColor::light
                         : r < p.roof_mix[0] + p.roof_mix[1] ? features::RoofColor::medium
                                                             : features::RoofColor::dark;
    bld.ctx.ceiling_board = u(brng) < p.ceiling_probability;
    bld.alpha = p.alpha_min + (p.alpha_max - p.alpha_min) * u(brng);
    bld.beta = p.beta_min + (p.beta_max - p.beta_min) * u(brng);
    d.contexts.push_back(bld.ctx);

    // Per-hour rates converted to the sub-step length.
    const double alpha_eff = bld.alpha * (bld.ctx.ceiling_board ? cfg.ceiling_factor : 1.0);
    const double alpha_sub = 1.0 - std::pow(1.0 - alpha_eff, 1.0 / static_cast<double>(rph));
    const double beta_sub = bld.beta / static_cast<double>(rph);
    const double gain_sub = p.gain_per_100_occupants * bld.ctx.occupancy / 100.0 / static_cast<double>(rph);
    const double absorb = cfg.absorptivity[static_cast<int>(bld.ctx.roof_color)];
    std::normal_distribution<double> noise(0.0, 1.0);

    double t_in = out_sub[0] + 2.0;
    for (std::size_t s = 0; s < n_steps; ++s) {
      const double lsh = lsh_sub[s];
      const auto weekday = std::chrono::weekday(std::chrono::floor<std::chrono::days>(stamps[s]));
      const bool occupied = lsh >= 8.0 && lsh < 16.0 && weekday != std::chrono::Saturday &&
                            weekday != std::chrono::Sunday;
      t_in = rc_step(t_in, out_sub[s], alpha_sub, beta_sub, sin_alt[s], absorb, occupied ? gain_sub : 0.0);
      const double reading = t_in + cfg.noise_std_c * noise(brng);
      d.sensors.push_back({stamps[s], bld.ctx.building_id, std::round(reading * 100.0) / 100.0});
    }
  }
  return d;
}

}  // namespace

double rc_step(double t_in, double t_out, double alpha_eff, double beta, double sin_altitude, double absorptivity,
               double extra_gain) {
  return t_in + alpha_eff * (t_out - t_in) + beta * std::max(0.0, sin_altitude) * absorptivity + extra_gain;
}

void DomainProfile::validate() const {
  const std::string where = "synth domain '" + name + "': ";
  if (name.empty()) throw ConfigError("synth domain without a name");
  if (n_buildings == 0) throw ConfigError(where + "n_buildings must be positive");
  if (!(alpha_min > 0.0 && alpha_max < 1.0 && alpha_min <= alpha_max)) {
    throw ConfigError(where + "alpha range must lie in (0, 1)");
  }
  if (!(beta_min >= 0.0 && beta_min <= beta_max)) throw ConfigError(where + "invalid beta range");
  if (!(mean_humidity > 0.0 && mean_humidity <= 100.0)) throw ConfigError(where + "mean_humidity out of range");
  if (!(rain_probability >= 0.0 && rain_probability <= 1.0)) {
    throw ConfigError(where + "rain_probability out of range");
  }
  if (!(anomaly_std_c >= 0.0)) throw ConfigError(where + "anomaly_std_c must be non-negative");
  double mix = 0.0;
  for (double m : roof_mix) {
    if (!(m >= 0.0)) throw ConfigError(where + "negative roof_mix entry");
    mix += m;
  }
  if (std::abs(mix - 1.0) > 1e-9) throw ConfigError(where + "roof_mix must sum to 1");
  if (!(occupancy_min >= 0.0 && occupancy_min <= occupancy_max)) throw ConfigError(where + "invalid occupancy range");
  if (!(area_min > 0.0 && area_min <= area_max)) throw ConfigError(where + "invalid area range");
  features::BuildingContext probe{name, latitude, longitude, area_min, occupancy_min};
  try {
    probe.validate();
  } catch (const IngestionError& e) {
    throw ConfigError(e.what());
  }
}

nlohmann::json DomainProfile::to_json() const {
  return {{"name", name},
          {"latitude", latitude},
          {"longitude", longitude},
          {"n_buildings", n_buildings},
          {"mean_temp_c", mean_temp_c},
          {"diurnal_amplitude_c", diurnal_amplitude_c},
          {"drift_c", drift_c},
          {"anomaly_std_c", anomaly_std_c},
          {"mean_humidity", mean_humidity},
          {"surface_pressure_hpa", surface_pressure_hpa},
          {"rain_probability", rain_probability},
          {"alpha_min", alpha_min},
          {"alpha_max", alpha_max},
          {"beta_min", beta_min},
          {"beta_max", beta_max},
          {"gain_per_100_occupants", gain_per_100_occupants},
          {"roof_mix", roof_mix},
          {"ceiling_probability", ceiling_probability},
          {"occupancy_min", occupancy_min},
          {"occupancy_max", occupancy_max},
          {"area_min", area_min},
          {"area_max", area_max}};
}

DomainProfile DomainProfile::from_json(const nlohmann::json& j, const DomainProfile& defaults) {
  static const std::set<std::string> known{
      "name",          "latitude",      "longitude",         "n_buildings",    "mean_temp_c",
      "diurnal_amplitude_c", "drift_c", "anomaly_std_c",     "mean_humidity",  "surface_pressure_hpa",
      "rain_probability", "alpha_min",  "alpha_max",         "beta_min",       "beta_max",
      "gain_per_100_occupants", "roof_mix", "ceiling_probability", "occupancy_min", "occupancy_max",
      "area_min",      "area_max"};
  reject_unknown(j, known, "synth domain");
  DomainProfile p = defaults;
  try {
    read_key(j, "name", p.name);
    read_key(j, "latitude", p.latitude);
    read_key(j, "longitude", p.longitude);
    read_key(j, "n_buildings", p.n_buildings);
    read_key(j, "mean_temp_c", p.mean_temp_c);
    read_key(j, "diurnal_amplitude_c", p.diurnal_amplitude_c);
    read_key(j, "drift_c", p.drift_c);
    read_key(j, "anomaly_std_c", p.anomaly_std_c);
    read_key(j, "mean_humidity", p.mean_humidity);
    read_key(j, "surface_pressure_hpa", p.surface_pressure_hpa);
    read_key(j, "rain_probability", p.rain_probability);
    read_key(j, "alpha_min", p.alpha_min);
    read_key(j, "alpha_max", p.alpha_max);
    read_key(j, "beta_min", p.beta_min);
    read_key(j, "beta_max", p.beta_max);
    read_key(j, "gain_per_100_occupants", p.gain_per_100_occupants);
    read_key(j, "roof_mix", p.roof_mix);
    read_key(j, "ceiling_probability", p.ceiling_probability);
    read_key(j, "occupancy_min", p.occupancy_min);
    read_key(j, "occupancy_max", p.occupancy_max);
    read_key(j, "area_min", p.area_min);
    read_key(j, "area_max", p.area_max);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("synth domain: ") + e.what());
  }
  return p;
}

SynthConfig SynthConfig::defaults() {
  SynthConfig c;

  DomainProfile tz;
  tz.name = "tanzania_synth";
  tz.latitude = -6.17;
  tz.longitude = 35.74;
  tz.mean_temp_c = 22.0;
  tz.diurnal_amplitude_c = 6.0;
  tz.mean_humidity = 55.0;
  tz.surface_pressure_hpa = 885.0;
  tz.rain_probability = 0.05;
  c.source = tz;

  DomainProfile ng;
  ng.name = "nigeria_synth";
  ng.latitude = 9.08;
  ng.longitude = 7.40;
  ng.mean_temp_c = 25.0;
  ng.diurnal_amplitude_c = 4.0;
  ng.mean_humidity = 78.0;
  ng.surface_pressure_hpa = 935.0;
  ng.rain_probability = 0.08;
  ng.alpha_min = 0.30;
  ng.alpha_max = 0.40;
  ng.beta_min = 1.6;
  ng.beta_max = 2.2;
  ng.roof_mix = {0.2, 0.3, 0.5};
  ng.ceiling_probability = 0.3;
  ng.occupancy_min = 40.0;
  ng.occupancy_max = 90.0;

  DomainProfile gm;
  gm.name = "gambia_synth";
  gm.latitude = 13.57;
  gm.longitude = -14.92;
  gm.mean_temp_c = 29.0;
  gm.diurnal_amplitude_c = 5.0;
  gm.mean_humidity = 65.0;
  gm.surface_pressure_hpa = 1008.0;
  gm.rain_probability = 0.05;
  gm.alpha_min = 0.08;
  gm.alpha_max = 0.14;
  gm.beta_min = 0.4;
  gm.beta_max = 0.7;
  gm.gain_per_100_occupants = 1.0;
  gm.roof_mix = {0.5, 0.3, 0.2};
  gm.ceiling_probability = 0.7;
  gm.occupancy_min = 2.0;
  gm.occupancy_max = 8.0;
  gm.area_min = 30.0;
  gm.area_max = 70.0;

  c.targets = {ng, gm};
  return c;
}

void SynthConfig::validate() const {
  if (days < 3) throw ConfigError("synth: days must be at least 3");
  if (readings_per_hour == 0 || 60 % readings_per_hour != 0) {
    throw ConfigError("synth: readings_per_hour must divide 60");
  }
  if (!(noise_std_c >= 0.0)) throw ConfigError("synth: noise_std_c must be non-negative");
  if (!(absorptivity[0] < absorptivity[1] && absorptivity[1] < absorptivity[2])) {
    throw ConfigError("synth: absorptivities must increase from light to dark");
  }
  if (!(ceiling_factor > 0.0 && ceiling_factor <= 1.0)) throw ConfigError("synth: ceiling_factor must lie in (0, 1]");
  try {
    (void)parse_date(start_date);
  } catch (const std::exception&) {
    throw ConfigError("synth: bad start_date '" + start_date + "'");
  }
  source.validate();
  std::set<std::string> names{source.name};
  for (const auto& t : targets) {
    t.validate();
    if (!names.insert(t.name).second) throw ConfigError("synth: duplicate domain name '" + t.name + "'");
  }
}

nlohmann::json SynthConfig::to_json() const {
  json targets_json = json::array();
  for (const auto& t : targets) targets_json.push_back(t.to_json());
  return {{"seed", seed},
          {"days", days},
          {"start_date", start_date},
          {"readings_per_hour", readings_per_hour},
          {"noise_std_c", noise_std_c},
          {"absorptivity", absorptivity},
          {"ceiling_factor", ceiling_factor},
          {"source", source.to_json()},
          {"targets", targets_json}};
}

SynthConfig SynthConfig::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"seed",   "days",           "start_date", "readings_per_hour",
                                           "noise_std_c", "absorptivity", "ceiling_factor", "source",
                                           "targets"};
  reject_unknown(j, known, "synth config");
  SynthConfig c = defaults();
  try {
    read_key(j, "seed", c.seed);
    read_key(j, "days", c.days);
    read_key(j, "start_date", c.start_date);
    read_key(j, "readings_per_hour", c.readings_per_hour);
    read_key(j, "noise_std_c", c.noise_std_c);
    read_key(j, "absorptivity", c.absorptivity);
    read_key(j, "ceiling_factor", c.ceiling_factor);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("synth config: ") + e.what());
  }
  if (j.contains("source")) c.source = DomainProfile::from_json(j.at("source"), c.source);
  if (j.contains("targets")) {
    const json& t = j.at("targets");
    if (!t.is_array()) throw ConfigError("synth config: targets must be an array");
    // Entries override the default target at the same position, or the last one.
    const std::vector<DomainProfile> base = c.targets;
    c.targets.clear();
    for (std::size_t i = 0; i < t.size(); ++i) {
      c.targets.push_back(DomainProfile::from_json(t[i], base[std::min(i, base.size() - 1)]));
    }
  }
  c.validate();
  return c;
}

DatasetBundle generate_synthetic(const SynthConfig& cfg) {
  cfg.validate();
  DatasetBundle bundle;
  bundle.source = simulate_domain(cfg, cfg.source);
  for (const auto& t : cfg.targets) bundle.targets.push_back(simulate_domain(cfg, t));
  bundle.provenance = {{"generator", "synthetic-rc"}, {"config", cfg.to_json()}};
  return bundle;
}

}  // namespace thermocast::data
