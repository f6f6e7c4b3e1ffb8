#include "thermocast/features.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <map>
#include <numbers>
#include <unordered_map>

#include "thermocast/errors.hpp"
#include "thermocast/solar.hpp"

namespace thermocast::features {

RoofColor parse_roof_color(std::string_view label) {
  if (label == "light") return RoofColor::light;
  if (label == "medium") return RoofColor::medium;
  if (label == "dark") return RoofColor::dark;
  throw IngestionError("unknown roof color '" + std::string(label) +
                       "' (allowed: light, medium, dark)");
}

std::string_view to_string(RoofColor color) {
  switch (color) {
    case RoofColor::light: return "light";
    case RoofColor::medium: return "medium";
    case RoofColor::dark: return "dark";
  }
  return "light";
}

void BuildingContext::validate() const {
  if (building_id.empty()) throw IngestionError("building context without an id");
  if (!(area_m2 > 0.0)) throw IngestionError(building_id + ": area must be positive");
  if (!(occupancy >= 0.0)) throw IngestionError(building_id + ": occupancy must be non-negative");
  if (!(latitude >= -90.0 && latitude <= 90.0)) throw IngestionError(building_id + ": latitude out of range");
  if (!(longitude >= -180.0 && longitude <= 180.0)) {
    throw IngestionError(building_id + ": longitude out of range");
  }
}

const std::array<std::string_view, kDynamicFeatures>& dynamic_feature_names() {
  static constexpr std::array<std::string_view, kDynamicFeatures> names{
      "air_temp", "rel_humidity", "dew_point",   "surface_pressure", "total_precip", "hour_sin",
      "hour_cos", "doy_sin",      "doy_cos",     "azimuth_sin",      "azimuth_cos",  "altitude_sin"};
  return names;
}

const std::array<std::string_view, kContextFeatures>& context_feature_names() {
  static constexpr std::array<std::string_view, kContextFeatures> names{"roof_code", "ceiling_board",
                                                                      "area", "occupancy"};
  return names;
}

std::size_t FeatureFrame::rows() const {
  std::size_t n = 0;
  for (const auto& s : segments) n += s.size();
  return n;
}

std::vector<HourlyReading> aggregate_hourly(std::span<const SensorRecord> records) {
  std::map<std::string, std::map<TimePoint, double>> maxima;
  for (const auto& r : records) {
    auto& hours = maxima[r.building_id];
    const TimePoint h = floor_hour(r.timestamp);
    auto [it, inserted] = hours.emplace(h, r.indoor_temp_c);
    if (!inserted) it->second = std::max(it->second, r.indoor_temp_c);
  }
  std::vector<HourlyReading> out;
  for (const auto& [building, hours] : maxima) {
    if (hours.empty()) continue;
    const TimePoint first = hours.begin()->first;
    const TimePoint last = hours.rbegin()->first;
    for (TimePoint h = first; h <= last; h += std::chrono::hours{1}) {
      const auto it = hours.find(h);
      out.push_back({building, h, it == hours.end() ? std::nullopt : std::optional<double>(it->second)});
    }
  }
  return out;
}

std::pair<double, double> encode_cyclical(double value, double period) {
  if (!(period > 0.0)) throw ConfigError("encode_cyclical: period must be positive");
  const double angle = 2.0 * std::numbers::pi * value / period;
  return {std::sin(angle), std::cos(angle)};
}

ContextRow encode_context(const BuildingContext& ctx, const Scaler* scaler) {
  ContextRow row{static_cast<double>(static_cast<int>(ctx.roof_color)), ctx.ceiling_board ? 1.0 : 0.0,
                 ctx.area_m2, ctx.occupancy};
  if (scaler) {
    row[2] = scaler->transform(0, row[2]);
    row[3] = scaler->transform(1, row[3]);
  }
  return row;
}

DynamicRow dynamic_features(const WeatherRecord& weather, TimePoint hour, double latitude,
                            double longitude) {
  if (!weather.complete()) throw UsageError("dynamic_features: incomplete weather record");
  // Features describe the middle of the aggregated hour.
  const TimePoint mid = hour + std::chrono::minutes{30};
  const double utc_hour = hour_of_day(hour) + 0.5;
  const double local_solar_hour = std::fmod(utc_hour + longitude / 15.0 + 48.0, 24.0);
  const auto [hour_sin, hour_cos] = encode_cyclical(local_solar_hour, 24.0);
  const auto [doy_sin, doy_cos] =
      encode_cyclical(day_of_year(hour) - 1 + utc_hour / 24.0, static_cast<double>(days_in_year(hour)));
  const SolarPosition sun = solar_position(mid, latitude, longitude);
  const auto [az_sin, az_cos] = encode_cyclical(sun.azimuth_deg, 360.0);
  return {*weather.air_temp_c,
          *weather.rel_humidity,
          *weather.dew_point_c,
          *weather.surface_pressure_hpa,
          *weather.total_precip_mm,
          hour_sin,
          hour_cos,
          doy_sin,
          doy_cos,
          az_sin,
          az_cos,
          std::sin(sun.altitude_deg * std::numbers::pi / 180.0)};
}

FeatureFrame build_frame(std::span<const HourlyReading> hourly, std::span<const WeatherRecord> weather,
                         std::span<const BuildingContext> contexts) {
  std::unordered_map<std::string, const BuildingContext*> by_id;
  for (const auto& c : contexts) by_id[c.building_id] = &c;

  std::map<TimePoint, const WeatherRecord*> weather_by_hour;
  for (const auto& w : weather) weather_by_hour.emplace(floor_hour(w.timestamp), &w);

  std::vector<const HourlyReading*> ordered;
  ordered.reserve(hourly.size());
  for (const auto& h : hourly) ordered.push_back(&h);
  std::stable_sort(ordered.begin(), ordered.end(), [](const HourlyReading* a, const HourlyReading* b) {
    return a->building_id != b->building_id ? a->building_id < b->building_id : a->hour < b->hour;
  });

  FeatureFrame frame;
  Segment* current = nullptr;
  for (const HourlyReading* h : ordered) {
    if (!h->max_temp_c) continue;
    const auto ctx_it = by_id.find(h->building_id);
    if (ctx_it == by_id.end()) {
      throw IngestionError("building '" + h->building_id + "' has sensor data but no context row");
    }
    const BuildingContext& ctx = *ctx_it->second;
    ++frame.sensor_hours;
    const auto w = weather_by_hour.find(h->hour);
    if (w == weather_by_hour.end() || !w->second->complete()) {
      ++frame.dropped_hours;
      current = nullptr;
      continue;
    }
    ++frame.joined_hours;
    const bool contiguous = current && current->building_id == h->building_id &&
                            current->hours.back() + std::chrono::hours{1} == h->hour;
    if (!contiguous) {
      frame.segments.push_back({});
      current = &frame.segments.back();
      current->building_id = h->building_id;
      current->context = encode_context(ctx);
    }
    current->hours.push_back(h->hour);
    current->dynamic.push_back(dynamic_features(*w->second, h->hour, ctx.latitude, ctx.longitude));
    current->indoor_temp_c.push_back(*h->max_temp_c);
  }

  if (frame.dropped_hours > 0) {
    std::clog << "build_frame: dropped " << frame.dropped_hours << " of " << frame.sensor_hours
              << " sensor hours without complete weather\n";
  }
  if (frame.sensor_hours > 0 && 2 * frame.joined_hours < frame.sensor_hours) {
    throw IngestionError("build_frame: only " + std::to_string(frame.joined_hours) + " of " +
                         std::to_string(frame.sensor_hours) +
                         " sensor hours matched weather; check units and time zones");
  }
  return frame;
}

namespace {

bool included(TimePoint hour, const std::optional<TimePoint>& cutoff) {
  return !cutoff || hour <= *cutoff;
}

}  // namespace

Scaler fit_weather_scaler(const FeatureFrame& frame, std::optional<TimePoint> cutoff) {
  std::vector<std::vector<double>> columns(kWeatherFeatures);
  for (const auto& seg : frame.segments)
    for (std::size_t r = 0; r < seg.size(); ++r)
      if (included(seg.hours[r], cutoff))
        for (std::size_t c = 0; c < kWeatherFeatures; ++c) columns[c].push_back(seg.dynamic[r][c]);
  const auto& names = dynamic_feature_names();
  return Scaler::fit({names.begin(), names.begin() + kWeatherFeatures}, columns);
}

Scaler fit_target_scaler(const FeatureFrame& frame, std::optional<TimePoint> cutoff) {
  std::vector<std::vector<double>> columns(1);
  for (const auto& seg : frame.segments)
    for (std::size_t r = 0; r < seg.size(); ++r)
      if (included(seg.hours[r], cutoff)) columns[0].push_back(seg.indoor_temp_c[r]);
  return Scaler::fit({"indoor_temp"}, columns);
}

Scaler fit_context_scaler(std::span<const BuildingContext> contexts) {
  std::vector<std::vector<double>> columns(2);
  for (const auto& c : contexts) {
    columns[0].push_back(c.area_m2);
    columns[1].push_back(c.occupancy);
  }
  return Scaler::fit({"area", "occupancy"}, columns);
}

FeatureFrame apply_scalers(FeatureFrame frame, const Scaler& weather, const Scaler& context) {
  if (weather.columns() != kWeatherFeatures || context.columns() != 2) {
    throw DimensionError("apply_scalers: unexpected scaler widths");
  }
  for (auto& seg : frame.segments) {
    for (auto& row : seg.dynamic) weather.transform_row(std::span<double>(row.data(), kWeatherFeatures));
    seg.context[2] = context.transform(0, seg.context[2]);
    seg.context[3] = context.transform(1, seg.context[3]);
  }
  return frame;
}

}  // namespace thermocast::features
