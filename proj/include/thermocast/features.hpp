#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "thermocast/scaler.hpp"
#include "thermocast/util.hpp"

namespace thermocast::features {

struct SensorRecord {
  TimePoint timestamp;
  std::string building_id;
  double indoor_temp_c = 0.0;

  bool operator==(const SensorRecord&) const = default;
};

inline constexpr double kMinIndoorTemp = -10.0;
inline constexpr double kMaxIndoorTemp = 60.0;

// One building-hour; `max_temp_c` is empty when the hour had no readings.
struct HourlyReading {
  std::string building_id;
  TimePoint hour;
  std::optional<double> max_temp_c;

  bool operator==(const HourlyReading&) const = default;
};

// Hourly weather. Fields are optional because API pulls and reanalysis CSVs
// each carry a subset of the variables until they are merged.
struct WeatherRecord {
  TimePoint timestamp;
  std::optional<double> air_temp_c;
  std::optional<double> rel_humidity;
  std::optional<double> dew_point_c;
  std::optional<double> surface_pressure_hpa;
  std::optional<double> total_precip_mm;

  bool complete() const {
    return air_temp_c && rel_humidity && dew_point_c && surface_pressure_hpa && total_precip_mm;
  }
  bool operator==(const WeatherRecord&) const = default;
};

// Ordered by solar absorptivity.
enum class RoofColor { light = 0, medium = 1, dark = 2 };

RoofColor parse_roof_color(std::string_view label);
std::string_view to_string(RoofColor color);

struct BuildingContext {
  std::string building_id;
  double latitude = 0.0;
  double longitude = 0.0;
  double area_m2 = 1.0;
  double occupancy = 0.0;
  RoofColor roof_color = RoofColor::light;
  bool ceiling_board = false;

  // Throws IngestionError on out-of-range fields.
  void validate() const;
  bool operator==(const BuildingContext&) const = default;
};

inline constexpr std::size_t kWeatherFeatures = 5;
inline constexpr std::size_t kDynamicFeatures = 12;
inline constexpr std::size_t kContextFeatures = 4;

using DynamicRow = std::array<double, kDynamicFeatures>;
using ContextRow = std::array<double, kContextFeatures>;

// air_temp, rel_humidity, dew_point, surface_pressure, total_precip,
// hour_sin, hour_cos, doy_sin, doy_cos, azimuth_sin, azimuth_cos, altitude_sin
const std::array<std::string_view, kDynamicFeatures>& dynamic_feature_names();
// roof_code, ceiling_board, area, occupancy
const std::array<std::string_view, kContextFeatures>& context_feature_names();

// Contiguous hourly run of one building.
struct Segment {
  std::string building_id;
  std::vector<TimePoint> hours;
  std::vector<DynamicRow> dynamic;
  std::vector<double> indoor_temp_c;
  ContextRow context{};

  std::size_t size() const { return hours.size(); }
};

struct FeatureFrame {
  std::vector<Segment> segments;
  std::size_t sensor_hours = 0;   // building-hours with at least one reading
  std::size_t joined_hours = 0;   // of those, hours with complete weather
  std::size_t dropped_hours = 0;  // sensor_hours - joined_hours

  std::size_t rows() const;
};

// Hourly maxima per building, spanning each building's first to last hour;
// hours without readings are present with an empty value.
std::vector<HourlyReading> aggregate_hourly(std::span<const SensorRecord> records);

// (sin 2πv/p, cos 2πv/p); throws ConfigError when period <= 0.
std::pair<double, double> encode_cyclical(double value, double period);

// [roof code 0/1/2, ceiling 0/1, area, occupancy]. With a scaler (columns
// area, occupancy) the last two entries are standardized.
ContextRow encode_context(const BuildingContext& ctx, const Scaler* scaler = nullptr);

// Unscaled dynamic features for one building-hour.
DynamicRow dynamic_features(const WeatherRecord& weather, TimePoint hour, double latitude,
                            double longitude);

// Inner-joins hourly indoor maxima with complete weather rows on the UTC hour
// and cuts each building's series into contiguous segments. Features are left
// unscaled. Throws IngestionError when a building lacks context or when fewer
// than half of the sensor hours find weather.
FeatureFrame build_frame(std::span<const HourlyReading> hourly, std::span<const WeatherRecord> weather,
                         std::span<const BuildingContext> contexts);

// Fit on rows with hour <= cutoff (every row when no cutoff is given).
Scaler fit_weather_scaler(const FeatureFrame& frame, std::optional<TimePoint> cutoff = std::nullopt);
Scaler fit_target_scaler(const FeatureFrame& frame, std::optional<TimePoint> cutoff = std::nullopt);
Scaler fit_context_scaler(std::span<const BuildingContext> contexts);

// Returns a copy with weather columns and context area/occupancy standardized.
FeatureFrame apply_scalers(FeatureFrame frame, const Scaler& weather, const Scaler& context);

}  // namespace thermocast::features
