#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "thermocast/dataset.hpp"

namespace thermocast::data {

struct RowError {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string message;
};

struct ReadReport {
  std::size_t rows = 0;  // data rows seen
  std::vector<RowError> errors;
  std::vector<std::string> warnings;
};

// Rows with errors are skipped and reported; more than 5% bad rows, or a
// missing column, throws IngestionError. Output is sorted by (building,
// timestamp), with a warning when the input was not.
//   timestamp,building_id,indoor_temp_c
std::vector<features::SensorRecord> read_sensor_csv(const std::filesystem::path& path, ReadReport* report = nullptr);

// timestamp plus any subset of
//   air_temp_c,rel_humidity,dew_point_c,surface_pressure_hpa,total_precip_mm
// Empty cells are missing values. Timestamps must fall on the hour.
std::vector<features::WeatherRecord> read_weather_csv(const std::filesystem::path& path,
                                                      ReadReport* report = nullptr);

// building_id,lat,lon,area_m2,occupancy,roof_color,ceiling_board
// Any invalid row throws IngestionError.
std::vector<features::BuildingContext> read_context_csv(const std::filesystem::path& path);

void write_sensor_csv(const std::filesystem::path& path, const std::vector<features::SensorRecord>& records);
void write_weather_csv(const std::filesystem::path& path, const std::vector<features::WeatherRecord>& records);
void write_context_csv(const std::filesystem::path& path, const std::vector<features::BuildingContext>& contexts);

// Joins two weather series by timestamp. Where both carry a variable the
// CSV value wins; differing values are counted in `conflicts`.
std::vector<features::WeatherRecord> merge_weather(const std::vector<features::WeatherRecord>& api,
                                                   const std::vector<features::WeatherRecord>& csv,
                                                   std::size_t* conflicts = nullptr);

// <dir>/sensors.csv, weather.csv, contexts.csv
DomainData read_domain_dir(const std::filesystem::path& dir, const std::string& name);
void write_domain_dir(const std::filesystem::path& dir, const DomainData& domain);

// <dir>/bundle.json names the domains; each lives in <dir>/<name>/.
void write_bundle(const std::filesystem::path& dir, const DatasetBundle& bundle);
DatasetBundle read_bundle(const std::filesystem::path& dir);

}  // namespace thermocast::data
